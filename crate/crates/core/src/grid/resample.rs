use rayon::prelude::*;

use super::{BinaryGrid, Grid, GridHeader, Presence, ROWS_PER_TASK};
use crate::error::{Error, Result};

/// Top-down index of the coarse row that contains fine row `row`, for a
/// lower-left anchored pyramid. Partial blocks sit at the top.
#[inline]
pub(crate) fn coarse_row(row: usize, fine_nrows: usize, coarse_nrows: usize, factor: usize) -> usize {
    coarse_nrows - 1 - (fine_nrows - 1 - row) / factor
}

/// Presence-preserving aggregation of `factor`×`factor` blocks: a coarse
/// cell is present if any covered cell is present, absent if any covered
/// cell is valid, and NoData only when every covered cell is NoData.
pub fn or_downsample(grid: &BinaryGrid, factor: usize) -> Result<BinaryGrid> {
    if factor < 2 {
        return Err(Error::InvalidFactor(factor));
    }
    let fine = *grid.header();
    let header = fine.coarsened(factor);
    let mut cells = vec![Presence::NoData; header.len()];

    cells.par_chunks_mut(header.ncols).enumerate().for_each(|(crow, out)| {
        // fine rows covered, counted from the bottom
        let bottom = (header.nrows - 1 - crow) * factor;
        let top = (bottom + factor).min(fine.nrows);
        for from_bottom in bottom..top {
            let row = fine.nrows - 1 - from_bottom;
            let src = &grid.cells()[row * fine.ncols..(row + 1) * fine.ncols];
            for (block, chunk) in src.chunks(factor).enumerate() {
                // Presence orders NoData < Absent < Present
                let m = chunk.iter().copied().max().unwrap_or(Presence::NoData);
                if m > out[block] {
                    out[block] = m;
                }
            }
        }
    });

    Grid::new(header, cells)
}

/// Block replication of a coarse grid onto `target`, the header of the
/// native lattice it was aggregated from.
pub fn upsample_nn<T>(grid: &Grid<T>, factor: usize, target: &GridHeader) -> Result<Grid<T>>
where
    T: Copy + Send + Sync,
{
    target.validate()?;
    if factor == 0 {
        return Err(Error::InvalidFactor(factor));
    }
    let coarse = grid.header();
    if target.nrows.div_ceil(factor) != coarse.nrows || target.ncols.div_ceil(factor) != coarse.ncols {
        return Err(Error::DimensionMismatch(format!(
            "a {}x{} target aggregated by {} gives {}x{}, grid is {}x{}",
            target.nrows,
            target.ncols,
            factor,
            target.nrows.div_ceil(factor),
            target.ncols.div_ceil(factor),
            coarse.nrows,
            coarse.ncols
        )));
    }
    let expected_cellsize = target.cellsize * factor as f64;
    if (coarse.cellsize - expected_cellsize).abs() > expected_cellsize * 1e-9 {
        return Err(Error::DimensionMismatch(format!(
            "cellsize {} is not {} x {}",
            coarse.cellsize, factor, target.cellsize
        )));
    }
    let tolerance = target.cellsize * 1e-6;
    if !((coarse.xll - target.xll).abs() < tolerance && (coarse.yll - target.yll).abs() < tolerance) {
        return Err(Error::DimensionMismatch(format!(
            "lower-left corner ({}, {}) differs from target ({}, {})",
            coarse.xll, coarse.yll, target.xll, target.yll
        )));
    }

    // coarse grids are never empty, so its first cell serves as fill
    let mut cells = vec![grid.cells()[0]; target.len()];
    cells
        .par_chunks_mut(target.ncols)
        .with_min_len(ROWS_PER_TASK)
        .enumerate()
        .for_each(|(row, out)| {
            let crow = coarse_row(row, target.nrows, coarse.nrows, factor);
            let src = &grid.cells()[crow * coarse.ncols..(crow + 1) * coarse.ncols];
            for (chunk, &v) in out.chunks_mut(factor).zip(src) {
                chunk.fill(v);
            }
        });
    Grid::new(*target, cells)
}
