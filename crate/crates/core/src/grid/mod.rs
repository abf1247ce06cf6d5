//! Raster substrate: headers, typed cell grids, ESRI ASCII I/O,
//! binarization and block resampling.

pub mod ascii;
mod header;
mod resample;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use header::{align_check, Alignment, FieldMismatch, GridHeader, HeaderField, Misalignment};
pub use resample::{or_downsample, upsample_nn};

/// Rows handed to a single rayon task in row-parallel loops.
pub(crate) const ROWS_PER_TASK: usize = 64;

/// A row-major raster with top row first.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    header: GridHeader,
    cells: Vec<T>,
}

impl<T> Grid<T> {
    pub fn new(header: GridHeader, cells: Vec<T>) -> Result<Self> {
        header.validate()?;
        if cells.len() != header.len() {
            return Err(Error::CellBufferLength {
                expected: header.len(),
                found: cells.len(),
            });
        }
        Ok(Self { header, cells })
    }

    pub fn filled(header: GridHeader, value: T) -> Result<Self>
    where
        T: Clone,
    {
        header.validate()?;
        Ok(Self {
            cells: vec![value; header.len()],
            header,
        })
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn into_cells(self) -> Vec<T> {
        self.cells
    }

    pub fn ncols(&self) -> usize {
        self.header.ncols
    }

    pub fn nrows(&self) -> usize {
        self.header.nrows
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.header.nrows && col < self.header.ncols);
        row * self.header.ncols + col
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        if row < self.header.nrows && col < self.header.ncols {
            self.cells.get(self.index(row, col))
        } else {
            None
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let i = self.index(row, col);
        self.cells[i] = value;
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, T> {
        self.cells.chunks(self.header.ncols)
    }

    /// Cell-wise map, parallel over rows. The output keeps this header.
    pub fn map<U, F>(&self, f: F) -> Grid<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        Grid {
            header: self.header,
            cells: self.cells.par_iter().with_min_len(4096).map(f).collect(),
        }
    }
}

/// A nonnegative count, or NoData. Two NoData counts compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Count(f64);

impl Count {
    pub const NODATA: Count = Count(f64::NAN);

    /// Caller guarantees `value` is finite and nonnegative.
    pub fn new(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        Count(value)
    }

    pub fn value(self) -> Option<f64> {
        if self.0.is_nan() {
            None
        } else {
            Some(self.0)
        }
    }

    pub fn is_nodata(self) -> bool {
        self.0.is_nan()
    }
}

impl PartialEq for Count {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 || (self.0.is_nan() && other.0.is_nan())
    }
}

impl From<f64> for Count {
    fn from(value: f64) -> Self {
        Count(value)
    }
}

pub type CountGrid = Grid<Count>;

impl CountGrid {
    pub fn from_values(header: GridHeader, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_nan() || (v.is_finite() && **v >= 0.0))) {
            return Err(Error::InvalidHeader(format!("count grid holds invalid value {v}")));
        }
        Grid::new(header, values.into_iter().map(Count).collect())
    }

    /// Sum of all valid cells.
    pub fn total(&self) -> f64 {
        self.cells.iter().filter_map(|c| c.value()).sum()
    }
}

/// Presence/absence cell of a binarized surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Presence {
    NoData = 0,
    Absent = 1,
    Present = 2,
}

impl Presence {
    pub fn code(self) -> Option<u8> {
        match self {
            Presence::Absent => Some(0),
            Presence::Present => Some(1),
            Presence::NoData => None,
        }
    }
}

pub type BinaryGrid = Grid<Presence>;

/// 1 where count ≥ threshold, 0 below it, NoData preserved.
pub fn binarize(grid: &CountGrid, threshold: f64) -> Result<BinaryGrid> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    Ok(grid.map(|c| match c.value() {
        None => Presence::NoData,
        Some(v) if v >= threshold => Presence::Present,
        Some(_) => Presence::Absent,
    }))
}
