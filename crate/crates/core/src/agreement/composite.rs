use std::sync::Arc;

use rayon::prelude::*;

use super::{AgreementClass, AgreementGrid, Family, ProbabilityMapping, TrajectoryCube};
use crate::error::{Error, Result};
use crate::grid::ascii::AsciiCell;
use crate::grid::{Grid, ROWS_PER_TASK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FamilyCell {
    None,
    Fp,
    Fn,
    NoData,
}

impl FamilyCell {
    /// Output raster code: FP=3, FN=4, NONE=0.
    pub fn code(self) -> Option<u8> {
        match self {
            FamilyCell::None => Some(0),
            FamilyCell::Fp => Some(3),
            FamilyCell::Fn => Some(4),
            FamilyCell::NoData => None,
        }
    }
}

impl From<Family> for FamilyCell {
    fn from(f: Family) -> Self {
        match f {
            Family::Fp => FamilyCell::Fp,
            Family::Fn => FamilyCell::Fn,
        }
    }
}

impl AsciiCell for FamilyCell {
    fn write_token(self, nodata: &[u8], out: &mut Vec<u8>) {
        match self.code() {
            Some(c) => out.push(b'0' + c),
            None => out.extend_from_slice(nodata),
        }
    }
}

pub type FamilyGrid = Grid<FamilyCell>;

/// Real-valued surface; NaN marks NoData.
pub type ProbabilityGrid = Grid<f64>;

/// The cross-scale disagreement composite at native resolution.
#[derive(Clone, Debug)]
pub struct CompositeSurface {
    /// Level-0 agreement classes.
    pub class: Arc<AgreementGrid>,
    /// Offset-induced misclassification probability of FP/FN pixels,
    /// 0 for TP/TN and NaN for NoData.
    pub probability: ProbabilityGrid,
    pub family: FamilyGrid,
}

pub fn composite_surface(
    cube: &TrajectoryCube,
    levels: usize,
    mapping: &ProbabilityMapping,
) -> Result<CompositeSurface> {
    if levels != cube.depth() {
        return Err(Error::DimensionMismatch(format!(
            "cube has {} levels, {levels} requested",
            cube.depth()
        )));
    }
    let resolved = mapping.resolve(levels)?;
    let header = *cube.header();
    let ncols = header.ncols;
    let class = cube.level(0);

    let mut probability = vec![0.0f64; header.len()];
    let mut family = vec![FamilyCell::None; header.len()];
    let outcomes: Vec<Result<()>> = probability
        .par_chunks_mut(ncols)
        .zip(family.par_chunks_mut(ncols))
        .with_min_len(ROWS_PER_TASK)
        .enumerate()
        .map(|(row, (prob_row, fam_row))| {
            let start = row * ncols;
            for col in 0..ncols {
                let index = start + col;
                match class.cells()[index] {
                    AgreementClass::NoData => {
                        prob_row[col] = f64::NAN;
                        fam_row[col] = FamilyCell::NoData;
                    }
                    AgreementClass::Tp | AgreementClass::Tn => {}
                    _ => {
                        let result = cube.switch_at(index)?.expect("misclassified pixel is ranked");
                        prob_row[col] = resolved.probability(result.level);
                        fam_row[col] = result.family.into();
                    }
                }
            }
            Ok(())
        })
        .collect();
    // first failing row in raster order
    outcomes.into_iter().collect::<Result<()>>()?;

    Ok(CompositeSurface {
        class: Arc::new(class.clone()),
        probability: Grid::new(header, probability)?,
        family: Grid::new(header, family)?,
    })
}
