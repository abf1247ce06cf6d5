//! Cross-scale agreement: per-level confusion classes, the OR-aggregated
//! pyramid, the trajectory cube and offset-induced misclassification
//! ranking of natively misclassified pixels.

mod composite;
mod cube;
mod pyramid;
mod trajectory;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::ascii::AsciiCell;
use crate::grid::{align_check, BinaryGrid, Grid, Presence};

pub use composite::{composite_surface, CompositeSurface, FamilyCell, FamilyGrid, ProbabilityGrid};
pub use cube::{build_cube, TrajectoryCube};
pub use pyramid::{build_pyramid, Pyramid, PyramidLevel, MAX_LEVELS};
pub use trajectory::{
    offset_probability, switch_level, Family, ProbabilityMapping, ProbabilityTable, ResolvedMapping, SwitchLevel,
    SwitchResult,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum AgreementClass {
    Tp,
    Tn,
    Fp,
    Fn,
    NoData,
}

impl AgreementClass {
    pub fn of(test: Presence, reference: Presence) -> Self {
        match (test, reference) {
            (Presence::Present, Presence::Present) => AgreementClass::Tp,
            (Presence::Absent, Presence::Absent) => AgreementClass::Tn,
            (Presence::Present, Presence::Absent) => AgreementClass::Fp,
            (Presence::Absent, Presence::Present) => AgreementClass::Fn,
            _ => AgreementClass::NoData,
        }
    }

    /// Output raster code: TP=1, TN=2, FP=3, FN=4; NoData has none.
    pub fn code(self) -> Option<u8> {
        match self {
            AgreementClass::Tp => Some(1),
            AgreementClass::Tn => Some(2),
            AgreementClass::Fp => Some(3),
            AgreementClass::Fn => Some(4),
            AgreementClass::NoData => None,
        }
    }

    pub fn is_misclassified(self) -> bool {
        matches!(self, AgreementClass::Fp | AgreementClass::Fn)
    }
}

impl fmt::Display for AgreementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgreementClass::Tp => "TP",
            AgreementClass::Tn => "TN",
            AgreementClass::Fp => "FP",
            AgreementClass::Fn => "FN",
            AgreementClass::NoData => "NODATA",
        })
    }
}

impl AsciiCell for AgreementClass {
    fn write_token(self, nodata: &[u8], out: &mut Vec<u8>) {
        match self.code() {
            Some(c) => out.push(b'0' + c),
            None => out.extend_from_slice(nodata),
        }
    }
}

pub type AgreementGrid = Grid<AgreementClass>;

/// Cell-wise confusion class of `test` against `reference`.
pub fn classify_agreement(test: &BinaryGrid, reference: &BinaryGrid) -> Result<AgreementGrid> {
    align_check(test.header(), reference.header()).into_result()?;
    let cells = test
        .cells()
        .par_iter()
        .zip(reference.cells().par_iter())
        .with_min_len(4096)
        .map(|(&t, &r)| AgreementClass::of(t, r))
        .collect();
    Grid::new(*test.header(), cells)
}
