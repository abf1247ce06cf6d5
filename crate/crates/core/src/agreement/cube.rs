use std::sync::Arc;

use super::{switch_level, AgreementClass, AgreementGrid, Pyramid, SwitchResult, MAX_LEVELS};
use crate::error::Result;
use crate::grid::GridHeader;

/// The multi-scale data cube: for each native pixel, the classes of its
/// enclosing block at every level. Backed by the pyramid's native-resolution
/// level grids, which it shares rather than copies.
#[derive(Clone, Debug)]
pub struct TrajectoryCube {
    header: GridHeader,
    levels: Vec<Arc<AgreementGrid>>,
}

pub fn build_cube(pyramid: &Pyramid) -> TrajectoryCube {
    TrajectoryCube {
        header: *pyramid.native_header(),
        levels: pyramid.levels().iter().map(|l| Arc::clone(&l.native)).collect(),
    }
}

impl TrajectoryCube {
    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    /// Number of downsampling steps L; trajectories have L + 1 entries.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.header.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level(&self, s: usize) -> &AgreementGrid {
        &self.levels[s]
    }

    #[inline]
    pub fn class_at(&self, index: usize, s: usize) -> AgreementClass {
        self.levels[s].cells()[index]
    }

    /// Fills `out` (length L + 1) with the trajectory of the pixel at `index`.
    #[inline]
    pub fn trajectory_into(&self, index: usize, out: &mut [AgreementClass]) {
        for (slot, level) in out.iter_mut().zip(&self.levels) {
            *slot = level.cells()[index];
        }
    }

    /// Switch result of the pixel at `index`, without allocating.
    #[inline]
    pub fn switch_at(&self, index: usize) -> Result<Option<SwitchResult>> {
        let first = self.levels[0].cells()[index];
        if !first.is_misclassified() {
            return Ok(None);
        }
        let mut buf = [AgreementClass::NoData; MAX_LEVELS + 1];
        let traj = &mut buf[..self.levels.len()];
        self.trajectory_into(index, traj);
        switch_level(traj)
    }

    pub fn trajectory(&self, row: usize, col: usize) -> Vec<AgreementClass> {
        let index = row * self.header.ncols + col;
        self.levels.iter().map(|l| l.cells()[index]).collect()
    }
}
