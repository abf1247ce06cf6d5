use std::sync::Arc;

use rayon::prelude::*;

use super::{classify_agreement, AgreementClass, AgreementGrid};
use crate::error::{Error, Result};
use crate::grid::{or_downsample, upsample_nn, BinaryGrid, GridHeader};

/// Deepest supported pyramid; 2^30 native cells per coarse block edge.
pub const MAX_LEVELS: usize = 30;

#[derive(Clone, Debug)]
pub struct PyramidLevel {
    pub index: usize,
    /// Agreement at cellsize · 2^index.
    pub coarse: Arc<AgreementGrid>,
    /// `coarse` replicated back onto the native lattice, NoData wherever
    /// the native comparison is NoData.
    pub native: Arc<AgreementGrid>,
}

#[derive(Clone, Debug)]
pub struct Pyramid {
    levels: Vec<PyramidLevel>,
}

impl Pyramid {
    pub fn levels(&self) -> &[PyramidLevel] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> &PyramidLevel {
        &self.levels[index]
    }

    /// Number of downsampling steps (L); there are L + 1 levels.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn native_header(&self) -> &GridHeader {
        self.levels[0].native.header()
    }
}

/// Level 0 compares the inputs as given. Each further level OR-aggregates
/// the previous level's binaries by 2 and re-classifies them, so
/// agreement is always recomputed from presence, never from classes.
pub fn build_pyramid(test: &BinaryGrid, reference: &BinaryGrid, levels: usize) -> Result<Pyramid> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(Error::InvalidLevels {
            levels,
            max: MAX_LEVELS,
        });
    }
    let base = Arc::new(classify_agreement(test, reference)?);
    let native_header = *base.header();
    let mut out = vec![PyramidLevel {
        index: 0,
        coarse: Arc::clone(&base),
        native: Arc::clone(&base),
    }];

    let mut t = or_downsample(test, 2)?;
    let mut r = or_downsample(reference, 2)?;
    for s in 1..=levels {
        if s > 1 {
            t = or_downsample(&t, 2)?;
            r = or_downsample(&r, 2)?;
        }
        let coarse = classify_agreement(&t, &r)?;
        let mut native = upsample_nn(&coarse, 1 << s, &native_header)?;
        native
            .cells_mut()
            .par_iter_mut()
            .zip(base.cells().par_iter())
            .with_min_len(4096)
            .for_each(|(cell, &b)| {
                if b == AgreementClass::NoData {
                    *cell = AgreementClass::NoData;
                }
            });
        out.push(PyramidLevel {
            index: s,
            coarse: Arc::new(coarse),
            native: Arc::new(native),
        });
    }
    Ok(Pyramid { levels: out })
}
