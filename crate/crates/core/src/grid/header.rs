use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Georeferencing and shape of a raster. The lattice is anchored at its
/// lower-left corner; row 0 is the top row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata_value: f64,
}

impl GridHeader {
    pub fn new(ncols: usize, nrows: usize, xll: f64, yll: f64, cellsize: f64) -> Self {
        Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata_value: -9999.0,
        }
    }

    pub fn with_nodata(mut self, nodata_value: f64) -> Self {
        self.nodata_value = nodata_value;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err(Error::InvalidHeader(format!(
                "dimensions must be positive, got {}x{}",
                self.nrows, self.ncols
            )));
        }
        if !(self.cellsize.is_finite() && self.cellsize > 0.0) {
            return Err(Error::InvalidHeader(format!(
                "cellsize must be positive, got {}",
                self.cellsize
            )));
        }
        if !self.xll.is_finite() || !self.yll.is_finite() {
            return Err(Error::InvalidHeader("non-finite lower-left corner".into()));
        }
        if self.ncols.checked_mul(self.nrows).is_none() {
            return Err(Error::InvalidHeader("cell count overflows".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Header of the grid obtained by aggregating `factor`×`factor` blocks,
    /// keeping the lower-left anchor. Partial blocks stay at the top and right.
    pub fn coarsened(&self, factor: usize) -> Self {
        Self {
            ncols: self.ncols.div_ceil(factor),
            nrows: self.nrows.div_ceil(factor),
            cellsize: self.cellsize * factor as f64,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeaderField {
    Ncols,
    Nrows,
    Xll,
    Yll,
    Cellsize,
}

impl fmt::Display for HeaderField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeaderField::Ncols => "ncols",
            HeaderField::Nrows => "nrows",
            HeaderField::Xll => "xllcorner",
            HeaderField::Yll => "yllcorner",
            HeaderField::Cellsize => "cellsize",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldMismatch {
    pub field: HeaderField,
    pub left: f64,
    pub right: f64,
}

/// Every header field on which two grids disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct Misalignment(pub Vec<FieldMismatch>);

impl Misalignment {
    pub fn fields(&self) -> impl Iterator<Item = HeaderField> + '_ {
        self.0.iter().map(|m| m.field)
    }
}

impl fmt::Display for Misalignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} ({} vs {})", m.field, m.left, m.right)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Alignment {
    Aligned,
    Mismatch(Misalignment),
}

impl Alignment {
    pub fn is_aligned(&self) -> bool {
        matches!(self, Alignment::Aligned)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Alignment::Aligned => Ok(()),
            Alignment::Mismatch(m) => Err(Error::Misaligned(m)),
        }
    }
}

/// Shape and cellsize must match exactly; the lower-left corner may differ
/// by less than a millionth of a cell.
pub fn align_check(a: &GridHeader, b: &GridHeader) -> Alignment {
    let mut diffs = Vec::new();
    let mut push = |field, left: f64, right: f64| diffs.push(FieldMismatch { field, left, right });
    if a.ncols != b.ncols {
        push(HeaderField::Ncols, a.ncols as f64, b.ncols as f64);
    }
    if a.nrows != b.nrows {
        push(HeaderField::Nrows, a.nrows as f64, b.nrows as f64);
    }
    // NaN differences count as mismatches
    let close = |x: f64, y: f64| (x - y).abs() < a.cellsize * 1e-6;
    if !close(a.xll, b.xll) {
        push(HeaderField::Xll, a.xll, b.xll);
    }
    if !close(a.yll, b.yll) {
        push(HeaderField::Yll, a.yll, b.yll);
    }
    if a.cellsize != b.cellsize {
        push(HeaderField::Cellsize, a.cellsize, b.cellsize);
    }
    if diffs.is_empty() {
        Alignment::Aligned
    } else {
        Alignment::Mismatch(Misalignment(diffs))
    }
}
