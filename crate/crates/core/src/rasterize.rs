//! Point-to-cell counting on a fixed lattice.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Count, CountGrid, Grid, GridHeader};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl PointRecord {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }

    pub fn weighted(x: f64, y: f64, weight: f64) -> Self {
        Self { x, y, weight }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rasterized {
    pub grid: CountGrid,
    /// Points falling outside the lattice extent.
    pub dropped_points: usize,
    pub dropped_weight: f64,
}

/// Cell of `(x, y)` as (row, col), or `None` outside the extent. Cells are
/// half-open: a point on a cell's right or top edge belongs to the next cell.
pub fn cell_of(lattice: &GridHeader, x: f64, y: f64) -> Option<(usize, usize)> {
    let col = ((x - lattice.xll) / lattice.cellsize).floor();
    let from_bottom = ((y - lattice.yll) / lattice.cellsize).floor();
    if col < 0.0 || from_bottom < 0.0 || col >= lattice.ncols as f64 || from_bottom >= lattice.nrows as f64 {
        return None;
    }
    Some((lattice.nrows - 1 - from_bottom as usize, col as usize))
}

/// Sums point weights per cell. Accumulation runs in input order, so
/// results are reproducible for fractional weights too.
pub fn points_to_counts(points: &[PointRecord], lattice: &GridHeader) -> Result<Rasterized> {
    lattice.validate()?;
    let mut sums = vec![0.0f64; lattice.len()];
    let mut dropped_points = 0;
    let mut dropped_weight = 0.0;
    for (index, p) in points.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::NonFiniteCoordinate { index, x: p.x, y: p.y });
        }
        if !(p.weight.is_finite() && p.weight >= 0.0) {
            return Err(Error::NegativeWeight {
                index,
                weight: p.weight,
            });
        }
        match cell_of(lattice, p.x, p.y) {
            Some((row, col)) => sums[row * lattice.ncols + col] += p.weight,
            None => {
                dropped_points += 1;
                dropped_weight += p.weight;
            }
        }
    }
    Ok(Rasterized {
        grid: Grid::new(*lattice, sums.into_iter().map(Count::new).collect())?,
        dropped_points,
        dropped_weight,
    })
}

/// Reads `x,y[,weight]` rows. Column names are matched case-insensitively
/// and may appear in any order; a missing weight column means weight 1.
pub fn load_points_csv<R: Read>(source: R) -> Result<Vec<PointRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let x_col = column("x").ok_or(Error::MissingColumn("x"))?;
    let y_col = column("y").ok_or(Error::MissingColumn("y"))?;
    let w_col = column("weight");

    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| Error::PointsCsv {
            row,
            message: e.to_string(),
        })?;
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or_default();
            raw.parse::<f64>().map_err(|_| Error::PointsCsv {
                row,
                message: format!("non-numeric {name} `{raw}`"),
            })
        };
        let x = field(x_col, "x")?;
        let y = field(y_col, "y")?;
        let weight = match w_col {
            Some(c) => field(c, "weight")?,
            None => 1.0,
        };
        points.push(PointRecord { x, y, weight });
    }
    Ok(points)
}
