//! Per-level confusion accounting, switch-level histograms and the
//! offset-adjusted disagreement summary.
//!
//! Per-level counts are taken on each level's coarse grid: one decision
//! per coarse cell, not 4^s replicated native pixels.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{
    AgreementClass, AgreementGrid, Family, ProbabilityMapping, Pyramid, SwitchLevel, TrajectoryCube,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub level_index: usize,
    pub cellsize: f64,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub nodata: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_ + self.nodata
    }

    pub fn valid(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn at_level(mut self, level_index: usize) -> Self {
        self.level_index = level_index;
        self
    }
}

/// Exact class tallies of one agreement grid (level index 0; see
/// [`ConfusionCounts::at_level`]).
pub fn confusion_matrix(grid: &AgreementGrid) -> ConfusionCounts {
    let tally = grid
        .cells()
        .par_chunks(1 << 16)
        .map(|chunk| {
            let mut t = [0u64; 5];
            for &c in chunk {
                t[c as usize] += 1;
            }
            t
        })
        .reduce(|| [0u64; 5], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    ConfusionCounts {
        level_index: 0,
        cellsize: grid.header().cellsize,
        tp: tally[AgreementClass::Tp as usize],
        tn: tally[AgreementClass::Tn as usize],
        fp: tally[AgreementClass::Fp as usize],
        fn_: tally[AgreementClass::Fn as usize],
        nodata: tally[AgreementClass::NoData as usize],
    }
}

pub fn level_counts(pyramid: &Pyramid) -> Vec<ConfusionCounts> {
    pyramid
        .levels()
        .iter()
        .map(|l| confusion_matrix(&l.coarse).at_level(l.index))
        .collect()
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Standard accuracy measures. `None` marks a zero denominator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub percent_correct: Option<f64>,
    pub omission_rate: Option<f64>,
    pub commission_rate: Option<f64>,
    pub f_measure: Option<f64>,
}

pub fn derived_measures(c: &ConfusionCounts) -> Measures {
    Measures {
        percent_correct: ratio(c.tp + c.tn, c.valid()),
        omission_rate: ratio(c.fn_, c.fn_ + c.tp),
        commission_rate: ratio(c.fp, c.fp + c.tp),
        f_measure: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

/// Counts of natively misclassified pixels by switch level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchHistogram {
    /// Entry s − 1 counts switches at level s.
    pub by_level: Vec<u64>,
    pub never: u64,
}

impl SwitchHistogram {
    fn new(levels: usize) -> Self {
        Self {
            by_level: vec![0; levels],
            never: 0,
        }
    }

    fn add(&mut self, level: SwitchLevel) {
        match level {
            SwitchLevel::At(s) => self.by_level[s - 1] += 1,
            SwitchLevel::Never => self.never += 1,
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.by_level.iter_mut().zip(&other.by_level) {
            *a += b;
        }
        self.never += other.never;
        self
    }

    pub fn total(&self) -> u64 {
        self.by_level.iter().sum::<u64>() + self.never
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchHistograms {
    pub fp: SwitchHistogram,
    #[serde(rename = "fn")]
    pub fn_: SwitchHistogram,
}

const PIXELS_PER_TASK: usize = 1 << 16;

fn pixel_ranges(len: usize) -> impl IndexedParallelIterator<Item = std::ops::Range<usize>> {
    (0..len.div_ceil(PIXELS_PER_TASK))
        .into_par_iter()
        .map(move |k| k * PIXELS_PER_TASK..((k + 1) * PIXELS_PER_TASK).min(len))
}

pub fn switch_histograms(cube: &TrajectoryCube) -> Result<SwitchHistograms> {
    let levels = cube.depth();
    let empty = || SwitchHistograms {
        fp: SwitchHistogram::new(levels),
        fn_: SwitchHistogram::new(levels),
    };
    let parts: Vec<Result<SwitchHistograms>> = pixel_ranges(cube.len())
        .map(|indices| {
            let mut h = empty();
            for i in indices {
                if let Some(r) = cube.switch_at(i)? {
                    match r.family {
                        Family::Fp => h.fp.add(r.level),
                        Family::Fn => h.fn_.add(r.level),
                    }
                }
            }
            Ok(h)
        })
        .collect();
    parts.into_iter().try_fold(empty(), |acc, part| {
        let part = part?;
        Ok(SwitchHistograms {
            fp: acc.fp.merge(&part.fp),
            fn_: acc.fn_.merge(&part.fn_),
        })
    })
}

/// Level-0 disagreement split at probability threshold θ into
/// offset-induced (p ≥ θ) and true disagreement (p < θ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjustedDisagreement {
    pub theta: f64,
    pub offset_induced_fp: u64,
    pub offset_induced_fn: u64,
    pub true_fp: u64,
    pub true_fn: u64,
    pub offset_induced: u64,
    pub true_disagreement: u64,
    pub unadjusted_percent_correct: Option<f64>,
    /// Percent correct when offset-induced pixels count as agreement.
    /// A derived summary, not a conventional accuracy statistic.
    pub adjusted_percent_correct: Option<f64>,
}

pub fn adjusted_disagreement(
    cube: &TrajectoryCube,
    levels: usize,
    mapping: &ProbabilityMapping,
    theta: f64,
) -> Result<AdjustedDisagreement> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidTheta(theta));
    }
    if levels != cube.depth() {
        return Err(Error::DimensionMismatch(format!(
            "cube has {} levels, {levels} requested",
            cube.depth()
        )));
    }
    let resolved = mapping.resolve(levels)?;
    // [offset fp, offset fn, true fp, true fn]
    let parts: Vec<Result<[u64; 4]>> = pixel_ranges(cube.len())
        .map(|indices| {
            let mut t = [0u64; 4];
            for i in indices {
                if let Some(r) = cube.switch_at(i)? {
                    let offset = resolved.probability(r.level) >= theta;
                    let k = match (offset, r.family) {
                        (true, Family::Fp) => 0,
                        (true, Family::Fn) => 1,
                        (false, Family::Fp) => 2,
                        (false, Family::Fn) => 3,
                    };
                    t[k] += 1;
                }
            }
            Ok(t)
        })
        .collect();
    let mut t = [0u64; 4];
    for part in parts {
        let part = part?;
        for k in 0..4 {
            t[k] += part[k];
        }
    }
    let level0 = confusion_matrix(cube.level(0));
    let offset_induced = t[0] + t[1];
    Ok(AdjustedDisagreement {
        theta,
        offset_induced_fp: t[0],
        offset_induced_fn: t[1],
        true_fp: t[2],
        true_fn: t[3],
        offset_induced,
        true_disagreement: t[2] + t[3],
        unadjusted_percent_correct: ratio(level0.tp + level0.tn, level0.valid()),
        adjusted_percent_correct: ratio(level0.tp + level0.tn + offset_induced, level0.valid()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub cellsize: f64,
    pub nrows: usize,
    pub ncols: usize,
    #[serde(flatten)]
    pub counts: CountsOnly,
    #[serde(flatten)]
    pub measures: Measures,
}

/// Class tallies without the level bookkeeping, for flattening.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsOnly {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub nodata: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    /// File name without its directory.
    pub file: String,
    pub sha256: String,
}

/// Every effective parameter of a comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub levels: usize,
    pub threshold: f64,
    pub mapping: ProbabilityMapping,
    pub theta: f64,
    pub inputs: BTreeMap<String, InputDigest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub levels: Vec<LevelReport>,
    pub granularity: String,
    pub histogram: SwitchHistograms,
    pub adjusted: AdjustedDisagreement,
    pub config: ConfigEcho,
    pub legend: BTreeMap<String, BTreeMap<String, String>>,
}

fn legend() -> BTreeMap<String, BTreeMap<String, String>> {
    let table = |pairs: &[(&str, &str)]| pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    BTreeMap::from([
        (
            "class".to_string(),
            table(&[("1", "TP"), ("2", "TN"), ("3", "FP"), ("4", "FN"), ("nodata", "NODATA")]),
        ),
        (
            "family".to_string(),
            table(&[("0", "NONE"), ("3", "FP"), ("4", "FN"), ("nodata", "NODATA")]),
        ),
        (
            "probability".to_string(),
            table(&[
                ("value", "offset-induced misclassification score of FP/FN pixels"),
                ("0", "TP, TN, or never switches to TP"),
                ("nodata", "NODATA"),
            ]),
        ),
    ])
}

impl ComparisonReport {
    pub fn build(pyramid: &Pyramid, cube: &TrajectoryCube, config: ConfigEcho) -> Result<Self> {
        let levels = level_counts(pyramid)
            .into_iter()
            .zip(pyramid.levels())
            .map(|(c, l)| LevelReport {
                level: c.level_index,
                cellsize: c.cellsize,
                nrows: l.coarse.nrows(),
                ncols: l.coarse.ncols(),
                counts: CountsOnly {
                    tp: c.tp,
                    tn: c.tn,
                    fp: c.fp,
                    fn_: c.fn_,
                    nodata: c.nodata,
                },
                measures: derived_measures(&c),
            })
            .collect();
        Ok(Self {
            levels,
            granularity: "per-level counts are coarse-grid cells of that level".into(),
            histogram: switch_histograms(cube)?,
            adjusted: adjusted_disagreement(cube, config.levels, &config.mapping, config.theta)?,
            config,
            legend: legend(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per level; undefined measures are written as `undefined`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(sink);
        w.write_record([
            "level",
            "cellsize",
            "nrows",
            "ncols",
            "tp",
            "tn",
            "fp",
            "fn",
            "nodata",
            "percent_correct",
            "omission_rate",
            "commission_rate",
            "f_measure",
        ])?;
        let measure = |m: Option<f64>| m.map_or_else(|| "undefined".to_string(), |v| v.to_string());
        for l in &self.levels {
            w.write_record([
                l.level.to_string(),
                l.cellsize.to_string(),
                l.nrows.to_string(),
                l.ncols.to_string(),
                l.counts.tp.to_string(),
                l.counts.tn.to_string(),
                l.counts.fp.to_string(),
                l.counts.fn_.to_string(),
                l.counts.nodata.to_string(),
                measure(l.measures.percent_correct),
                measure(l.measures.omission_rate),
                measure(l.measures.commission_rate),
                measure(l.measures.f_measure),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
