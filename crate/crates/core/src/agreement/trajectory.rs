use std::fmt;

use serde::{Deserialize, Serialize};

use super::AgreementClass;
use crate::error::{Error, Result};

/// Disagreement family of a natively misclassified pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Fp,
    Fn,
}

impl Family {
    pub fn class(self) -> AgreementClass {
        match self {
            Family::Fp => AgreementClass::Fp,
            Family::Fn => AgreementClass::Fn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SwitchLevel {
    /// First level (1..=L) at which the pixel's block is TP.
    At(usize),
    Never,
}

impl fmt::Display for SwitchLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwitchLevel::At(s) => write!(f, "{s}"),
            SwitchLevel::Never => f.write_str("never"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SwitchResult {
    pub family: Family,
    pub level: SwitchLevel,
}

fn render(trajectory: &[AgreementClass]) -> String {
    let parts: Vec<String> = trajectory.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(" "))
}

/// Ranks a trajectory. `Ok(None)` when level 0 is TP, TN or NoData.
///
/// A natively misclassified pixel must read family…family TP…TP; any
/// other shape cannot arise from OR aggregation and is reported as an
/// error rather than ranked.
pub fn switch_level(trajectory: &[AgreementClass]) -> Result<Option<SwitchResult>> {
    let Some((&first, rest)) = trajectory.split_first() else {
        return Err(Error::MalformedTrajectory("[] (empty)".into()));
    };
    let family = match first {
        AgreementClass::Fp => Family::Fp,
        AgreementClass::Fn => Family::Fn,
        _ => return Ok(None),
    };
    let mut level = SwitchLevel::Never;
    for (i, &class) in rest.iter().enumerate() {
        let s = i + 1;
        match (level, class) {
            (SwitchLevel::Never, c) if c == first => {}
            (SwitchLevel::Never, AgreementClass::Tp) => level = SwitchLevel::At(s),
            (SwitchLevel::At(_), AgreementClass::Tp) => {}
            _ => {
                return Err(Error::MalformedTrajectory(format!(
                    "{}: {class} at level {s}",
                    render(trajectory)
                )))
            }
        }
    }
    Ok(Some(SwitchResult { family, level }))
}

/// Strictly decreasing probabilities for switch levels 1..=L, plus the
/// value for trajectories that never switch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct ProbabilityTable {
    by_level: Vec<f64>,
    never: f64,
}

#[derive(Deserialize)]
struct RawTable {
    by_level: Vec<f64>,
    never: f64,
}

impl TryFrom<RawTable> for ProbabilityTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        ProbabilityTable::new(raw.by_level, raw.never)
    }
}

impl ProbabilityTable {
    pub fn new(by_level: Vec<f64>, never: f64) -> Result<Self> {
        if by_level.is_empty() {
            return Err(Error::InvalidMapping("table needs at least one level".into()));
        }
        for &p in by_level.iter().chain(std::iter::once(&never)) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidMapping(format!("probability {p} outside [0, 1]")));
            }
        }
        if let Some(w) = by_level.windows(2).find(|w| w[0] <= w[1]) {
            return Err(Error::InvalidMapping(format!(
                "probabilities must strictly decrease with level, got {} then {}",
                w[0], w[1]
            )));
        }
        let last = *by_level.last().expect("non-empty");
        if never >= last {
            return Err(Error::InvalidMapping(format!(
                "never-switch probability {never} must be below the last level's {last}"
            )));
        }
        Ok(Self { by_level, never })
    }

    pub fn by_level(&self) -> &[f64] {
        &self.by_level
    }

    pub fn never(&self) -> f64 {
        self.never
    }
}

/// Monotone map from switch level to offset-induced misclassification
/// probability: earlier switches score higher, never-switching lowest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilityMapping {
    /// p(s) = (L + 1 − s)/(L + 1), p(never) = 0.
    #[default]
    Linear,
    /// Integer rank L + 1 − s, never → 0.
    OrdinalRank,
    Table(ProbabilityTable),
}

/// A mapping evaluated for a fixed depth L.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedMapping {
    by_level: Vec<f64>,
    never: f64,
}

impl ResolvedMapping {
    #[inline]
    pub fn probability(&self, level: SwitchLevel) -> f64 {
        match level {
            SwitchLevel::At(s) => self.by_level[s - 1],
            SwitchLevel::Never => self.never,
        }
    }

    pub fn depth(&self) -> usize {
        self.by_level.len()
    }

    /// Every value the mapping can produce, highest first.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.by_level.iter().copied().chain(std::iter::once(self.never))
    }
}

impl ProbabilityMapping {
    pub fn resolve(&self, levels: usize) -> Result<ResolvedMapping> {
        if levels == 0 {
            return Err(Error::InvalidMapping("depth must be at least 1".into()));
        }
        let n = (levels + 1) as f64;
        Ok(match self {
            ProbabilityMapping::Linear => ResolvedMapping {
                by_level: (1..=levels).map(|s| (levels + 1 - s) as f64 / n).collect(),
                never: 0.0,
            },
            ProbabilityMapping::OrdinalRank => ResolvedMapping {
                by_level: (1..=levels).map(|s| (levels + 1 - s) as f64).collect(),
                never: 0.0,
            },
            ProbabilityMapping::Table(t) => {
                if t.by_level.len() != levels {
                    return Err(Error::InvalidMapping(format!(
                        "table has {} levels, comparison uses {levels}",
                        t.by_level.len()
                    )));
                }
                ResolvedMapping {
                    by_level: t.by_level.clone(),
                    never: t.never,
                }
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProbabilityMapping::Linear => "linear",
            ProbabilityMapping::OrdinalRank => "rank",
            ProbabilityMapping::Table(_) => "table",
        }
    }
}

pub fn offset_probability(result: &SwitchResult, levels: usize, mapping: &ProbabilityMapping) -> Result<f64> {
    if let SwitchLevel::At(s) = result.level {
        if s == 0 || s > levels {
            return Err(Error::InvalidMapping(format!("switch level {s} outside 1..={levels}")));
        }
    }
    Ok(mapping.resolve(levels)?.probability(result.level))
}
