//! Cross-scale thematic agreement between a binarized test surface and a
//! binarized reference surface.
//!
//! Both surfaces are compared at native resolution and again after each of
//! `L` successive 2× presence-preserving (OR) aggregations. Every pixel
//! that is a false positive or false negative natively gets a trajectory of
//! classes across levels; the level at which it first turns into a true
//! positive ranks how likely the disagreement is an artifact of a small
//! positional offset between test and reference objects.
//!
//! ```
//! use xscale::agreement::{build_cube, build_pyramid, composite_surface, ProbabilityMapping};
//! use xscale::grid::{binarize, CountGrid, GridHeader};
//!
//! let header = GridHeader::new(4, 4, 0.0, 0.0, 250.0);
//! let mut test = vec![0.0; 16];
//! let mut reference = vec![0.0; 16];
//! test[0] = 1.0; // (0, 0)
//! reference[5] = 1.0; // (1, 1)
//! let test = binarize(&CountGrid::from_values(header, test)?, 1.0)?;
//! let reference = binarize(&CountGrid::from_values(header, reference)?, 1.0)?;
//!
//! let pyramid = build_pyramid(&test, &reference, 2)?;
//! let cube = build_cube(&pyramid);
//! let surface = composite_surface(&cube, 2, &ProbabilityMapping::Linear)?;
//! assert_eq!(surface.probability.get(0, 0), Some(&(2.0 / 3.0)));
//! # Ok::<(), xscale::Error>(())
//! ```

pub mod agreement;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod rasterize;
pub mod synth;

pub use agreement::{
    build_cube, build_pyramid, classify_agreement, composite_surface, AgreementClass, AgreementGrid, CompositeSurface,
    Family, ProbabilityMapping, Pyramid, SwitchLevel, SwitchResult, TrajectoryCube,
};
pub use error::{Error, Result};
pub use grid::{binarize, or_downsample, upsample_nn, BinaryGrid, Count, CountGrid, Grid, GridHeader, Presence};
pub use metrics::{ComparisonReport, ConfusionCounts};
