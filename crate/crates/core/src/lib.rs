//! Exact-arithmetic laboratory for staircase rank-one transformations.
//!
//! The crate builds the cutting-and-stacking geometry of a staircase
//! construction exactly, computes the correlation sequence
//! `c(n) = μ(TⁿA ∩ A)` of a fixed level set `A` with certified rational
//! enclosures, and runs the numerical experiments around the spectral
//! mechanism that makes `T ⊗ T` have homogeneous spectrum of multiplicity 2:
//! the Cesàro-average identity, the tower-height inner-product gap, the
//! averaged estimate for `Q_r ⊗ Q_r`, and the distance from
//! `Tʳf ⊗ f + f ⊗ Tʳf` to the cyclic space of `f ⊗ f`.
//!
//! Module map:
//!
//! * [`construction`]: rank law, stage geometry, level sets, census of rank plateaus.
//! * [`correlation`]: memoized pair counts and correlation enclosures.
//! * [`formal`]: symbolic combinations of `Tᵃf ⊗ Tᵇf` with rational coefficients.
//! * [`analytics`]: gap reports, the averaged estimate, cyclic distance, spectra.
//! * [`oracle`]: slow brute-force ground truth used by the tests.
//! * [`config`], [`report`] and [`cli`]: run configuration, CSV output and the command line.

pub mod analytics;
pub mod cli;
pub mod config;
pub mod construction;
pub mod correlation;
pub mod enclosure;
mod error;
pub mod formal;
pub mod numeric;
pub mod oracle;
pub mod report;

pub use construction::{Construction, LevelSet, RankLaw, Rounding, StageGeometry, StaircaseParams};
pub use correlation::{CorrEstimate, CorrSequence, CorrelationEngine};
pub use enclosure::{Enclosure, Verdict};
pub use error::{Error, Result};
pub use formal::{FormalBitensor, FormalVector};
