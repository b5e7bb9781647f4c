//! Information-theoretic resolution limits of correlation (SOFI-style) imaging.
//!
//! The crate evaluates exact single-point correlation functions of blinking
//! point sources imaged through a Gaussian point-spread function, turns them
//! into normalized detection probabilities, and from those builds Fisher
//! information matrices and Cramér-Rao bounds on the source positions. A
//! Monte-Carlo engine covers the finite-acquisition side: power-law blinking
//! traces, plug-in joint cumulant estimates and shot-noise envelopes.
//!
//! All lengths are expressed in units of the PSF width `w`.
//!
//! Module map:
//! - [`geometry`]: PSF model, source configurations, shape templates, detection grids.
//! - [`correlation`]: correlation functions, gradients, probability fields, cumulant images.
//! - [`cumulant`]: set partitions and moment/cumulant conversions.
//! - [`fisher`]: Fisher matrices and Cramér-Rao bounds.
//! - [`sweep`]: scale/order sweeps, optimal order and resolution scans.
//! - [`blink`]: blinking traces and joint cumulant estimation.
//! - [`shot_noise`]: Poisson shot-noise envelopes of cumulant images.
//! - [`export`]: CSV emission of fields and tables.

pub mod blink;
pub mod correlation;
pub mod cumulant;
pub mod error;
pub mod export;
pub mod fisher;
pub mod geometry;
pub mod shot_noise;
pub mod sweep;

mod rng;

pub use error::{Error, Result};
