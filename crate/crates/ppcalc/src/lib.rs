//! Poisson-process partition calculus.
//!
//! A library for exact and Monte Carlo computation with exchangeable random
//! partitions and completely random measures: Ewens / Poisson-Dirichlet
//! partition distributions, parametric Levy intensities with exponential
//! tilting, partition-sum moment formulas, the weighted Chinese restaurant
//! sequential importance sampler, posterior analysis of kernel-mixed
//! intensity models, scaled-mixture representations of Pitman-Yor measures,
//! Cauchy-Stieltjes transforms of normalized measures, neutral-to-the-right
//! survival models, and Poisson-Kingman partition distributions.
//!
//! Brute-force oracles used to verify every analytic path are bundled in the
//! `verify` module and runnable through the CLI.

pub mod base;
pub mod eppf;
pub mod error;
pub mod exec;
pub mod levy;
pub mod levycox;
pub mod moments;
pub mod ntr;
pub mod numeric;
pub mod partition;
pub mod pk;
pub mod scaled;
pub mod transforms;
pub mod verify;
pub mod wcr;

pub use base::BaseMeasure;
pub use eppf::EppfSpec;
pub use error::{Error, Result};
pub use levy::{AtomicMeasureDraw, LevyIntensity};
pub use partition::Partition;
