//! Monte Carlo laboratory for the loop-erased random walk on `Z^3`.
//!
//! Lattice geometry, walk samplers, loop erasure, discrete harmonic solvers,
//! estimators for hitting probabilities and occupation measures, and the
//! regression tools that turn estimates into exponents.

pub mod calibration;
pub mod error;
pub mod estimate;
pub mod estimators;
pub mod geometry;
pub mod harmonic;
pub mod loop_erasure;
pub mod minkowski;
pub mod pathio;
pub mod rng;
pub mod scaling;
pub mod trials;
pub mod walk;

pub use error::{Error, Result};
pub use estimate::{Accumulator, Estimate, MomentsAccumulator, PairAccumulator};
pub use geometry::{BallDomain, DyadicBox, LatticePoint, REFERENCE_POINT};
pub use loop_erasure::{ilerw_sample, lerw_sample, loop_erase, LerwSampler, SelfAvoidingPath};
pub use rng::SeedSpec;
pub use scaling::{fit_power_law, PowerLawFit, RatioTestReport};
pub use walk::LatticePath;
