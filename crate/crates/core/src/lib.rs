//! Numerical laboratory for the argmax of Gaussian processes that arise as
//! limits of cube-root extremum estimators.
//!
//! * [`kernels`]: mean and covariance families and their identity checks.
//! * [`simulate`]: lattice path sampling and empirical argmax laws.
//! * [`diagnostics`]: atom masses, refinement profiles, the discontinuity construction.
//! * [`rkhs`]: model-space representations of the limit kernels and means.
//! * [`estimators`]: maximum score, ERM and threshold regression at desk scale.

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod io;
pub mod kernels;
pub mod rkhs;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kernels::{CovSpec, Matrix, MeanSpec, MixtureAtom};
pub use rng::RngPolicy;
pub use simulate::{EmpiricalLaw, Lattice};
