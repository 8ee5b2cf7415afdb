//! Maximal p-centrality discrepancy between probability distributions:
//! exact transport oracles, a tape-based autodiff engine with spectral
//! normalization, the square-root velocity transform block, and a desk-scale
//! adversarial trainer on synthetic 2D mixtures.
//!
//! The crate is organized as a stack of small modules. `measures` and
//! `transport` form the ground-truth layer: everything the rest of the crate
//! claims is checkable against them. `autodiff` + `srvt` provide networks,
//! `discrepancy` runs the ascent estimator, `trainer` runs adversarial
//! training, and `verify` executes the invariant suites behind the CLI.

pub mod autodiff;
pub mod cli;
pub mod discrepancy;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod seeding;
pub mod srvt;
pub mod trainer;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use measures::EmpiricalDistribution;
pub use transport::TransportPlan;
