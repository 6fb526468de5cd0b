//! Pseudo-spectral incompressible MHD on a periodic box, plus the ensemble
//! machinery for localized enstrophy-flux analysis: covers of an integral
//! domain, refined space-time cutoffs, flux budgets, Kraichnan-type scales,
//! assumption verifiers and the cascade/locality bound reports.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod covers;
pub mod cutoffs;
pub mod ensemble;
pub mod error;
pub mod flux;
pub mod grid;
pub mod io;
pub mod kinematics;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::{Real, Vec3};

pub type Grid = grid::GridSpec<f64>;
pub type Field = grid::VectorField<f64>;
pub type Scalar = grid::ScalarField<f64>;
pub type State = solver::MhdState<f64>;
pub type Series = solver::SnapshotSeries<f64>;
pub type Config = solver::SolverConfig<f64>;
