//! Spatiotemporally-informed path planning for dynamic scalar fields.
//!
//! A mobile point sensor surveys a field that evolves while the survey runs.
//! The field is modeled as a Gaussian process with a separable space-time
//! kernel (Matérn over space, RBF over time), so the value of a candidate
//! measurement depends on *when* it would be taken as well as where, and
//! revisiting a stale site can be worthwhile. An incremental tree planner
//! grows candidate trajectories scored by exact information gain at a fixed
//! inducing grid, a vote-based selector picks a path, and a receding-horizon
//! executor interleaves execution with replanning.
//!
//! Crate layout:
//!
//! - [`kernels`]: covariance functions, Gram assembly, Kronecker factors
//! - [`gp`]: exact GP regression and incremental posterior extension
//! - [`infogain`]: entropy and information-gain functions over the map
//! - [`planner`]: the information-driven space-time tree planner
//! - [`executor`]: path selection and the mission loop
//! - [`coverage`]: deterministic circle / lemniscate baseline tours
//! - [`field`] / [`advect`] / [`raster`]: ground-truth fields, the
//!   advection-diffusion simulator, and file import/export
//!
//! The `parallel` feature (on by default) runs the data-parallel inner loops
//! on rayon; disabling it gives a fully sequential build that produces
//! bit-identical numbers.

pub mod advect;
pub mod coverage;
pub mod error;
mod exec;
pub mod executor;
pub mod field;
pub mod gp;
pub mod infogain;
pub mod kernels;
pub mod planner;
pub mod raster;

pub use error::{Error, Result};
pub use field::Bounds;
pub use gp::{GpModel, Observation, Prediction};
pub use kernels::{KernelParams, SpaceTimePoint};
