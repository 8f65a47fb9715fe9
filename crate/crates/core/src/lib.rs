//! Lagrangian minimizing-movement schemes for nonlinear diffusion in one
//! space dimension.
//!
//! A density `u` on `[a, b]` is represented by its inverse distribution
//! function sampled at `ξ_i = i/k`. One time step minimizes transport cost
//! plus energy over such vectors; see [`jko`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod cost;
pub mod energy;
pub mod error;
pub mod grid;
pub mod jko;
pub mod tridiag;

pub use cost::CostModel;
pub use energy::{EnergyModel, Potential};
pub use error::{Error, Result};
pub use grid::{Density, IdfVector, PiecewiseDensity};
pub use jko::{evolve, jko_step, JkoConfig, StepReport, Trajectory};
