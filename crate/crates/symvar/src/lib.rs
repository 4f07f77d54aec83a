//! Symmetrization-aware variational principles on discrete function spaces.
//!
//! A [`grid::GridSpace`] carries the norm triple X, V, W over a uniform
//! grid; [`rearrange`] provides polarization and Schwarz rearrangement;
//! [`principles`] turns variational principles into sampled certificates;
//! [`applications`] runs the energy, fixed-point and drop/petal experiments.

pub mod applications;
pub mod domain;
pub mod error;
pub mod functional;
pub mod grid;
pub mod metric;
pub mod optimize;
pub mod principles;
pub mod rearrange;
pub mod registry;
pub mod sampling;
pub mod slopes;

mod embed;

pub use error::{Result, SymError};
pub use grid::{make_grid, GridFunction, GridSpace, NormKind};
