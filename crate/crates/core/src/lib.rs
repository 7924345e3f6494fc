//! Bilinear optimal control of the damped wave equation
//! `ÿ + ẏ = Δy + u y + f` on a box with homogeneous Dirichlet data,
//! discretized by finite differences on a truncated time horizon.

pub mod adjoint;
pub mod domain;
pub mod error;
mod kernel;
pub mod linalg;
pub mod objective;
pub mod optimizer;
pub mod sampling;
pub mod sensitivity;
pub mod state;

pub use adjoint::{AdjointScheme, AdjointTrajectory, DecayCertificate, ProblemFamily};
pub use domain::{ScalarField, SpaceTimeField, SpatialGrid, TimeGrid};
pub use error::{Result, WaveError};
pub use objective::{CostReport, GradientField, HessianTerms};
pub use optimizer::{OptimizeResult, OptimizerConfig, SecondOrderReport, Verdict};
pub use sensitivity::LinearizedTrajectory;
pub use state::{EnergyReport, StateTrajectory, WaveProblem};
