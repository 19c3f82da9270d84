//! Mean curvature flow of rotationally symmetric entire graphs `x_{n+1} = u(|y|)` over `R^n`.
//!
//! The crate discretizes radial graphs, evolves them with an explicit method of lines, solves the
//! translating and self-expanding soliton ODEs, performs the expander normalization and the
//! essential blow-up rescaling, and evaluates pinching, noncollapsing, Harnack and gradient
//! monitors on the resulting trajectories.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod initial_data;
pub mod monitors;
pub mod rescaling;
pub mod solitons;

pub use error::{Error, Result};
pub use flow::{
    domain_sensitivity, evolve, rhs, step, DomainSensitivity, FlowSample, FlowTrajectory,
    OuterBoundary, Sampling, SolverConfig, StepStats, Termination,
};
pub use geometry::{geometry_at, GeometrySample};
pub use grid::{GraphProfile, RadialGrid};
pub use initial_data::{InitialData, PowerGraph, Table};
pub use monitors::{ClassificationHint, MonitorConfig, MonitorReport, NoncollapseSample, Series};
pub use rescaling::{BlowupSelection, HarnackSample, NormalizedState, RescaledFlow, SolitonMatch};
pub use solitons::{OdeOptions, ShootingOptions, SolitonKind, SolitonProfile};
