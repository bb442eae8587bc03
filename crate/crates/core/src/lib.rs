//! Finite-dimensional Galerkin model of a channel flow coupled to a clamped
//! nonlinear plate on the top wall.

pub mod assembly;
pub mod base_flow;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod extension;
pub mod fields;
pub mod fluid_basis;
pub mod hermite;
pub mod linalg;
pub mod plate_forces;
pub mod plate_modes;
pub mod quadrature;
pub mod stationary;
pub mod time_integration;

pub use error::{Error, Result};
pub use assembly::{CoupledSystem, Discretization, StateVector};
pub use base_flow::{StabilityBranch, StabilityReport};
pub use config::{parse_config, validate, Drag, DomainSpec, ExperimentConfig, ForceModelSpec, RunConfig, Scheme};
pub use diagnostics::{DecayFit, EnergyReport, LyapunovReport, QuasiStabilityReport};
pub use plate_forces::ForceModel;
pub use plate_modes::PlateBasis;
pub use stationary::{StationaryOptions, StationarySet};
pub use time_integration::{Integrator, IntegratorConfig, Trajectory};
