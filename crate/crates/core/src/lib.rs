//! Simulator for gradient echo memories in a three-level (Λ) ensemble.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: scenario description, schedules, envelopes and records
//! - [`solver`]: time integration of the field/coherence equations
//! - [`oracle`]: closed-form beamsplitter model of write, read and interference
//! - [`scenario`]: time-domain and frequency-domain protocol builders and presets
//! - [`analysis`]: window energies, fringe fits and parallel sweeps
//! - [`export`]: CSV, JSON and binary output
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod export;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod scenario;
pub mod solver;

pub use model::{
    validate, DetectionWindow, FringeDataset, Port, ScenarioConfig, SimulationRecord,
    ValidationReport,
};
pub use scalar::Real;
pub use solver::{run, SolverError, SolverSettings};

pub type Scenario = model::ScenarioConfig<f64>;
pub type Record = model::SimulationRecord<f64>;
pub type Ensemble = model::EnsembleParams<f64>;
pub type Fringe = model::FringeDataset<f64>;
pub type Gradient = model::GradientProfile<f64>;
pub type Coupling = model::CouplingSchedule<f64>;
pub type Pulse = model::PulseEnvelope<f64>;
pub type TimeDomain = scenario::TimeDomainParams<f64>;
pub type FrequencyDomain = scenario::FrequencyDomainParams<f64>;
