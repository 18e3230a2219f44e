//! Numerical core for one-dimensional two-species competition-diffusion
//! systems.
//!
//! The crate is `no_std` (it only needs `alloc`) and carries everything that
//! is pure computation: model definitions and coefficient fields, the
//! semi-implicit time stepper, front location and speed regression, the
//! speed-measurement protocol, marching-squares contours and the packaged
//! heterogeneous scenarios. File formats, parallel sweeps and the command
//! line live in the `wavespeed` crate.
//!
//! Orientation convention: `u` occupies the left half of the domain and `v`
//! the right half, so a negative speed means `v` is invading.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod contour;
pub mod front;
pub mod model;
pub mod protocol;
pub mod scenarios;
pub mod stepper;
pub mod tridiag;

mod math;

pub use contour::{extract_contours, ContourSet, Polyline, ScalarGrid};
pub use front::{
    estimate_pulsating_speed, estimate_speed, locate_front, EstimateConfig, FrontFlag, FrontTrace,
    FrontError, PulsatingEstimate, Species, SpeedEstimate,
};
pub use model::{
    reaction_terms, CoefficientField, CompetitionKind, Grid1D, ModelError, ModelSpec, State,
};
pub use protocol::{measure_speed, run_single, symmetric_lv, Protocol, SpeedRun};
pub use scenarios::{
    scenario_asymptotic_probes, scenario_cubic_sign_law, scenario_dockery_bounded,
    scenario_oscillating_diffusion, scenario_periodic_resources, scenario_segregated_steady_state,
    Classification, Probe, ScenarioError, ScenarioOutcome, Thresholds,
};
pub use stepper::{
    apply_appendix_rescaling, diffusion_step, step, Rescaled, StepError, Stepper, StepperConfig,
};
pub use tridiag::{TridiagError, TridiagonalSystem};
