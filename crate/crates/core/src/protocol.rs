//! The wave-speed measurement protocol: rescale, start from segregated
//! wave-like data, step to a final time while tracking the level set of `v`,
//! and regress the front position over a late time window.

use serde::{Deserialize, Serialize};

use crate::front::{
    estimate_speed_with, EstimateConfig, FrontFlag, FrontTrace, Species, SpeedEstimate,
};
use crate::math;
use crate::model::{Grid1D, ModelError, ModelSpec, State};
use crate::stepper::{apply_appendix_rescaling, StepError, Stepper};

/// Numerical settings of one speed measurement. Defaults reproduce the
/// reference protocol: domain 40, `dx = dt = 0.02`, `T = 40`, regression
/// over `[32, 40]`, level 0.5, rescaled coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Protocol {
    pub length: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub window: (f64, f64),
    pub level: f64,
    pub species: Species,
    /// Front sampling cadence.
    pub sample_every: f64,
    /// Measure in the `x / sqrt(d)` frame when diffusions are constant and
    /// `d >= 1`.
    pub rescaled: bool,
    /// Initial interface position as a fraction of the domain length.
    pub front_fraction: f64,
    /// The domain is doubled (keeping `dx`) while the front gets too close
    /// to an end, up to this length.
    pub max_length: f64,
    /// `dt` is reduced when `dt * reaction bound` reaches this value...
    pub stiffness_limit: f64,
    /// ...down to a step giving this value.
    pub stiffness_target: f64,
    pub estimate: EstimateConfig,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            length: 40.0,
            dx: 0.02,
            dt: 0.02,
            t_end: 40.0,
            window: (32.0, 40.0),
            level: 0.5,
            species: Species::V,
            sample_every: 0.5,
            rescaled: true,
            front_fraction: 0.5,
            max_length: 160.0,
            stiffness_limit: 1.0,
            stiffness_target: 0.5,
            estimate: EstimateConfig::default(),
        }
    }
}

impl Protocol {
    pub fn with_resolution(mut self, dx: f64, dt: f64) -> Self {
        self.dx = dx;
        self.dt = dt;
        self
    }

    /// Time step actually used for `spec`: the requested one, unless the
    /// explicit reaction would be too stiff, in which case the largest step
    /// dividing `sample_every` that meets `stiffness_target`.
    pub fn effective_dt(&self, spec: &ModelSpec) -> f64 {
        let bound = spec.reaction_lipschitz_bound();
        if self.dt * bound < self.stiffness_limit {
            return self.dt;
        }
        let per_sample = math::ceil(self.sample_every * bound / self.stiffness_target).max(1.0);
        (self.sample_every / per_sample).min(self.dt)
    }

    fn sample_stride(&self, dt: f64) -> usize {
        (math::round(self.sample_every / dt) as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        Grid1D::new(self.length, self.dx)?;
        for (field, value) in [
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("sample_every", self.sample_every),
            ("max_length", self.max_length),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NotPositive { field, value });
            }
        }
        if !(self.window.0 < self.window.1) || self.window.1 > self.t_end + 1e-9 {
            return Err(ModelError::NotPositive {
                field: "window",
                value: self.window.1 - self.window.0,
            });
        }
        if !(self.front_fraction > 0.0 && self.front_fraction < 1.0) {
            return Err(ModelError::NotPositive {
                field: "front_fraction",
                value: self.front_fraction,
            });
        }
        Ok(())
    }
}

/// Everything produced by one speed measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRun {
    pub estimate: SpeedEstimate,
    /// Front trace in simulation coordinates.
    pub trace: FrontTrace,
    pub final_state: Option<State>,
    pub grid: Grid1D,
    pub dt: f64,
    /// Simulation-frame positions times this are original units.
    /// `estimate.speed` is already converted.
    pub speed_factor: f64,
}

/// Symmetric Lotka-Volterra system (`r = 1`, `h = k`) with `v` diffusing at
/// rate `d`.
pub fn symmetric_lv(k: f64, d: f64) -> ModelSpec {
    ModelSpec::symmetric(k, d)
}

/// Speed of the interface between `(1, 0)` on the left and `(0, 1)` on the
/// right for `spec`, in original units. Never fails on numerical trouble:
/// blow-ups and missing crossings come back as flagged estimates.
pub fn measure_speed(spec: &ModelSpec, protocol: &Protocol) -> Result<SpeedRun, ModelError> {
    protocol.validate()?;
    spec.validate()?;
    let (sim_spec, factor) = if protocol.rescaled {
        match apply_appendix_rescaling(spec) {
            Ok(r) => (r.spec, r.speed_factor),
            Err(_) => (spec.clone(), 1.0),
        }
    } else {
        (spec.clone(), 1.0)
    };
    let dt = protocol.effective_dt(&sim_spec);
    let mut length = protocol.length;
    let mut extended = false;
    loop {
        let grid = Grid1D::new(length, protocol.dx)?;
        let can_extend = 2.0 * length <= protocol.max_length + 1e-9;
        let mut run = track(&sim_spec, &grid, dt, protocol, can_extend)?;
        let too_close = run.estimate.has(FrontFlag::BoundaryTooClose);
        if too_close && can_extend {
            length *= 2.0;
            extended = true;
            continue;
        }
        run.speed_factor = factor;
        if run.estimate.speed.is_finite() {
            run.estimate.speed *= factor;
        }
        if extended {
            run.estimate.flags.insert(FrontFlag::DomainExtended);
        }
        return Ok(run);
    }
}

fn track(
    spec: &ModelSpec,
    grid: &Grid1D,
    dt: f64,
    protocol: &Protocol,
    stop_near_boundary: bool,
) -> Result<SpeedRun, ModelError> {
    let stepper = match Stepper::new(spec, grid, dt) {
        Ok(s) => s,
        Err(StepError::Model(e)) => return Err(e),
        Err(_) => {
            return Ok(failed_run(grid, dt, protocol, FrontFlag::SolverFailure));
        }
    };
    let mut state = State::segregated(grid, protocol.front_fraction * grid.length());
    let mut trace = FrontTrace::new(grid, protocol.level, protocol.species);
    let stride = protocol.sample_stride(dt);
    let total = stepper.steps_for(protocol.t_end);
    let margin = protocol.estimate.boundary_margin;
    for n in 1..=total {
        if stepper.step(&mut state).is_err() {
            return Ok(failed_run(grid, dt, protocol, FrontFlag::SolverFailure));
        }
        // exact multiples of dt, free of accumulated rounding
        state.t = n as f64 * dt;
        if n % stride == 0 {
            let x = trace
                .record(&state, grid)
                .expect("sample times increase with the step counter");
            if stop_near_boundary {
                if let Some(x) = x {
                    if x.min(grid.length() - x) < margin {
                        let mut est = SpeedEstimate::failed(protocol.window, FrontFlag::BoundaryTooClose);
                        est.flags.remove(&FrontFlag::NoCrossing);
                        est.boundary_margin = x.min(grid.length() - x);
                        return Ok(SpeedRun {
                            estimate: est,
                            trace,
                            final_state: Some(state),
                            grid: *grid,
                            dt,
                            speed_factor: 1.0,
                        });
                    }
                }
            }
        }
    }
    let estimate = match estimate_speed_with(&trace, protocol.window, 1.0, &protocol.estimate) {
        Ok(e) => e,
        Err(_) => SpeedEstimate::failed(protocol.window, FrontFlag::NoCrossing),
    };
    Ok(SpeedRun {
        estimate,
        trace,
        final_state: Some(state),
        grid: *grid,
        dt,
        speed_factor: 1.0,
    })
}

fn failed_run(grid: &Grid1D, dt: f64, protocol: &Protocol, flag: FrontFlag) -> SpeedRun {
    SpeedRun {
        estimate: SpeedEstimate::failed(protocol.window, flag),
        trace: FrontTrace::new(grid, protocol.level, protocol.species),
        final_state: None,
        grid: *grid,
        dt,
        speed_factor: 1.0,
    }
}

/// Speed `c_{k,d}` of the symmetric system at one parameter point. With
/// `d < 1` the unrescaled solver is used.
pub fn run_single(d: f64, k: f64, protocol: &Protocol) -> SpeedEstimate {
    match measure_speed(&symmetric_lv(k, d), protocol) {
        Ok(run) => run.estimate,
        Err(_) => SpeedEstimate::failed(protocol.window, FrontFlag::SolverFailure),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_dt_keeps_reference_step_when_mild() {
        let p = Protocol::default();
        assert_eq!(p.effective_dt(&symmetric_lv(21.0, 4.0)), 0.02);
        let dt = p.effective_dt(&symmetric_lv(500.0, 4.0));
        assert!(dt * symmetric_lv(500.0, 4.0).reaction_lipschitz_bound() <= 0.5 + 1e-12);
        let stride = p.sample_every / dt;
        assert!((stride - stride.round()).abs() < 1e-9);
    }

    #[test]
    fn protocol_validation() {
        assert!(Protocol::default().validate().is_ok());
        let bad = Protocol {
            window: (40.0, 32.0),
            ..Protocol::default()
        };
        assert!(bad.validate().is_err());
        let bad = Protocol {
            dx: 0.0,
            ..Protocol::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn equal_diffusion_gives_zero_speed_on_a_small_domain() {
        let p = Protocol {
            length: 20.0,
            dx: 0.05,
            dt: 0.02,
            t_end: 20.0,
            window: (14.0, 20.0),
            ..Protocol::default()
        };
        let est = run_single(1.0, 2.0, &p);
        assert!(est.speed.abs() < 1e-3, "{est:?}");
        assert!(est.flags.is_empty(), "{est:?}");
    }

    #[test]
    fn faster_diffuser_invades() {
        let p = Protocol {
            length: 20.0,
            dx: 0.05,
            t_end: 20.0,
            window: (14.0, 20.0),
            ..Protocol::default()
        };
        let est = run_single(4.0, 3.0, &p);
        assert!(est.speed < -1e-2, "{est:?}");
    }

    #[test]
    fn runaway_front_triggers_domain_extension() {
        // tiny domain, fast front: must be rerun on a longer domain
        let p = Protocol {
            length: 8.0,
            dx: 0.05,
            t_end: 20.0,
            window: (14.0, 20.0),
            max_length: 64.0,
            ..Protocol::default()
        };
        let est = run_single(9.0, 5.0, &p);
        assert!(est.has(FrontFlag::DomainExtended), "{est:?}");
        assert!(!est.has(FrontFlag::BoundaryTooClose), "{est:?}");
        assert!(est.speed < 0.0);
    }
}
