//! Semi-implicit time stepping: explicit reaction followed by backward-Euler
//! diffusion (Lie splitting), no-flux ends.
//!
//! The diffusion operator for a coefficient field `c` is the conservative
//! second difference
//!
//! ```text
//! (D w)_i = [c_{i+1/2} (w_{i+1} - w_i) - c_{i-1/2} (w_i - w_{i-1})] / dx^2
//! ```
//!
//! with face values `c_{i+1/2} = (c_i + c_{i+1}) / 2` and ghost nodes
//! `w_{-1} = w_1`, `w_n = w_{n-2}` at the ends. `I - dt D` is a strictly
//! diagonally dominant M-matrix, so the implicit solve preserves sign and the
//! trapezoidal mass.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::model::{CoefficientField, Grid1D, ModelError, ModelSpec, State};
use crate::tridiag::{FactoredTridiagonal, TridiagError, TridiagonalSystem};

/// Negative entries smaller than this in magnitude are roundoff and get
/// clipped to zero; anything larger is left in place so failures show.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("non-finite state at t = {t} (k = {k}, d = {d})")]
    NonFinite { t: f64, k: f64, d: f64 },
    #[error("diffusion solve failed: {0}")]
    Singular(#[from] TridiagError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("rescaling needs constant diffusion fields")]
    NonConstantDiffusion,
    #[error("rescaling needs d >= 1 (got {0})")]
    DiffusionBelowOne(f64),
    #[error("time step must be positive (got {0})")]
    BadTimeStep(f64),
    #[error("state has {got} nodes, grid has {expected}")]
    StateLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    /// Whether speeds are measured in the `x -> x / sqrt(d)` frame.
    #[serde(default = "default_true")]
    pub rescaled: bool,
}

fn default_true() -> bool {
    true
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 0.02,
            rescaled: true,
        }
    }
}

/// A model written in the rescaled frame plus the factor that converts
/// measured speeds back to original units.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub spec: ModelSpec,
    pub speed_factor: f64,
}

/// Changes `x` into `x / sqrt(d)` so that `v` diffuses at rate 1 and `u` at
/// `d_u / d`. Speeds measured in the new frame must be multiplied by
/// `speed_factor = sqrt(d)`. Heterogeneous `mu` and `a` are carried over
/// with their periods shrunk accordingly.
pub fn apply_appendix_rescaling(spec: &ModelSpec) -> Result<Rescaled, StepError> {
    let (Some(d_u), Some(d)) = (spec.d_u.as_constant(), spec.d_v.as_constant()) else {
        return Err(StepError::NonConstantDiffusion);
    };
    if !(d >= 1.0) {
        return Err(StepError::DiffusionBelowOne(d));
    }
    let factor = math::sqrt(d);
    let spec = ModelSpec {
        d_u: CoefficientField::constant(d_u / d),
        d_v: CoefficientField::constant(1.0),
        mu: spec.mu.scale_x(factor),
        a: spec.a.scale_x(factor),
        ..spec.clone()
    };
    Ok(Rescaled {
        spec,
        speed_factor: factor,
    })
}

/// `I - dt D` for the coefficient field `diffusion` on `grid`.
pub fn diffusion_matrix(
    diffusion: &CoefficientField,
    grid: &Grid1D,
    dt: f64,
) -> TridiagonalSystem {
    let n = grid.n();
    let nodal: Vec<f64> = grid.nodes().map(|x| diffusion.evaluate(x)).collect();
    let scale = dt / (grid.dx() * grid.dx());
    // face i sits between nodes i and i+1
    let faces: Vec<f64> = nodal.windows(2).map(|w| 0.5 * (w[0] + w[1]) * scale).collect();
    let mut lower = alloc::vec![0.0; n];
    let mut diagonal = alloc::vec![0.0; n];
    let mut upper = alloc::vec![0.0; n];
    diagonal[0] = 1.0 + 2.0 * faces[0];
    upper[0] = -2.0 * faces[0];
    for i in 1..n - 1 {
        lower[i] = -faces[i - 1];
        upper[i] = -faces[i];
        diagonal[i] = 1.0 + faces[i - 1] + faces[i];
    }
    lower[n - 1] = -2.0 * faces[n - 2];
    diagonal[n - 1] = 1.0 + 2.0 * faces[n - 2];
    TridiagonalSystem {
        lower,
        diagonal,
        upper,
    }
}

/// A model bound to a grid and time step with the diffusion solves
/// factorized once.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: ModelSpec,
    grid: Grid1D,
    dt: f64,
    mu: Vec<f64>,
    a: Vec<f64>,
    solve_u: FactoredTridiagonal,
    solve_v: FactoredTridiagonal,
}

impl Stepper {
    pub fn new(spec: &ModelSpec, grid: &Grid1D, dt: f64) -> Result<Self, StepError> {
        spec.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(StepError::BadTimeStep(dt));
        }
        let stiffness = dt * spec.reaction_lipschitz_bound();
        if stiffness >= 1.0 {
            log::warn!(
                "dt * reaction bound = {stiffness:.3} >= 1; explicit reaction may undershoot"
            );
        }
        Ok(Stepper {
            spec: spec.clone(),
            grid: *grid,
            dt,
            mu: grid.nodes().map(|x| spec.mu.evaluate(x)).collect(),
            a: grid.nodes().map(|x| spec.a.evaluate(x)).collect(),
            solve_u: diffusion_matrix(&spec.d_u, grid, dt).factorize()?,
            solve_v: diffusion_matrix(&spec.d_v, grid, dt).factorize()?,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `dt` times the reaction Lipschitz bound; at or above 1 the explicit
    /// reaction can drive densities negative.
    pub fn stiffness(&self) -> f64 {
        self.dt * self.spec.reaction_lipschitz_bound()
    }

    fn check_len(&self, state: &State) -> Result<(), StepError> {
        if state.u.len() != self.grid.n() || state.v.len() != self.grid.n() {
            return Err(StepError::StateLength {
                expected: self.grid.n(),
                got: state.u.len().min(state.v.len()),
            });
        }
        Ok(())
    }

    /// Implicit diffusion substep only; time is not advanced.
    pub fn diffuse(&self, state: &mut State) -> Result<(), StepError> {
        self.check_len(state)?;
        self.solve_u.solve_in_place(&mut state.u);
        self.solve_v.solve_in_place(&mut state.v);
        Ok(())
    }

    /// Explicit reaction substep only; time is not advanced.
    pub fn react(&self, state: &mut State) -> Result<(), StepError> {
        self.check_len(state)?;
        let dt = self.dt;
        for i in 0..state.u.len() {
            let (fu, fv) = self
                .spec
                .reaction_at(state.u[i], state.v[i], self.mu[i], self.a[i]);
            state.u[i] += dt * fu;
            state.v[i] += dt * fv;
        }
        Ok(())
    }

    /// One full step: reaction, then diffusion, then the roundoff guard.
    pub fn step(&self, state: &mut State) -> Result<(), StepError> {
        self.react(state)?;
        self.diffuse(state)?;
        state.t += self.dt;
        let mut finite = true;
        for w in state.u.iter_mut().chain(state.v.iter_mut()) {
            if *w < 0.0 && *w > -ROUNDOFF_FLOOR {
                *w = 0.0;
            }
            finite &= w.is_finite();
        }
        if !finite {
            return Err(StepError::NonFinite {
                t: state.t,
                k: self.spec.k,
                d: self.spec.diffusion_ratio(),
            });
        }
        Ok(())
    }

    pub fn run_steps(&self, state: &mut State, steps: usize) -> Result<(), StepError> {
        for _ in 0..steps {
            self.step(state)?;
        }
        Ok(())
    }

    /// Number of whole steps covering `duration`.
    pub fn steps_for(&self, duration: f64) -> usize {
        math::round(duration / self.dt).max(0.0) as usize
    }
}

/// One implicit diffusion substep with time step `dt`.
pub fn diffusion_step(
    state: &State,
    spec: &ModelSpec,
    grid: &Grid1D,
    dt: f64,
) -> Result<State, StepError> {
    let stepper = Stepper::new(spec, grid, dt)?;
    let mut next = state.clone();
    stepper.diffuse(&mut next)?;
    Ok(next)
}

/// One full semi-implicit step.
pub fn step(
    state: &State,
    spec: &ModelSpec,
    grid: &Grid1D,
    cfg: &StepperConfig,
) -> Result<State, StepError> {
    let stepper = Stepper::new(spec, grid, cfg.dt)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}
