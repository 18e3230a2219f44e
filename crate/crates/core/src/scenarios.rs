//! Packaged experiments: heterogeneous environments, alternative
//! competition terms and asymptotic probes of the homogeneous speed. Each
//! returns a [`ScenarioOutcome`] with named metrics and a classification.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::front::{estimate_pulsating_speed_with, FrontTrace};
use crate::math;
use crate::model::{CoefficientField, Grid1D, ModelError, ModelSpec, State};
use crate::protocol::{measure_speed, Protocol, SpeedRun};
use crate::stepper::{StepError, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `u` gains ground (positive speed) or excludes `v`.
    UInvades,
    /// `v` gains ground (negative speed) or excludes `u`.
    VInvades,
    /// Interface at rest, or a stable segregated pattern.
    Pinned,
    Coexistence,
    Inconclusive,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::UInvades => "u_invades",
            Classification::VInvades => "v_invades",
            Classification::Pinned => "pinned",
            Classification::Coexistence => "coexistence",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub measured: BTreeMap<String, f64>,
    pub classification: Classification,
    /// Files written for this outcome, filled in by whoever persists it.
    #[serde(default)]
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub trace: Option<FrontTrace>,
    #[serde(skip)]
    pub snapshot: Option<(Grid1D, State)>,
}

impl ScenarioOutcome {
    fn new(name: impl Into<String>, classification: Classification) -> Self {
        ScenarioOutcome {
            name: name.into(),
            measured: BTreeMap::new(),
            classification,
            artifacts: Vec::new(),
            trace: None,
            snapshot: None,
        }
    }

    fn set(&mut self, key: &str, value: f64) {
        self.measured.insert(key.to_string(), value);
    }

    fn flag(&mut self, key: &str, value: bool) {
        self.set(key, if value { 1.0 } else { 0.0 });
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.measured.get(key).copied()
    }

    /// Speed metric, NaN when absent.
    pub fn speed(&self) -> f64 {
        self.metric("speed").unwrap_or(f64::NAN)
    }
}

/// Classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// `|speed|` below this counts as zero.
    pub speed_tol: f64,
    /// A species whose sup-norm falls below this has lost.
    pub loser_sup: f64,
    /// Fraction of the domain where both species exceed 0.1 beyond which a
    /// front is considered dissolved.
    pub overlap_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            speed_tol: 1e-3,
            loser_sup: 0.01,
            overlap_fraction: 0.25,
        }
    }
}

fn classify_speed(speed: f64, tol: f64) -> Classification {
    if !speed.is_finite() {
        Classification::Inconclusive
    } else if speed < -tol {
        Classification::VInvades
    } else if speed > tol {
        Classification::UInvades
    } else {
        Classification::Pinned
    }
}

fn overlap_fraction(state: &State) -> f64 {
    let both = state
        .u
        .iter()
        .zip(&state.v)
        .filter(|(u, v)| u.min(**v) > 0.1)
        .count();
    both as f64 / state.len() as f64
}

/// Stable step for a run that is not front-tracked: `dt` unless the
/// explicit reaction is too stiff for it.
fn stable_dt(spec: &ModelSpec, dt: f64) -> f64 {
    let bound = spec.reaction_lipschitz_bound();
    if dt * bound < 1.0 {
        dt
    } else {
        0.5 / bound
    }
}

/// Front-tracked run reduced to a pulsating estimate and classified.
fn pulsating_outcome(
    name: &str,
    run: SpeedRun,
    period: f64,
    protocol: &Protocol,
    th: &Thresholds,
) -> ScenarioOutcome {
    let sim_period = period / run.speed_factor;
    let pulsating = estimate_pulsating_speed_with(
        &run.trace,
        sim_period,
        protocol.window,
        run.speed_factor,
        &protocol.estimate,
    );
    let overlap = run.final_state.as_ref().map(overlap_fraction).unwrap_or(f64::NAN);
    let mut out = ScenarioOutcome::new(name, Classification::Inconclusive);
    out.set("overlap_fraction", overlap);
    out.set("final_length", run.grid.length());
    out.set("dt", run.dt);
    out.set("period", period);
    match pulsating {
        Ok(p) if run.estimate.is_valid() && !(overlap > th.overlap_fraction) => {
            out.set("speed", p.estimate.speed);
            out.set("residual_rms", p.estimate.residual_rms);
            out.set("wobble", p.wobble * run.speed_factor);
            out.flag("pinned", p.pinned);
            out.classification = if p.pinned {
                Classification::Pinned
            } else {
                classify_speed(p.estimate.speed, th.speed_tol)
            };
        }
        _ => {
            out.set("speed", run.estimate.speed);
        }
    }
    for f in &run.estimate.flags {
        out.set(&["flag_", f.name()].concat(), 1.0);
    }
    if let Some(state) = run.final_state.clone() {
        out.snapshot = Some((run.grid, state));
    }
    out.trace = Some(run.trace);
    out
}

/// Protocol for pulsating fronts: finer sampling and a longer window so that
/// several periods of the wobble are averaged.
pub fn pulsating_protocol() -> Protocol {
    Protocol {
        sample_every: 0.1,
        window: (25.0, 40.0),
        ..Protocol::default()
    }
}

/// Symmetric system with resources `mu` multiplying both reactions.
pub fn scenario_periodic_resources(
    d: f64,
    k: f64,
    mu: &CoefficientField,
    protocol: &Protocol,
    th: &Thresholds,
) -> Result<ScenarioOutcome, ScenarioError> {
    mu.validate("mu")?;
    if !(mu.min_value() > 0.0) {
        return Err(ScenarioError::Precondition("mu must be uniformly positive"));
    }
    let spec = ModelSpec::symmetric(k, d).with_mu(mu.clone());
    let run = measure_speed(&spec, protocol)?;
    let period = mu.period().unwrap_or(protocol.dx);
    let mut out = pulsating_outcome("periodic_resources", run, period, protocol, th);
    out.set("d", d);
    out.set("k", k);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatingConfig {
    pub amplitude: f64,
    pub protocol: Protocol,
}

impl Default for OscillatingConfig {
    fn default() -> Self {
        OscillatingConfig {
            amplitude: 0.75,
            protocol: Protocol {
                dx: 0.005,
                rescaled: false,
                ..pulsating_protocol()
            },
        }
    }
}

/// `v` diffuses at `1 + amplitude * sin(2 frequency pi x)` and feels the
/// competition scaled by `alpha`. `frequency = 0` gives the uniform
/// baseline. Also runs that baseline and reports a reversal when the
/// oscillation turns a `v` advantage into a `u` advantage.
pub fn scenario_oscillating_diffusion(
    k: f64,
    frequency: f64,
    alpha: f64,
    cfg: &OscillatingConfig,
    th: &Thresholds,
) -> Result<ScenarioOutcome, ScenarioError> {
    if !(frequency >= 0.0) {
        return Err(ScenarioError::Precondition("frequency must be nonnegative"));
    }
    let base = ModelSpec::symmetric(k, 1.0).with_alpha(alpha);
    let baseline_run = measure_speed(&base, &cfg.protocol)?;
    let baseline = pulsating_outcome("baseline", baseline_run, cfg.protocol.dx, &cfg.protocol, th);
    let mut out = if frequency > 0.0 {
        let field = CoefficientField::sine(1.0, cfg.amplitude, frequency);
        let run = measure_speed(&base.clone().with_d_v(field), &cfg.protocol)?;
        pulsating_outcome("oscillating_diffusion", run, 1.0 / frequency, &cfg.protocol, th)
    } else {
        let mut b = baseline.clone();
        b.name = "oscillating_diffusion".to_string();
        b
    };
    let (speed, base_speed) = (out.speed(), baseline.speed());
    out.set("baseline_speed", base_speed);
    out.flag(
        "reversal",
        base_speed < -th.speed_tol && speed > th.speed_tol,
    );
    out.set("k", k);
    out.set("frequency", frequency);
    out.set("alpha", alpha);
    Ok(out)
}

/// `a = 1 + amplitude sin(2 pi x / period)`.
pub fn sine_growth(amplitude: f64, period: f64) -> CoefficientField {
    CoefficientField::sine(1.0, amplitude, 1.0 / period)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DockeryConfig {
    pub length: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Interval between exclusion checks.
    pub check_every: f64,
    pub initial_u: f64,
    pub initial_v: f64,
}

impl Default for DockeryConfig {
    fn default() -> Self {
        DockeryConfig {
            length: 10.0,
            dx: 0.05,
            dt: 0.01,
            t_max: 4000.0,
            check_every: 10.0,
            initial_u: 0.5,
            initial_v: 0.5,
        }
    }
}

/// Blind competition (`h = k = 1`) with growth `a(x)` on a bounded domain,
/// `v` diffusing at `d`. Runs until one species' sup-norm drops below the
/// loser threshold.
pub fn scenario_dockery_bounded(
    a: &CoefficientField,
    d: f64,
    cfg: &DockeryConfig,
    th: &Thresholds,
) -> Result<ScenarioOutcome, ScenarioError> {
    if a.as_constant().is_some() {
        return Err(ScenarioError::Precondition("growth field must be non-constant"));
    }
    let spec = ModelSpec::dockery(a.clone(), d);
    let grid = Grid1D::new(cfg.length, cfg.dx)?;
    let stepper = Stepper::new(&spec, &grid, stable_dt(&spec, cfg.dt))?;
    let mut state = State::uniform(&grid, cfg.initial_u, cfg.initial_v);
    let chunk = stepper.steps_for(cfg.check_every).max(1);
    let total = stepper.steps_for(cfg.t_max);
    let mut done = 0;
    let mut winner = None;
    while done < total && winner.is_none() {
        let n = chunk.min(total - done);
        stepper.run_steps(&mut state, n)?;
        done += n;
        let (su, sv) = sup_norms(&state);
        if sv < th.loser_sup && su >= th.loser_sup {
            winner = Some(Classification::UInvades);
        } else if su < th.loser_sup && sv >= th.loser_sup {
            winner = Some(Classification::VInvades);
        }
    }
    let (su, sv) = sup_norms(&state);
    let diff = state
        .u
        .iter()
        .zip(&state.v)
        .map(|(u, v)| math::abs(u - v))
        .fold(0.0, f64::max);
    let classification = match winner {
        Some(c) => c,
        None if diff == 0.0 => Classification::Coexistence,
        None => Classification::Inconclusive,
    };
    let mut out = ScenarioOutcome::new("dockery_bounded", classification);
    out.set("d", d);
    out.set("sup_u", su);
    out.set("sup_v", sv);
    out.set("mass_u", grid.integrate(&state.u));
    out.set("mass_v", grid.integrate(&state.v));
    out.set("sup_u_minus_v", diff);
    out.set("t_final", done as f64 * stepper.dt());
    out.snapshot = Some((grid, state));
    Ok(out)
}

fn sup_norms(state: &State) -> (f64, f64) {
    let sup = |w: &[f64]| w.iter().copied().fold(0.0, f64::max);
    (sup(&state.u), sup(&state.v))
}

/// Alternating favorable and neutral patches repeated `count` times; the
/// domain is exactly `count` periods long.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchPlan {
    pub favorable_width: f64,
    pub neutral_width: f64,
    pub count: usize,
    pub favorable_mu: f64,
    pub neutral_mu: f64,
}

impl Default for PatchPlan {
    fn default() -> Self {
        PatchPlan {
            favorable_width: 10.0,
            neutral_width: 10.0,
            count: 4,
            favorable_mu: 1.0,
            neutral_mu: 0.0,
        }
    }
}

impl PatchPlan {
    pub fn period(&self) -> f64 {
        self.favorable_width + self.neutral_width
    }

    pub fn length(&self) -> f64 {
        self.period() * self.count as f64
    }

    /// Centre of favorable patch `i`.
    pub fn centre(&self, i: usize) -> f64 {
        i as f64 * self.period() + 0.5 * self.favorable_width
    }

    pub fn mu(&self, dx: f64) -> Result<CoefficientField, ModelError> {
        CoefficientField::patches(
            &[
                (self.favorable_width, self.favorable_mu),
                (self.neutral_width, self.neutral_mu),
            ],
            dx,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegregatedConfig {
    pub dx: f64,
    pub dt: f64,
    /// Time allowed to reach the stationary pattern.
    pub t_settle: f64,
    /// Time allowed for the perturbation to relax.
    pub t_perturb: f64,
    /// Relative size of the perturbation (`u` up, `v` down).
    pub perturbation: f64,
    pub residual_tol: f64,
    pub check_every: f64,
}

impl Default for SegregatedConfig {
    fn default() -> Self {
        SegregatedConfig {
            dx: 0.05,
            dt: 0.002,
            t_settle: 600.0,
            t_perturb: 200.0,
            perturbation: 0.05,
            residual_tol: 1e-4,
            check_every: 10.0,
        }
    }
}

/// Sup-norm of the discrete time derivative over one step.
fn stationary_residual(stepper: &Stepper, state: &State) -> Result<f64, StepError> {
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next.sup_distance(state) / stepper.dt())
}

/// Owner of favorable patch `i` holds more than 0.5 at its centre and the
/// other species less than 0.1.
fn is_segregated(plan: &PatchPlan, grid: &Grid1D, state: &State) -> bool {
    (0..plan.count).all(|i| {
        let j = math::round(plan.centre(i) / grid.dx()) as usize;
        let (own, other) = if i % 2 == 0 {
            (state.u[j], state.v[j])
        } else {
            (state.v[j], state.u[j])
        };
        own > 0.5 && other < 0.1
    })
}

fn fills_all(plan: &PatchPlan, grid: &Grid1D, state: &State) -> bool {
    (0..plan.count).all(|i| {
        let j = math::round(plan.centre(i) / grid.dx()) as usize;
        state.u[j] > 0.5 && state.v[j] > 0.5
    })
}

/// Symmetric system on patchy resources, `u` seeded in the even favorable
/// patches and `v` in the odd ones. Settles, checks stationarity, then
/// perturbs and checks that the pattern comes back.
pub fn scenario_segregated_steady_state(
    plan: &PatchPlan,
    k: f64,
    d: f64,
    cfg: &SegregatedConfig,
) -> Result<ScenarioOutcome, ScenarioError> {
    let mut out = ScenarioOutcome::new("segregated_steady_state", Classification::Inconclusive);
    out.set("k", k);
    out.set("d", d);
    out.set("patches", plan.count as f64);
    if plan.count < 2 {
        // nothing to alternate
        return Ok(out);
    }
    let grid = Grid1D::new(plan.length(), cfg.dx)?;
    let spec = ModelSpec::symmetric(k, d).with_mu(plan.mu(cfg.dx)?);
    let stepper = Stepper::new(&spec, &grid, stable_dt(&spec, cfg.dt))?;
    let mut state = State::from_fn(&grid, |x| {
        let i = math::floor(x / plan.period()) as usize;
        let inside = x - i as f64 * plan.period() < plan.favorable_width;
        match (inside, i % 2) {
            (true, 0) => (1.0, 0.0),
            (true, _) => (0.0, 1.0),
            _ => (0.0, 0.0),
        }
    });
    let chunk = stepper.steps_for(cfg.check_every).max(1);
    let mut collapse = f64::NAN;
    let settle = stepper.steps_for(cfg.t_settle);
    let mut done = 0;
    while done < settle {
        let n = chunk.min(settle - done);
        stepper.run_steps(&mut state, n)?;
        done += n;
        if collapse.is_nan() && !is_segregated(plan, &grid, &state) {
            collapse = state.t;
        }
    }
    let residual = stationary_residual(&stepper, &state)?;
    out.set("residual", residual);
    out.set("collapse_time", collapse);
    out.set("dt", stepper.dt());
    if !is_segregated(plan, &grid, &state) {
        if fills_all(plan, &grid, &state) {
            out.classification = Classification::Coexistence;
        }
        out.snapshot = Some((grid, state));
        return Ok(out);
    }

    let settled = state.clone();
    let eps = cfg.perturbation;
    state.u.iter_mut().for_each(|w| *w *= 1.0 + eps);
    state.v.iter_mut().for_each(|w| *w *= 1.0 - eps);
    let initial = state.sup_distance(&settled);
    stepper.run_steps(&mut state, stepper.steps_for(cfg.t_perturb))?;
    let drift = state.sup_distance(&settled);
    let back = is_segregated(plan, &grid, &state);
    out.set("perturbation_initial", initial);
    out.set("perturbation_final", drift);
    out.flag("perturbation_decays", back && drift < 0.5 * initial);
    out.set("residual_after", stationary_residual(&stepper, &state)?);
    if residual < cfg.residual_tol && back && drift < 0.5 * initial {
        out.classification = Classification::Pinned;
    }
    out.snapshot = Some((grid, state));
    Ok(out)
}

/// `(r, h)` pairs, `k` values and diffusion ratios of the cubic sign-law
/// grid. Every `k` equals one product `r h`, so the neutral case appears
/// once per row.
pub const CUBIC_RH: [(f64, f64); 3] = [(1.0, 1.5), (1.25, 2.0), (2.0, 2.0)];
pub const CUBIC_K: [f64; 3] = [1.5, 2.5, 4.0];
pub const CUBIC_D: [f64; 2] = [1.0, 4.0];

/// Cubic competition speed at `d`, repeated at `second_d` to see whether
/// the sign depends on the diffusion ratio.
pub fn scenario_cubic_sign_law(
    r: f64,
    h: f64,
    k: f64,
    d: f64,
    second_d: f64,
    protocol: &Protocol,
    th: &Thresholds,
) -> Result<ScenarioOutcome, ScenarioError> {
    let first = measure_speed(&ModelSpec::cubic(d, r, h, k), protocol)?;
    let second = measure_speed(&ModelSpec::cubic(second_d, r, h, k), protocol)?;
    let (c1, c2) = (first.estimate.speed, second.estimate.speed);
    let class1 = classify_speed(c1, th.speed_tol);
    let class2 = classify_speed(c2, th.speed_tol);
    let expected = k - r * h;
    let mut out = ScenarioOutcome::new("cubic_sign_law", class1);
    out.set("r", r);
    out.set("h", h);
    out.set("k", k);
    out.set("d", d);
    out.set("second_d", second_d);
    out.set("speed", c1);
    out.set("speed_second_d", c2);
    out.set("k_minus_rh", expected);
    out.flag("sign_matches_d", class1 == class2);
    out.flag(
        "sign_law_holds",
        class1 == classify_speed(expected, 0.0) && class2 == class1,
    );
    out.trace = Some(first.trace);
    Ok(out)
}

/// One point of the asymptotic ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum Probe {
    /// `c / sqrt(d)` inside `(-2, 0)`.
    LargeD { k: f64, d: f64 },
    /// `c` inside `(-2 sqrt(d), 0)`.
    LargeK { k: f64, d: f64 },
    /// A point of a proven negative-speed region.
    SignRegion { k: f64, d: f64 },
    /// `k` slightly above 1 and `d` slightly above 1; sign only. Needs a long
    /// domain and run because the wave is wide and slow to form.
    NearBlind { k: f64, d: f64 },
}

impl Probe {
    pub fn name(&self) -> &'static str {
        match self {
            Probe::LargeD { .. } => "large_d",
            Probe::LargeK { .. } => "large_k",
            Probe::SignRegion { .. } => "sign_region",
            Probe::NearBlind { .. } => "near_blind",
        }
    }

    pub fn params(&self) -> (f64, f64) {
        match *self {
            Probe::LargeD { k, d }
            | Probe::LargeK { k, d }
            | Probe::SignRegion { k, d }
            | Probe::NearBlind { k, d } => (k, d),
        }
    }

    /// Open interval the measured quantity must lie in, and whether that
    /// quantity is `c / sqrt(d)` rather than `c`.
    pub fn bracket(&self) -> ((f64, f64), bool) {
        let (_, d) = self.params();
        match self {
            Probe::LargeD { .. } => ((-2.0, 0.0), true),
            Probe::LargeK { .. } => ((-2.0 * math::sqrt(d), 0.0), false),
            Probe::SignRegion { .. } | Probe::NearBlind { .. } => ((f64::NEG_INFINITY, 0.0), false),
        }
    }
}

/// Default ladder: growing `d` at `k = 2`, growing `k` at `d = 4`, a point
/// inside each proven sign region and one near `(1, 1)`.
pub fn default_probes() -> Vec<Probe> {
    let mut p = vec![];
    for d in [10.0, 30.0, 100.0] {
        p.push(Probe::LargeD { k: 2.0, d });
    }
    for k in [10.0, 100.0, 1000.0] {
        p.push(Probe::LargeK { k, d: 4.0 });
    }
    p.push(Probe::SignRegion { k: 1.3, d: 4.0 });
    p.push(Probe::SignRegion { k: 1.8, d: 4.3 });
    p.push(Probe::NearBlind { k: 1.09, d: 1.02 });
    p
}

/// Long protocol for the near-blind probe.
pub fn near_blind_protocol() -> Protocol {
    Protocol {
        length: 200.0,
        dx: 0.05,
        dt: 0.05,
        t_end: 600.0,
        window: (400.0, 600.0),
        sample_every: 2.0,
        max_length: 800.0,
        ..Protocol::default()
    }
}

pub fn scenario_probe(
    probe: &Probe,
    protocol: &Protocol,
    th: &Thresholds,
) -> Result<ScenarioOutcome, ScenarioError> {
    let (k, d) = probe.params();
    let long;
    let protocol = if let Probe::NearBlind { .. } = probe {
        long = near_blind_protocol();
        &long
    } else {
        protocol
    };
    let run = measure_speed(&ModelSpec::symmetric(k, d), protocol)?;
    let c = run.estimate.speed;
    let ((lo, hi), scaled) = probe.bracket();
    let value = if scaled { c / math::sqrt(d) } else { c };
    let mut out = ScenarioOutcome::new(probe.name(), classify_speed(c, th.speed_tol));
    if let Probe::NearBlind { .. } = probe {
        // sign only: the speed here is far below the usual tolerance
        out.classification = classify_speed(c, 0.0);
    }
    out.set("k", k);
    out.set("d", d);
    out.set("speed", c);
    out.set("scaled_speed", c / math::sqrt(d));
    out.set("bracket_lo", lo);
    out.set("bracket_hi", hi);
    out.flag("inside", run.estimate.is_valid() && value > lo && value < hi);
    for f in &run.estimate.flags {
        out.set(&["flag_", f.name()].concat(), 1.0);
    }
    out.trace = Some(run.trace);
    Ok(out)
}

/// Runs every probe; failures become inconclusive outcomes.
pub fn scenario_asymptotic_probes(
    probes: &[Probe],
    protocol: &Protocol,
    th: &Thresholds,
) -> Vec<ScenarioOutcome> {
    probes
        .iter()
        .map(|p| {
            scenario_probe(p, protocol, th).unwrap_or_else(|_| {
                let mut out = ScenarioOutcome::new(p.name(), Classification::Inconclusive);
                let (k, d) = p.params();
                out.set("k", k);
                out.set("d", d);
                out.flag("inside", false);
                out
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Protocol {
        Protocol {
            length: 20.0,
            dx: 0.05,
            t_end: 20.0,
            window: (10.0, 20.0),
            sample_every: 0.1,
            ..Protocol::default()
        }
    }

    #[test]
    fn speed_classification_thresholds() {
        assert_eq!(classify_speed(-0.01, 1e-3), Classification::VInvades);
        assert_eq!(classify_speed(0.01, 1e-3), Classification::UInvades);
        assert_eq!(classify_speed(5e-4, 1e-3), Classification::Pinned);
        assert_eq!(classify_speed(f64::NAN, 1e-3), Classification::Inconclusive);
    }

    #[test]
    fn symmetric_resources_give_zero_speed_at_equal_diffusion() {
        // mu peaks at x = 0.5 + 2j; the domain [0, 21] is mirror symmetric
        // about the initial interface at 10.5, which falls mid-cell
        let mu = CoefficientField::sine(1.0, 0.5, 0.5);
        let p = Protocol {
            length: 21.0,
            dx: 21.0 / 405.0,
            ..small()
        };
        let out = scenario_periodic_resources(1.0, 5.0, &mu, &p, &Thresholds::default()).unwrap();
        assert!(out.speed().abs() < 1e-3, "{:?}", out.measured);
        assert_eq!(out.classification, Classification::Pinned);
    }

    #[test]
    fn periodic_resources_rejects_vanishing_mu() {
        let mu = CoefficientField::sine(1.0, 1.0, 0.5);
        let err = scenario_periodic_resources(2.0, 5.0, &mu, &small(), &Thresholds::default());
        assert!(matches!(err, Err(ScenarioError::Precondition(_))));
    }

    #[test]
    fn dockery_equal_diffusion_keeps_u_equal_v() {
        let cfg = DockeryConfig {
            t_max: 50.0,
            ..DockeryConfig::default()
        };
        let out =
            scenario_dockery_bounded(&sine_growth(0.5, 10.0), 1.0, &cfg, &Thresholds::default())
                .unwrap();
        assert_eq!(out.metric("sup_u_minus_v"), Some(0.0));
        assert_eq!(out.classification, Classification::Coexistence);
    }

    #[test]
    fn dockery_needs_heterogeneity() {
        let r = scenario_dockery_bounded(
            &CoefficientField::constant(1.0),
            2.0,
            &DockeryConfig::default(),
            &Thresholds::default(),
        );
        assert!(matches!(r, Err(ScenarioError::Precondition(_))));
    }

    #[test]
    fn single_patch_is_inconclusive() {
        let plan = PatchPlan {
            count: 1,
            ..PatchPlan::default()
        };
        let out =
            scenario_segregated_steady_state(&plan, 200.0, 1.0, &SegregatedConfig::default())
                .unwrap();
        assert_eq!(out.classification, Classification::Inconclusive);
    }

    #[test]
    fn patch_plan_geometry() {
        let plan = PatchPlan::default();
        assert_eq!(plan.length(), 80.0);
        assert_eq!(plan.centre(2), 45.0);
        let mu = plan.mu(0.05).unwrap();
        assert_eq!(mu.evaluate(5.0), 1.0);
        assert_eq!(mu.evaluate(15.0), 0.0);
        assert_eq!(mu.evaluate(65.0), 1.0);
    }

    #[test]
    fn probe_brackets() {
        let ((lo, hi), scaled) = Probe::LargeK { k: 500.0, d: 4.0 }.bracket();
        assert_eq!((lo, hi, scaled), (-4.0, 0.0, false));
        let ((lo, hi), scaled) = Probe::LargeD { k: 2.0, d: 100.0 }.bracket();
        assert_eq!((lo, hi, scaled), (-2.0, 0.0, true));
    }

    #[test]
    fn cubic_symmetric_case_is_pinned() {
        let p = Protocol {
            window: (14.0, 20.0),
            sample_every: 0.5,
            ..small()
        };
        let out =
            scenario_cubic_sign_law(1.0, 2.0, 2.0, 1.0, 3.0, &p, &Thresholds::default()).unwrap();
        assert_eq!(out.classification, Classification::Pinned);
        assert_eq!(out.metric("sign_law_holds"), Some(1.0));
    }
}
