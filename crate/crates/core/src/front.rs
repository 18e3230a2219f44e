//! Front location on a grid and speed estimation from front trajectories.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::model::{Grid1D, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    U,
    #[default]
    V,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontError {
    #[error("need at least {needed} front samples in [{t0}, {t1}], found {found}")]
    TooFewSamples {
        needed: usize,
        found: usize,
        t0: f64,
        t1: f64,
    },
    #[error("sample times must increase strictly ({prev} then {next})")]
    NonIncreasingTime { prev: f64, next: f64 },
    #[error("window [{t0}, {t1}] is too short for a pulsating front of period {period}")]
    WindowTooShort { t0: f64, t1: f64, period: f64 },
}

/// Quality flags attached to a speed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrontFlag {
    BoundaryTooClose,
    NonMonotoneFront,
    HighResidual,
    NoCrossing,
    /// The run was repeated on a longer domain after the front came too
    /// close to a boundary.
    DomainExtended,
    /// The solver produced a non-finite state.
    SolverFailure,
}

impl FrontFlag {
    pub fn name(self) -> &'static str {
        match self {
            FrontFlag::BoundaryTooClose => "BoundaryTooClose",
            FrontFlag::NonMonotoneFront => "NonMonotoneFront",
            FrontFlag::HighResidual => "HighResidual",
            FrontFlag::NoCrossing => "NoCrossing",
            FrontFlag::DomainExtended => "DomainExtended",
            FrontFlag::SolverFailure => "SolverFailure",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            FrontFlag::BoundaryTooClose,
            FrontFlag::NonMonotoneFront,
            FrontFlag::HighResidual,
            FrontFlag::NoCrossing,
            FrontFlag::DomainExtended,
            FrontFlag::SolverFailure,
        ]
        .into_iter()
        .find(|f| f.name() == name)
    }
}

/// Time series of front positions for one species' level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrace {
    pub samples: Vec<(f64, f64)>,
    pub level: f64,
    pub species: Species,
    pub length: f64,
    pub dx: f64,
    /// Sample times at which the field did not cross `level`.
    pub missing: Vec<f64>,
}

impl FrontTrace {
    pub fn new(grid: &Grid1D, level: f64, species: Species) -> Self {
        FrontTrace {
            samples: Vec::new(),
            level,
            species,
            length: grid.length(),
            dx: grid.dx(),
            missing: Vec::new(),
        }
    }

    fn last_time(&self) -> Option<f64> {
        let a = self.samples.last().map(|s| s.0);
        let b = self.missing.last().copied();
        match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn push(&mut self, t: f64, x: Option<f64>) -> Result<(), FrontError> {
        if let Some(prev) = self.last_time() {
            if !(t > prev) {
                return Err(FrontError::NonIncreasingTime { prev, next: t });
            }
        }
        match x {
            Some(x) => self.samples.push((t, x)),
            None => self.missing.push(t),
        }
        Ok(())
    }

    /// Locates the front in `state` and appends it at `state.t`.
    pub fn record(&mut self, state: &State, grid: &Grid1D) -> Result<Option<f64>, FrontError> {
        let x = locate_front(state, grid, self.level, self.species);
        self.push(state.t, x)?;
        Ok(x)
    }

    pub fn in_window(&self, window: (f64, f64)) -> impl Iterator<Item = (f64, f64)> + '_ {
        let eps = 1e-9 * (1.0 + math::abs(window.1));
        self.samples
            .iter()
            .copied()
            .filter(move |&(t, _)| t >= window.0 - eps && t <= window.1 + eps)
    }

    /// Copy with every position mapped through `f`.
    pub fn map_positions(&self, f: impl Fn(f64) -> f64) -> Self {
        FrontTrace {
            samples: self.samples.iter().map(|&(t, x)| (t, f(x))).collect(),
            ..self.clone()
        }
    }
}

/// Position of the first crossing of `level`, scanning from the right end,
/// linearly interpolated between the bracketing nodes. `None` when the field
/// never crosses.
pub fn locate_front(state: &State, grid: &Grid1D, level: f64, species: Species) -> Option<f64> {
    let field = match species {
        Species::U => &state.u,
        Species::V => &state.v,
    };
    let n = field.len();
    for j in (1..n).rev() {
        let (left, right) = (field[j - 1], field[j]);
        if (left >= level) != (right >= level) {
            let frac = (level - left) / (right - left);
            let (xl, xr) = (grid.x(j - 1), grid.x(j));
            return Some(xl + frac * (xr - xl));
        }
    }
    None
}

/// Thresholds for the quality flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    /// Closest allowed approach of the front to either end.
    pub boundary_margin: f64,
    /// `HighResidual` when `residual_rms > residual_factor * dx * samples`.
    pub residual_factor: f64,
    /// Below this absolute speed a pulsating front counts as pinned.
    pub pinned_speed: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            boundary_margin: 2.0,
            residual_factor: 0.05,
            pinned_speed: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    /// Speed in original-coordinate units.
    pub speed: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
    /// Smallest distance from the front to a domain end within the window,
    /// in simulation coordinates.
    pub boundary_margin: f64,
    pub flags: BTreeSet<FrontFlag>,
    pub samples: usize,
}

impl SpeedEstimate {
    /// Estimate carrying no usable speed.
    pub fn failed(window: (f64, f64), flag: FrontFlag) -> Self {
        let mut flags = BTreeSet::new();
        flags.insert(flag);
        SpeedEstimate {
            speed: f64::NAN,
            residual_rms: f64::NAN,
            window,
            boundary_margin: f64::NAN,
            flags,
            samples: 0,
        }
    }

    pub fn has(&self, flag: FrontFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Usable speed: finite and neither crossing nor solver failures.
    pub fn is_valid(&self) -> bool {
        self.speed.is_finite()
            && !self.has(FrontFlag::NoCrossing)
            && !self.has(FrontFlag::SolverFailure)
    }
}

struct LineFit {
    slope: f64,
    residuals: Vec<f64>,
}

fn fit_line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let x_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut stx) = (0.0, 0.0);
    for &(t, x) in points {
        stt += (t - t_mean) * (t - t_mean);
        stx += (t - t_mean) * (x - x_mean);
    }
    let slope = stx / stt;
    let intercept = x_mean - slope * t_mean;
    let residuals = points
        .iter()
        .map(|&(t, x)| x - (intercept + slope * t))
        .collect();
    LineFit {
        slope,
        residuals,
    }
}

const MIN_SAMPLES: usize = 5;

/// Least-squares speed over `window`, multiplied by `rescale_factor`.
pub fn estimate_speed(
    trace: &FrontTrace,
    window: (f64, f64),
    rescale_factor: f64,
) -> Result<SpeedEstimate, FrontError> {
    estimate_speed_with(trace, window, rescale_factor, &EstimateConfig::default())
}

pub fn estimate_speed_with(
    trace: &FrontTrace,
    window: (f64, f64),
    rescale_factor: f64,
    cfg: &EstimateConfig,
) -> Result<SpeedEstimate, FrontError> {
    Ok(fit_window(trace, window, rescale_factor, cfg)?.0)
}

fn fit_window(
    trace: &FrontTrace,
    window: (f64, f64),
    rescale_factor: f64,
    cfg: &EstimateConfig,
) -> Result<(SpeedEstimate, Vec<f64>), FrontError> {
    let points: Vec<(f64, f64)> = trace.in_window(window).collect();
    if points.len() < MIN_SAMPLES {
        return Err(FrontError::TooFewSamples {
            needed: MIN_SAMPLES,
            found: points.len(),
            t0: window.0,
            t1: window.1,
        });
    }
    let fit = fit_line(&points);
    let count = points.len();
    let residual_rms =
        math::sqrt(fit.residuals.iter().map(|r| r * r).sum::<f64>() / count as f64);
    let boundary_margin = points
        .iter()
        .map(|&(_, x)| x.min(trace.length - x))
        .fold(f64::INFINITY, f64::min);

    let mut flags = BTreeSet::new();
    if boundary_margin < cfg.boundary_margin {
        flags.insert(FrontFlag::BoundaryTooClose);
    }
    if residual_rms > cfg.residual_factor * trace.dx * count as f64 {
        flags.insert(FrontFlag::HighResidual);
    }
    let tol = 1e-6 * trace.dx;
    let steps = points.windows(2).map(|w| w[1].1 - w[0].1);
    let (mut up, mut down) = (false, false);
    for s in steps {
        up |= s > tol;
        down |= s < -tol;
    }
    if up && down {
        flags.insert(FrontFlag::NonMonotoneFront);
    }
    if !trace.missing.is_empty()
        && trace
            .missing
            .iter()
            .any(|&t| t >= window.0 && t <= window.1)
    {
        flags.insert(FrontFlag::NoCrossing);
    }
    Ok((
        SpeedEstimate {
            speed: fit.slope * rescale_factor,
            residual_rms,
            window,
            boundary_margin,
            flags,
            samples: count,
        },
        fit.residuals,
    ))
}

/// Mean speed of a pulsating front: the line fit plus the size of the
/// periodic wobble around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulsatingEstimate {
    pub estimate: SpeedEstimate,
    /// Peak-to-peak of the residuals around the fitted line.
    pub wobble: f64,
    pub pinned: bool,
}

pub fn estimate_pulsating_speed(
    trace: &FrontTrace,
    period: f64,
    window: (f64, f64),
) -> Result<PulsatingEstimate, FrontError> {
    estimate_pulsating_speed_with(trace, period, window, 1.0, &EstimateConfig::default())
}

pub fn estimate_pulsating_speed_with(
    trace: &FrontTrace,
    period: f64,
    window: (f64, f64),
    rescale_factor: f64,
    cfg: &EstimateConfig,
) -> Result<PulsatingEstimate, FrontError> {
    let (estimate, residuals) = fit_window(trace, window, rescale_factor, cfg)?;
    let span = window.1 - window.0;
    let travelled = math::abs(estimate.speed / rescale_factor) * span;
    if travelled < 3.0 * period && span < 10.0 {
        return Err(FrontError::WindowTooShort {
            t0: window.0,
            t1: window.1,
            period,
        });
    }
    let hi = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let wobble = hi - lo;
    let pinned = math::abs(estimate.speed) < cfg.pinned_speed && wobble <= period.max(trace.dx);
    Ok(PulsatingEstimate {
        estimate,
        wobble,
        pinned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn grid() -> Grid1D {
        Grid1D::new(40.0, 0.5).unwrap()
    }

    fn line_trace(f: impl Fn(f64) -> f64, t0: f64, t1: f64, step: f64) -> FrontTrace {
        let mut tr = FrontTrace::new(&grid(), 0.5, Species::V);
        let mut t = t0;
        while t <= t1 + 1e-12 {
            tr.push(t, Some(f(t))).unwrap();
            t += step;
        }
        tr
    }

    #[test]
    fn step_profile_crosses_mid_cell() {
        let g = grid();
        let j = 30;
        let s = State::from_fn(&g, |x| (0.0, if x < g.x(j) { 1.0 } else { 0.0 }));
        let x = locate_front(&s, &g, 0.5, Species::V).unwrap();
        assert!((x - (g.x(j - 1) + 0.5 * g.dx())).abs() < 1e-12);
    }

    #[test]
    fn flat_profile_has_no_crossing() {
        let g = grid();
        let s = State::uniform(&g, 0.0, 1.0);
        assert_eq!(locate_front(&s, &g, 0.5, Species::V), None);
    }

    #[test]
    fn logistic_profile_matches_analytic_inverse() {
        let g = Grid1D::new(40.0, 0.02).unwrap();
        // v = 1 / (1 + e^{x - 20}) has its 0.5 level at x = 20 exactly
        let s = State::from_fn(&g, |x| (0.0, 1.0 / (1.0 + libm::exp(x - 20.0))));
        let x = locate_front(&s, &g, 0.5, Species::V).unwrap();
        assert!((x - 20.0).abs() <= g.dx());
        // interpolation error of a smooth profile is far below dx
        assert!((x - 20.0).abs() < 1e-6);
        let s = State::from_fn(&g, |x| (0.0, 1.0 / (1.0 + libm::exp(-(x - 13.3)))));
        let x = locate_front(&s, &g, 0.5, Species::V).unwrap();
        assert!((x - 13.3).abs() < 1e-4);
    }

    #[test]
    fn scan_starts_from_the_right() {
        let g = grid();
        // two crossings: bump on the left, wave front further right
        let s = State::from_fn(&g, |x| (0.0, if (5.0..8.0).contains(&x) || x >= 25.0 { 1.0 } else { 0.0 }));
        let x = locate_front(&s, &g, 0.5, Species::V).unwrap();
        assert!((x - 24.75).abs() < 1e-12);
    }

    #[test]
    fn exact_line_is_recovered() {
        let tr = line_trace(|t| 3.0 - 0.2 * t, 0.0, 10.0, 0.5);
        let est = estimate_speed(&tr, (0.0, 10.0), 1.0).unwrap();
        assert!((est.speed + 0.2).abs() < 1e-12);
        assert!(est.residual_rms < 1e-12);
        assert!(est.flags.contains(&FrontFlag::BoundaryTooClose));
    }

    #[test]
    fn stationary_front_has_zero_speed() {
        let tr = line_trace(|_| 10.0, 32.0, 40.0, 0.5);
        let est = estimate_speed(&tr, (32.0, 40.0), 4.5f64.sqrt()).unwrap();
        assert_eq!(est.speed, 0.0);
        assert!(est.flags.is_empty());
        assert_eq!(est.samples, 17);
        assert_eq!(est.boundary_margin, 10.0);
    }

    #[test]
    fn noisy_line_matches_closed_form() {
        // deterministic pseudo-noise in [-1e-4, 1e-4]
        let noise = |i: usize| 1e-4 * (2.0 * ((i * 7919 % 101) as f64 / 100.0) - 1.0);
        let mut tr = FrontTrace::new(&grid(), 0.5, Species::V);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = 0.25 * i as f64;
                (t, 20.0 - 0.3 * t + noise(i))
            })
            .collect();
        for &(t, x) in &pts {
            tr.push(t, Some(x)).unwrap();
        }
        // closed-form normal equations, uncentred
        let n = pts.len() as f64;
        let (st, sx, stt, stx) = pts.iter().fold((0.0, 0.0, 0.0, 0.0), |a, &(t, x)| {
            (a.0 + t, a.1 + x, a.2 + t * t, a.3 + t * x)
        });
        let oracle = (n * stx - st * sx) / (n * stt - st * st);
        let est = estimate_speed(&tr, (0.0, 10.0), 1.0).unwrap();
        assert!((est.speed - oracle).abs() < 1e-9);
        assert!((est.speed + 0.3).abs() < 1e-3);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let tr = line_trace(|t| t, 0.0, 1.5, 0.5);
        assert!(matches!(
            estimate_speed(&tr, (0.0, 2.0), 1.0),
            Err(FrontError::TooFewSamples { found: 4, .. })
        ));
    }

    #[test]
    fn times_must_increase() {
        let mut tr = FrontTrace::new(&grid(), 0.5, Species::V);
        tr.push(1.0, Some(3.0)).unwrap();
        assert!(tr.push(1.0, None).is_err());
        tr.push(2.0, None).unwrap();
        assert!(tr.push(1.5, Some(2.0)).is_err());
    }

    #[test]
    fn missing_crossings_are_flagged() {
        let mut tr = line_trace(|t| 20.0 - t, 0.0, 5.0, 0.5);
        tr.push(5.5, None).unwrap();
        let est = estimate_speed(&tr, (0.0, 6.0), 1.0).unwrap();
        assert!(est.has(FrontFlag::NoCrossing));
        assert!(!est.is_valid());
    }

    #[test]
    fn wobbling_front_is_flagged_non_monotone() {
        let tr = line_trace(|t| 20.0 + libm::sin(3.0 * t), 0.0, 10.0, 0.25);
        let est = estimate_speed(&tr, (0.0, 10.0), 1.0).unwrap();
        assert!(est.has(FrontFlag::NonMonotoneFront));
    }

    #[test]
    fn pulsating_regression_on_synthetic_signal() {
        let pi = core::f64::consts::PI;
        let tr = line_trace(|t| 30.0 - 0.1 * t + 0.02 * libm::sin(2.0 * pi * t), 0.0, 40.0, 0.05);
        let est = estimate_pulsating_speed(&tr, 1.0, (0.0, 40.0)).unwrap();
        assert!((est.estimate.speed + 0.1).abs() < 2e-3);
        assert!((est.wobble - 0.04).abs() < 5e-3);
        assert!(!est.pinned);
    }

    #[test]
    fn constant_pulsating_front_is_pinned() {
        let tr = line_trace(|_| 12.0, 0.0, 20.0, 0.5);
        let est = estimate_pulsating_speed(&tr, 1.0, (0.0, 20.0)).unwrap();
        assert_eq!(est.estimate.speed, 0.0);
        assert!(est.pinned);
    }

    #[test]
    fn pulsating_without_wobble_matches_plain_estimate() {
        let tr = line_trace(|t| 35.0 - 0.5 * t, 0.0, 20.0, 0.5);
        let plain = estimate_speed(&tr, (0.0, 20.0), 1.0).unwrap();
        let puls = estimate_pulsating_speed(&tr, 1.0, (0.0, 20.0)).unwrap();
        assert_eq!(puls.estimate, plain);
        assert!(puls.wobble < 1e-12);
    }

    #[test]
    fn pulsating_window_must_cover_periods() {
        let tr = line_trace(|t| 20.0 - 0.1 * t, 0.0, 4.0, 0.25);
        assert!(matches!(
            estimate_pulsating_speed(&tr, 1.0, (0.0, 4.0)),
            Err(FrontError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn flag_names_round_trip() {
        for f in [FrontFlag::BoundaryTooClose, FrontFlag::DomainExtended, FrontFlag::SolverFailure] {
            assert_eq!(FrontFlag::from_name(f.name()), Some(f));
        }
        assert_eq!(FrontFlag::from_name("nope"), None);
    }

    proptest! {
        #[test]
        fn speed_is_translation_invariant(
            slope in -2.0f64..2.0,
            shift_x in -5.0f64..5.0,
            shift_t in -50.0f64..50.0,
        ) {
            let tr = line_trace(|t| 20.0 + slope * (t - 36.0) + 0.01 * libm::sin(t), 32.0, 40.0, 0.5);
            let base = estimate_speed(&tr, (32.0, 40.0), 1.0).unwrap().speed;
            let moved = tr.map_positions(|x| x + shift_x);
            let s1 = estimate_speed(&moved, (32.0, 40.0), 1.0).unwrap().speed;
            prop_assert!((s1 - base).abs() < 1e-9);
            let mut delayed = tr.clone();
            for s in &mut delayed.samples {
                s.0 += shift_t;
            }
            let s2 = estimate_speed(&delayed, (32.0 + shift_t, 40.0 + shift_t), 1.0).unwrap().speed;
            prop_assert!((s2 - base).abs() < 1e-9);
        }

        #[test]
        fn collinear_points_give_exact_slope(slope in -3.0f64..3.0, x0 in 5.0f64..35.0, count in 5usize..40) {
            let mut tr = FrontTrace::new(&grid(), 0.5, Species::V);
            for i in 0..count {
                let t = 0.5 * i as f64;
                tr.push(t, Some(x0 + slope * t)).unwrap();
            }
            let est = estimate_speed(&tr, (0.0, 0.5 * count as f64), 1.0).unwrap();
            prop_assert!((est.speed - slope).abs() <= 1e-12 * slope.abs().max(1.0));
        }

        #[test]
        fn reflection_negates_displacement_and_speed(
            centre0 in 10.0f64..30.0,
            slope in -0.5f64..0.5,
        ) {
            let g = Grid1D::new(40.0, 0.1).unwrap();
            let mut fwd = FrontTrace::new(&g, 0.5, Species::V);
            let mut rev = FrontTrace::new(&g, 0.5, Species::V);
            for i in 0..10 {
                let t = i as f64;
                let c = centre0 + slope * t;
                let s = State::from_fn(&g, |x| (0.0, 1.0 / (1.0 + libm::exp(-(x - c)))));
                let r = State::from_fn(&g, |x| (0.0, 1.0 / (1.0 + libm::exp(-((40.0 - x) - c)))));
                fwd.record(&State { t, ..s }, &g).unwrap();
                rev.record(&State { t, ..r }, &g).unwrap();
            }
            let a = estimate_speed(&fwd, (0.0, 9.0), 1.0).unwrap().speed;
            let b = estimate_speed(&rev, (0.0, 9.0), 1.0).unwrap().speed;
            prop_assert!((a + b).abs() < 1e-6);
            let da = fwd.samples[9].1 - fwd.samples[0].1;
            let db = rev.samples[9].1 - rev.samples[0].1;
            prop_assert!((da + db).abs() < 1e-6);
        }
    }

    #[test]
    fn record_uses_state_time() {
        let g = grid();
        let mut tr = FrontTrace::new(&g, 0.5, Species::U);
        let s = State { t: 2.5, ..State::segregated(&g, 20.0) };
        let x = tr.record(&s, &g).unwrap().unwrap();
        assert_eq!(tr.samples, vec![(2.5, x)]);
    }
}
