//! Model definitions: competition kinds, spatial coefficient fields, the
//! full reaction-diffusion description, the mesh and the paired state.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} must be positive (got {value})")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must be nonnegative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("{field} must be finite")]
    NotFinite { field: &'static str },
    #[error("periodic field needs at least two samples")]
    TooFewSamples,
    #[error("periodic samples do not close: first {first}, last {last}")]
    OpenPeriodic { first: f64, last: f64 },
    #[error("alpha != 1 is only defined for Lotka-Volterra competition")]
    AlphaWithCubic,
    #[error("grid length {length} is not a whole number of steps {dx}")]
    GridMismatch { length: f64, dx: f64 },
    #[error("grid must have at least 8 nodes (got {0})")]
    GridTooSmall(usize),
    #[error("state arrays have length {got}, grid has {expected} nodes")]
    StateLength { expected: usize, got: usize },
}

/// Shape of the interspecific competition terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitionKind {
    /// `u(1-u) - huv` and `rv(1-v) - kuv`.
    #[default]
    LotkaVolterra,
    /// `u(1-u) - huv^2` and `rv(1-v) - ku^2v`.
    Cubic,
}

/// A scalar coefficient depending on position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientField {
    Constant {
        value: f64,
    },
    /// Piecewise-linear, `period`-periodic. `values[j]` sits at
    /// `j * period / (values.len() - 1)`; first and last sample coincide.
    Periodic {
        period: f64,
        values: Vec<f64>,
    },
    /// `mean + amplitude * sin(2 * frequency * pi * x)`.
    SineOscillation {
        mean: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl Default for CoefficientField {
    fn default() -> Self {
        CoefficientField::Constant { value: 1.0 }
    }
}

impl CoefficientField {
    pub fn constant(value: f64) -> Self {
        CoefficientField::Constant { value }
    }

    pub fn sine(mean: f64, amplitude: f64, frequency: f64) -> Self {
        CoefficientField::SineOscillation {
            mean,
            amplitude,
            frequency,
        }
    }

    /// Closed sample list (first == last) spread uniformly over one period.
    pub fn periodic(period: f64, values: Vec<f64>) -> Result<Self, ModelError> {
        let field = CoefficientField::Periodic { period, values };
        field.validate("periodic")?;
        Ok(field)
    }

    /// Open sample list: `values[j]` at `j * period / values.len()`, the
    /// closing sample is appended.
    pub fn from_period_samples(period: f64, mut values: Vec<f64>) -> Result<Self, ModelError> {
        let first = *values.first().ok_or(ModelError::TooFewSamples)?;
        values.push(first);
        Self::periodic(period, values)
    }

    /// Piecewise-constant patches `(width, value)` repeated periodically,
    /// sampled every `ramp` so that each jump becomes a linear ramp of width
    /// `ramp`. Patch widths should be multiples of `ramp`.
    pub fn patches(segments: &[(f64, f64)], ramp: f64) -> Result<Self, ModelError> {
        if !(ramp > 0.0) {
            return Err(ModelError::NotPositive {
                field: "ramp",
                value: ramp,
            });
        }
        let period: f64 = segments.iter().map(|s| s.0).sum();
        if !(period > 0.0) {
            return Err(ModelError::NotPositive {
                field: "period",
                value: period,
            });
        }
        let count = math::round(period / ramp) as usize;
        let spacing = period / count as f64;
        let samples = (0..count)
            .map(|j| {
                // value of the patch containing the centre of sample cell j
                let x = (j as f64 + 0.5) * spacing;
                let mut edge = 0.0;
                for &(width, value) in segments {
                    edge += width;
                    if x < edge {
                        return value;
                    }
                }
                segments[segments.len() - 1].1
            })
            .collect();
        Self::from_period_samples(period, samples)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            CoefficientField::Constant { value } => *value,
            CoefficientField::Periodic { period, values } => {
                let intervals = values.len() - 1;
                let s = math::wrap(x, *period) / period * intervals as f64;
                let j = (math::floor(s) as usize).min(intervals - 1);
                let frac = s - j as f64;
                values[j] + frac * (values[j + 1] - values[j])
            }
            CoefficientField::SineOscillation {
                mean,
                amplitude,
                frequency,
            } => mean + amplitude * math::sin(2.0 * frequency * PI * x),
        }
    }

    /// Number of linear pieces per period for `Periodic`, zero otherwise.
    pub fn samples_per_period(&self) -> usize {
        match self {
            CoefficientField::Periodic { values, .. } => values.len().saturating_sub(1),
            _ => 0,
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoefficientField::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// Spatial period, if the field has one.
    pub fn period(&self) -> Option<f64> {
        match self {
            CoefficientField::Constant { .. } => None,
            CoefficientField::Periodic { period, .. } => Some(*period),
            CoefficientField::SineOscillation { frequency, .. } => Some(1.0 / frequency),
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            CoefficientField::Constant { value } => *value,
            CoefficientField::Periodic { values, .. } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
            CoefficientField::SineOscillation {
                mean, amplitude, ..
            } => mean - math::abs(*amplitude),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            CoefficientField::Constant { value } => *value,
            CoefficientField::Periodic { values, .. } => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            CoefficientField::SineOscillation {
                mean, amplitude, ..
            } => mean + math::abs(*amplitude),
        }
    }

    /// The field `y -> f(factor * y)`.
    pub fn scale_x(&self, factor: f64) -> Self {
        match self {
            CoefficientField::Constant { .. } => self.clone(),
            CoefficientField::Periodic { period, values } => CoefficientField::Periodic {
                period: period / factor,
                values: values.clone(),
            },
            CoefficientField::SineOscillation {
                mean,
                amplitude,
                frequency,
            } => CoefficientField::SineOscillation {
                mean: *mean,
                amplitude: *amplitude,
                frequency: frequency * factor,
            },
        }
    }

    /// The field multiplied by a constant.
    pub fn scale_values(&self, factor: f64) -> Self {
        match self {
            CoefficientField::Constant { value } => CoefficientField::Constant {
                value: value * factor,
            },
            CoefficientField::Periodic { period, values } => CoefficientField::Periodic {
                period: *period,
                values: values.iter().map(|v| v * factor).collect(),
            },
            CoefficientField::SineOscillation {
                mean,
                amplitude,
                frequency,
            } => CoefficientField::SineOscillation {
                mean: mean * factor,
                amplitude: amplitude * factor,
                frequency: *frequency,
            },
        }
    }

    /// Structural checks only; sign requirements are up to the caller.
    pub fn validate(&self, field: &'static str) -> Result<(), ModelError> {
        match self {
            CoefficientField::Constant { value } => {
                if !value.is_finite() {
                    return Err(ModelError::NotFinite { field });
                }
            }
            CoefficientField::Periodic { period, values } => {
                if !(*period > 0.0) || !period.is_finite() {
                    return Err(ModelError::NotPositive {
                        field,
                        value: *period,
                    });
                }
                if values.len() < 2 {
                    return Err(ModelError::TooFewSamples);
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::NotFinite { field });
                }
                let (first, last) = (values[0], values[values.len() - 1]);
                if math::abs(first - last) > 1e-12 * first.abs().max(1.0) {
                    return Err(ModelError::OpenPeriodic { first, last });
                }
            }
            CoefficientField::SineOscillation {
                mean,
                amplitude,
                frequency,
            } => {
                if !mean.is_finite() || !amplitude.is_finite() {
                    return Err(ModelError::NotFinite { field });
                }
                if !(*frequency > 0.0) || !frequency.is_finite() {
                    return Err(ModelError::NotPositive {
                        field,
                        value: *frequency,
                    });
                }
            }
        }
        Ok(())
    }

    fn require_positive(&self, field: &'static str) -> Result<(), ModelError> {
        self.validate(field)?;
        let min = self.min_value();
        if !(min > 0.0) {
            return Err(ModelError::NotPositive { field, value: min });
        }
        Ok(())
    }
}

/// Full definition of a two-species problem:
///
/// ```text
/// u_t = (d_u u_x)_x + mu [u (a - u) - h u v^p]
/// v_t = (d_v v_x)_x + mu [r v (a - v) - alpha k u^p v]
/// ```
///
/// with `p = 1` for Lotka-Volterra and `p = 2` (on the competitor) for cubic
/// competition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub d_u: CoefficientField,
    pub d_v: CoefficientField,
    pub r: f64,
    pub h: f64,
    pub k: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub mu: CoefficientField,
    #[serde(default)]
    pub a: CoefficientField,
    #[serde(default)]
    pub kind: CompetitionKind,
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    /// Lotka-Volterra system with constant diffusion `1` for `u` and `d` for
    /// `v` and homogeneous resources.
    pub fn lotka_volterra(d: f64, r: f64, h: f64, k: f64) -> Self {
        ModelSpec {
            d_u: CoefficientField::constant(1.0),
            d_v: CoefficientField::constant(d),
            r,
            h,
            k,
            alpha: 1.0,
            mu: CoefficientField::default(),
            a: CoefficientField::default(),
            kind: CompetitionKind::LotkaVolterra,
        }
    }

    /// The symmetric reduction: species differ only in dispersal.
    pub fn symmetric(k: f64, d: f64) -> Self {
        Self::lotka_volterra(d, 1.0, k, k)
    }

    pub fn cubic(d: f64, r: f64, h: f64, k: f64) -> Self {
        ModelSpec {
            kind: CompetitionKind::Cubic,
            ..Self::lotka_volterra(d, r, h, k)
        }
    }

    /// Blind competition (`h = k = 1`) with heterogeneous growth `a(x)`.
    pub fn dockery(a: CoefficientField, d: f64) -> Self {
        ModelSpec {
            a,
            ..Self::lotka_volterra(d, 1.0, 1.0, 1.0)
        }
    }

    pub fn with_mu(mut self, mu: CoefficientField) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_d_v(mut self, d_v: CoefficientField) -> Self {
        self.d_v = d_v;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.d_u.require_positive("d_u")?;
        self.d_v.require_positive("d_v")?;
        check_positive("r", self.r)?;
        check_nonnegative("h", self.h)?;
        check_nonnegative("k", self.k)?;
        check_positive("alpha", self.alpha)?;
        if self.alpha != 1.0 && self.kind != CompetitionKind::LotkaVolterra {
            return Err(ModelError::AlphaWithCubic);
        }
        self.mu.validate("mu")?;
        let mu_min = self.mu.min_value();
        if mu_min < 0.0 {
            return Err(ModelError::Negative {
                field: "mu",
                value: mu_min,
            });
        }
        self.a.validate("a")?;
        Ok(())
    }

    /// Ratio of the two diffusion coefficients at the origin, used in
    /// diagnostics.
    pub fn diffusion_ratio(&self) -> f64 {
        self.d_v.evaluate(0.0) / self.d_u.evaluate(0.0)
    }

    /// Reaction rates given already-evaluated `mu(x)` and `a(x)`.
    #[inline]
    pub fn reaction_at(&self, u: f64, v: f64, mu: f64, a: f64) -> (f64, f64) {
        let (loss_u, loss_v) = match self.kind {
            CompetitionKind::LotkaVolterra => (self.h * u * v, self.alpha * self.k * u * v),
            CompetitionKind::Cubic => (self.h * u * v * v, self.k * u * u * v),
        };
        (
            mu * (u * (a - u) - loss_u),
            mu * (self.r * v * (a - v) - loss_v),
        )
    }

    /// Row-sum bound on the Jacobian of the reaction over
    /// `0 <= u, v <= max(1, max a)`.
    pub fn reaction_lipschitz_bound(&self) -> f64 {
        let a = self.a.max_value().max(0.0);
        let b = a.max(1.0);
        let mu = self.mu.max_value().max(0.0);
        let (row_u, row_v) = match self.kind {
            CompetitionKind::LotkaVolterra => (
                a + 2.0 * b + 2.0 * self.h * b,
                self.r * (a + 2.0 * b) + 2.0 * self.alpha * self.k * b,
            ),
            CompetitionKind::Cubic => (
                a + 2.0 * b + 3.0 * self.h * b * b,
                self.r * (a + 2.0 * b) + 3.0 * self.k * b * b,
            ),
        };
        mu * row_u.max(row_v)
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NotFinite { field });
    }
    if !(value > 0.0) {
        return Err(ModelError::NotPositive { field, value });
    }
    Ok(())
}

fn check_nonnegative(field: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NotFinite { field });
    }
    if value < 0.0 {
        return Err(ModelError::Negative { field, value });
    }
    Ok(())
}

/// Reaction rates `(f_u, f_v)` at densities `(u, v)` and position `x`.
pub fn reaction_terms(spec: &ModelSpec, u: f64, v: f64, x: f64) -> (f64, f64) {
    spec.reaction_at(u, v, spec.mu.evaluate(x), spec.a.evaluate(x))
}

/// Uniform vertex-centred mesh on `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct Grid1D {
    length: f64,
    dx: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    length: f64,
    dx: f64,
}

impl TryFrom<GridDoc> for Grid1D {
    type Error = ModelError;

    fn try_from(doc: GridDoc) -> Result<Self, Self::Error> {
        Grid1D::new(doc.length, doc.dx)
    }
}

impl From<Grid1D> for GridDoc {
    fn from(grid: Grid1D) -> Self {
        GridDoc {
            length: grid.length,
            dx: grid.dx,
        }
    }
}

impl Grid1D {
    pub fn new(length: f64, dx: f64) -> Result<Self, ModelError> {
        check_positive("length", length)?;
        check_positive("dx", dx)?;
        let steps = math::round(length / dx);
        if math::abs(steps * dx - length) > 1e-12 * length {
            return Err(ModelError::GridMismatch { length, dx });
        }
        let n = steps as usize + 1;
        if n < 8 {
            return Err(ModelError::GridTooSmall(n));
        }
        Ok(Grid1D { length, dx, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Trapezoidal integral of nodal values; the quantity conserved by the
    /// no-flux diffusion operator.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let n = values.len();
        if n == 0 {
            return 0.0;
        }
        let inner: f64 = values.iter().sum();
        (inner - 0.5 * (values[0] + values[n - 1])) * self.dx
    }

    /// Same spacing, different length.
    pub fn with_length(&self, length: f64) -> Result<Self, ModelError> {
        Grid1D::new(length, self.dx)
    }
}

/// Paired densities at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(grid: &Grid1D, u: Vec<f64>, v: Vec<f64>) -> Result<Self, ModelError> {
        for len in [u.len(), v.len()] {
            if len != grid.n() {
                return Err(ModelError::StateLength {
                    expected: grid.n(),
                    got: len,
                });
            }
        }
        Ok(State { t: 0.0, u, v })
    }

    pub fn uniform(grid: &Grid1D, u: f64, v: f64) -> Self {
        State {
            t: 0.0,
            u: vec![u; grid.n()],
            v: vec![v; grid.n()],
        }
    }

    pub fn from_fn(grid: &Grid1D, mut f: impl FnMut(f64) -> (f64, f64)) -> Self {
        let (u, v) = grid.nodes().map(&mut f).unzip();
        State { t: 0.0, u, v }
    }

    /// Wave-like data: `(1, 0)` left of `front`, `(0, 1)` from `front` on.
    pub fn segregated(grid: &Grid1D, front: f64) -> Self {
        Self::from_fn(grid, |x| if x < front { (1.0, 0.0) } else { (0.0, 1.0) })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn min_entry(&self) -> f64 {
        self.u.iter().chain(&self.v).copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest nodal difference from `other` across both species.
    pub fn sup_distance(&self, other: &State) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn evaluate_coefficient_examples() {
        assert_eq!(CoefficientField::constant(1.0).evaluate(3.7), 1.0);
        assert_eq!(CoefficientField::sine(1.0, 0.75, 5.0).evaluate(0.0), 1.0);
        let p = CoefficientField::periodic(1.0, vec![1.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p.evaluate(1.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.evaluate(-0.25), 0.5, epsilon = 1e-15);
        assert_eq!(p.samples_per_period(), 2);
    }

    #[test]
    fn periodic_must_close() {
        assert!(matches!(
            CoefficientField::periodic(1.0, vec![1.0, 0.0]),
            Err(ModelError::OpenPeriodic { .. })
        ));
        assert!(matches!(
            CoefficientField::periodic(1.0, vec![1.0]),
            Err(ModelError::TooFewSamples)
        ));
    }

    #[test]
    fn patches_ramp_is_one_cell_wide() {
        let mu = CoefficientField::patches(&[(1.0, 1.0), (1.0, 0.0)], 0.25).unwrap();
        assert_eq!(mu.samples_per_period(), 8);
        assert_eq!(mu.evaluate(0.5), 1.0);
        assert_eq!(mu.evaluate(1.5), 0.0);
        // samples at 0.75 (=1) and 1.0 (=0)
        assert_abs_diff_eq!(mu.evaluate(0.875), 0.5, epsilon = 1e-12);
        assert_eq!(mu.evaluate(1.0), 0.0);
    }

    #[test]
    fn scale_x_composes_with_argument() {
        let f = CoefficientField::sine(1.0, 0.5, 0.1);
        let g = f.scale_x(2.0);
        for &y in &[0.3, 1.7, 4.2] {
            assert_abs_diff_eq!(g.evaluate(y), f.evaluate(2.0 * y), epsilon = 1e-12);
        }
        let p = CoefficientField::from_period_samples(3.0, vec![0.0, 2.0, 1.0]).unwrap();
        let q = p.scale_x(0.5);
        assert_abs_diff_eq!(q.evaluate(5.0), p.evaluate(2.5), epsilon = 1e-12);
    }

    #[test]
    fn reaction_examples() {
        let lv = ModelSpec::symmetric(2.0, 1.0);
        assert_eq!(reaction_terms(&lv, 1.0, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(reaction_terms(&lv, 0.5, 0.5, 0.0), (-0.25, -0.25));
        let cubic = ModelSpec::cubic(1.0, 1.0, 1.0, 1.0);
        assert_eq!(reaction_terms(&cubic, 1.0, 1.0, 0.0), (-1.0, -1.0));
    }

    #[test]
    fn reaction_respects_mu_alpha_and_a() {
        let spec = ModelSpec::symmetric(2.0, 1.0)
            .with_mu(CoefficientField::constant(0.5))
            .with_alpha(0.9);
        let (fu, fv) = reaction_terms(&spec, 0.5, 0.5, 0.0);
        assert_abs_diff_eq!(fu, 0.5 * (0.25 - 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(fv, 0.5 * (0.25 - 0.9 * 0.5), epsilon = 1e-15);

        let dockery = ModelSpec::dockery(CoefficientField::constant(1.5), 2.0);
        let (fu, fv) = reaction_terms(&dockery, 0.5, 0.25, 0.0);
        assert_abs_diff_eq!(fu, 0.5 * 1.0 - 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(fv, 0.25 * 1.25 - 0.125, epsilon = 1e-15);
    }

    #[test]
    fn steady_states_are_annihilated() {
        for &k in &[0.0, 0.5, 1.0, 2.0, 7.5] {
            for &h in &[0.0, 1.0, 3.0] {
                let specs = [
                    ModelSpec::lotka_volterra(2.0, 1.0, h, k),
                    ModelSpec::cubic(2.0, 1.0, h, k),
                ];
                for spec in &specs {
                    for &(u, v) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
                        assert_eq!(reaction_terms(spec, u, v, 0.3), (0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn model_validation() {
        assert!(ModelSpec::symmetric(2.0, 4.0).validate().is_ok());
        assert!(ModelSpec::symmetric(2.0, 0.0).validate().is_err());
        assert_eq!(
            ModelSpec::cubic(1.0, 1.0, 1.0, 1.0)
                .with_alpha(0.9)
                .validate(),
            Err(ModelError::AlphaWithCubic)
        );
        let osc = ModelSpec::symmetric(2.0, 1.0).with_d_v(CoefficientField::sine(1.0, 0.75, 20.0));
        assert!(osc.validate().is_ok());
        let bad = ModelSpec::symmetric(2.0, 1.0).with_d_v(CoefficientField::sine(1.0, 1.5, 20.0));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_invariants() {
        let g = Grid1D::new(40.0, 0.02).unwrap();
        assert_eq!(g.n(), 2001);
        assert!((g.dx() * (g.n() - 1) as f64 - g.length()).abs() <= 1e-12 * g.length());
        assert_eq!(g.x(g.n() - 1), 40.0);
        assert!(matches!(
            Grid1D::new(40.0, 0.03),
            Err(ModelError::GridMismatch { .. })
        ));
        assert!(matches!(Grid1D::new(1.0, 0.25), Err(ModelError::GridTooSmall(5))));
        assert!(Grid1D::new(40.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn periodic_field_repeats(x in -50.0f64..50.0, a in 0.1f64..3.0, b in 0.1f64..3.0) {
            let f = CoefficientField::from_period_samples(2.5, vec![a, b, 0.5 * (a + b), 1.0]).unwrap();
            prop_assert!((f.evaluate(x) - f.evaluate(x + 2.5)).abs() <= 1e-12);
        }

        #[test]
        fn symmetric_reaction_swaps(u in 0.0f64..1.5, v in 0.0f64..1.5, k in 0.0f64..20.0) {
            let spec = ModelSpec::symmetric(k, 3.0);
            let (fu, fv) = reaction_terms(&spec, u, v, 0.0);
            let (gu, gv) = reaction_terms(&spec, v, u, 0.0);
            prop_assert!((fu - gv).abs() <= 1e-12 * (1.0 + fu.abs()));
            prop_assert!((fv - gu).abs() <= 1e-12 * (1.0 + fv.abs()));
        }
    }
}
