//! Anchor suite: known values and signs of the symmetric front speed, the
//! cubic sign law and the `d <-> 1/d` symmetry, each checked against the
//! solver.

use std::fmt::Write as _;

use serde::Serialize;
use wavespeed_core::scenarios::{scenario_cubic_sign_law, Thresholds, CUBIC_D, CUBIC_K, CUBIC_RH};
use wavespeed_core::{run_single, Protocol, SpeedEstimate};

pub const ANCHOR_IDS: [&str; 9] = [
    "zero-speed",
    "rodrigo-mimura",
    "rodrigo-mimura-fine",
    "guo-lin",
    "ma-huang-ou",
    "large-d",
    "large-k",
    "cubic-sign-law",
    "symmetry-relation",
];

/// What an anchor demands of its measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// `|measured - value| <= tol`.
    Near { value: f64, tol: f64 },
    /// `measured < -tol`.
    Negative { tol: f64 },
    /// `lo < measured < hi`.
    Inside { lo: f64, hi: f64 },
    /// `measured <= tol` for a nonnegative error measure.
    AtMost { tol: f64 },
}

impl Expectation {
    pub fn holds(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            Expectation::Near { value, tol } => (x - value).abs() <= tol,
            Expectation::Negative { tol } => x < -tol,
            Expectation::Inside { lo, hi } => lo < x && x < hi,
            Expectation::AtMost { tol } => x <= tol,
        }
    }

    fn with_tolerance(self, t: f64) -> Self {
        match self {
            Expectation::Near { value, .. } => Expectation::Near { value, tol: t },
            Expectation::Negative { .. } => Expectation::Negative { tol: t },
            Expectation::AtMost { .. } => Expectation::AtMost { tol: t },
            inside => inside,
        }
    }

    fn describe(&self) -> (String, String) {
        match *self {
            Expectation::Near { value, tol } => (format!("{value:.5}"), format!("±{tol:e}")),
            Expectation::Negative { tol } => ("< 0".into(), format!("margin {tol:e}")),
            Expectation::Inside { lo, hi } => (format!("in ({lo}, {hi})"), "strict".into()),
            Expectation::AtMost { tol } => ("0".into(), format!("<= {tol:e}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorRow {
    pub id: &'static str,
    pub quantity: &'static str,
    pub measured: f64,
    pub expectation: Expectation,
    pub pass: bool,
    /// Individual measurements behind an aggregated value.
    pub detail: String,
}

fn speed(d: f64, k: f64, p: &Protocol) -> SpeedEstimate {
    run_single(d, k, p)
}

fn usable(e: &SpeedEstimate) -> f64 {
    if e.is_valid() {
        e.speed
    } else {
        f64::NAN
    }
}

fn detail(points: &[(String, f64)]) -> String {
    let mut s = String::new();
    for (i, (label, v)) in points.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        write!(s, "{label}: {v:.6}").unwrap();
    }
    s
}

/// Worst value over `points` for the expectation's direction.
fn worst(points: &[(String, f64)], largest: bool) -> f64 {
    let mut acc = if largest { f64::NEG_INFINITY } else { f64::INFINITY };
    for (_, v) in points {
        if !v.is_finite() {
            return f64::NAN;
        }
        acc = if largest { acc.max(*v) } else { acc.min(*v) };
    }
    acc
}

fn measure(id: &'static str, base: &Protocol) -> (&'static str, f64, Expectation, String) {
    match id {
        "zero-speed" => {
            let pts: Vec<(String, f64)> = [1.5, 2.0, 5.0, 10.0]
                .iter()
                .map(|&k| (format!("k={k}"), usable(&speed(1.0, k, base)).abs()))
                .collect();
            ("max |c| at d=1", worst(&pts, true), Expectation::AtMost { tol: 1e-3 }, detail(&pts))
        }
        "rodrigo-mimura" | "rodrigo-mimura-fine" => {
            let (p, tol) = if id == "rodrigo-mimura" {
                (base.clone(), 0.02)
            } else {
                (base.clone().with_resolution(0.01, 0.005), 0.005)
            };
            let c = usable(&speed(5.5, 11.0 / 6.0, &p));
            let exact = -(6.0f64).sqrt() / 12.0;
            (
                "c at k=11/6, d=11/2",
                c,
                Expectation::Near { value: exact, tol },
                format!("dx={}, dt={}", p.dx, p.dt),
            )
        }
        "guo-lin" => {
            let pts: Vec<(String, f64)> = [1.25, 1.30, 1.333]
                .iter()
                .map(|&k| (format!("k={k}"), usable(&speed(4.0, k, base))))
                .collect();
            ("max c at d=4", worst(&pts, true), Expectation::Negative { tol: 1e-3 }, detail(&pts))
        }
        "ma-huang-ou" => {
            // k = 1.8: 2k/(k-1) = 4.5 and 4/(k-1) = 5
            let pts: Vec<(String, f64)> = [4.2, 4.4, 5.2, 5.6]
                .iter()
                .map(|&d| (format!("d={d}"), usable(&speed(d, 1.8, base))))
                .collect();
            ("max c at k=1.8", worst(&pts, true), Expectation::Negative { tol: 1e-3 }, detail(&pts))
        }
        "large-d" => {
            let c = usable(&speed(100.0, 2.0, base));
            (
                "c/sqrt(d) at k=2, d=100",
                c / 10.0,
                Expectation::Inside { lo: -2.0, hi: 0.0 },
                format!("c={c:.6}"),
            )
        }
        "large-k" => {
            let c = usable(&speed(4.0, 500.0, base));
            (
                "c at k=500, d=4",
                c,
                Expectation::Inside { lo: -4.0, hi: 0.0 },
                String::new(),
            )
        }
        "cubic-sign-law" => {
            let th = Thresholds::default();
            let mut mismatches = 0usize;
            let mut neutral = 0.0f64;
            let mut notes = Vec::new();
            for &(r, h) in &CUBIC_RH {
                for &k in &CUBIC_K {
                    match scenario_cubic_sign_law(r, h, k, CUBIC_D[0], CUBIC_D[1], base, &th) {
                        Ok(out) => {
                            if out.metric("sign_law_holds") != Some(1.0) {
                                mismatches += 1;
                                notes.push(format!("r={r},h={h},k={k}"));
                            }
                            if k == r * h {
                                for key in ["speed", "speed_second_d"] {
                                    neutral = neutral.max(out.metric(key).unwrap_or(f64::NAN).abs());
                                }
                            }
                        }
                        Err(_) => {
                            mismatches += 1;
                            notes.push(format!("r={r},h={h},k={k} failed"));
                        }
                    }
                }
            }
            let measured = if neutral.is_finite() {
                mismatches as f64 + neutral
            } else {
                f64::NAN
            };
            (
                "sign mismatches + max |c| at k=rh",
                measured,
                Expectation::AtMost { tol: 1e-3 },
                format!(
                    "mismatches={mismatches}, max |c| at k=rh = {neutral:.2e}{}",
                    if notes.is_empty() { String::new() } else { format!(" ({})", notes.join(", ")) }
                ),
            )
        }
        "symmetry-relation" => {
            let unscaled = Protocol {
                rescaled: false,
                ..base.clone()
            };
            let pts: Vec<(String, f64)> = [(2.0, 4.0), (3.0, 9.0)]
                .iter()
                .map(|&(k, d)| {
                    let c = usable(&speed(d, k, base));
                    let c_inv = usable(&speed(1.0 / d, k, &unscaled));
                    (format!("k={k},d={d}"), (c + d.sqrt() * c_inv).abs())
                })
                .collect();
            (
                "max |c(k,d) + sqrt(d) c(k,1/d)|",
                worst(&pts, true),
                Expectation::AtMost { tol: 0.02 },
                detail(&pts),
            )
        }
        other => unreachable!("unknown anchor {other}"),
    }
}

/// Runs the anchors selected by `only` (all when `None`). `tolerance`
/// replaces every anchor tolerance. Returns `None` for an unknown id.
pub fn run_anchors(
    only: Option<&str>,
    tolerance: Option<f64>,
    base: &Protocol,
) -> Option<Vec<AnchorRow>> {
    let ids: Vec<&'static str> = match only {
        Some(id) => vec![*ANCHOR_IDS.iter().find(|a| **a == id)?],
        None => ANCHOR_IDS.to_vec(),
    };
    Some(
        ids.into_iter()
            .map(|id| {
                let (quantity, measured, mut expectation, detail) = measure(id, base);
                if let Some(t) = tolerance {
                    expectation = expectation.with_tolerance(t);
                }
                AnchorRow {
                    id,
                    quantity,
                    measured,
                    expectation,
                    pass: expectation.holds(measured),
                    detail,
                }
            })
            .collect(),
    )
}

pub fn format_table(rows: &[AnchorRow]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<20} {:<36} {:>12} {:>14} {:>14}  result",
        "anchor", "quantity", "measured", "expected", "tolerance"
    )
    .unwrap();
    for r in rows {
        let (expected, tol) = r.expectation.describe();
        writeln!(
            s,
            "{:<20} {:<36} {:>12.6} {:>14} {:>14}  {}",
            r.id,
            r.quantity,
            r.measured,
            expected,
            tol,
            if r.pass { "PASS" } else { "FAIL" }
        )
        .unwrap();
        if !r.detail.is_empty() {
            writeln!(s, "{:<20} {}", "", r.detail).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectations() {
        assert!(Expectation::Near { value: 1.0, tol: 0.1 }.holds(1.05));
        assert!(!Expectation::Near { value: 1.0, tol: 0.1 }.holds(f64::NAN));
        assert!(Expectation::Negative { tol: 1e-3 }.holds(-0.01));
        assert!(!Expectation::Negative { tol: 1e-3 }.holds(-1e-4));
        assert!(!Expectation::Inside { lo: -2.0, hi: 0.0 }.holds(0.0));
        assert!(Expectation::AtMost { tol: 1e-3 }.holds(1e-3));
    }

    #[test]
    fn unknown_anchor_is_none() {
        assert!(run_anchors(Some("nope"), None, &Protocol::default()).is_none());
    }

    #[test]
    fn tightened_tolerance_replaces_bounds() {
        let e = Expectation::Near { value: 0.0, tol: 0.02 }.with_tolerance(1e-6);
        assert_eq!(e, Expectation::Near { value: 0.0, tol: 1e-6 });
    }
}
