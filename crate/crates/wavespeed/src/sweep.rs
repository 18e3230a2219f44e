//! Parallel sweeps of the symmetric speed over the `(d, k)` plane with a
//! resumable checkpoint.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use wavespeed_core::{
    extract_contours, run_single, ContourSet, FrontFlag, Protocol, ScalarGrid, SpeedEstimate,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint belongs to plan {found}, current plan is {expected}")]
    PlanMismatch { expected: String, found: String },
    #[error("corrupt checkpoint line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Numerical overrides applied on top of the reference protocol.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
}

/// `(min, max, step)` ranges for `d` and `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPlan {
    pub d_range: (f64, f64, f64),
    pub k_range: (f64, f64, f64),
    /// Start from the reference protocol (domain 40, `dx = dt = 0.02`,
    /// `T = 40`, window `[32, 40]`, rescaled frame). When false, `d` and
    /// `k` below 1 are allowed.
    pub appendix_protocol: bool,
    pub overrides: ProtocolOverrides,
    /// Contour levels.
    pub levels: Vec<f64>,
}

pub const DESK_STEP: f64 = 0.5;
pub const FULL_STEP: f64 = 0.1;

/// `0, -0.1, ..., -1.2`.
pub fn default_levels() -> Vec<f64> {
    (0..=12)
        .map(|i| if i == 0 { 0.0 } else { -(i as f64) / 10.0 })
        .collect()
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            d_range: (1.0, 21.0, DESK_STEP),
            k_range: (1.0, 21.0, DESK_STEP),
            appendix_protocol: true,
            overrides: ProtocolOverrides::default(),
            levels: default_levels(),
        }
    }
}

fn axis((min, max, step): (f64, f64, f64)) -> Vec<f64> {
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    // snap to 1e-9 so headers read 1.5 rather than 1.5000000000000002
    (0..n)
        .map(|i| ((min + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

impl SweepPlan {
    /// Same ranges at the fine `0.1` step.
    pub fn full_resolution(mut self) -> Self {
        self.d_range.2 = FULL_STEP;
        self.k_range.2 = FULL_STEP;
        self
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        for (name, (min, max, step)) in [("d_range", self.d_range), ("k_range", self.k_range)] {
            if !(step > 0.0) || !step.is_finite() {
                return Err(SweepError::InvalidPlan(format!("{name} step must be positive")));
            }
            if !(max >= min) || !min.is_finite() || !max.is_finite() {
                return Err(SweepError::InvalidPlan(format!("{name} needs min <= max")));
            }
            if self.appendix_protocol && min < 1.0 {
                return Err(SweepError::InvalidPlan(format!(
                    "{name} must start at 1 or above under the reference protocol"
                )));
            }
            if min < 0.0 || (name == "d_range" && min <= 0.0) {
                return Err(SweepError::InvalidPlan(format!("{name} out of range")));
            }
        }
        self.protocol()
            .validate()
            .map_err(|e| SweepError::InvalidPlan(e.to_string()))
    }

    pub fn d_values(&self) -> Vec<f64> {
        axis(self.d_range)
    }

    pub fn k_values(&self) -> Vec<f64> {
        axis(self.k_range)
    }

    pub fn protocol(&self) -> Protocol {
        let base = if self.appendix_protocol {
            Protocol::default()
        } else {
            Protocol {
                rescaled: false,
                ..Protocol::default()
            }
        };
        let o = &self.overrides;
        let length = o.length.unwrap_or(base.length);
        Protocol {
            length,
            dx: o.dx.unwrap_or(base.dx),
            dt: o.dt.unwrap_or(base.dt),
            t_end: o.t_end.unwrap_or(base.t_end),
            window: o.window.unwrap_or(base.window),
            max_length: base.max_length.max(length),
            ..base
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("plans always serialize");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn cell_count(&self) -> usize {
        self.d_values().len() * self.k_values().len()
    }
}

/// Checkpoint form of an estimate: NaN becomes null, flags are names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CellRecord {
    ik: usize,
    id: usize,
    speed: Option<f64>,
    residual_rms: Option<f64>,
    boundary_margin: Option<f64>,
    window: (f64, f64),
    flags: Vec<String>,
    samples: usize,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl CellRecord {
    fn new(ik: usize, id: usize, e: &SpeedEstimate) -> Self {
        CellRecord {
            ik,
            id,
            speed: finite(e.speed),
            residual_rms: finite(e.residual_rms),
            boundary_margin: finite(e.boundary_margin),
            window: e.window,
            flags: e.flags.iter().map(|f| f.name().to_string()).collect(),
            samples: e.samples,
        }
    }

    fn estimate(&self) -> Result<SpeedEstimate, String> {
        let flags = self
            .flags
            .iter()
            .map(|n| FrontFlag::from_name(n).ok_or_else(|| format!("unknown flag {n}")))
            .collect::<Result<_, _>>()?;
        Ok(SpeedEstimate {
            speed: self.speed.unwrap_or(f64::NAN),
            residual_rms: self.residual_rms.unwrap_or(f64::NAN),
            window: self.window,
            boundary_margin: self.boundary_margin.unwrap_or(f64::NAN),
            flags,
            samples: self.samples,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    plan_hash: String,
}

/// Speeds over the plan grid, row-major with `k` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub plan_hash: String,
    pub d_values: Vec<f64>,
    pub k_values: Vec<f64>,
    pub cells: Vec<SpeedEstimate>,
    pub wall_time_s: f64,
    /// Cells taken from a checkpoint rather than computed.
    pub resumed: usize,
}

impl SweepResult {
    pub fn get(&self, ik: usize, id: usize) -> &SpeedEstimate {
        &self.cells[ik * self.d_values.len() + id]
    }

    /// Usable speed or NaN.
    pub fn speed(&self, ik: usize, id: usize) -> f64 {
        let e = self.get(ik, id);
        if e.is_valid() {
            e.speed
        } else {
            f64::NAN
        }
    }

    /// Speed surface with `x = d`, `y = k`; failed cells are NaN.
    pub fn surface(&self) -> ScalarGrid {
        let values = (0..self.k_values.len())
            .flat_map(|ik| (0..self.d_values.len()).map(move |id| (ik, id)))
            .map(|(ik, id)| self.speed(ik, id))
            .collect();
        ScalarGrid::new(self.d_values.clone(), self.k_values.clone(), values)
            .expect("sweep axes have at least one value each")
    }

    pub fn contours(&self) -> ContourSet {
        extract_contours(&self.surface(), &self.plan.levels)
    }

    pub fn finite_range(&self) -> Option<(f64, f64)> {
        self.surface().finite_range()
    }
}

/// Runs every cell of `plan` on `workers` threads. With a checkpoint path,
/// finished cells are appended as they complete and cells already present
/// are not recomputed.
pub fn run_sweep(
    plan: &SweepPlan,
    workers: usize,
    checkpoint: Option<&Path>,
) -> Result<SweepResult, SweepError> {
    plan.validate()?;
    let start = Instant::now();
    let hash = plan.hash();
    let (ds, ks) = (plan.d_values(), plan.k_values());
    let mut done: BTreeMap<(usize, usize), SpeedEstimate> = BTreeMap::new();
    let mut writer = None;
    if let Some(path) = checkpoint {
        done = read_checkpoint(path, &hash, ks.len(), ds.len())?;
        let fresh = !path.exists();
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            let header = CheckpointHeader {
                plan_hash: hash.clone(),
            };
            writeln!(file, "{}", serde_json::to_string(&header).expect("header"))?;
            file.flush()?;
        }
        writer = Some(file);
    }
    let resumed = done.len();
    let pending: Vec<(usize, usize)> = (0..ks.len())
        .flat_map(|ik| (0..ds.len()).map(move |id| (ik, id)))
        .filter(|cell| !done.contains_key(cell))
        .collect();
    if !pending.is_empty() {
        log::info!(
            "sweep: {} cells to run ({} resumed) on {} workers",
            pending.len(),
            resumed,
            workers.max(1)
        );
    }
    let protocol = plan.protocol();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<((usize, usize), SpeedEstimate)>();
    let io_result: Result<(), SweepError> = std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(pending.len().max(1)) {
            let tx = tx.clone();
            let (pending, next, protocol, ds, ks) = (&pending, &next, &protocol, &ds, &ks);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(ik, id)) = pending.get(i) else {
                    break;
                };
                let est = run_single(ds[id], ks[ik], protocol);
                if tx.send(((ik, id), est)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // single aggregator: the only writer of the checkpoint
        for (cell, est) in rx {
            if let Some(file) = writer.as_mut() {
                let line = serde_json::to_string(&CellRecord::new(cell.0, cell.1, &est))
                    .expect("records serialize");
                writeln!(file, "{line}")?;
                file.flush()?;
            }
            done.insert(cell, est);
        }
        Ok(())
    });
    io_result?;
    let cells = (0..ks.len())
        .flat_map(|ik| (0..ds.len()).map(move |id| (ik, id)))
        .map(|cell| done.remove(&cell).expect("every cell computed"))
        .collect();
    Ok(SweepResult {
        plan: plan.clone(),
        plan_hash: hash,
        d_values: ds,
        k_values: ks,
        cells,
        wall_time_s: start.elapsed().as_secs_f64(),
        resumed,
    })
}

fn read_checkpoint(
    path: &Path,
    hash: &str,
    nk: usize,
    nd: usize,
) -> Result<BTreeMap<(usize, usize), SpeedEstimate>, SweepError> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let lines: Vec<String> = BufReader::new(File::open(path)?)
        .lines()
        .collect::<Result<_, _>>()?;
    let Some(first) = lines.first() else {
        return Ok(done);
    };
    let header: CheckpointHeader =
        serde_json::from_str(first).map_err(|e| SweepError::Corrupt {
            line: 1,
            message: e.to_string(),
        })?;
    if header.plan_hash != hash {
        return Err(SweepError::PlanMismatch {
            expected: hash.to_string(),
            found: header.plan_hash,
        });
    }
    let last = lines.len();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CellRecord>(line) {
            Ok(rec) if rec.ik < nk && rec.id < nd => {
                let est = rec.estimate().map_err(|message| SweepError::Corrupt {
                    line: i + 1,
                    message,
                })?;
                done.insert((rec.ik, rec.id), est);
            }
            // a write cut short by an interruption; the cell is rerun
            Err(_) if i + 1 == last => {
                log::warn!("ignoring truncated last checkpoint line");
            }
            Ok(_) => {
                return Err(SweepError::Corrupt {
                    line: i + 1,
                    message: "cell index outside the plan".into(),
                })
            }
            Err(e) => {
                return Err(SweepError::Corrupt {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(done)
}

/// Outcome of the monotonicity sanity probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub tolerance: f64,
    /// `(label, compared pairs, violations)` per probed line.
    pub lines: Vec<(String, usize, usize)>,
    pub pairs: usize,
    pub violations: usize,
}

impl MonotonicityReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.violations as f64 / self.pairs as f64
        }
    }
}

fn nearest(values: &[f64], x: f64) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| (**v - x).abs() < 1e-9)
        .map(|(i, _)| i)
        .next()
}

/// Checks that speeds do not increase along `d` at each fixed `k` in
/// `fixed_k`, and along `k` at each fixed `d` in `fixed_d`, within
/// `tolerance`. Lines whose value is not on the sweep grid are skipped.
pub fn monotonicity_probes(
    result: &SweepResult,
    fixed_k: &[f64],
    fixed_d: &[f64],
    tolerance: f64,
) -> MonotonicityReport {
    let mut lines = Vec::new();
    let mut count = |label: String, series: Vec<f64>| {
        let mut pairs = 0;
        let mut bad = 0;
        for w in series.windows(2) {
            if w[0].is_finite() && w[1].is_finite() {
                pairs += 1;
                if w[1] > w[0] + tolerance {
                    bad += 1;
                }
            }
        }
        lines.push((label, pairs, bad));
    };
    for &k in fixed_k {
        if let Some(ik) = nearest(&result.k_values, k) {
            let series = (0..result.d_values.len()).map(|id| result.speed(ik, id)).collect();
            count(format!("k={k} along d"), series);
        }
    }
    for &d in fixed_d {
        if let Some(id) = nearest(&result.d_values, d) {
            let series = (0..result.k_values.len()).map(|ik| result.speed(ik, id)).collect();
            count(format!("d={d} along k"), series);
        }
    }
    let pairs = lines.iter().map(|l| l.1).sum();
    let violations = lines.iter().map(|l| l.2).sum();
    MonotonicityReport {
        tolerance,
        lines,
        pairs,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_cover_ranges() {
        let plan = SweepPlan::default();
        let d = plan.d_values();
        assert_eq!(d.len(), 41);
        assert_eq!(d[1], 1.5);
        assert_eq!(*d.last().unwrap(), 21.0);
        let full = plan.full_resolution();
        assert_eq!(full.d_values().len(), 201);
        assert_eq!(full.k_values()[3], 1.3);
    }

    #[test]
    fn plan_validation() {
        assert!(SweepPlan::default().validate().is_ok());
        let bad = SweepPlan {
            d_range: (0.5, 2.0, 0.5),
            ..SweepPlan::default()
        };
        assert!(bad.validate().is_err());
        let bad = SweepPlan {
            k_range: (1.0, 2.0, 0.0),
            ..SweepPlan::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hash_tracks_plan_content() {
        let a = SweepPlan::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.levels.push(-2.0);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn records_round_trip_failed_estimates() {
        let e = SpeedEstimate::failed((32.0, 40.0), FrontFlag::SolverFailure);
        let rec = CellRecord::new(1, 2, &e);
        let json = serde_json::to_string(&rec).unwrap();
        let back: CellRecord = serde_json::from_str(&json).unwrap();
        let e2 = back.estimate().unwrap();
        assert!(e2.speed.is_nan());
        assert_eq!(e2.flags, e.flags);
    }
}
