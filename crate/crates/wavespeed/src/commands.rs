//! Command implementations behind the CLI. Each writes into the configured
//! output directory and returns a report for the terminal.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use wavespeed_core::scenarios::{
    default_probes, pulsating_protocol, scenario_asymptotic_probes, scenario_cubic_sign_law,
    scenario_dockery_bounded, scenario_oscillating_diffusion, scenario_periodic_resources,
    scenario_segregated_steady_state, sine_growth, OscillatingConfig, ScenarioError,
    ScenarioOutcome,
};
use wavespeed_core::{
    measure_speed, CoefficientField, FrontFlag, FrontTrace, Grid1D, State, Stepper,
};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, OutputError};
use crate::sweep::{monotonicity_probes, run_sweep, SweepError, SweepResult};
use crate::validate::{format_table, run_anchors, ANCHOR_IDS};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ANCHOR_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Sweep(SweepError::InvalidPlan(_)) => EXIT_CONFIG,
            CliError::Scenario(ScenarioError::Precondition(_)) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Terminal text plus the exit code it implies.
pub struct Report {
    pub text: String,
    pub code: i32,
}

impl Report {
    fn ok(text: String) -> Self {
        Report {
            text,
            code: EXIT_OK,
        }
    }
}

/// CLI options that are not part of the config file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub workers: usize,
    pub only: Option<String>,
    pub tolerance: Option<f64>,
}

pub fn execute(cfg: &RunConfig, opts: &Options) -> Result<Report, CliError> {
    use crate::config::Command::*;
    match cfg.command {
        Simulate => simulate(cfg),
        Speed => speed(cfg),
        Sweep => sweep(cfg, opts, true),
        Contour => sweep(cfg, opts, false),
        Validate => validate(cfg, opts),
        Scenario => scenario(cfg),
    }
}

fn model_err(e: wavespeed_core::ModelError) -> CliError {
    CliError::Config(ConfigError::Invalid(e.to_string()))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

/// Plain time integration from segregated data in original coordinates,
/// with snapshots at the requested times and the front trace.
pub fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.model.to_spec()?;
    let grid = Grid1D::new(cfg.grid.length, cfg.grid.dx).map_err(model_err)?;
    let protocol = cfg.protocol();
    let dt = protocol.effective_dt(&spec);
    let stepper = Stepper::new(&spec, &grid, dt).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut state = State::segregated(&grid, 0.5 * grid.length());
    let mut trace = FrontTrace::new(&grid, protocol.level, protocol.species);
    let stride = (protocol.sample_every / dt).round().max(1.0) as usize;
    let total = stepper.steps_for(protocol.t_end);
    let mut snaps: Vec<(usize, f64)> = cfg
        .run
        .snapshot_times
        .iter()
        .map(|&t| ((t / dt).round() as usize, t))
        .collect();
    snaps.sort_by_key(|s| s.0);
    let dir = &cfg.output_dir;
    let mut written = Vec::new();
    let mut snap = |state: &State, t: f64| -> Result<(), OutputError> {
        let path = dir.join(format!("snapshot_t{t}.csv"));
        output::write_file(&path, output::snapshot_csv(&grid, state))?;
        written.push(path);
        Ok(())
    };
    for &(_, t) in snaps.iter().filter(|s| s.0 == 0) {
        snap(&state, t)?;
    }
    for n in 1..=total {
        stepper
            .step(&mut state)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        state.t = n as f64 * dt;
        if n % stride == 0 {
            trace.record(&state, &grid).expect("times increase");
        }
        for &(_, t) in snaps.iter().filter(|s| s.0 == n) {
            snap(&state, t)?;
        }
    }
    let final_path = dir.join("final.csv");
    output::write_file(&final_path, output::snapshot_csv(&grid, &state))?;
    let trace_path = dir.join("trace.csv");
    output::write_file(&trace_path, output::trace_csv(&trace))?;
    written.push(final_path);
    written.push(trace_path);
    Ok(Report::ok(format!(
        "simulated to t={} with dt={dt} on {} nodes\n{}",
        state.t,
        grid.n(),
        list(&written)
    )))
}

fn list(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| format!("wrote {}", p.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Serialize)]
struct SpeedDoc<'a> {
    speed: Option<f64>,
    residual_rms: Option<f64>,
    window: (f64, f64),
    boundary_margin: Option<f64>,
    flags: Vec<&'static str>,
    samples: usize,
    dt: f64,
    final_length: f64,
    speed_factor: f64,
    model: &'a wavespeed_core::ModelSpec,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn speed(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.model.to_spec()?;
    let run = measure_speed(&spec, &cfg.protocol()).map_err(model_err)?;
    let e = &run.estimate;
    let doc = SpeedDoc {
        speed: finite(e.speed),
        residual_rms: finite(e.residual_rms),
        window: e.window,
        boundary_margin: finite(e.boundary_margin),
        flags: e.flags.iter().map(|f| f.name()).collect(),
        samples: e.samples,
        dt: run.dt,
        final_length: run.grid.length(),
        speed_factor: run.speed_factor,
        model: &spec,
    };
    let dir = &cfg.output_dir;
    output::write_file(&dir.join("speed.json"), json(&doc))?;
    let factor = run.speed_factor;
    let trace = run.trace.map_positions(|x| x * factor);
    output::write_file(&dir.join("trace.csv"), output::trace_csv(&trace))?;
    if let Some(state) = &run.final_state {
        output::write_file(&dir.join("final.csv"), output::snapshot_csv(&run.grid, state))?;
    }
    let text = format!(
        "speed {} (flags: {})",
        e.speed,
        if doc.flags.is_empty() { "none".to_string() } else { doc.flags.join(", ") }
    );
    if e.has(FrontFlag::SolverFailure) {
        return Err(CliError::Solver(text));
    }
    Ok(Report::ok(text))
}

/// Monotonicity lines probed after every sweep.
pub const MONOTONE_K: [f64; 3] = [2.0, 5.0, 10.0];
pub const MONOTONE_D: [f64; 3] = [2.0, 5.0, 10.0];
pub const MONOTONE_TOL: f64 = 2e-2;

pub fn run_plan(cfg: &RunConfig, workers: usize) -> Result<SweepResult, CliError> {
    let plan = cfg
        .plan
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs a plan".into()))?;
    if plan.d_range.2 < 0.5 || plan.k_range.2 < 0.5 {
        log::warn!(
            "fine sweep of {} cells; expect a long run",
            plan.cell_count()
        );
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| OutputError::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    Ok(run_sweep(plan, workers, Some(&checkpoint_path(&cfg.output_dir)))?)
}

pub fn checkpoint_path(dir: &Path) -> PathBuf {
    dir.join("checkpoint.jsonl")
}

fn sweep(cfg: &RunConfig, opts: &Options, full: bool) -> Result<Report, CliError> {
    let result = run_plan(cfg, opts.workers)?;
    let failed = result.cells.iter().filter(|c| !c.is_valid()).count();
    let range = result.finite_range();
    let mut text = format!(
        "{} cells ({} resumed, {} failed) in {:.1}s; speed range {:?}\n",
        result.cells.len(),
        result.resumed,
        failed,
        result.wall_time_s,
        range
    );
    let written = if full {
        let mono = monotonicity_probes(&result, &MONOTONE_K, &MONOTONE_D, MONOTONE_TOL);
        text.push_str(&format!(
            "monotonicity: {} of {} neighbouring pairs violate (tolerance {})\n",
            mono.violations, mono.pairs, mono.tolerance
        ));
        output::write_sweep(&cfg.output_dir, &result, opts.workers, &mono)?
    } else {
        vec![output::write_contours_only(&cfg.output_dir, &result)?]
    };
    text.push_str(&list(&written));
    Ok(Report::ok(text))
}

fn validate(cfg: &RunConfig, opts: &Options) -> Result<Report, CliError> {
    let rows = run_anchors(opts.only.as_deref(), opts.tolerance, &cfg.protocol()).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown anchor {:?}; known: {}",
            opts.only.as_deref().unwrap_or(""),
            ANCHOR_IDS.join(", ")
        ))
    })?;
    let all = rows.iter().all(|r| r.pass);
    output::write_file(&cfg.output_dir.join("validate.json"), json(&rows))?;
    let mut text = format_table(&rows);
    if !all {
        let failing: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.id).collect();
        text.push_str(&format!("failing: {}\n", failing.join(", ")));
    }
    Ok(Report {
        text,
        code: if all { EXIT_OK } else { EXIT_ANCHOR_FAILURE },
    })
}

pub const SCENARIO_NAMES: [&str; 6] = [
    "periodic_resources",
    "oscillating_diffusion",
    "dockery_bounded",
    "segregated_steady_state",
    "cubic_sign_law",
    "asymptotic_probes",
];

/// Runs the named scenario with parameters from the config, falling back
/// to per-scenario defaults for anything the model section leaves unset.
pub fn run_scenario(cfg: &RunConfig) -> Result<Vec<ScenarioOutcome>, CliError> {
    let name = cfg.scenario_name.as_deref().unwrap_or("");
    let m = &cfg.model;
    let s = &cfg.scenario;
    let th = &s.thresholds;
    let out = match name {
        "periodic_resources" => {
            let mu = m
                .mu
                .clone()
                .unwrap_or_else(|| CoefficientField::sine(1.0, 0.5, 1.0));
            let protocol = wavespeed_core::Protocol {
                length: cfg.grid.length,
                dx: cfg.grid.dx,
                ..pulsating_protocol()
            };
            vec![scenario_periodic_resources(
                m.constant_d().unwrap_or(10.0),
                m.k.unwrap_or(100.0),
                &mu,
                &protocol,
                th,
            )?]
        }
        "oscillating_diffusion" => vec![scenario_oscillating_diffusion(
            m.k.unwrap_or(40.0),
            s.frequency.unwrap_or(20.0),
            m.alpha.unwrap_or(0.9),
            &OscillatingConfig::default(),
            th,
        )?],
        "dockery_bounded" => {
            let a = m.a.clone().unwrap_or_else(|| sine_growth(0.5, 10.0));
            vec![scenario_dockery_bounded(
                &a,
                m.constant_d().unwrap_or(2.0),
                &s.dockery,
                th,
            )?]
        }
        "segregated_steady_state" => vec![scenario_segregated_steady_state(
            &s.patches,
            m.k.unwrap_or(200.0),
            m.constant_d().unwrap_or(1.0),
            &s.segregated,
        )?],
        "cubic_sign_law" => {
            let k = m.k.unwrap_or(2.0);
            vec![scenario_cubic_sign_law(
                m.r.unwrap_or(1.0),
                m.h.unwrap_or(1.0),
                k,
                m.constant_d().unwrap_or(3.0),
                s.second_d.unwrap_or(1.0),
                &cfg.protocol(),
                th,
            )?]
        }
        "asymptotic_probes" => {
            let probes = s.probes.clone().unwrap_or_else(default_probes);
            scenario_asymptotic_probes(&probes, &cfg.protocol(), th)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown scenario {other:?}; known: {}",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    Ok(out)
}

/// Writes `<dir>/<name>[_i].json` plus trace and snapshot CSVs, recording
/// the artifact paths in each outcome.
pub fn write_outcomes(dir: &Path, outcomes: &mut [ScenarioOutcome]) -> Result<(), OutputError> {
    let many = outcomes.len() > 1;
    for (i, o) in outcomes.iter_mut().enumerate() {
        let stem = if many {
            format!("{}_{i}", o.name)
        } else {
            o.name.clone()
        };
        let mut artifacts = Vec::new();
        if let Some(trace) = &o.trace {
            let p = format!("{stem}_trace.csv");
            output::write_file(&dir.join(&p), output::trace_csv(trace))?;
            artifacts.push(p);
        }
        if let Some((grid, state)) = &o.snapshot {
            let p = format!("{stem}_snapshot.csv");
            output::write_file(&dir.join(&p), output::snapshot_csv(grid, state))?;
            artifacts.push(p);
        }
        o.artifacts = artifacts;
        output::write_file(&dir.join(format!("{stem}.json")), json(&*o))?;
    }
    Ok(())
}

fn scenario(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut outcomes = run_scenario(cfg)?;
    write_outcomes(&cfg.output_dir, &mut outcomes)?;
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&format!("{}: {}\n", o.name, o.classification.name()));
        for (k, v) in &o.measured {
            text.push_str(&format!("  {k} = {v}\n"));
        }
    }
    Ok(Report::ok(text))
}
