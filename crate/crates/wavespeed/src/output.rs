//! Result files: speed and flag matrices, contours, heat maps, traces and
//! snapshots. Everything except `metadata.json` is a pure function of the
//! result, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use wavespeed_core::{ContourSet, FrontTrace, Grid1D, State};

use crate::sweep::{MonotonicityReport, SweepResult};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("no finite cells")]
    NoFiniteCells,
    #[error("unsupported format {0:?} (expected pgm, svg or csv)")]
    UnsupportedFormat(String),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| OutputError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x}")
    }
}

/// Header row `k\d, d...`, then one row per `k`.
pub fn speeds_csv(result: &SweepResult) -> String {
    matrix_csv(result, |ik, id| num(result.get(ik, id).speed))
}

/// Same shape as the speed matrix; each cell lists its flags joined by `|`.
pub fn flags_csv(result: &SweepResult) -> String {
    matrix_csv(result, |ik, id| {
        let names: Vec<&str> = result.get(ik, id).flags.iter().map(|f| f.name()).collect();
        names.join("|")
    })
}

fn matrix_csv(result: &SweepResult, cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::from("k\\d");
    for d in &result.d_values {
        write!(out, ",{}", num(*d)).unwrap();
    }
    out.push('\n');
    for (ik, k) in result.k_values.iter().enumerate() {
        out.push_str(&num(*k));
        for id in 0..result.d_values.len() {
            out.push(',');
            out.push_str(&cell(ik, id));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct LevelDoc<'a> {
    level: f64,
    polylines: &'a [wavespeed_core::Polyline],
}

/// `[{"level": l, "polylines": [{"points": [[d, k], ...], "closed": b}]}]`.
pub fn contours_json(contours: &ContourSet) -> String {
    let docs: Vec<LevelDoc> = contours
        .levels
        .iter()
        .zip(&contours.polylines)
        .map(|(&level, polylines)| LevelDoc { level, polylines })
        .collect();
    serde_json::to_string_pretty(&docs).expect("contours serialize")
}

/// Gray value of `v` when `[min, 0]` maps linearly onto `[0, 255]`.
pub fn gray(v: f64, min: f64) -> u8 {
    if !v.is_finite() {
        return 0;
    }
    if min >= 0.0 {
        return 255;
    }
    let t = ((v - min) / (0.0 - min)).clamp(0.0, 1.0);
    (255.0 * t).round() as u8
}

/// Most negative finite value of a row-major matrix, clamped to at most 0.
fn lower_end(values: &[f64]) -> Result<f64, OutputError> {
    values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .reduce(f64::min)
        .map(|m| m.min(0.0))
        .ok_or(OutputError::NoFiniteCells)
}

/// Plain PGM (P2) of a `rows x cols` row-major matrix, first row at the
/// top. Zero is white, the most negative value black; masked cells are
/// black too.
pub fn pgm(values: &[f64], rows: usize, cols: usize) -> Result<String, OutputError> {
    let min = lower_end(values)?;
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    for r in 0..rows {
        let line: Vec<String> = (0..cols)
            .map(|c| gray(values[r * cols + c], min).to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Heat map with `k` increasing upwards, so the top image row is the
/// largest `k`.
pub fn heatmap_pgm(result: &SweepResult) -> Result<String, OutputError> {
    let (nk, nd) = (result.k_values.len(), result.d_values.len());
    let values: Vec<f64> = (0..nk)
        .rev()
        .flat_map(|ik| (0..nd).map(move |id| (ik, id)))
        .map(|(ik, id)| result.speed(ik, id))
        .collect();
    pgm(&values, nk, nd)
}

/// White at 0 through orange to dark red at the most negative value.
fn color(v: f64, min: f64) -> String {
    if !v.is_finite() {
        return "#808080".to_string();
    }
    let t = 1.0 - gray(v, min) as f64 / 255.0;
    let stops = [(255.0, 255.0, 255.0), (253.0, 141.0, 60.0), (128.0, 0.0, 38.0)];
    let (a, b, s) = if t < 0.5 {
        (stops[0], stops[1], t * 2.0)
    } else {
        (stops[1], stops[2], (t - 0.5) * 2.0)
    };
    let mix = |x: f64, y: f64| (x + (y - x) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Colored cells with the contour polylines on top; `d` runs right, `k` up.
pub fn heatmap_svg(result: &SweepResult, contours: &ContourSet) -> Result<String, OutputError> {
    let surface = result.surface();
    let min = lower_end(&surface.values)?;
    let (nk, nd) = (result.k_values.len(), result.d_values.len());
    let cell = 12.0;
    let margin = 40.0;
    let (w, h) = (nd as f64 * cell, nk as f64 * cell);
    let (d0, k0) = (result.d_values[0], result.k_values[0]);
    let dd = if nd > 1 { result.d_values[1] - d0 } else { 1.0 };
    let dk = if nk > 1 { result.k_values[1] - k0 } else { 1.0 };
    // cell centres sit on grid values
    let px = |d: f64| margin + ((d - d0) / dd + 0.5) * cell;
    let py = |k: f64| margin + h - ((k - k0) / dk + 0.5) * cell;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + 2.0 * margin,
        h + 2.0 * margin,
        w + 2.0 * margin,
        h + 2.0 * margin
    )
    .unwrap();
    for ik in 0..nk {
        for id in 0..nd {
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell}" height="{cell}" fill="{}"/>"#,
                margin + id as f64 * cell,
                margin + h - (ik + 1) as f64 * cell,
                color(result.speed(ik, id), min)
            )
            .unwrap();
        }
    }
    for (level, lines) in contours.levels.iter().zip(&contours.polylines) {
        let dash = if *level == 0.0 {
            r#" stroke="white" stroke-dasharray="4 3""#
        } else {
            r#" stroke="black""#
        };
        for line in lines {
            let pts: Vec<String> = line
                .points
                .iter()
                .map(|&(d, k)| format!("{:.2},{:.2}", px(d), py(k)))
                .collect();
            let tag = if line.closed { "polygon" } else { "polyline" };
            writeln!(
                s,
                r#"<{tag} points="{}" fill="none"{dash} stroke-width="1"><title>{level}</title></{tag}>"#,
                pts.join(" ")
            )
            .unwrap();
        }
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">d</text>"#,
        margin + w / 2.0,
        h + 1.6 * margin
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">k</text>"#,
        margin / 2.0,
        margin + h / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapFormat {
    Pgm,
    Svg,
    Csv,
}

impl std::str::FromStr for HeatmapFormat {
    type Err = OutputError;
    fn from_str(s: &str) -> Result<Self, OutputError> {
        match s {
            "pgm" => Ok(HeatmapFormat::Pgm),
            "svg" => Ok(HeatmapFormat::Svg),
            "csv" => Ok(HeatmapFormat::Csv),
            other => Err(OutputError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub fn emit_heatmap(
    result: &SweepResult,
    contours: &ContourSet,
    format: HeatmapFormat,
) -> Result<String, OutputError> {
    match format {
        HeatmapFormat::Pgm => heatmap_pgm(result),
        HeatmapFormat::Svg => heatmap_svg(result, contours),
        HeatmapFormat::Csv => {
            if result.finite_range().is_none() {
                return Err(OutputError::NoFiniteCells);
            }
            Ok(speeds_csv(result))
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    plan_hash: &'a str,
    wall_time_s: f64,
    cells: usize,
    resumed: usize,
    workers: usize,
    protocol: wavespeed_core::Protocol,
    plan: &'a crate::sweep::SweepPlan,
}

/// Writes every sweep artifact into `dir` and returns the paths written.
pub fn write_sweep(
    dir: &Path,
    result: &SweepResult,
    workers: usize,
    monotonicity: &MonotonicityReport,
) -> Result<Vec<PathBuf>, OutputError> {
    let contours = result.contours();
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<(), OutputError> {
        let path = dir.join(name);
        write_file(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("speeds.csv", speeds_csv(result))?;
    put("flags.csv", flags_csv(result))?;
    put("contours.json", contours_json(&contours))?;
    put(
        "monotonicity.json",
        serde_json::to_string_pretty(monotonicity).expect("report serializes"),
    )?;
    match (heatmap_pgm(result), heatmap_svg(result, &contours)) {
        (Ok(p), Ok(s)) => {
            put("heatmap.pgm", p)?;
            put("heatmap.svg", s)?;
        }
        (Err(e), _) | (_, Err(e)) => log::warn!("heat map skipped: {e}"),
    }
    let meta = Metadata {
        plan_hash: &result.plan_hash,
        wall_time_s: result.wall_time_s,
        cells: result.cells.len(),
        resumed: result.resumed,
        workers,
        protocol: result.plan.protocol(),
        plan: &result.plan,
    };
    put(
        "metadata.json",
        serde_json::to_string_pretty(&meta).expect("metadata serializes"),
    )?;
    Ok(written)
}

pub fn write_contours_only(dir: &Path, result: &SweepResult) -> Result<PathBuf, OutputError> {
    let path = dir.join("contours.json");
    write_file(&path, contours_json(&result.contours()))?;
    Ok(path)
}

/// `x,u,v` rows.
pub fn snapshot_csv(grid: &Grid1D, state: &State) -> String {
    let mut s = String::from("x,u,v\n");
    for i in 0..state.len() {
        writeln!(s, "{},{},{}", grid.x(i), state.u[i], state.v[i]).unwrap();
    }
    s
}

/// `t,x_front` rows; times without a crossing are written with an empty
/// position.
pub fn trace_csv(trace: &FrontTrace) -> String {
    let mut rows: Vec<(f64, Option<f64>)> = trace
        .samples
        .iter()
        .map(|&(t, x)| (t, Some(x)))
        .chain(trace.missing.iter().map(|&t| (t, None)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut s = String::from("t,x_front\n");
    for (t, x) in rows {
        match x {
            Some(x) => writeln!(s, "{t},{x}").unwrap(),
            None => writeln!(s, "{t},").unwrap(),
        }
    }
    s
}
