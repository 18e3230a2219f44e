//! Marching-squares level sets of a scalar field on a rectilinear grid.
//!
//! Vertices lie on grid edges, placed by linear interpolation; saddle cells
//! are disambiguated with the average of the four corners. Cells with a
//! non-finite corner are skipped.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error("grid needs at least 2x2 nodes")]
    TooSmall,
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("axis coordinates must increase strictly")]
    UnsortedAxis,
}

/// Values on the tensor grid `xs x ys`, row-major by `y`:
/// `values[j * xs.len() + i]` sits at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self, ContourError> {
        if xs.len() < 2 || ys.len() < 2 {
            return Err(ContourError::TooSmall);
        }
        if values.len() != xs.len() * ys.len() {
            return Err(ContourError::Shape {
                expected: xs.len() * ys.len(),
                got: values.len(),
            });
        }
        let sorted = |a: &[f64]| a.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&xs) || !sorted(&ys) {
            return Err(ContourError::UnsortedAxis);
        }
        Ok(ScalarGrid { xs, ys, values })
    }

    pub fn from_fn(xs: Vec<f64>, ys: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self, ContourError> {
        let values = ys
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(xs, ys, values)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let locate = |axis: &[f64], p: f64| -> Option<(usize, f64)> {
            let last = axis.len() - 1;
            if p < axis[0] - 1e-12 || p > axis[last] + 1e-12 {
                return None;
            }
            let i = axis.partition_point(|&a| a <= p).clamp(1, last) - 1;
            Some((i, ((p - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0)))
        };
        let (i, s) = locate(&self.xs, x)?;
        let (j, t) = locate(&self.ys, y)?;
        let bottom = self.at(i, j) * (1.0 - s) + self.at(i + 1, j) * s;
        let top = self.at(i, j + 1) * (1.0 - s) + self.at(i + 1, j + 1) * s;
        Some(bottom * (1.0 - t) + top * t)
    }

    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    /// Closed chains do not repeat their first point.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub levels: Vec<f64>,
    /// `polylines[i]` belongs to `levels[i]`.
    pub polylines: Vec<Vec<Polyline>>,
}

impl ContourSet {
    pub fn for_level(&self, level: f64) -> Option<&[Polyline]> {
        self.levels
            .iter()
            .position(|&l| l == level)
            .map(|i| self.polylines[i].as_slice())
    }
}

/// Grid edge identity: horizontal edges join `(i, j)`-`(i + 1, j)`,
/// vertical ones `(i, j)`-`(i, j + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

pub fn extract_contours(grid: &ScalarGrid, levels: &[f64]) -> ContourSet {
    ContourSet {
        levels: levels.to_vec(),
        polylines: levels.iter().map(|&l| contour_level(grid, l)).collect(),
    }
}

fn edge_point(grid: &ScalarGrid, edge: Edge, level: f64) -> (f64, f64) {
    let ((i0, j0), (i1, j1)) = match edge {
        Edge::H(i, j) => ((i, j), (i + 1, j)),
        Edge::V(i, j) => ((i, j), (i, j + 1)),
    };
    let (a, b) = (grid.at(i0, j0), grid.at(i1, j1));
    let t = (level - a) / (b - a);
    let (xa, ya) = (grid.xs[i0], grid.ys[j0]);
    let (xb, yb) = (grid.xs[i1], grid.ys[j1]);
    (xa + t * (xb - xa), ya + t * (yb - ya))
}

fn cell_segments(grid: &ScalarGrid, i: usize, j: usize, level: f64, out: &mut Vec<(Edge, Edge)>) {
    let corners = [
        grid.at(i, j),
        grid.at(i + 1, j),
        grid.at(i + 1, j + 1),
        grid.at(i, j + 1),
    ];
    if corners.iter().any(|c| !c.is_finite()) {
        return;
    }
    let above = corners.map(|c| c >= level);
    // edges in order: bottom, right, top, left; edge e joins corners e and e+1
    let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
    let crossing: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
    match crossing.len() {
        2 => out.push((edges[crossing[0]], edges[crossing[1]])),
        4 => {
            let centre = corners.iter().sum::<f64>() / 4.0 >= level;
            // cut off the corners whose class differs from the centre;
            // corner c touches edges c-1 and c
            for c in 0..4 {
                if above[c] != centre {
                    out.push((edges[(c + 3) % 4], edges[c]));
                }
            }
        }
        _ => {}
    }
}

fn contour_level(grid: &ScalarGrid, level: f64) -> Vec<Polyline> {
    let mut segments = Vec::new();
    for j in 0..grid.ys.len() - 1 {
        for i in 0..grid.xs.len() - 1 {
            cell_segments(grid, i, j, level, &mut segments);
        }
    }
    let mut incident: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> Polyline {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return Polyline {
                    points: chain.iter().map(|&e| edge_point(grid, e, level)).collect(),
                    closed: true,
                };
            }
            chain.push(next);
            at = next;
            match incident[&at].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => {
                    return Polyline {
                        points: chain.iter().map(|&e| edge_point(grid, e, level)).collect(),
                        closed: false,
                    }
                }
            }
        }
    };

    // open chains start at edges used by a single segment
    let ends: Vec<Edge> = incident
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    for e in ends {
        let s = incident[&e][0];
        if !used[s] {
            lines.push(walk(s, e, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let start = segments[s].0;
            lines.push(walk(s, start, &mut used));
        }
    }
    lines
}
