//! Mesh generators and accuracy measurements.
//!
//! Two test beds: an equilateral triangulation of the plane, optionally with
//! rectangular holes, and a latitude/longitude chart of the unit sphere whose
//! edge costs follow the round metric.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Method;
use crate::graph::{GraphError, MetricGraph, VertexId};
use crate::reconstruct::{reconstruct_path, Path, ReconstructError};
use crate::search::{basic_sstar, dijkstra, SearchConfig, SearchError, SearchResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("lattice extents must be at least 2, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("fineness must be at least 2, got {0}")]
    Fineness(usize),
    #[error("no vertices left after removing obstacles")]
    Empty,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error("goal {0} is unreachable")]
    Unreachable(VertexId),
}

/// Inclusive range of lattice coordinates `i0..=i1` by `j0..=j1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Rect {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.i0..=self.i1).contains(&i) && (self.j0..=self.j1).contains(&j)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneMeshSpec {
    pub width: usize,
    pub height: usize,
    pub edge_length: f64,
    pub obstacles: Vec<Rect>,
}

impl PlaneMeshSpec {
    pub fn new(width: usize, height: usize) -> Self {
        PlaneMeshSpec { width, height, edge_length: 1.0, obstacles: Vec::new() }
    }

    pub fn with_obstacle(mut self, r: Rect) -> Self {
        self.obstacles.push(r);
        self
    }
}

#[derive(Clone, Debug)]
pub struct PlaneMesh {
    pub graph: MetricGraph,
    /// Planar position of each vertex; the search never sees these.
    pub coords: Vec<[f64; 2]>,
    /// Lattice coordinates `(i, j)` of each vertex.
    pub lattice: Vec<(usize, usize)>,
    index: Vec<Option<VertexId>>,
    width: usize,
}

impl PlaneMesh {
    pub fn vertex_at(&self, i: usize, j: usize) -> Option<VertexId> {
        if i >= self.width {
            return None;
        }
        self.index.get(j * self.width + i).copied().flatten()
    }

    pub fn euclidean(&self, a: VertexId, b: VertexId) -> f64 {
        let (p, q) = (self.coords[a.index()], self.coords[b.index()]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }
}

/// Rhombic patch of the triangular lattice: vertex `(i, j)` sits at
/// `((i + j/2)·e, j·(√3/2)·e)` and links to `(i±1, j)`, `(i, j±1)` and
/// `(i+1, j−1)`, `(i−1, j+1)`.
///
/// ```
/// use sstar::bench::{generate_plane, PlaneMeshSpec};
/// let m = generate_plane(&PlaneMeshSpec::new(3, 3)).unwrap();
/// assert_eq!(m.graph.degree(m.vertex_at(1, 1).unwrap()), 6);
/// ```
pub fn generate_plane(spec: &PlaneMeshSpec) -> Result<PlaneMesh, BenchError> {
    let (w, h) = (spec.width, spec.height);
    if w < 2 || h < 2 {
        return Err(BenchError::TooSmall(w, h));
    }
    let e = spec.edge_length;
    let mut index = vec![None; w * h];
    let mut coords = Vec::new();
    let mut lattice = Vec::new();
    for j in 0..h {
        for i in 0..w {
            if spec.obstacles.iter().any(|r| r.contains(i, j)) {
                continue;
            }
            index[j * w + i] = Some(VertexId(coords.len()));
            coords.push([(i as f64 + j as f64 / 2.0) * e, j as f64 * (3f64.sqrt() / 2.0) * e]);
            lattice.push((i, j));
        }
    }
    if coords.is_empty() {
        return Err(BenchError::Empty);
    }
    let at = |i: usize, j: usize| if i < w && j < h { index[j * w + i] } else { None };
    let mut edges = Vec::new();
    for &(i, j) in &lattice {
        let a = at(i, j).unwrap();
        let mut link = |b: Option<VertexId>| {
            if let Some(b) = b {
                edges.push((a.index(), b.index(), e));
            }
        };
        link(at(i + 1, j));
        link(at(i, j + 1));
        if i > 0 {
            link(at(i - 1, j + 1));
        }
    }
    let graph = MetricGraph::from_edges(coords.len(), edges)?;
    Ok(PlaneMesh { graph, coords, lattice, index, width: w })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SphereChartSpec {
    pub fineness: usize,
}

#[derive(Clone, Debug)]
pub struct SphereChart {
    pub graph: MetricGraph,
    /// `(φ, θ)` of each vertex: polar angle from the north pole, then longitude.
    pub coords: Vec<(f64, f64)>,
    pub fineness: usize,
}

/// Length of a chart edge under the round metric.
pub fn round_metric_edge(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dphi = b.0 - a.0;
    let dtheta = b.1 - a.1;
    let s = ((a.0 + b.0) / 2.0).sin();
    (dphi * dphi + s * s * dtheta * dtheta).sqrt()
}

/// Square lattice on `[0, π] × [0, 2π)` with spacing `π/f`, each square split
/// along its `(r, c)`–`(r+1, c+1)` diagonal. Vertex `(r, c)` has index
/// `r·2f + c`. The chart is not glued along `θ = 0`, and longitude edges on
/// the pole rows (which would have zero cost) are left out.
///
/// ```
/// use sstar::bench::{generate_sphere_chart, SphereChartSpec};
/// let c = generate_sphere_chart(&SphereChartSpec { fineness: 4 }).unwrap();
/// assert_eq!(c.graph.vertex_count(), 5 * 8);
/// ```
pub fn generate_sphere_chart(spec: &SphereChartSpec) -> Result<SphereChart, BenchError> {
    let f = spec.fineness;
    if f < 2 {
        return Err(BenchError::Fineness(f));
    }
    let cols = 2 * f;
    let step = PI / f as f64;
    let coords: Vec<(f64, f64)> =
        (0..=f).flat_map(|r| (0..cols).map(move |c| (r as f64 * step, c as f64 * step))).collect();
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    let mut link = |a: usize, b: usize| edges.push((a, b, round_metric_edge(coords[a], coords[b])));
    for r in 0..=f {
        for c in 0..cols {
            if c + 1 < cols && r != 0 && r != f {
                link(idx(r, c), idx(r, c + 1));
            }
            if r < f {
                link(idx(r, c), idx(r + 1, c));
                if c + 1 < cols {
                    link(idx(r, c), idx(r + 1, c + 1));
                }
            }
        }
    }
    let graph = MetricGraph::from_edges(coords.len(), edges)?;
    Ok(SphereChart { graph, coords, fineness: f })
}

impl SphereChart {
    /// Nearest lattice vertex in chart coordinates; ties go to the lower index.
    pub fn snap(&self, phi: f64, theta: f64) -> VertexId {
        let f = self.fineness;
        let cols = 2 * f;
        let x = phi * f as f64 / PI;
        let y = theta * f as f64 / PI;
        let rows = [x.floor(), x.ceil()].map(|v| (v.max(0.0) as usize).min(f));
        let cs = [y.floor(), y.ceil()].map(|v| (v.max(0.0) as usize).min(cols - 1));
        let mut best = (f64::INFINITY, usize::MAX);
        for r in rows {
            for c in cs {
                let i = r * cols + c;
                let (p, t) = self.coords[i];
                let d = (p - phi).powi(2) + (t - theta).powi(2);
                if d < best.0 || (d == best.0 && i < best.1) {
                    best = (d, i);
                }
            }
        }
        VertexId(best.1)
    }
}

impl SphereChart {
    /// Chart position of a convex combination of vertices.
    pub fn chart_point(&self, vertices: &[VertexId], weights: &[f64]) -> (f64, f64) {
        let mut p = (0.0, 0.0);
        for (v, w) in vertices.iter().zip(weights) {
            let (phi, theta) = self.coords[v.index()];
            p.0 += w * phi;
            p.1 += w * theta;
        }
        p
    }

    /// Length on the sphere of the chart polyline through `points`.
    pub fn polyline_length(&self, points: &[(f64, f64)]) -> f64 {
        points.windows(2).map(|w| chart_segment_length(w[0], w[1])).sum()
    }

    /// Sphere length of a reconstructed path, each step drawn straight in the chart.
    pub fn path_length(&self, path: &Path) -> f64 {
        let pts: Vec<(f64, f64)> =
            path.points.iter().map(|p| self.chart_point(p.simplex.vertices(), &p.weights)).collect();
        self.polyline_length(&pts)
    }

    /// Sphere length of the edge path that follows predecessors back to the start.
    pub fn edge_path_length(&self, result: &SearchResult, goal: VertexId) -> f64 {
        let mut pts = vec![self.coords[goal.index()]];
        let mut v = goal;
        while let Some(cfp) = result.came_from(v) {
            v = cfp.simplex.vertices()[0];
            pts.push(self.coords[v.index()]);
        }
        self.polyline_length(&pts)
    }
}

/// Great-circle distance on the unit sphere between `(φ, θ)` points.
pub fn great_circle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let p = [a.0.sin() * a.1.cos(), a.0.sin() * a.1.sin(), a.0.cos()];
    let q = [b.0.sin() * b.1.cos(), b.0.sin() * b.1.sin(), b.0.cos()];
    let cross = [p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
    let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let c = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    c.atan2(dot)
}

/// Round-metric length of the straight chart segment from `a` to `b`.
pub fn chart_segment_length(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dphi, dtheta) = (b.0 - a.0, b.1 - a.1);
    let speed = |t: f64| {
        let s = (a.0 + t * dphi).sin();
        (dphi * dphi + s * s * dtheta * dtheta).sqrt()
    };
    adaptive_simpson(&speed, 0.0, 1.0, 1e-13, 48)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `(d̄(v) − truth(v)) / truth(v)`; 0 where the truth is 0, NaN where unreached.
pub fn error_field(result: &SearchResult, truth: &[f64]) -> Vec<f64> {
    result
        .dbar
        .iter()
        .zip(truth)
        .map(|(&d, &t)| {
            if !d.is_finite() {
                f64::NAN
            } else if t == 0.0 {
                0.0
            } else {
                (d - t) / t
            }
        })
        .collect()
}

/// Formats with 9 significant digits, dropping trailing zeros.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse::<f64>().expect("float") + 0.0;
    format!("{rounded}")
}

/// CSV with columns `vertex,<a>,<b>,dbar,truth,rel_error`.
pub fn error_field_csv(axes: (&str, &str), coords: &[(f64, f64)], dbar: &[f64], truth: &[f64]) -> String {
    let mut out = format!("vertex,{},{},dbar,truth,rel_error\n", axes.0, axes.1);
    for (i, ((&(a, b), &d), &t)) in coords.iter().zip(dbar).zip(truth).enumerate() {
        let rel = if !d.is_finite() {
            f64::NAN
        } else if t == 0.0 {
            0.0
        } else {
            (d - t) / t
        };
        let _ = writeln!(out, "{i},{},{},{},{},{}", sig9(a), sig9(b), sig9(d), sig9(t), sig9(rel));
    }
    out
}

/// Sweep endpoints `(φ, θ)`. Both are lattice points whenever `f` is a
/// multiple of 8, and the great circle between them stays inside the chart.
pub const SWEEP_START: (f64, f64) = (3.0 * PI / 8.0, PI / 4.0);
pub const SWEEP_GOAL: (f64, f64) = (5.0 * PI / 8.0, 7.0 * PI / 8.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub f: usize,
    pub cost_dijkstra: f64,
    pub cost_sstar: f64,
    pub cost_geodesic: f64,
    pub cost_chart_segment: f64,
}

/// One row per fineness: the sphere lengths of the paths found by both
/// searches between the snapped endpoints, plus the great-circle and
/// straight-chart-segment lengths between them.
pub fn fineness_sweep(
    f_values: &[usize],
    start: (f64, f64),
    goal: (f64, f64),
    method: Method,
) -> Result<Vec<SweepRow>, BenchError> {
    f_values.iter().map(|&f| sweep_row(f, start, goal, method)).collect()
}

pub fn sweep_row(f: usize, start: (f64, f64), goal: (f64, f64), method: Method) -> Result<SweepRow, BenchError> {
    let chart = generate_sphere_chart(&SphereChartSpec { fineness: f })?;
    let (s, g) = (chart.snap(start.0, start.1), chart.snap(goal.0, goal.1));
    let (ps, pg) = (chart.coords[s.index()], chart.coords[g.index()]);
    let d = dijkstra(&chart.graph, s, &[g])?;
    let st = basic_sstar(&chart.graph, s, &SearchConfig::new(method).with_goals([g]))?;
    if !d.is_reached(g) {
        return Err(BenchError::Unreachable(g));
    }
    let path = reconstruct_path(&chart.graph, &st, g)?;
    Ok(SweepRow {
        f,
        cost_dijkstra: chart.edge_path_length(&d, g),
        cost_sstar: chart.path_length(&path),
        cost_geodesic: great_circle(ps, pg),
        cost_chart_segment: chart_segment_length(ps, pg),
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("f,cost_dijkstra,cost_sstar,cost_geodesic,cost_chart_segment\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.f,
            sig9(r.cost_dijkstra),
            sig9(r.cost_sstar),
            sig9(r.cost_geodesic),
            sig9(r.cost_chart_segment)
        );
    }
    out
}

/// Bound on the largest relative S* error in the far field of a 60×60
/// patch. Measured at about 1e-15; flat triangles are realized exactly.
pub const PLANE_SSTAR_ERROR_BOUND: f64 = 1e-12;

/// Relative errors of both searches on an obstacle-free patch, started at
/// the central lattice vertex.
#[derive(Clone, Debug)]
pub struct PlaneAccuracy {
    pub mesh: PlaneMesh,
    pub start: VertexId,
    pub truth: Vec<f64>,
    pub dijkstra: SearchResult,
    pub sstar: SearchResult,
}

impl PlaneAccuracy {
    pub fn run(size: usize, method: Method) -> Result<Self, BenchError> {
        let mesh = generate_plane(&PlaneMeshSpec::new(size, size))?;
        let start = mesh.vertex_at(size / 2, size / 2).expect("centre vertex");
        let truth: Vec<f64> = mesh.graph.vertices().map(|v| mesh.euclidean(start, v)).collect();
        let dijkstra = dijkstra(&mesh.graph, start, &[])?;
        let sstar = basic_sstar(&mesh.graph, start, &SearchConfig::new(method))?;
        Ok(PlaneAccuracy { mesh, start, truth, dijkstra, sstar })
    }

    /// Vertices at Euclidean distance at least `radius` from the start.
    pub fn far_field(&self, radius: f64) -> Vec<VertexId> {
        self.mesh.graph.vertices().filter(|v| self.truth[v.index()] >= radius).collect()
    }
}

/// Every vertex reachable from vertex 0.
pub fn is_connected(g: &MetricGraph) -> bool {
    if g.vertex_count() == 0 {
        return true;
    }
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![VertexId(0)];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in g.neighbors(v) {
            if !seen[u.index()] {
                seen[u.index()] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
