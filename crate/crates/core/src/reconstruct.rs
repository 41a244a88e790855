//! Walking a search result back from a goal to the start.
//!
//! Each step realizes a maximal simplex around the current point, places the
//! point inside it, and asks which face the shortest route to the point came
//! through. The answer is the next point; the step length is measured in the
//! same realization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Embedding};
use crate::graph::{MetricGraph, VertexId};
use crate::rips::{maximal_simplices_unchecked, Simplex};
use crate::search::{SearchResult, EPS_IMPROVE};
use crate::through::{CameFromPoint, DistanceOracle, Evaluator};

/// A weight above this collapses the point onto that vertex.
pub const SNAP: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub simplex: Simplex,
    pub weights: Vec<f64>,
    /// Label attributed to this point: `d̄(v)` at a vertex, otherwise the
    /// remaining distance after the step that produced it.
    pub interpolated_dbar: f64,
}

impl PathPoint {
    pub fn vertex(v: VertexId, dbar: f64) -> Self {
        PathPoint { simplex: Simplex::vertex(v), weights: vec![1.0], interpolated_dbar: dbar }
    }

    pub fn as_vertex(&self) -> Option<VertexId> {
        (self.simplex.len() == 1).then(|| self.simplex.vertices()[0])
    }
}

/// Points from goal to start and the summed step lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<PathPoint>,
    pub total_length: f64,
}

impl Path {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path serializes")
    }
}

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("vertex {0} is out of range")]
    InvalidVertex(VertexId),
    #[error("goal {0} was not reached by the search")]
    Unreached(VertexId),
    #[error("path stuck after {step} steps at {simplex} {weights:?} (label {dbar}): {reason}")]
    Stuck { step: usize, simplex: Simplex, weights: Vec<f64>, dbar: f64, reason: String },
}

/// One reconstruction step.
#[derive(Clone, Debug)]
pub struct Step {
    pub next: PathPoint,
    /// The maximal simplex crossed; excluded from the following step.
    pub crossed: Simplex,
    pub length: f64,
}

/// Distances of the graph plus one synthetic vertex placed inside a realized
/// simplex.
struct Extended<'a> {
    graph: &'a MetricGraph,
    point: VertexId,
    to_point: Vec<(VertexId, f64)>,
}

impl DistanceOracle for Extended<'_> {
    fn distance(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let other = if u == self.point {
            v
        } else if v == self.point {
            u
        } else {
            return self.graph.length(u, v);
        };
        self.to_point.iter().find(|(w, _)| *w == other).map(|&(_, d)| d)
    }
}

/// Goal-to-start path through simplex interiors.
///
/// ```
/// use sstar::{MetricGraph, VertexId};
/// use sstar::reconstruct::reconstruct_path;
/// use sstar::search::{basic_sstar, SearchConfig};
/// let g = MetricGraph::parse_edge_list("4\n0 1 1\n0 2 1\n1 2 1\n1 3 1\n2 3 1\n").unwrap();
/// let r = basic_sstar(&g, VertexId(0), &SearchConfig::default()).unwrap();
/// let path = reconstruct_path(&g, &r, VertexId(3)).unwrap();
/// assert_eq!(path.points.len(), 3);
/// assert!((path.total_length - 3f64.sqrt()).abs() < 1e-12);
/// ```
pub fn reconstruct_path(g: &MetricGraph, result: &SearchResult, goal: VertexId) -> Result<Path, ReconstructError> {
    if goal.index() >= g.vertex_count() {
        return Err(ReconstructError::InvalidVertex(goal));
    }
    if !result.is_reached(goal) {
        return Err(ReconstructError::Unreached(goal));
    }
    let start = result.start;
    let mut p = PathPoint::vertex(goal, result.dbar(goal));
    let mut points = vec![p.clone()];
    let mut total = 0.0;
    let mut mu: Option<Simplex> = None;
    let cap = 100 * g.vertex_count().max(1);
    while p.as_vertex() != Some(start) {
        if points.len() > cap {
            return Err(stuck(points.len(), &p, "iteration cap reached"));
        }
        let step = match compute_came_from_point(g, result, &p, mu.as_ref()) {
            Ok(step) => step,
            // A point resting on the start's simplex just short of the snap
            // threshold has nowhere lower to go; finish at the start.
            Err(_) if p.simplex.contains(start) => {
                total += distance_to_vertex(g, &p, start)
                    .ok_or_else(|| stuck(points.len(), &p, "start simplex not realizable"))?;
                points.push(PathPoint::vertex(start, 0.0));
                break;
            }
            Err(reason) => return Err(stuck(points.len(), &p, &reason)),
        };
        total += step.length;
        mu = Some(step.crossed);
        p = step.next;
        points.push(p.clone());
    }
    Ok(Path { points, total_length: total })
}

/// Length from `p` to a vertex of its own simplex, in that simplex's
/// realization.
fn distance_to_vertex(g: &MetricGraph, p: &PathPoint, v: VertexId) -> Option<f64> {
    let verts = p.simplex.vertices();
    let emb = Embedding::realize(verts.len(), |i, j| g.length(verts[i], verts[j]).unwrap_or(f64::NAN)).ok()?;
    let here = emb.combine(p.weights.iter().copied().enumerate());
    let at = verts.binary_search(&v).ok()?;
    Some(geometry::distance(&emb.point(at), &here))
}

fn stuck(step: usize, p: &PathPoint, reason: &str) -> ReconstructError {
    ReconstructError::Stuck {
        step,
        simplex: p.simplex.clone(),
        weights: p.weights.clone(),
        dbar: p.interpolated_dbar,
        reason: reason.to_string(),
    }
}

/// Finds where the shortest route to `p` enters the maximal simplices around
/// it, ignoring `mu` and its faces.
pub fn compute_came_from_point(
    g: &MetricGraph,
    result: &SearchResult,
    p: &PathPoint,
    mu: Option<&Simplex>,
) -> Result<Step, String> {
    let sigma = &p.simplex;
    let candidates: Vec<VertexId> =
        g.common_neighbors(sigma.vertices()).into_iter().filter(|&v| result.is_reached(v)).collect();
    let synthetic = VertexId(g.vertex_count());
    let dbar = |v: VertexId| result.dbar[v.index()];

    let mut best: Option<(f64, Step)> = None;
    for rho in maximal_simplices_unchecked(g, &candidates, sigma) {
        if mu == Some(&rho) {
            continue;
        }
        let verts = rho.vertices();
        let Ok(emb) = Embedding::realize(verts.len(), |i, j| g.length(verts[i], verts[j]).unwrap_or(f64::NAN)) else {
            continue;
        };
        let local = |v: VertexId| verts.binary_search(&v).expect("vertex of rho");
        let here = emb.combine(sigma.iter().zip(&p.weights).map(|(v, &w)| (local(v), w)));
        let oracle = Extended {
            graph: g,
            point: synthetic,
            to_point: verts.iter().enumerate().map(|(i, &v)| (v, geometry::distance(&emb.point(i), &here))).collect(),
        };
        let mut ev = Evaluator::new(result.method);
        for &u in verts {
            let gamma = rho.without(u);
            if mu.is_some_and(|m| gamma.is_subset_of(m)) || sigma.is_subset_of(&gamma) {
                continue;
            }
            let probe = gamma.with(synthetic);
            let Ok((d, cfp)) = ev.distance_through_simplex(&oracle, &probe, synthetic, dbar) else {
                continue;
            };
            let there = emb.combine(cfp.simplex.iter().zip(&cfp.weights).map(|(v, &w)| (local(v), w)));
            let length = geometry::distance(&here, &there);
            if length <= 1e-12 * emb.scale() {
                continue;
            }
            if best.as_ref().is_none_or(|b| d < b.0) {
                // On curved metrics neighbouring simplices can disagree about
                // the label at `p`; only points that lower it are admissible.
                let next = snap(cfp, d - length, dbar);
                if next.interpolated_dbar < p.interpolated_dbar - EPS_IMPROVE {
                    best = Some((d, Step { next, crossed: rho.clone(), length }));
                }
            }
        }
    }
    best.map(|(_, s)| s).ok_or_else(|| "no admissible face lowers the label".to_string())
}

fn snap(cfp: CameFromPoint, remaining: f64, dbar: impl Fn(VertexId) -> f64) -> PathPoint {
    if let Some(i) = cfp.weights.iter().position(|&w| w > SNAP) {
        let v = cfp.simplex.vertices()[i];
        return PathPoint::vertex(v, dbar(v));
    }
    if cfp.simplex.len() == 1 {
        let v = cfp.simplex.vertices()[0];
        return PathPoint::vertex(v, dbar(v));
    }
    PathPoint { simplex: cfp.simplex, weights: cfp.weights, interpolated_dbar: remaining }
}
