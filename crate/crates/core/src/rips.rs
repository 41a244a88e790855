//! On-demand queries against the Rips complex of a [`MetricGraph`].
//!
//! Nothing is stored: a simplex is any clique of the graph, and the maximal
//! simplices attached to a simplex are enumerated locally from its common
//! neighbors.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{intersect_sorted, MetricGraph, VertexId};

/// A set of vertices kept in strictly ascending order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Simplex(Vec<VertexId>);

impl Simplex {
    /// Sorts and deduplicates `vertices`.
    pub fn new<I: IntoIterator<Item = VertexId>>(vertices: I) -> Self {
        let mut v: Vec<VertexId> = vertices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Simplex(v)
    }

    pub fn vertex(v: VertexId) -> Self {
        Simplex(vec![v])
    }

    /// Wraps an already strictly ascending vector.
    pub(crate) fn from_sorted(v: Vec<VertexId>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Simplex(v)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `len() - 1`; the empty simplex reports `-1`.
    pub fn dimension(&self) -> isize {
        self.0.len() as isize - 1
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &Simplex) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for v in &self.0 {
            for w in it.by_ref() {
                if w == v {
                    continue 'outer;
                }
                if w > v {
                    return false;
                }
            }
            return false;
        }
        true
    }

    /// The face opposite `v` (this simplex without `v`).
    pub fn without(&self, v: VertexId) -> Simplex {
        Simplex(self.0.iter().copied().filter(|&w| w != v).collect())
    }

    pub fn with(&self, v: VertexId) -> Simplex {
        let mut out = self.0.clone();
        if let Err(pos) = out.binary_search(&v) {
            out.insert(pos, v);
        }
        Simplex(out)
    }

    pub fn union(&self, other: &Simplex) -> Simplex {
        Simplex::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl From<Vec<VertexId>> for Simplex {
    fn from(v: Vec<VertexId>) -> Self {
        Simplex::new(v)
    }
}

impl<const N: usize> From<[usize; N]> for Simplex {
    fn from(v: [usize; N]) -> Self {
        Simplex::new(v.into_iter().map(VertexId))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RipsError {
    #[error("{candidate} is not adjacent to every vertex of {sigma}")]
    NotANeighbor { candidate: VertexId, sigma: Simplex },
    #[error("{candidate} already belongs to {sigma}")]
    Overlap { candidate: VertexId, sigma: Simplex },
    #[error("{0} is not a clique")]
    NotASimplex(Simplex),
}

/// True iff every pair of vertices in `s` is an edge (singletons are simplices).
pub fn is_simplex(g: &MetricGraph, s: &Simplex) -> bool {
    let v = s.vertices();
    for (i, &a) in v.iter().enumerate() {
        for &b in &v[i + 1..] {
            if !g.has_edge(a, b) {
                return false;
            }
        }
    }
    true
}

/// Maximal simplices of the Rips complex built from `candidates ∪ sigma` and
/// containing `sigma`.
///
/// `candidates` must be common neighbors of `sigma` and disjoint from it. The
/// recursion splits on the lexicographically first non-adjacent pair `(a, b)`
/// of candidates: cliques with `a`, cliques with `b`, and cliques with
/// neither. The third branch can produce faces of results from the first two,
/// so subsets are filtered out before returning. Output is sorted.
pub fn maximal_simplices(g: &MetricGraph, candidates: &[VertexId], sigma: &Simplex) -> Result<Vec<Simplex>, RipsError> {
    if !is_simplex(g, sigma) {
        return Err(RipsError::NotASimplex(sigma.clone()));
    }
    let mut s: Vec<VertexId> = candidates.to_vec();
    s.sort_unstable();
    s.dedup();
    for &c in &s {
        if sigma.contains(c) {
            return Err(RipsError::Overlap { candidate: c, sigma: sigma.clone() });
        }
        if sigma.iter().any(|v| !g.has_edge(v, c)) {
            return Err(RipsError::NotANeighbor { candidate: c, sigma: sigma.clone() });
        }
    }
    Ok(maximal_simplices_unchecked(g, &s, sigma))
}

/// Unchecked core of [`maximal_simplices`]; `s` sorted, valid neighbors.
pub(crate) fn maximal_simplices_unchecked(g: &MetricGraph, s: &[VertexId], sigma: &Simplex) -> Vec<Simplex> {
    let mut out = Vec::new();
    collect_maximal(g, s, sigma.vertices(), &mut out);
    out.sort_unstable();
    out.dedup();
    out
}

fn collect_maximal(g: &MetricGraph, s: &[VertexId], sigma: &[VertexId], out: &mut Vec<Simplex>) {
    let Some((a, b)) = first_unconnected_pair(g, s) else {
        let mut all: Vec<VertexId> = sigma.iter().chain(s.iter()).copied().collect();
        all.sort_unstable();
        out.push(Simplex::from_sorted(all));
        return;
    };

    let mut results = Vec::new();
    // (i) contains a, not b
    let with_a = intersect_sorted(s, g.neighbors(a));
    let sigma_a = insert_sorted(sigma, a);
    collect_maximal(g, &with_a, &sigma_a, &mut results);
    // (ii) contains b, not a
    let with_b = intersect_sorted(s, g.neighbors(b));
    let sigma_b = insert_sorted(sigma, b);
    collect_maximal(g, &with_b, &sigma_b, &mut results);
    let n_second = results.len();
    // (iii) neither
    let rest: Vec<VertexId> = s.iter().copied().filter(|&v| v != a && v != b).collect();
    collect_maximal(g, &rest, sigma, &mut results);

    // Branches (i) and (ii) are each maximal within S ∪ σ and disjoint from
    // one another; only (iii) needs filtering against everything.
    let (kept, third) = results.split_at(n_second);
    for r in third {
        if !kept.iter().any(|k| r.is_subset_of(k)) && !third.iter().any(|k| k != r && r.is_subset_of(k)) {
            out.push(r.clone());
        }
    }
    out.extend_from_slice(kept);
}

fn first_unconnected_pair(g: &MetricGraph, s: &[VertexId]) -> Option<(VertexId, VertexId)> {
    for (i, &m) in s.iter().enumerate() {
        for &n in &s[i + 1..] {
            if !g.has_edge(m, n) {
                return Some((m, n));
            }
        }
    }
    None
}

fn insert_sorted(v: &[VertexId], x: VertexId) -> Vec<VertexId> {
    let mut out = v.to_vec();
    match out.binary_search(&x) {
        Ok(_) => {}
        Err(pos) => out.insert(pos, x),
    }
    out
}
