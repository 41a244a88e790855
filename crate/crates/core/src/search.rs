//! Label-correcting search through simplices, and the Dijkstra baseline.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Method;
use crate::graph::{intersect_sorted, MetricGraph, VertexId};
use crate::rips::{maximal_simplices_unchecked, Simplex};
use crate::through::{CameFromPoint, Evaluator, ThroughError};

/// An update must beat the incumbent label by more than this.
pub const EPS_IMPROVE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Vertices popped and expanded, counting repeats.
    pub expansions: u64,
    /// Expanded vertices that improved later and went back to the queue.
    pub re_expansions: u64,
    /// Distance-through-simplex evaluations that missed the memo.
    pub simplex_evaluations: u64,
    pub memo_hits: u64,
    /// Maximal simplices enumerated across all expansions.
    pub maximal_simplices: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The queue emptied and every vertex has a finite label.
    Exhausted,
    /// Every goal was expanded and nothing left in the queue can improve them.
    GoalReached,
    /// The queue emptied with some vertices still unreached.
    UnreachableFrontier,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("vertex {v} out of range for a graph with {vertex_count} vertices")]
    InvalidVertex { v: VertexId, vertex_count: usize },
    #[error("dimension cap must be at least 1")]
    DimCap,
    #[error(transparent)]
    Through(#[from] ThroughError),
}

#[derive(Clone, Debug, Default)]
pub struct SearchConfig {
    pub method: Method,
    /// Stop once all of these are settled; empty means run to exhaustion.
    pub goals: Vec<VertexId>,
    /// Largest simplex dimension evaluated; bigger ones are replaced by
    /// their faces of this dimension through the edge being relaxed.
    pub dim_cap: Option<usize>,
    pub no_memo: bool,
    #[doc(hidden)]
    pub inject_fault: bool,
}

impl SearchConfig {
    pub fn new(method: Method) -> Self {
        SearchConfig { method, ..Default::default() }
    }

    pub fn with_goals<I: IntoIterator<Item = VertexId>>(mut self, goals: I) -> Self {
        self.goals = goals.into_iter().collect();
        self
    }

    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = Some(cap);
        self
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub start: VertexId,
    pub method: Method,
    pub dbar: Vec<f64>,
    pub cfp: Vec<Option<CameFromPoint>>,
    pub counters: Counters,
    pub termination: Termination,
}

impl SearchResult {
    pub fn dbar(&self, v: VertexId) -> f64 {
        self.dbar[v.index()]
    }

    pub fn came_from(&self, v: VertexId) -> Option<&CameFromPoint> {
        self.cfp[v.index()].as_ref()
    }

    pub fn is_reached(&self, v: VertexId) -> bool {
        self.dbar[v.index()].is_finite()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, VertexId);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue with lazy deletion; ties go to the lower vertex id.
struct Queue {
    heap: BinaryHeap<Reverse<Key>>,
}

impl Queue {
    fn new() -> Self {
        Queue { heap: BinaryHeap::new() }
    }

    fn push(&mut self, d: f64, v: VertexId) {
        self.heap.push(Reverse(Key(d, v)));
    }

    /// Drops stale entries and returns the live minimum without removing it.
    fn peek(&mut self, dbar: &[f64], closed: &[bool]) -> Option<Key> {
        while let Some(&Reverse(k)) = self.heap.peek() {
            if closed[k.1.index()] || k.0.to_bits() != dbar[k.1.index()].to_bits() {
                self.heap.pop();
            } else {
                return Some(k);
            }
        }
        None
    }

    fn pop(&mut self, dbar: &[f64], closed: &[bool]) -> Option<Key> {
        let k = self.peek(dbar, closed)?;
        self.heap.pop();
        Some(k)
    }
}

struct State {
    dbar: Vec<f64>,
    cfp: Vec<Option<CameFromPoint>>,
    closed: Vec<bool>,
    queue: Queue,
    counters: Counters,
}

impl State {
    fn new(g: &MetricGraph, start: VertexId) -> Self {
        let n = g.vertex_count();
        let mut s = State {
            dbar: vec![f64::INFINITY; n],
            cfp: vec![None; n],
            closed: vec![false; n],
            queue: Queue::new(),
            counters: Counters::default(),
        };
        s.dbar[start.index()] = 0.0;
        s.queue.push(0.0, start);
        s
    }

    /// Pops the next vertex, or reports why the run is over.
    fn next(&mut self, goals: &[VertexId]) -> Result<VertexId, Termination> {
        if !goals.is_empty() && goals.iter().all(|g| self.closed[g.index()]) {
            let worst = goals.iter().map(|g| self.dbar[g.index()]).fold(0.0, f64::max);
            match self.queue.peek(&self.dbar, &self.closed) {
                Some(k) if k.0 < worst => {}
                _ => return Err(Termination::GoalReached),
            }
        }
        match self.queue.pop(&self.dbar, &self.closed) {
            Some(k) => Ok(k.1),
            None if self.dbar.iter().all(|d| d.is_finite()) => Err(Termination::Exhausted),
            None => Err(Termination::UnreachableFrontier),
        }
    }

    fn finish(self, start: VertexId, method: Method, termination: Termination) -> SearchResult {
        SearchResult { start, method, dbar: self.dbar, cfp: self.cfp, counters: self.counters, termination }
    }
}

fn check(g: &MetricGraph, v: VertexId) -> Result<(), SearchError> {
    if v.index() < g.vertex_count() {
        Ok(())
    } else {
        Err(SearchError::InvalidVertex { v, vertex_count: g.vertex_count() })
    }
}

/// Basic S*: expands vertices in label order and, for every neighbor `u` of
/// the expanded vertex `q`, evaluates `u` through each maximal simplex built
/// from `{u, q}` and their already-expanded common neighbors.
///
/// Expanded neighbors are re-checked too: an obtuse simplex can improve a
/// vertex after it was expanded, in which case it is put back in the queue.
///
/// ```
/// use sstar::{MetricGraph, VertexId};
/// use sstar::search::{basic_sstar, dijkstra, SearchConfig};
/// let g = MetricGraph::parse_edge_list("4\n0 1 1\n0 2 1\n1 2 1\n1 3 1\n2 3 1\n").unwrap();
/// let s = basic_sstar(&g, VertexId(0), &SearchConfig::default()).unwrap();
/// let d = dijkstra(&g, VertexId(0), &[]).unwrap();
/// assert_eq!(d.dbar(VertexId(3)), 2.0);
/// assert!((s.dbar(VertexId(3)) - 3f64.sqrt()).abs() < 1e-12);
/// ```
pub fn basic_sstar(g: &MetricGraph, start: VertexId, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    check(g, start)?;
    for &v in &config.goals {
        check(g, v)?;
    }
    if config.dim_cap == Some(0) {
        return Err(SearchError::DimCap);
    }
    let mut ev = if config.no_memo { Evaluator::without_memo(config.method) } else { Evaluator::new(config.method) };
    if config.inject_fault {
        ev = ev.with_fault_injection();
    }
    let mut st = State::new(g, start);
    let termination = loop {
        let q = match st.next(&config.goals) {
            Ok(q) => q,
            Err(t) => break t,
        };
        st.closed[q.index()] = true;
        st.counters.expansions += 1;

        let q_neighbors: Vec<VertexId> = g.neighbors(q).collect();
        for &u in &q_neighbors {
            if u == start {
                continue;
            }
            let common = intersect_sorted(&q_neighbors, g.neighbors(u));
            let s: Vec<VertexId> = common.into_iter().filter(|v| st.closed[v.index()]).collect();
            let edge = Simplex::new([u, q]);
            let mut simplices = maximal_simplices_unchecked(g, &s, &edge);
            st.counters.maximal_simplices += simplices.len() as u64;
            if let Some(cap) = config.dim_cap {
                simplices = apply_dim_cap(simplices, &edge, cap);
            }

            let mut best: Option<(f64, CameFromPoint)> = None;
            let incumbent = st.dbar[u.index()];
            for sigma in &simplices {
                let dbar = &st.dbar;
                let (d, cfp) = ev.distance_through_simplex(g, sigma, u, |v| dbar[v.index()])?;
                let bar = best.as_ref().map_or(incumbent, |b| b.0);
                if d < bar - EPS_IMPROVE {
                    best = Some((d, cfp));
                }
            }
            if let Some((d, cfp)) = best {
                st.dbar[u.index()] = d;
                st.cfp[u.index()] = Some(cfp);
                if st.closed[u.index()] {
                    st.closed[u.index()] = false;
                    st.counters.re_expansions += 1;
                }
                st.queue.push(d, u);
            }
        }
    };
    st.counters.simplex_evaluations = ev.evaluations();
    st.counters.memo_hits = ev.memo_hits();
    Ok(st.finish(start, config.method, termination))
}

/// Replaces simplices above the cap by their `(cap + 1)`-vertex faces that
/// contain `edge`.
fn apply_dim_cap(simplices: Vec<Simplex>, edge: &Simplex, cap: usize) -> Vec<Simplex> {
    let size = cap + 1;
    let mut out = Vec::new();
    for s in simplices {
        if s.len() <= size {
            out.push(s);
            continue;
        }
        let rest: Vec<VertexId> = s.iter().filter(|v| !edge.contains(*v)).collect();
        let k = size.saturating_sub(edge.len());
        for combo in combinations(&rest, k) {
            out.push(edge.union(&Simplex::new(combo)));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn combinations(items: &[VertexId], k: usize) -> Vec<Vec<VertexId>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut tail in combinations(&items[i + 1..], k - 1) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Label-setting shortest paths along edges.
///
/// The came-from point of each reached vertex is its predecessor.
pub fn dijkstra(g: &MetricGraph, start: VertexId, goals: &[VertexId]) -> Result<SearchResult, SearchError> {
    check(g, start)?;
    for &v in goals {
        check(g, v)?;
    }
    let mut st = State::new(g, start);
    let termination = loop {
        let q = match st.next(goals) {
            Ok(q) => q,
            Err(t) => break t,
        };
        st.closed[q.index()] = true;
        st.counters.expansions += 1;
        let dq = st.dbar[q.index()];
        for u in g.neighbors(q) {
            if st.closed[u.index()] {
                continue;
            }
            let d = dq + g.length(q, u).expect("neighbor edge");
            if d < st.dbar[u.index()] {
                st.dbar[u.index()] = d;
                st.cfp[u.index()] = Some(CameFromPoint::vertex(q));
                st.queue.push(d, u);
            }
        }
    };
    Ok(st.finish(start, Method::Spherical, termination))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(i: usize) -> VertexId {
        VertexId(i)
    }

    #[test]
    fn single_edge() {
        let g = MetricGraph::parse_edge_list("2\n0 1 1\n").unwrap();
        for r in [basic_sstar(&g, v(0), &SearchConfig::default()).unwrap(), dijkstra(&g, v(0), &[]).unwrap()] {
            assert_eq!(r.dbar, vec![0.0, 1.0]);
            assert_eq!(r.came_from(v(1)), Some(&CameFromPoint::vertex(v(0))));
            assert_eq!(r.came_from(v(0)), None);
            assert_eq!(r.termination, Termination::Exhausted);
        }
    }

    #[test]
    fn dijkstra_corrects_a_tentative_label() {
        // s=0, q1=1, q2=2, w=3: w is first reached through q2, then q1.
        let g = MetricGraph::from_edges(4, [(0, 1, 4.32), (0, 2, 4.3), (1, 3, 0.45), (2, 3, 0.55)]).unwrap();
        let r = dijkstra(&g, v(0), &[]).unwrap();
        assert!((r.dbar(v(3)) - 4.77).abs() < 1e-12);
        assert_eq!(r.came_from(v(3)), Some(&CameFromPoint::vertex(v(1))));
    }

    #[test]
    fn obtuse_simplex_unexpands() {
        // s=0, q2=1, q3=2, q4=3. q3 is expanded at 2 before q4; once q4 is
        // expanded the obtuse triangle {q2,q3,q4} yields a shorter route.
        let g = MetricGraph::from_edges(4, [(0, 1, 1.0), (0, 3, 2.2), (1, 3, 1.9), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let r = basic_sstar(&g, v(0), &SearchConfig::default()).unwrap();
        assert!(r.counters.re_expansions >= 1);
        assert!(r.dbar(v(2)) < 2.0 - 1e-6, "{}", r.dbar(v(2)));
        assert!((r.dbar(v(2)) - 1.654).abs() < 1e-3, "{}", r.dbar(v(2)));
        assert_eq!(r.came_from(v(2)).unwrap().simplex, Simplex::from([1, 3]));
        let d = dijkstra(&g, v(0), &[]).unwrap();
        assert_eq!(d.dbar(v(2)), 2.0);
    }

    #[test]
    fn goal_stop_and_unreachable() {
        let g = MetricGraph::parse_edge_list("4\n0 1 1\n1 2 1\n").unwrap();
        let r = basic_sstar(&g, v(0), &SearchConfig::default().with_goals([v(1)])).unwrap();
        assert_eq!(r.termination, Termination::GoalReached);
        assert_eq!(r.dbar(v(1)), 1.0);
        let r = basic_sstar(&g, v(0), &SearchConfig::default()).unwrap();
        assert_eq!(r.termination, Termination::UnreachableFrontier);
        assert!(!r.is_reached(v(3)));
        let r = dijkstra(&g, v(0), &[v(3)]).unwrap();
        assert_eq!(r.termination, Termination::UnreachableFrontier);
        assert!(basic_sstar(&g, v(9), &SearchConfig::default()).is_err());
        assert!(basic_sstar(&g, v(0), &SearchConfig::default().with_goals([v(4)])).is_err());
    }

    #[test]
    fn dim_cap_faces() {
        let e = Simplex::from([0, 1]);
        let out = apply_dim_cap(vec![Simplex::from([0, 1, 2, 3])], &e, 2);
        assert_eq!(out, vec![Simplex::from([0, 1, 2]), Simplex::from([0, 1, 3])]);
        let out = apply_dim_cap(vec![Simplex::from([0, 1, 2, 3])], &e, 1);
        assert_eq!(out, vec![e]);
    }

    fn complete(n: usize, w: f64) -> MetricGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, w));
            }
        }
        MetricGraph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn dim_cap_on_dense_clique() {
        let g = complete(7, 1.0);
        let full = basic_sstar(&g, v(0), &SearchConfig::default()).unwrap();
        let capped = basic_sstar(&g, v(0), &SearchConfig::default().with_dim_cap(2)).unwrap();
        for i in 0..7 {
            assert_eq!(full.dbar[i], 1.0 * (i != 0) as u8 as f64);
            assert_eq!(capped.dbar[i], full.dbar[i]);
        }
    }

    /// Connected random graph: a random spanning tree plus extra edges.
    pub(crate) fn random_graph() -> impl Strategy<Value = MetricGraph> {
        (3usize..40).prop_flat_map(|n| {
            let tree = prop::collection::vec((0.0f64..1.0, 0.2f64..2.0), n - 1);
            let extra = prop::collection::vec((0..n, 0..n, 0.2f64..2.0), 0..3 * n);
            (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
                let mut seen = std::collections::BTreeMap::new();
                for (i, (p, w)) in tree.into_iter().enumerate() {
                    let child = i + 1;
                    let parent = ((p * child as f64) as usize).min(child - 1);
                    seen.insert((parent, child), w);
                }
                for (a, b, w) in extra {
                    if a != b {
                        seen.entry((a.min(b), a.max(b))).or_insert(w);
                    }
                }
                MetricGraph::from_edges(n, seen.into_iter().map(|((a, b), w)| (a, b, w))).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sstar_never_worse_than_dijkstra(g in random_graph(), linear in any::<bool>()) {
            let method = if linear { Method::Linear } else { Method::Spherical };
            let s = basic_sstar(&g, v(0), &SearchConfig::new(method)).unwrap();
            let d = dijkstra(&g, v(0), &[]).unwrap();
            prop_assert_eq!(s.dbar[0], 0.0);
            for i in 0..g.vertex_count() {
                prop_assert!(s.dbar[i] <= d.dbar[i] + 1e-9, "vertex {}: {} > {}", i, s.dbar[i], d.dbar[i]);
                prop_assert_eq!(s.cfp[i].is_some(), i != 0);
            }
            prop_assert!(s.counters.expansions <= g.vertex_count() as u64 + s.counters.re_expansions);
            let again = basic_sstar(&g, v(0), &SearchConfig::new(method)).unwrap();
            prop_assert_eq!(&again.dbar, &s.dbar);
            prop_assert_eq!(again.counters, s.counters);
            let plain = basic_sstar(&g, v(0), &SearchConfig { no_memo: true, ..SearchConfig::new(method) }).unwrap();
            prop_assert_eq!(plain.dbar, s.dbar);
        }
    }
}
