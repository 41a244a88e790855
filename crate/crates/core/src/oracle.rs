//! Slow reference implementations and a randomized cross-check harness.
//!
//! Each oracle computes the same quantity as a fast routine by a route that
//! shares no code with it: power-set enumeration for maximal cliques,
//! coordinates of sampled points for realizations, exhaustive barycentric
//! grids for distances through simplices, and relaxation to a fixpoint for
//! shortest paths.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{self, Embedding, Method};
use crate::graph::{MetricGraph, VertexId};
use crate::rips::{is_simplex, maximal_simplices, Simplex};
use crate::search::dijkstra;
use crate::through::Evaluator;

/// Maximal cliques of `candidates ∪ sigma` containing `sigma`, by checking
/// every subset of `candidates`.
pub fn maximal_simplices_bruteforce(g: &MetricGraph, candidates: &[VertexId], sigma: &Simplex) -> Vec<Simplex> {
    let k = candidates.len();
    assert!(k < 24, "power set too large");
    let cliques: Vec<u32> = (0u32..1 << k)
        .filter(|&mask| {
            let s = Simplex::new(sigma.iter().chain((0..k).filter(|i| mask >> i & 1 == 1).map(|i| candidates[i])));
            is_simplex(g, &s)
        })
        .collect();
    let mut out: Vec<Simplex> = cliques
        .iter()
        .filter(|&&m| !cliques.iter().any(|&o| o != m && o & m == m))
        .map(|&m| Simplex::new(sigma.iter().chain((0..k).filter(|i| m >> i & 1 == 1).map(|i| candidates[i]))))
        .collect();
    out.sort_unstable();
    out
}

/// Largest relative error between input distances and realized distances.
pub fn isometry_error(points: &[Vec<f64>]) -> Result<f64, geometry::GeometryError> {
    let n = points.len();
    let e = Embedding::realize(n, |i, j| geometry::distance(&points[i], &points[j]))?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let want = geometry::distance(&points[i], &points[j]);
            let got = geometry::distance(&e.point(i), &e.point(j));
            worst = worst.max((got - want).abs() / want);
        }
    }
    Ok(worst)
}

/// True when realizing all but the last point and then appending it gives
/// bitwise the same rows as realizing everything at once.
pub fn prefix_stable(points: &[Vec<f64>]) -> bool {
    let n = points.len();
    let d = |i: usize, j: usize| geometry::distance(&points[i], &points[j]);
    let (Ok(full), Ok(mut part)) = (Embedding::realize(n, d), Embedding::realize(n - 1, d)) else {
        return false;
    };
    let last: Vec<f64> = (0..n - 1).map(|i| d(n - 1, i)).collect();
    part.push(&last).is_ok() && part == full
}

/// A virtual source known in coordinates.
#[derive(Clone, Debug)]
pub enum KnownSource {
    Point(Vec<f64>),
    Plane { normal: Vec<f64>, offset: f64 },
}

impl KnownSource {
    pub fn distance_to(&self, y: &[f64]) -> f64 {
        match self {
            KnownSource::Point(o) => geometry::distance(o, y),
            KnownSource::Plane { normal, offset } => normal.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + offset,
        }
    }
}

/// `min over y in the face opposite the apex of source(y) + ‖y − apex‖`,
/// sampled on a barycentric grid of the given resolution.
///
/// `points[0]` is the apex. Small grids are enumerated in full. Larger ones
/// are searched coarse to fine, each level restricted to a window around the
/// previous optimum; the objective is convex, so the window keeps the
/// minimizer.
pub fn face_grid_distance(points: &[Vec<f64>], source: &KnownSource, resolution: usize) -> f64 {
    let m = points.len() - 1;
    if grid_size(m, resolution) <= 200_000.0 {
        grid_search(points, source, resolution, false)
    } else {
        grid_search(points, source, resolution, true)
    }
}

fn grid_search(points: &[Vec<f64>], source: &KnownSource, resolution: usize, windowed: bool) -> f64 {
    let face = &points[1..];
    let m = face.len();
    let apex = &points[0];
    let eval = |k: &[usize], r: usize| {
        let mut y = vec![0.0; apex.len()];
        for (p, &ki) in face.iter().zip(k) {
            let w = ki as f64 / r as f64;
            for (yi, pi) in y.iter_mut().zip(p) {
                *yi += w * pi;
            }
        }
        source.distance_to(&y) + geometry::distance(&y, apex)
    };
    if !windowed {
        return grid_min(m, resolution, &vec![0; m], &vec![resolution; m], &eval).0;
    }
    let mut r = 8.min(resolution);
    let (mut best, mut arg) = grid_min(m, r, &vec![0; m], &vec![r; m], &eval);
    while r < resolution {
        let next = (r * 3).min(resolution);
        let scale = next as f64 / r as f64;
        let radius = (2.0 * scale).ceil() as usize + 1;
        let lo: Vec<usize> =
            arg.iter().map(|&k| ((k as f64 * scale).round() as usize).saturating_sub(radius)).collect();
        let hi: Vec<usize> = arg.iter().map(|&k| ((k as f64 * scale).round() as usize + radius).min(next)).collect();
        (best, arg) = grid_min(m, next, &lo, &hi, &eval);
        r = next;
    }
    best
}

fn grid_size(m: usize, r: usize) -> f64 {
    // Compositions of r into m parts: C(r + m - 1, m - 1).
    (1..m).fold(1.0, |acc, i| acc * (r + i) as f64 / i as f64)
}

/// Minimum over integer vectors with `lo ≤ k ≤ hi` summing to `r`.
fn grid_min<F: Fn(&[usize], usize) -> f64>(
    m: usize,
    r: usize,
    lo: &[usize],
    hi: &[usize],
    eval: &F,
) -> (f64, Vec<usize>) {
    let mut k = vec![0; m];
    let mut best = (f64::INFINITY, vec![0; m]);
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(&[usize], usize) -> f64>(
        i: usize,
        left: usize,
        r: usize,
        lo: &[usize],
        hi: &[usize],
        k: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
        eval: &F,
    ) {
        let m = k.len();
        if i == m - 1 {
            if left < lo[i] || left > hi[i] {
                return;
            }
            k[i] = left;
            let v = eval(k, r);
            if v < best.0 {
                *best = (v, k.clone());
            }
            return;
        }
        let rest_lo: usize = lo[i + 1..].iter().sum();
        let rest_hi: usize = hi[i + 1..].iter().sum();
        for x in lo[i]..=hi[i].min(left) {
            let rem = left - x;
            if rem < rest_lo || rem > rest_hi {
                continue;
            }
            k[i] = x;
            rec(i + 1, rem, r, lo, hi, k, best, eval);
        }
    }
    rec(0, r, r, lo, hi, &mut k, &mut best, eval);
    best
}

/// Shortest paths by relaxing every edge until nothing changes.
pub fn shortest_paths_fixpoint(g: &MetricGraph, start: VertexId) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; g.vertex_count()];
    d[start.index()] = 0.0;
    let edges = g.edges();
    loop {
        let mut changed = false;
        for &(a, b, w) in &edges {
            let (ia, ib) = (a.index(), b.index());
            if d[ia] + w < d[ib] {
                d[ib] = d[ia] + w;
                changed = true;
            }
            if d[ib] + w < d[ia] {
                d[ia] = d[ib] + w;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Complete graph whose lengths are the pairwise distances of `points`.
pub fn point_graph(points: &[Vec<f64>]) -> MetricGraph {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, geometry::distance(&points[i], &points[j])));
        }
    }
    MetricGraph::from_edges(n, edges).expect("distinct points")
}

pub fn random_points<R: Rng>(rng: &mut R, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Random graph on `n` vertices with edge probability `p` and lengths in
/// `[0.2, 2)`; a random spanning tree is added when `connected`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64, connected: bool) -> MetricGraph {
    let mut edges = std::collections::BTreeMap::new();
    if connected {
        for v in 1..n {
            let u = rng.gen_range(0..v);
            edges.insert((u, v), rng.gen_range(0.2..2.0));
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.entry((u, v)).or_insert_with(|| rng.gen_range(0.2..2.0));
            }
        }
    }
    MetricGraph::from_edges(n, edges.into_iter().map(|((a, b), w)| (a, b, w))).expect("valid graph")
}

/// A realizable pointed simplex with `n` vertices and labels generated from a
/// virtual source on the far side of the opposite face.
#[derive(Clone, Debug)]
pub struct SimplexCase {
    pub points: Vec<Vec<f64>>,
    pub dbar: Vec<f64>,
    pub source: KnownSource,
    pub method: Method,
}

impl SimplexCase {
    pub fn random<R: Rng>(rng: &mut R, n: usize, method: Method) -> Self {
        loop {
            let raw = random_points(rng, n, n - 1);
            let Ok(emb) = Embedding::realize(n, |i, j| geometry::distance(&raw[i], &raw[j])) else {
                continue;
            };
            if (1..n).any(|j| emb.coord(j, j - 1) < 0.05 * emb.scale()) {
                continue;
            }
            // Work in realized coordinates so the source and the simplex agree.
            let points: Vec<Vec<f64>> = (0..n).map(|j| emb.point(j)).collect();
            let Some((source, dbar)) = far_source(rng, &points, method) else {
                continue;
            };
            return SimplexCase { points, dbar, source, method };
        }
    }

    pub fn graph(&self) -> MetricGraph {
        point_graph(&self.points)
    }

    pub fn evaluate(&self, ev: &mut Evaluator) -> f64 {
        let g = self.graph();
        let n = self.points.len();
        let sigma = Simplex::new((0..n).map(VertexId));
        let dbar = |v: VertexId| self.dbar[v.index() - 1];
        ev.distance_through_simplex(&g, &sigma, VertexId(0), dbar).expect("valid case").0
    }

    pub fn grid(&self, resolution: usize) -> f64 {
        face_grid_distance(&self.points, &self.source, resolution)
    }
}

/// Unit normal of the hyperplane through `points[1..]`, in the realized
/// layout (`points[0]` at the origin).
fn face_normal(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let base = &points[1];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &points[2..] {
        let mut v: Vec<f64> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        gram_schmidt(&mut v, &basis);
        basis.push(v);
    }
    for axis in 0..dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        gram_schmidt(&mut v, &basis);
        if geometry::norm(&v) > 1e-6 {
            let n = geometry::norm(&v);
            return v.iter().map(|x| x / n).collect();
        }
    }
    unreachable!("face spans a hyperplane")
}

fn gram_schmidt(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
        for (x, y) in v.iter_mut().zip(b) {
            *x -= dot * y;
        }
    }
    let n = geometry::norm(v);
    if n > 1e-12 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

fn far_source<R: Rng>(rng: &mut R, points: &[Vec<f64>], method: Method) -> Option<(KnownSource, Vec<f64>)> {
    let dim = points[0].len();
    let normal = face_normal(points);
    let side = |x: &[f64]| -> f64 { normal.iter().zip(x.iter().zip(&points[1])).map(|(n, (a, b))| n * (a - b)).sum() };
    let apex_side = side(&points[0]);
    match method {
        Method::Spherical => {
            let mut o: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let s = side(&o);
            if s * apex_side > 0.0 {
                for (x, n) in o.iter_mut().zip(&normal) {
                    *x -= 2.0 * s * n;
                }
            }
            let dbar: Vec<f64> = points[1..].iter().map(|p| geometry::distance(&o, p)).collect();
            Some((KnownSource::Point(o), dbar))
        }
        Method::Linear => {
            let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = geometry::norm(&raw);
            if len < 0.1 {
                return None;
            }
            let u: Vec<f64> = raw.iter().map(|x| x / len).collect();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let min_proj = points[1..].iter().map(|p| dot(&u, p)).fold(f64::INFINITY, f64::min);
            let offset = rng.gen_range(0.0..2.0) - min_proj;
            // Mirror the normal across the face; keep whichever plane is farther from the apex.
            let un = dot(&u, &normal);
            let u2: Vec<f64> = u.iter().zip(&normal).map(|(a, n)| a - 2.0 * un * n).collect();
            let offset2 = dot(&u, &points[1]) + offset - dot(&u2, &points[1]);
            let (u, offset) = if offset2 > offset { (u2, offset2) } else { (u, offset) };
            let dbar: Vec<f64> = points[1..].iter().map(|p| dot(&u, p) + offset).collect();
            if dbar.iter().any(|&d| d < 0.0) {
                return None;
            }
            Some((KnownSource::Plane { normal: u, offset }, dbar))
        }
    }
}

/// Maximal-simplex query on a random small graph.
pub fn random_clique_query<R: Rng>(rng: &mut R) -> (MetricGraph, Vec<VertexId>, Simplex) {
    let n = rng.gen_range(2..=12);
    let p = rng.gen_range(0.2..0.9);
    let g = random_graph(rng, n, p, false);
    let mut order: Vec<VertexId> = g.vertices().collect();
    order.shuffle(rng);
    let mut sigma = vec![order[0]];
    let want = rng.gen_range(1..=3);
    for &v in &order[1..] {
        if sigma.len() >= want {
            break;
        }
        if sigma.iter().all(|&s| g.has_edge(s, v)) {
            sigma.push(v);
        }
    }
    let common = g.common_neighbors(&sigma);
    let candidates: Vec<VertexId> = common.into_iter().filter(|_| rng.gen_bool(0.8)).collect();
    (g, candidates, Simplex::new(sigma))
}

#[derive(Clone, Debug, Default)]
pub struct OracleReport {
    pub trials: usize,
    pub failures: Vec<String>,
    pub max_clique_mismatches: usize,
    pub max_isometry_error: f64,
    pub max_distance_deviation: f64,
    pub max_shortest_path_deviation: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "trials: {}", self.trials);
        let _ = writeln!(s, "maximal simplices mismatches: {}", self.max_clique_mismatches);
        let _ = writeln!(s, "max isometry error (relative): {:e}", self.max_isometry_error);
        let _ = writeln!(s, "max distance-through-simplex deviation: {:e}", self.max_distance_deviation);
        let _ = writeln!(s, "max shortest-path deviation: {:e}", self.max_shortest_path_deviation);
        for f in &self.failures {
            let _ = writeln!(s, "FAIL {f}");
        }
        let _ = writeln!(s, "{}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

/// Runs `trials` rounds of every oracle. Simplex dimensions are drawn from
/// `dims` (a dimension-`d` simplex has `d + 1` vertices).
pub fn run_oracle_check(seed: u64, trials: usize, dims: RangeInclusive<usize>, inject_fault: bool) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport { trials, ..Default::default() };
    let dims: Vec<usize> = dims.filter(|&d| d >= 1).collect();
    if dims.is_empty() {
        report.failures.push("empty dimension range".into());
        return report;
    }
    for t in 0..trials {
        let (g, cand, sigma) = random_clique_query(&mut rng);
        let fast = maximal_simplices(&g, &cand, &sigma).expect("valid query");
        if fast != maximal_simplices_bruteforce(&g, &cand, &sigma) {
            report.max_clique_mismatches += 1;
            report.failures.push(format!("trial {t}: maximal simplices differ for {sigma}"));
        }

        let d = *dims.choose(&mut rng).unwrap();
        let pts = random_points(&mut rng, d + 1, d);
        if let Ok(err) = isometry_error(&pts) {
            report.max_isometry_error = report.max_isometry_error.max(err);
            if err > 1e-9 {
                report.failures.push(format!("trial {t}: isometry error {err:e}"));
            }
        }

        let method = if t % 2 == 0 { Method::Spherical } else { Method::Linear };
        let case = SimplexCase::random(&mut rng, d + 1, method);
        let mut ev = Evaluator::new(method);
        if inject_fault {
            ev = ev.with_fault_injection();
        }
        let got = case.evaluate(&mut ev);
        let want = case.grid(200);
        let dev = (got - want).abs();
        report.max_distance_deviation = report.max_distance_deviation.max(dev);
        if dev.is_nan() || dev > 1e-3 {
            report.failures.push(format!("trial {t}: {method} distance {got} vs grid {want}"));
        }

        let n = rng.gen_range(2..=60);
        let (p, connected) = (rng.gen_range(0.02..0.3), rng.gen_bool(0.8));
        let g = random_graph(&mut rng, n, p, connected);
        let want = shortest_paths_fixpoint(&g, VertexId(0));
        let got = dijkstra(&g, VertexId(0), &[]).expect("valid start").dbar;
        for (a, b) in got.iter().zip(&want) {
            let dev = if a.is_infinite() && b.is_infinite() { 0.0 } else { (a - b).abs() };
            report.max_shortest_path_deviation = report.max_shortest_path_deviation.max(dev);
            if dev.is_nan() || dev > 1e-9 {
                report.failures.push(format!("trial {t}: shortest path {a} vs {b}"));
                break;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::three_cliques;

    #[test]
    fn bruteforce_matches_known_case() {
        let g = three_cliques();
        let cand: Vec<VertexId> = [1, 3, 4, 5].map(VertexId).to_vec();
        let got = maximal_simplices_bruteforce(&g, &cand, &Simplex::from([0, 2]));
        assert_eq!(got, vec![Simplex::from([0, 1, 2, 4]), Simplex::from([0, 2, 3, 4]), Simplex::from([0, 2, 5])]);
    }

    #[test]
    fn grid_on_symmetric_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        let src = KnownSource::Point(vec![1.5, h]);
        assert!((face_grid_distance(&pts, &src, 2000) - 3f64.sqrt()).abs() < 1e-12);
        let plane = KnownSource::Plane { normal: vec![-h, -0.5], offset: 1.0 + h };
        assert!((plane.distance_to(&pts[1]) - 1.0).abs() < 1e-12);
        assert!((face_grid_distance(&pts, &plane, 2000) - (1.0 + h)).abs() < 1e-12);
    }

    #[test]
    fn coarse_to_fine_agrees_with_full_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for method in [Method::Spherical, Method::Linear] {
            for _ in 0..10 {
                let case = SimplexCase::random(&mut rng, 5, method);
                let full = grid_search(&case.points, &case.source, 90, false);
                let windowed = grid_search(&case.points, &case.source, 90, true);
                assert!((full - windowed).abs() < 1e-12, "{full} vs {windowed}");
            }
        }
    }

    #[test]
    fn fixpoint_matches_hand_case() {
        let g = MetricGraph::from_edges(4, [(0, 1, 4.32), (0, 2, 4.3), (1, 3, 0.45), (2, 3, 0.55)]).unwrap();
        let d = shortest_paths_fixpoint(&g, VertexId(0));
        assert!((d[3] - 4.77).abs() < 1e-12);
    }

    #[test]
    fn harness_passes_and_catches_fault() {
        let r = run_oracle_check(42, 20, 2..=4, false);
        assert!(r.passed(), "{}", r.render());
        let r = run_oracle_check(42, 20, 2..=4, true);
        assert!(!r.passed());
        let r = run_oracle_check(1, 0, 2..=5, false);
        assert!(r.passed());
    }

    #[test]
    fn sampled_simplices_match_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 3..=5 {
            for method in [Method::Spherical, Method::Linear] {
                for _ in 0..4 {
                    let case = SimplexCase::random(&mut rng, n, method);
                    let got = case.evaluate(&mut Evaluator::new(method));
                    let want = case.grid(200);
                    assert!((got - want).abs() < 1e-3, "n={n} {method}: {got} vs {want}");
                    assert!(got <= want + 1e-9);
                }
            }
        }
    }
}
