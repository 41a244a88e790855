//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line, even when all pass.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sstar::bench::{
    fineness_sweep, generate_plane, generate_sphere_chart, PlaneAccuracy, PlaneMeshSpec, Rect, SphereChartSpec,
    PLANE_SSTAR_ERROR_BOUND, SWEEP_GOAL, SWEEP_START,
};
use sstar::oracle::{
    isometry_error, maximal_simplices_bruteforce, prefix_stable, random_clique_query, random_graph, random_points,
    SimplexCase,
};
use sstar::reconstruct::{reconstruct_path, Path};
use sstar::search::{basic_sstar, dijkstra, SearchConfig, SearchResult, Termination};
use sstar::through::Evaluator;
use sstar::{maximal_simplices, Method, MetricGraph, Simplex, VertexId};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dominated(g: &MetricGraph, start: VertexId) -> (usize, f64) {
    let s = basic_sstar(g, start, &SearchConfig::default()).expect("search");
    let d = dijkstra(g, start, &[]).expect("dijkstra");
    let mut bad = 0;
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in s.dbar.iter().zip(&d.dbar) {
        if a.is_infinite() && b.is_infinite() {
            continue;
        }
        worst = worst.max(a - b);
        if a.is_nan() || *a > b + 1e-9 {
            bad += 1;
        }
    }
    (bad, worst)
}

fn dijkstra_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut graphs: Vec<(String, MetricGraph, VertexId)> = Vec::new();
    for k in 0..20 {
        let n = rng.gen_range(20..=200);
        let p = rng.gen_range(0.02..0.12);
        graphs.push((format!("random #{k}"), random_graph(&mut rng, n, p, true), VertexId(0)));
    }
    for obstacle in [false, true] {
        let mut spec = PlaneMeshSpec::new(30, 30);
        if obstacle {
            spec = spec.with_obstacle(Rect { i0: 12, i1: 17, j0: 8, j1: 22 });
        }
        let mesh = generate_plane(&spec).expect("plane");
        let start = mesh.vertex_at(3, 15).expect("start");
        graphs.push((format!("plane obstacle={obstacle}"), mesh.graph, start));
    }
    for f in [8, 16] {
        let chart = generate_sphere_chart(&SphereChartSpec { fineness: f }).expect("chart");
        let start = chart.snap(SWEEP_START.0, SWEEP_START.1);
        graphs.push((format!("sphere f={f}"), chart.graph, start));
    }
    let mut bad = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut first_bad = String::new();
    for (name, g, start) in &graphs {
        let (b, w) = dominated(g, *start);
        if b > 0 && first_bad.is_empty() {
            first_bad = name.clone();
        }
        bad += b;
        worst = worst.max(w);
    }
    outcome(bad == 0, format!("{} graphs, violations {bad} {first_bad}, max sstar-dijkstra {worst:.3e}", graphs.len()))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_coarse: f64 = 0.0;
    for t in 0..500 {
        let dim = 2 + t % 4;
        let method = if t % 2 == 0 { Method::Spherical } else { Method::Linear };
        let case = SimplexCase::random(&mut rng, dim + 1, method);
        let got = case.evaluate(&mut Evaluator::new(method));
        worst_coarse = worst_coarse.max((got - case.grid(200)).abs());
    }
    let mut worst_fine: f64 = 0.0;
    for t in 0..100 {
        let method = if t % 2 == 0 { Method::Spherical } else { Method::Linear };
        let case = SimplexCase::random(&mut rng, 3, method);
        let got = case.evaluate(&mut Evaluator::new(method));
        worst_fine = worst_fine.max((got - case.grid(2000)).abs());
    }
    outcome(
        worst_coarse <= 1e-3 && worst_fine <= 1e-4,
        format!("500 cases dims 2-5 max dev {worst_coarse:.3e} (<=1e-3), 100 triangles at 2000 max dev {worst_fine:.3e} (<=1e-4)"),
    )
}

fn embedding_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut unstable = 0;
    let mut done = 0;
    while done < 1000 {
        let dim = 2 + done % 7;
        let pts = random_points(&mut rng, dim + 1, dim);
        let Ok(err) = isometry_error(&pts) else {
            continue;
        };
        worst = worst.max(err);
        if !prefix_stable(&pts) {
            unstable += 1;
        }
        done += 1;
    }
    outcome(
        worst <= 1e-9 && unstable == 0,
        format!("1000 clouds dims 2-8, max rel error {worst:.3e}, prefix-unstable {unstable}"),
    )
}

fn maximal_simplices_match() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..500 {
        let (g, cand, sigma) = random_clique_query(&mut rng);
        let fast = maximal_simplices(&g, &cand, &sigma).expect("valid query");
        if fast != maximal_simplices_bruteforce(&g, &cand, &sigma) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("500 queries, mismatches {mismatches}"))
}

fn flat_plane_accuracy() -> Outcome {
    let run = PlaneAccuracy::run(60, Method::Spherical).expect("plane run");
    let far = run.far_field(20.0);
    let rel = |r: &SearchResult, v: VertexId| (r.dbar(v) - run.truth[v.index()]) / run.truth[v.index()];
    let dij_max = far.iter().map(|&v| rel(&run.dijkstra, v)).fold(0.0, f64::max);
    let sstar_max = far.iter().map(|&v| rel(&run.sstar, v).abs()).fold(0.0, f64::max);
    let better = far.iter().filter(|&&v| rel(&run.sstar, v).abs() < rel(&run.dijkstra, v)).count();
    let share = better as f64 / far.len() as f64;
    let expected = 2.0 / 3f64.sqrt() - 1.0;
    let dij_ok = ((dij_max - expected) / expected).abs() <= 0.01;
    outcome(
        dij_ok && sstar_max < PLANE_SSTAR_ERROR_BOUND && share >= 0.95,
        format!(
            "{} far-field vertices, dijkstra max {dij_max:.6} (target {expected:.6}), sstar max {sstar_max:.3e} (< {PLANE_SSTAR_ERROR_BOUND:e}), sstar strictly better at {:.1}%",
            far.len(),
            100.0 * share
        ),
    )
}

fn sphere_convergence() -> Outcome {
    let fs: Vec<usize> = (8..=80).step_by(8).collect();
    let rows = fineness_sweep(&fs, SWEEP_START, SWEEP_GOAL, Method::Spherical).expect("sweep");
    let monotone = rows.windows(2).all(|w| w[1].cost_sstar <= w[0].cost_sstar + 1e-6);
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let gap = |c: f64, geo: f64| (c - geo).abs();
    let gap8 = gap(first.cost_sstar, first.cost_geodesic);
    let gap80 = gap(last.cost_sstar, last.cost_geodesic);
    let dgap80 = gap(last.cost_dijkstra, last.cost_geodesic);
    let converges = gap80 <= gap8 / 4.0;
    let beats = dgap80 >= 5.0 * gap80;
    let chart = rows.iter().all(|r| r.cost_chart_segment >= r.cost_geodesic);
    outcome(
        monotone && converges && beats && chart,
        format!(
            "(i) non-increasing {monotone}; (ii) gap {gap80:.3e} vs {gap8:.3e}/4 {converges}; (iii) dijkstra gap {dgap80:.3e} >= 5x {beats}; (iv) chart segment >= geodesic {chart}"
        ),
    )
}

fn path_shape_ok(path: &Path, start: VertexId, goal: VertexId) -> bool {
    let first = path.points.first().and_then(|p| p.as_vertex());
    let last = path.points.last().and_then(|p| p.as_vertex());
    first == Some(goal)
        && last == Some(start)
        && path.points.windows(2).all(|w| w[1].interpolated_dbar < w[0].interpolated_dbar)
}

fn path_reconstruction() -> Outcome {
    let mut flat_worst: f64 = 0.0;
    let mut sphere_worst: f64 = 0.0;
    let mut shape_failures = 0;
    let mut errors = 0;
    let mut paths = 0;
    let mut check = |g: &MetricGraph, r: &SearchResult, start: VertexId, goal: VertexId| -> Option<f64> {
        paths += 1;
        match reconstruct_path(g, r, goal) {
            Ok(p) => {
                shape_failures += usize::from(!path_shape_ok(&p, start, goal));
                Some((p.total_length - r.dbar(goal)).abs() / r.dbar(goal))
            }
            Err(_) => {
                errors += 1;
                None
            }
        }
    };
    for size in [16, 24, 32] {
        let mesh = generate_plane(&PlaneMeshSpec::new(size, size)).expect("plane");
        let start = mesh.vertex_at(2, size / 2).expect("start");
        let r = basic_sstar(&mesh.graph, start, &SearchConfig::default()).expect("search");
        for (i, j) in [(size - 2, size / 2), (size - 3, 3), (size - 3, size - 3), (5, size - 2), (size / 2, 0)] {
            let goal = mesh.vertex_at(i, j).expect("goal");
            if let Some(e) = check(&mesh.graph, &r, start, goal) {
                flat_worst = flat_worst.max(e);
            }
        }
    }
    // Behind an obstacle the labels are approximate, so only the shape is
    // checked there.
    let mesh = generate_plane(&PlaneMeshSpec::new(24, 24).with_obstacle(Rect { i0: 10, i1: 13, j0: 4, j1: 19 }))
        .expect("plane");
    let start = mesh.vertex_at(2, 12).expect("start");
    let r = basic_sstar(&mesh.graph, start, &SearchConfig::default()).expect("search");
    for (i, j) in [(22, 12), (20, 3), (21, 21)] {
        check(&mesh.graph, &r, start, mesh.vertex_at(i, j).expect("goal"));
    }
    let chart = generate_sphere_chart(&SphereChartSpec { fineness: 16 }).expect("chart");
    let start = chart.snap(SWEEP_START.0, SWEEP_START.1);
    let r = basic_sstar(&chart.graph, start, &SearchConfig::default()).expect("search");
    for (phi, theta) in [SWEEP_GOAL, (0.6, 1.0), (2.0, 2.5), (1.2, 0.4), (2.4, 5.0)] {
        if let Some(e) = check(&chart.graph, &r, start, chart.snap(phi, theta)) {
            sphere_worst = sphere_worst.max(e);
        }
    }
    outcome(
        flat_worst <= 1e-6 && sphere_worst <= 1e-3 && shape_failures == 0 && errors == 0,
        format!(
            "{paths} paths, flat max rel {flat_worst:.3e} (<=1e-6), sphere f=16 max rel {sphere_worst:.3e} (<=1e-3), shape failures {shape_failures}, errors {errors}"
        ),
    )
}

fn unexpansion() -> Outcome {
    let g = MetricGraph::from_edges(4, [(0, 1, 1.0), (0, 3, 2.2), (1, 3, 1.9), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
    let q3 = VertexId(2);
    // Stopping at q3 records the label it had when first expanded.
    let early = basic_sstar(&g, VertexId(0), &SearchConfig::default().with_goals([q3])).unwrap();
    let full = basic_sstar(&g, VertexId(0), &SearchConfig::default()).unwrap();
    let reexp = full.counters.re_expansions;
    let improved = full.dbar(q3) < early.dbar(q3) - 1e-9;
    let through = full.came_from(q3).map(|c| c.simplex.clone()) == Some(Simplex::from([1, 3]));
    outcome(
        early.termination == Termination::GoalReached && reexp >= 1 && improved && through,
        format!("re-expansions {reexp}, label at q3 {:.6} -> {:.6}", early.dbar(q3), full.dbar(q3)),
    )
}

fn performance() -> Outcome {
    let mut points = Vec::new();
    let mut big = Duration::ZERO;
    for size in [25, 50, 100] {
        let mesh = generate_plane(&PlaneMeshSpec::new(size, size)).expect("plane");
        let start = mesh.vertex_at(size / 2, size / 2).unwrap();
        let t = Instant::now();
        let r = basic_sstar(&mesh.graph, start, &SearchConfig::default()).expect("search");
        if size == 100 {
            big = t.elapsed();
        }
        points.push(((mesh.graph.vertex_count() as f64).ln(), (r.counters.expansions as f64).ln()));
    }
    let n = points.len() as f64;
    let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    outcome(
        big <= Duration::from_secs(10) && (slope - 1.0).abs() <= 0.2,
        format!("100x100 in {:.2}s (<=10s), expansions log-log slope {slope:.3}", big.as_secs_f64()),
    )
}

type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("dijkstra dominance", dijkstra_dominance, 30),
        ("distance-through-simplex oracle", oracle_equivalence, 120),
        ("embedding isometry", embedding_isometry, 10),
        ("maximal simplices", maximal_simplices_match, 30),
        ("flat-plane accuracy", flat_plane_accuracy, 60),
        ("sphere convergence", sphere_convergence, 300),
        ("path reconstruction", path_reconstruction, 30),
        ("un-expansion", unexpansion, 1),
        ("performance", performance, 60),
    ];
    let mut all = true;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        let pass = o.pass && secs < *budget as f64;
        all &= pass;
        println!(
            "criterion {} {name}: {} ({}; {secs:.2}s of {budget}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
