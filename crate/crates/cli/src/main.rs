use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sstar::bench::{error_field, error_field_csv, fineness_sweep, sweep_csv, PlaneAccuracy, SWEEP_GOAL, SWEEP_START};
use sstar::oracle::run_oracle_check;
use sstar::reconstruct::reconstruct_path;
use sstar::search::{basic_sstar, SearchConfig, SearchResult};
use sstar::{GraphFormat, Method, MetricGraph, VertexId};

/// Shortest paths through the Rips complex of a metric graph.
#[derive(Parser)]
#[command(name = "sstar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search from a start vertex; write dbar.csv, counters.json and, with a goal, path.json.
    Solve(SolveArgs),
    /// Error fields of S* and Dijkstra on an obstacle-free plane patch.
    PlaneBench(PlaneArgs),
    /// Path costs between two sphere points across chart finenesses.
    SphereSweep(SweepArgs),
    /// Randomized cross-check of the fast routines against slow oracles.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Edge list (`<n>` then `<u> <v> <length>` lines) or JSON (`.json`).
    #[arg(long)]
    graph: PathBuf,
    /// Start vertex, by index or label.
    #[arg(long)]
    start: String,
    /// Goal vertex, by index or label; the search stops once it is settled.
    #[arg(long)]
    goal: Option<String>,
    #[arg(long, default_value_t = Method::Spherical)]
    method: Method,
    /// Largest simplex dimension the search may use; bigger simplices are split into faces.
    #[arg(long)]
    dim_cap: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlaneArgs {
    /// Lattice vertices per side.
    #[arg(long, default_value_t = 60)]
    size: usize,
    #[arg(long, default_value_t = Method::Spherical)]
    method: Method,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Chart finenesses, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,16,24,32,40,48,56,64,72,80")]
    fineness: Vec<usize>,
    /// Start point as `phi,theta` in radians.
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<f64>>,
    /// Goal point as `phi,theta` in radians.
    #[arg(long, value_delimiter = ',')]
    goal: Option<Vec<f64>>,
    #[arg(long, default_value_t = Method::Spherical)]
    method: Method,
    /// Also write sweep.csv here; the table always goes to standard output.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Exit with status 3 unless the S* cost is non-increasing in f within 1e-6.
    #[arg(long)]
    assert_convergence: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Simplex dimensions to sample, as `lo-hi` or a single number.
    #[arg(long, default_value = "2-5")]
    dims: String,
    /// Also write oracle_report.txt here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

enum Outcome {
    Done,
    Unreachable(String),
    CheckFailed(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::PlaneBench(a) => plane_bench(a),
        Command::SphereSweep(a) => sphere_sweep(a),
        Command::OracleCheck(a) => oracle_check(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Unreachable(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write(dir: &FsPath, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_graph(path: &FsPath) -> Result<MetricGraph> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => GraphFormat::Json,
        _ => GraphFormat::EdgeList,
    };
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    MetricGraph::load(file, format).with_context(|| format!("reading {}", path.display()))
}

fn resolve(g: &MetricGraph, name: &str) -> Result<VertexId> {
    let v = match name.parse::<usize>() {
        Ok(i) => VertexId(i),
        Err(_) => g.vertex_by_label(name).ok_or_else(|| anyhow!("no vertex labelled {name:?}"))?,
    };
    g.check_vertex(v)?;
    Ok(v)
}

fn counters_json(r: &SearchResult) -> String {
    let value = json!({
        "method": r.method.to_string(),
        "termination": r.termination,
        "counters": r.counters,
    });
    serde_json::to_string_pretty(&value).expect("counters serialize") + "\n"
}

fn solve(a: SolveArgs) -> Result<Outcome> {
    let g = load_graph(&a.graph)?;
    let start = resolve(&g, &a.start)?;
    let goal = a.goal.as_deref().map(|s| resolve(&g, s)).transpose()?;
    let mut config = SearchConfig::new(a.method).with_goals(goal);
    if let Some(cap) = a.dim_cap {
        config = config.with_dim_cap(cap);
    }
    let r = basic_sstar(&g, start, &config)?;

    let mut csv = String::from("vertex,dbar\n");
    for (v, d) in r.dbar.iter().enumerate() {
        let _ = writeln!(csv, "{v},{d}");
    }
    write(&a.out_dir, "dbar.csv", &csv)?;
    write(&a.out_dir, "counters.json", &counters_json(&r))?;

    let Some(goal) = goal else {
        return Ok(Outcome::Done);
    };
    if !r.is_reached(goal) {
        return Ok(Outcome::Unreachable(format!("goal {goal} is not reachable from {start}")));
    }
    let path = reconstruct_path(&g, &r, goal)?;
    write(&a.out_dir, "path.json", &(path.to_json() + "\n"))?;
    println!("dbar({goal}) = {}, path length {}, {} points", r.dbar(goal), path.total_length, path.points.len());
    Ok(Outcome::Done)
}

fn plane_bench(a: PlaneArgs) -> Result<Outcome> {
    let run = PlaneAccuracy::run(a.size, a.method)?;
    let coords: Vec<(f64, f64)> = run.mesh.coords.iter().map(|c| (c[0], c[1])).collect();
    let mut summary = String::new();
    for (name, r) in [("sstar", &run.sstar), ("dijkstra", &run.dijkstra)] {
        write(&a.out_dir, &format!("plane_{name}.csv"), &error_field_csv(("x", "y"), &coords, &r.dbar, &run.truth))?;
        let err = error_field(r, &run.truth);
        let far = run.far_field(a.size as f64 / 3.0);
        let worst = far.iter().map(|v| err[v.index()].abs()).fold(0.0, f64::max);
        let _ = writeln!(summary, "{name}: max relative error {worst:e} over {} far-field vertices", far.len());
    }
    write(&a.out_dir, "plane_counters.json", &counters_json(&run.sstar))?;
    print!("{summary}");
    Ok(Outcome::Done)
}

fn point(v: Option<Vec<f64>>, default: (f64, f64)) -> Result<(f64, f64)> {
    match v.as_deref() {
        None => Ok(default),
        Some(&[phi, theta]) => Ok((phi, theta)),
        Some(other) => bail!("expected `phi,theta`, got {} values", other.len()),
    }
}

fn sphere_sweep(a: SweepArgs) -> Result<Outcome> {
    if a.fineness.is_empty() {
        bail!("no fineness values given");
    }
    let rows = fineness_sweep(&a.fineness, point(a.start, SWEEP_START)?, point(a.goal, SWEEP_GOAL)?, a.method)?;
    let csv = sweep_csv(&rows);
    if let Some(dir) = &a.out_dir {
        write(dir, "sweep.csv", &csv)?;
    }
    print!("{csv}");
    if a.assert_convergence {
        if let Some(w) = rows.windows(2).find(|w| w[1].cost_sstar > w[0].cost_sstar + 1e-6) {
            return Ok(Outcome::CheckFailed(format!(
                "S* cost rose from {} at f={} to {} at f={}",
                w[0].cost_sstar, w[0].f, w[1].cost_sstar, w[1].f
            )));
        }
    }
    Ok(Outcome::Done)
}

fn parse_dims(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || anyhow!("bad --dims {s:?}, expected `lo-hi` or a single number");
    let (lo, hi) = match s.split_once('-') {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let d = s.trim().parse().map_err(|_| bad())?;
            (d, d)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn oracle_check(a: OracleArgs) -> Result<Outcome> {
    let dims = parse_dims(&a.dims)?;
    let report = run_oracle_check(a.seed, a.trials, dims, a.inject_fault);
    let text = report.render();
    if let Some(dir) = &a.out_dir {
        write(dir, "oracle_report.txt", &text)?;
    }
    print!("{text}");
    if report.passed() {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::CheckFailed(format!("{} oracle mismatches", report.failures.len())))
    }
}
