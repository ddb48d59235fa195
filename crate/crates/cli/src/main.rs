//! `anng`: alpha-near-neighbor graphs on the unit sphere.
//!
//! Subcommands: `gen` (datasets), `build` (graphs), `query` (greedy search),
//! `bench` (experiment grids), `tradeoff` (analytic frontiers), `sieve-curve`
//! (the lattice-sieving exponent table), `volume` (cap/wedge evaluation).
//!
//! Exit codes: 0 on success, 2 on validation errors (bad arguments or file
//! contents), 1 on runtime failures such as I/O.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anng_core::experiment::{run_experiment, write_csv, ExperimentKind, ExperimentSpec};
use anng_core::geometry::{
    cap_bits, cap_volume_exact, cap_volume_mc, wedge_bits, wedge_volume_mc, CapParams, WedgeParams,
};
use anng_core::instance::{gen_adversarial, gen_planted, plant_queries, InstanceSpec};
use anng_core::io::{load_dataset, load_graph, save_dataset, save_graph};
use anng_core::search::{query as run_query, QueryConfig};
use anng_core::tradeoffs::{hash_rho_q, sieving_curve, sieving_grid, sieving_optimum, sparse_graph_rho_q};
use anng_core::{AlphaGraph, Error};

#[derive(Parser)]
#[command(name = "anng", version, about = "Near neighbor search on the sphere via alpha-NN graphs")]
struct Cli {
    /// Worker threads for parallel sections (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file (planted by default, adversarial on request).
    Gen(GenArgs),
    /// Build the alpha-NN graph over a dataset file.
    Build(BuildArgs),
    /// Run greedy-walk queries against a graph; emits JSON lines.
    Query(QueryArgs),
    /// Run an experiment grid; writes <out>.jsonl and <out>.csv.
    Bench(BenchArgs),
    /// Analytic time-space trade-off tables (CSV).
    Tradeoff(TradeoffArgs),
    /// The lattice-sieving exponent curve with its minimum-time point.
    SieveCurve(SieveCurveArgs),
    /// Evaluate cap or wedge volumes (closed form and Monte-Carlo).
    Volume(VolumeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of points.
    #[arg(long)]
    n: usize,
    /// Dimension.
    #[arg(long)]
    d: u32,
    /// Approximation factor (planted inner product 1 - 1/c^2).
    #[arg(long, conflicts_with = "gamma_star")]
    c: Option<f64>,
    /// Planted inner product.
    #[arg(long)]
    gamma_star: Option<f64>,
    /// Generate the adversarial instance instead of a planted one.
    #[arg(long, conflicts_with_all = ["c", "gamma_star"])]
    adversarial: bool,
    /// Angular perturbation for the adversarial instance.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Edge threshold: points with inner product >= alpha are adjacent.
    #[arg(long)]
    alpha: f64,
    /// Input dataset path.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output graph path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Graph file (adjacency only; coordinates come from the dataset).
    #[arg(long)]
    graph: PathBuf,
    /// Dataset the graph was built over.
    #[arg(long)]
    dataset: PathBuf,
    /// Target inner product; defaults to the dataset's planted value.
    #[arg(long, conflicts_with = "exact")]
    gamma_star: Option<f64>,
    /// Exact-NN mode: no target, return the best vertex over all tours.
    #[arg(long)]
    exact: bool,
    /// Tour budget per query.
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    /// Generate this many fresh planted queries instead of using the stored one.
    #[arg(long)]
    queries: Option<usize>,
    /// Record the per-step inner-product trajectory in each record.
    #[arg(long)]
    trajectory: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(after_help = "\
CSV summary columns by kind:
  success-sweep / exponent-fit:
    cell            grid cell ordinal
    n, d            dataset size and dimension
    alpha           graph threshold used for the cell
    gamma_star      planted inner product
    restart_budget  tour budget per query
    trials          queries run in the cell
    success_rate    fraction of queries that reached gamma_star
    per_tour_rate   successes divided by total tours
    mean_comparisons  mean bucket entries scanned per query
    mean_steps      mean accepted walk steps per query
    mean_restarts_used  mean extra tours beyond the first
  gamma-profile:
    cell, n, d, alpha, tours, mean_steps, median_final_gamma, gamma_max_ref
  bucket-stats:
    cell, n, d, alpha, trials, edge_mean, bucket_mean, bucket_max_mean,
    expected_bucket (n times the exact cap volume)
  adversarial-demo:
    cell, n, d, eps, trials, restarts, failure_rate

The JSONL file holds one record per trial with the full walk outcome
(returned_index, returned_gamma, success, restarts_used, total_steps,
comparisons, brute_force_ok, wall_ns) plus the instance parameters.")]
struct BenchArgs {
    /// Experiment kind.
    #[arg(long, value_enum)]
    kind: BenchKind,
    /// Comma-separated dataset sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    d: u32,
    #[arg(long, conflicts_with = "gamma_star")]
    c: Option<f64>,
    #[arg(long)]
    gamma_star: Option<f64>,
    /// Graph density as a multiple of mu(n, d).
    #[arg(long, conflicts_with = "alpha")]
    kappa: Option<f64>,
    /// Graph density as a fixed threshold.
    #[arg(long)]
    alpha: Option<f64>,
    /// Tour budget; defaults to the analytic ~4/r estimate per cell.
    #[arg(long)]
    restarts: Option<usize>,
    /// Trials per grid cell (tours per query for gamma profiles).
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Adversarial perturbation.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output base path: writes <out>.jsonl and <out>.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    SuccessSweep,
    ExponentFit,
    GammaProfile,
    BucketStats,
    AdversarialDemo,
}

#[derive(Args)]
#[command(after_help = "\
CSV columns by mode (single header row, %.6f values):
  sparse: c, rho_s, rho_q_graph, rho_q_hash
          (query exponent of the graph and hash frontiers at each extra-space
           exponent rho_s; query time is n^rho_q, space n^(1+rho_s))
  hash:   c, rho_s, rho_q_hash
  sieve:  alpha, gamma_max, time_exp, space_exp
          (bits per dimension at density log2(n)/d = (1/2) log2(4/3) with
           target inner product 1/2; the minimum-time point is reported
           separately on stdout/stderr)")]
struct TradeoffArgs {
    #[arg(long, value_enum)]
    mode: TradeoffMode,
    /// Approximation factor (sparse and hash modes).
    #[arg(long)]
    c: Option<f64>,
    /// Density log2(n)/d (reserved for dense tables; sieve mode fixes it).
    #[arg(long)]
    lambda: Option<f64>,
    /// Target inner product (dense tables; sieve mode fixes it to 1/2).
    #[arg(long)]
    gamma_star: Option<f64>,
    /// Grid step: rho_s step for sparse/hash, alpha step for sieve.
    #[arg(long)]
    step: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum TradeoffMode {
    Sparse,
    Hash,
    Sieve,
}

#[derive(Args)]
struct SieveCurveArgs {
    /// Alpha grid step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VolumeArgs {
    #[command(subcommand)]
    shape: VolumeShape,
    /// Write the JSON record here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VolumeShape {
    /// Spherical cap C(alpha) on S^(d-1).
    Cap {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        d: u32,
        /// Add a Monte-Carlo estimate.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Wedge W(alpha, beta, gamma): intersection of two caps at angle gamma.
    Wedge {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("anng: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anng: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::SieveCurve(a) => cmd_sieve_curve(a),
        Command::Volume(a) => cmd_volume(a),
    }
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    let ds = if a.adversarial {
        gen_adversarial(a.n, a.d, a.eps, a.seed)?
    } else {
        let spec = match (a.c, a.gamma_star) {
            (Some(c), None) => InstanceSpec::with_c(a.n, a.d, c, a.seed)?,
            (None, Some(g)) => InstanceSpec::with_gamma_star(a.n, a.d, g, a.seed)?,
            _ => {
                return Err(Error::InvalidArgument(
                    "give exactly one of --c or --gamma-star (or --adversarial)".into(),
                ))
            }
        };
        gen_planted(&spec)?
    };
    save_dataset(&a.out, &ds)?;
    let planted = ds.planted.as_ref().expect("generators attach metadata");
    eprintln!(
        "wrote {} points (d = {}, planted index {}, gamma* = {:.6}) to {}",
        ds.len(),
        ds.dim(),
        planted.planted_index,
        planted.gamma_star,
        a.out.display()
    );
    Ok(())
}

fn cmd_build(a: BuildArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.input)?;
    let g = AlphaGraph::build(&ds, a.alpha)?;
    save_graph(&a.out, &g)?;
    let s = g.stats()?;
    eprintln!(
        "built graph: n = {}, alpha = {}, edges = {}, bucket mean/max = {:.1}/{} (expected {:.1})",
        g.len(),
        a.alpha,
        s.edge_count,
        s.bucket_mean,
        s.bucket_max,
        s.expected_bucket
    );
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.dataset)?;
    let g = load_graph(&a.graph, &ds)?;

    let mut jobs: Vec<(anng_core::UnitVector, Option<f64>, Option<usize>)> = Vec::new();
    if let Some(k) = a.queries {
        let gs = a
            .gamma_star
            .or_else(|| ds.planted.as_ref().map(|p| p.gamma_star))
            .ok_or_else(|| {
                Error::InvalidArgument("--queries needs --gamma-star or planted metadata".into())
            })?;
        for pq in plant_queries(&ds, k, gs, a.seed)? {
            jobs.push((pq.query, Some(pq.gamma_star), Some(pq.planted_index)));
        }
    } else {
        let planted = ds.planted.as_ref().ok_or_else(|| {
            Error::InvalidArgument(
                "dataset has no planted query; use --queries to generate some".into(),
            )
        })?;
        jobs.push((
            planted.query.clone(),
            Some(a.gamma_star.unwrap_or(planted.gamma_star)),
            Some(planted.planted_index),
        ));
    }

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for (i, (q, gs, planted_index)) in jobs.iter().enumerate() {
        let cfg = QueryConfig {
            gamma_star: if a.exact { None } else { *gs },
            max_restarts: a.restarts,
            seed: anng_core::rng::derive_seed(a.seed, i as u64),
            record_trajectory: a.trajectory,
            ..QueryConfig::default()
        };
        let res = run_query(&g, q, &cfg)?;
        let (brute_index, brute_gamma) = ds.nearest(q);
        let mut record = serde_json::to_value(&res).map_err(to_invalid)?;
        let obj = record.as_object_mut().expect("WalkResult serializes to an object");
        obj.insert("query".into(), i.into());
        obj.insert("planted_index".into(), (*planted_index).into());
        obj.insert("brute_force_index".into(), brute_index.into());
        obj.insert("brute_force_gamma".into(), brute_gamma.into());
        obj.insert(
            "found_exact_nn".into(),
            (res.returned_index == brute_index).into(),
        );
        writeln!(out, "{}", serde_json::Value::Object(obj.clone())).map_err(Error::Io)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Error> {
    let kind = match a.kind {
        BenchKind::SuccessSweep => ExperimentKind::SuccessSweep,
        BenchKind::ExponentFit => ExperimentKind::ExponentFit,
        BenchKind::GammaProfile => ExperimentKind::GammaProfile,
        BenchKind::BucketStats => ExperimentKind::BucketStats,
        BenchKind::AdversarialDemo => ExperimentKind::AdversarialDemo,
    };
    let spec = ExperimentSpec {
        kind,
        n_values: a.n,
        d: a.d,
        gamma_star: a.gamma_star,
        c: a.c,
        kappa: a.kappa,
        alpha: a.alpha,
        restarts: a.restarts,
        trials: a.trials,
        seed: a.seed,
        eps: a.eps,
        step: None,
        out: Some(a.out.clone()),
    };
    let out = run_experiment(&spec)?;
    if let Some(fit) = &out.fit {
        println!(
            "exponent fit: slope {:.4} (95% CI [{:.4}, {:.4}], stderr {:.4}, {} points)",
            fit.slope, fit.ci_lo, fit.ci_hi, fit.slope_stderr, fit.points
        );
    }
    for (cell, row) in out.csv_rows.iter().enumerate() {
        eprintln!("cell {cell}: {}", row.join(","));
    }
    eprintln!(
        "wrote {} and {}",
        out.jsonl_path.as_deref().unwrap_or_else(|| std::path::Path::new("-")).display(),
        out.csv_path.as_deref().unwrap_or_else(|| std::path::Path::new("-")).display(),
    );
    Ok(())
}

fn cmd_tradeoff(a: TradeoffArgs) -> Result<(), Error> {
    match a.mode {
        TradeoffMode::Sparse | TradeoffMode::Hash => {
            let c = a
                .c
                .ok_or_else(|| Error::InvalidArgument("--c is required for sparse/hash".into()))?;
            let step = a.step.unwrap_or(0.01);
            if !(step > 0.0 && step <= 1.0) {
                return Err(Error::InvalidArgument(format!("bad rho_s step {step}")));
            }
            let (header, rows) = match a.mode {
                TradeoffMode::Sparse => {
                    let header = vec![
                        "c".to_string(),
                        "rho_s".into(),
                        "rho_q_graph".into(),
                        "rho_q_hash".into(),
                    ];
                    let mut rows = Vec::new();
                    let mut rho_s = 0.0f64;
                    while rho_s <= 1.0 + 1e-12 {
                        let r = rho_s.min(1.0);
                        rows.push(vec![
                            fmt6(c),
                            fmt6(r),
                            fmt6(sparse_graph_rho_q(c, r)?.rho_q),
                            fmt6(hash_rho_q(c, r)?.rho_q),
                        ]);
                        rho_s += step;
                    }
                    (header, rows)
                }
                TradeoffMode::Hash => {
                    let header = vec!["c".to_string(), "rho_s".into(), "rho_q_hash".into()];
                    let mut rows = Vec::new();
                    let mut rho_s = 0.0f64;
                    while rho_s <= 1.0 + 1e-12 {
                        let r = rho_s.min(1.0);
                        rows.push(vec![fmt6(c), fmt6(r), fmt6(hash_rho_q(c, r)?.rho_q)]);
                        rho_s += step;
                    }
                    (header, rows)
                }
                TradeoffMode::Sieve => unreachable!(),
            };
            emit_csv(&a.out, &header, &rows)
        }
        TradeoffMode::Sieve => {
            if a.lambda.is_some() || a.gamma_star.is_some() {
                return Err(Error::InvalidArgument(
                    "sieve mode fixes lambda = (1/2) log2(4/3) and gamma_star = 1/2".into(),
                ));
            }
            emit_sieve(a.step.unwrap_or(1e-4), &a.out)
        }
    }
}

fn cmd_sieve_curve(a: SieveCurveArgs) -> Result<(), Error> {
    emit_sieve(a.step, &a.out)
}

/// Writes the sieving table and reports its minimum-time point: to stdout
/// when the table goes to a file, to stderr otherwise.
fn emit_sieve(step: f64, out: &Option<PathBuf>) -> Result<(), Error> {
    if !(step > 0.0 && step < 0.25) {
        return Err(Error::InvalidArgument(format!("bad alpha step {step}")));
    }
    let curve = sieving_curve(&sieving_grid(step))?;
    let opt = sieving_optimum(step)?;
    let header = vec![
        "alpha".to_string(),
        "gamma_max".into(),
        "time_exp".into(),
        "space_exp".into(),
    ];
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| vec![fmt6(p.alpha), fmt6(p.gamma_max), fmt6(p.time_exp), fmt6(p.space_exp)])
        .collect();
    emit_csv(out, &header, &rows)?;
    let line = format!(
        "optimum: alpha={:.6} time_exp={:.6} space_exp={:.6} gamma_max={:.6}",
        opt.alpha, opt.time_exp, opt.space_exp, opt.gamma_max
    );
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn cmd_volume(a: VolumeArgs) -> Result<(), Error> {
    let value = match a.shape {
        VolumeShape::Cap {
            alpha,
            d,
            mc,
            samples,
            seed,
        } => {
            let p = CapParams::new(alpha, d)?;
            let mut obj = serde_json::json!({
                "kind": "cap",
                "alpha": alpha,
                "d": d,
                "bits_per_dim": cap_bits(alpha)?,
                "exact": cap_volume_exact(p)?,
            });
            if mc {
                let est = cap_volume_mc(p, samples, seed)?;
                obj["mc_estimate"] = est.estimate.into();
                obj["mc_std_error"] = est.std_error.into();
                obj["mc_hits"] = est.hits.into();
                obj["mc_samples"] = est.samples.into();
            }
            obj
        }
        VolumeShape::Wedge {
            alpha,
            beta,
            gamma,
            d,
            mc,
            samples,
            seed,
        } => {
            let p = WedgeParams::new(alpha, beta, gamma, d)?;
            let mut obj = serde_json::json!({
                "kind": "wedge",
                "alpha": alpha,
                "beta": beta,
                "gamma": gamma,
                "d": d,
                "bits_per_dim": wedge_bits(alpha, beta, gamma)?,
            });
            if mc {
                let est = wedge_volume_mc(p, samples, seed)?;
                obj["mc_estimate"] = est.estimate.into();
                obj["mc_std_error"] = est.std_error.into();
                obj["mc_hits"] = est.hits.into();
                obj["mc_samples"] = est.samples.into();
                obj["mc_bits_per_dim"] = if est.estimate > 0.0 {
                    (est.estimate.log2() / f64::from(d)).into()
                } else {
                    serde_json::Value::Null
                };
            }
            obj
        }
    };
    match &a.out {
        Some(path) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(w, "{value}").map_err(Error::Io)?;
            w.flush()?;
        }
        None => println!("{value}"),
    }
    Ok(())
}

fn emit_csv(out: &Option<PathBuf>, header: &[String], rows: &[Vec<String>]) -> Result<(), Error> {
    match out {
        Some(path) => write_csv(path, header, rows),
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            writeln!(w, "{}", header.join(",")).map_err(Error::Io)?;
            for row in rows {
                writeln!(w, "{}", row.join(",")).map_err(Error::Io)?;
            }
            Ok(())
        }
    }
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn to_invalid(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(e.to_string())
}
