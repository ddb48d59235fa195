//! Experiment orchestration: reproducible sweeps over instance grids with
//! JSON-lines trial records and CSV summaries.
//!
//! Every trial derives its seed from the master seed and the trial's global
//! ordinal, and aggregation runs over trials in ordinal order, so summaries
//! are bit-identical across runs and worker counts. Wall-clock time is
//! recorded per trial but never aggregated: cost comparisons use comparison
//! counts, which are machine-independent.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::mu_of;
use crate::graph::AlphaGraph;
use crate::instance::{gen_adversarial, gen_planted, sample_sphere, InstanceSpec};
use crate::rng::{derive_seed, rng_from_seed};
use crate::search::{query, suggested_restarts, tour_gamma_profile, QueryConfig};
use crate::tradeoffs::{hash_rho_q, sieving_curve, sieving_grid, sieving_optimum, sparse_graph_rho_q};
use crate::Result;

/// What an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Success rates of planted queries on a grid of (n, density) cells.
    SuccessSweep,
    /// Success sweep across n plus an OLS fit of log2(comparisons) vs log2(n).
    ExponentFit,
    /// Distribution of the inner product at which tours stall.
    GammaProfile,
    /// Structural bucket statistics across random datasets.
    BucketStats,
    /// The lattice-sieving exponent table (analytic; no trials).
    SieveCurve,
    /// The sparse frontier table (analytic; no trials).
    TradeoffTable,
    /// Failure of single-tour search on the adversarial instance.
    AdversarialDemo,
}

/// A grid experiment specification.
///
/// Graph density is given either as `kappa` (alpha = kappa * mu(n, d)) or as
/// a fixed `alpha`; the planted inner product either as `gamma_star` or via
/// the approximation factor `c` (gamma_star = 1 - 1/c^2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n_values: Vec<usize>,
    pub d: u32,
    #[serde(default)]
    pub gamma_star: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Tour budget per query; defaults per kind.
    #[serde(default)]
    pub restarts: Option<usize>,
    /// Trials per grid cell (queries for sweeps, datasets for bucket stats,
    /// tours per query for gamma profiles).
    pub trials: usize,
    pub seed: u64,
    /// Adversarial perturbation scale.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Sieve-curve grid step.
    #[serde(default)]
    pub step: Option<f64>,
    /// Output base path; `<out>.jsonl` and `<out>.csv` are written when set.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// One trial: instance parameters plus the walk outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub n: usize,
    pub d: u32,
    pub alpha: f64,
    pub gamma_star: f64,
    pub restart_budget: usize,
    pub seed: u64,
    pub returned_index: usize,
    pub returned_gamma: f64,
    pub success: bool,
    pub restarts_used: usize,
    pub total_steps: usize,
    pub comparisons: u64,
    /// True when brute force confirms the returned point is the planted one
    /// or attains the target inner product; `None` when not checked.
    pub brute_force_ok: Option<bool>,
    /// Wall-clock nanoseconds for the trial (recorded, never asserted).
    pub wall_ns: u64,
}

/// Per-cell aggregate over trials. Wall-clock is deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub cell: usize,
    pub n: usize,
    pub d: u32,
    pub alpha: f64,
    pub gamma_star: f64,
    pub restart_budget: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub per_tour_rate: f64,
    pub mean_comparisons: f64,
    pub mean_steps: f64,
    pub mean_restarts_used: f64,
    /// Median stalled inner product (gamma profiles only).
    pub median_final_gamma: Option<f64>,
    /// Analytic stall level for the cell's (mu, alpha).
    pub gamma_max_ref: Option<f64>,
}

/// Least-squares slope of log2(measured) against log2(n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% confidence interval on the slope.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub points: usize,
}

/// Everything a run produces, with the file paths when output was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub cells: Vec<CellAggregate>,
    pub fit: Option<ExponentFit>,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub jsonl_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

/// Ordinary least squares on (log2 n, log2 measured).
///
/// Needs at least 3 points with distinct n and positive measurements. The
/// interval uses the t distribution on `points - 2` degrees of freedom.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::invalid("exponent fit needs at least 3 points"));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, measured) in points {
        if !(n > 0.0 && measured > 0.0) {
            return Err(Error::domain(format!(
                "exponent fit needs positive data, got ({n}, {measured})"
            )));
        }
        xs.push(n.log2());
        ys.push(measured.log2());
    }
    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx <= 1e-12 {
        return Err(Error::invalid("exponent fit needs distinct n values"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (points.len() - 2) as f64;
    let stderr = (rss / dof / sxx).sqrt();
    let t = t_quantile_975(points.len() - 2);
    Ok(ExponentFit {
        slope,
        intercept,
        slope_stderr: stderr,
        ci_lo: slope - t * stderr,
        ci_hi: slope + t * stderr,
        points: points.len(),
    })
}

/// 97.5% quantile of Student's t.
fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= 30 {
        TABLE[dof - 1]
    } else {
        1.96
    }
}

/// Runs the experiment; writes `<out>.jsonl` and `<out>.csv` when requested.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput> {
    validate(spec)?;
    match spec.kind {
        ExperimentKind::SuccessSweep | ExperimentKind::ExponentFit => run_sweep(spec),
        ExperimentKind::GammaProfile => run_gamma_profile(spec),
        ExperimentKind::BucketStats => run_bucket_stats(spec),
        ExperimentKind::AdversarialDemo => run_adversarial(spec),
        ExperimentKind::SieveCurve => run_sieve_curve(spec),
        ExperimentKind::TradeoffTable => run_tradeoff_table(spec),
    }
}

fn validate(spec: &ExperimentSpec) -> Result<()> {
    let analytic = matches!(
        spec.kind,
        ExperimentKind::SieveCurve | ExperimentKind::TradeoffTable
    );
    if !analytic {
        if spec.n_values.is_empty() {
            return Err(Error::invalid("grid must contain at least one n"));
        }
        if spec.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if spec.d < 2 {
            return Err(Error::invalid("d must be >= 2"));
        }
    }
    if spec.gamma_star.is_some() && spec.c.is_some() {
        return Err(Error::invalid("give gamma_star or c, not both"));
    }
    if spec.kappa.is_some() && spec.alpha.is_some() {
        return Err(Error::invalid("give kappa or alpha, not both"));
    }
    Ok(())
}

fn resolve_gamma_star(spec: &ExperimentSpec) -> Result<f64> {
    match (spec.gamma_star, spec.c) {
        (Some(g), None) => Ok(g),
        (None, Some(c)) if c > 1.0 => Ok(1.0 - 1.0 / (c * c)),
        (None, Some(c)) => Err(Error::domain(format!("c = {c} must be > 1"))),
        (None, None) => Err(Error::invalid("gamma_star or c is required")),
        _ => unreachable!(),
    }
}

fn resolve_alpha(spec: &ExperimentSpec, n: usize) -> Result<f64> {
    match (spec.alpha, spec.kappa) {
        (Some(a), None) => Ok(a),
        (None, Some(k)) => Ok(k * mu_of(n as f64, spec.d)?),
        (None, None) => Err(Error::invalid("kappa or alpha is required")),
        _ => unreachable!(),
    }
}

fn run_sweep(spec: &ExperimentSpec) -> Result<RunOutput> {
    let gamma_star = resolve_gamma_star(spec)?;
    let mut all_records = Vec::new();
    let mut cells = Vec::new();

    for (cell, &n) in spec.n_values.iter().enumerate() {
        let alpha = resolve_alpha(spec, n)?;
        // tour budget: explicit, or the analytic ~4/r estimate for the cell
        let restarts = match spec.restarts {
            Some(r) => r,
            None => suggested_restarts(spec.d, alpha, gamma_star, mu_of(n as f64, spec.d)?)?,
        };
        let records: Vec<TrialRecord> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| -> Result<TrialRecord> {
                let ordinal = (cell * spec.trials + trial) as u64;
                let seed = derive_seed(spec.seed, ordinal);
                let started = Instant::now();
                let ispec = InstanceSpec::with_gamma_star(n, spec.d, gamma_star, seed)?;
                let ds = gen_planted(&ispec)?;
                let g = AlphaGraph::build(&ds, alpha)?;
                let planted = ds.planted.as_ref().expect("planted instance");
                let cfg = QueryConfig {
                    gamma_star: Some(planted.gamma_star),
                    max_restarts: restarts,
                    seed: derive_seed(seed, 1),
                    ..QueryConfig::default()
                };
                let res = query(&g, &planted.query, &cfg)?;
                let brute_force_ok = if res.success {
                    let (best_idx, _) = ds.nearest(&planted.query);
                    Some(
                        res.returned_index == best_idx
                            || res.returned_gamma >= planted.gamma_star - 1e-9,
                    )
                } else {
                    None
                };
                Ok(TrialRecord {
                    cell,
                    trial,
                    n,
                    d: spec.d,
                    alpha,
                    gamma_star,
                    restart_budget: restarts,
                    seed,
                    returned_index: res.returned_index,
                    returned_gamma: res.returned_gamma,
                    success: res.success,
                    restarts_used: res.restarts_used,
                    total_steps: res.total_steps,
                    comparisons: res.comparisons,
                    brute_force_ok,
                    wall_ns: started.elapsed().as_nanos() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(aggregate(cell, n, spec.d, alpha, gamma_star, restarts, &records, None));
        all_records.extend(records);
    }

    let fit = if spec.kind == ExperimentKind::ExponentFit {
        let pts: Vec<(f64, f64)> = cells
            .iter()
            .map(|c| (c.n as f64, c.mean_comparisons))
            .collect();
        Some(fit_exponent(&pts)?)
    } else {
        None
    };

    let header = sweep_header();
    let rows: Vec<Vec<String>> = cells.iter().map(sweep_row).collect();
    finish(spec, cells, fit, header, rows, &all_records)
}

fn run_gamma_profile(spec: &ExperimentSpec) -> Result<RunOutput> {
    // trials = tours per query; one dataset per n, fresh random query per cell
    let restarts = spec.restarts.unwrap_or(1);
    let queries_per_n = restarts.max(1);
    let mut all_records = Vec::new();
    let mut cells = Vec::new();

    for (cell_id, &n) in spec.n_values.iter().enumerate() {
        let alpha = resolve_alpha(spec, n)?;
        let mu = mu_of(n as f64, spec.d)?;
        let gamma_max_ref = crate::geometry::gamma_max(mu, alpha)?;
        let base_seed = derive_seed(spec.seed, n as u64);
        let ispec = InstanceSpec::with_gamma_star(n, spec.d, 0.5, base_seed)?;
        let ds = gen_planted(&ispec)?;
        let g = AlphaGraph::build(&ds, alpha)?;

        let mut final_gammas = Vec::new();
        let mut records = Vec::new();
        for qi in 0..queries_per_n {
            let qseed = derive_seed(base_seed, 1000 + qi as u64);
            // plain random queries: the stall height must reflect the bulk
            // dataset geometry, not a planted partner
            let q = sample_sphere(spec.d, &mut rng_from_seed(qseed))?;
            let cfg = QueryConfig {
                gamma_star: None,
                max_restarts: spec.trials,
                seed: derive_seed(qseed, 7),
                ..QueryConfig::default()
            };
            let started = Instant::now();
            let tours = tour_gamma_profile(&g, &q, &cfg)?;
            let wall = started.elapsed().as_nanos() as u64 / tours.len().max(1) as u64;
            for (ti, tour) in tours.iter().enumerate() {
                let last = *tour.gammas.last().expect("tour has a start gamma");
                if tour.stalled {
                    final_gammas.push(last);
                }
                records.push(TrialRecord {
                    cell: cell_id,
                    trial: qi * spec.trials + ti,
                    n,
                    d: spec.d,
                    alpha,
                    gamma_star: f64::NAN,
                    restart_budget: spec.trials,
                    seed: qseed,
                    returned_index: tour.end_index,
                    returned_gamma: last,
                    success: false,
                    restarts_used: ti,
                    total_steps: tour.steps,
                    comparisons: tour.comparisons,
                    brute_force_ok: None,
                    wall_ns: wall,
                });
            }
        }
        final_gammas.sort_by(f64::total_cmp);
        let median = if final_gammas.is_empty() {
            f64::NAN
        } else {
            final_gammas[final_gammas.len() / 2]
        };
        cells.push(CellAggregate {
            cell: cell_id,
            n,
            d: spec.d,
            alpha,
            gamma_star: f64::NAN,
            restart_budget: spec.trials,
            trials: records.len(),
            success_rate: 0.0,
            per_tour_rate: 0.0,
            mean_comparisons: 0.0,
            mean_steps: records.iter().map(|r| r.total_steps as f64).sum::<f64>()
                / records.len().max(1) as f64,
            mean_restarts_used: 0.0,
            median_final_gamma: Some(median),
            gamma_max_ref: Some(gamma_max_ref),
        });
        all_records.extend(records);
    }

    let header = vec![
        "cell".into(),
        "n".into(),
        "d".into(),
        "alpha".into(),
        "tours".into(),
        "mean_steps".into(),
        "median_final_gamma".into(),
        "gamma_max_ref".into(),
    ];
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.cell.to_string(),
                c.n.to_string(),
                c.d.to_string(),
                fmt6(c.alpha),
                c.trials.to_string(),
                fmt6(c.mean_steps),
                fmt6(c.median_final_gamma.unwrap_or(f64::NAN)),
                fmt6(c.gamma_max_ref.unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    finish(spec, cells, None, header, rows, &all_records)
}

fn run_bucket_stats(spec: &ExperimentSpec) -> Result<RunOutput> {
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for (cell, &n) in spec.n_values.iter().enumerate() {
        let alpha = resolve_alpha(spec, n)?;
        let stats: Vec<crate::graph::GraphStats> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| -> Result<crate::graph::GraphStats> {
                let seed = derive_seed(spec.seed, (cell * spec.trials + trial) as u64);
                let ispec = InstanceSpec::with_gamma_star(n, spec.d, 0.5, seed)?;
                let ds = gen_planted(&ispec)?;
                AlphaGraph::build(&ds, alpha)?.stats()
            })
            .collect::<Result<Vec<_>>>()?;
        let k = stats.len() as f64;
        let edge_mean = stats.iter().map(|s| s.edge_count as f64).sum::<f64>() / k;
        let bucket_mean = stats.iter().map(|s| s.bucket_mean).sum::<f64>() / k;
        let bucket_max_mean = stats.iter().map(|s| s.bucket_max as f64).sum::<f64>() / k;
        let expected = stats[0].expected_bucket;
        rows.push(vec![
            cell.to_string(),
            n.to_string(),
            spec.d.to_string(),
            fmt6(alpha),
            spec.trials.to_string(),
            fmt6(edge_mean),
            fmt6(bucket_mean),
            fmt6(bucket_max_mean),
            fmt6(expected),
        ]);
        cells.push(CellAggregate {
            cell,
            n,
            d: spec.d,
            alpha,
            gamma_star: f64::NAN,
            restart_budget: 0,
            trials: spec.trials,
            success_rate: 0.0,
            per_tour_rate: 0.0,
            mean_comparisons: bucket_mean,
            mean_steps: 0.0,
            mean_restarts_used: 0.0,
            median_final_gamma: None,
            gamma_max_ref: None,
        });
    }
    let header = vec![
        "cell".into(),
        "n".into(),
        "d".into(),
        "alpha".into(),
        "trials".into(),
        "edge_mean".into(),
        "bucket_mean".into(),
        "bucket_max_mean".into(),
        "expected_bucket".into(),
    ];
    finish(spec, cells, None, header, rows, &[])
}

fn run_adversarial(spec: &ExperimentSpec) -> Result<RunOutput> {
    let eps = spec.eps.unwrap_or(1e-3);
    let restarts = spec.restarts.unwrap_or(1);
    let gamma_star = spec.gamma_star; // optional override; default measured
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    let mut all_records = Vec::new();
    for (cell, &n) in spec.n_values.iter().enumerate() {
        let alpha = spec.alpha.unwrap_or(0.5);
        let records: Vec<TrialRecord> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| -> Result<TrialRecord> {
                let seed = derive_seed(spec.seed, (cell * spec.trials + trial) as u64);
                let started = Instant::now();
                let ds = gen_adversarial(n, spec.d, eps, seed)?;
                let g = AlphaGraph::build(&ds, alpha)?;
                let planted = ds.planted.as_ref().expect("planted metadata");
                let cfg = QueryConfig {
                    gamma_star: Some(gamma_star.unwrap_or(planted.gamma_star)),
                    max_restarts: restarts,
                    seed: derive_seed(seed, 1),
                    ..QueryConfig::default()
                };
                let res = query(&g, &planted.query, &cfg)?;
                Ok(TrialRecord {
                    cell,
                    trial,
                    n,
                    d: spec.d,
                    alpha,
                    gamma_star: planted.gamma_star,
                    restart_budget: restarts,
                    seed,
                    returned_index: res.returned_index,
                    returned_gamma: res.returned_gamma,
                    success: res.success,
                    restarts_used: res.restarts_used,
                    total_steps: res.total_steps,
                    comparisons: res.comparisons,
                    brute_force_ok: None,
                    wall_ns: started.elapsed().as_nanos() as u64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let agg = aggregate(cell, n, spec.d, alpha, f64::NAN, restarts, &records, None);
        rows.push(vec![
            cell.to_string(),
            n.to_string(),
            spec.d.to_string(),
            fmt6(eps),
            spec.trials.to_string(),
            restarts.to_string(),
            fmt6(1.0 - agg.success_rate),
        ]);
        cells.push(agg);
        all_records.extend(records);
    }
    let header = vec![
        "cell".into(),
        "n".into(),
        "d".into(),
        "eps".into(),
        "trials".into(),
        "restarts".into(),
        "failure_rate".into(),
    ];
    finish(spec, cells, None, header, rows, &all_records)
}

fn run_sieve_curve(spec: &ExperimentSpec) -> Result<RunOutput> {
    let step = spec.step.unwrap_or(1e-4);
    let curve = sieving_curve(&sieving_grid(step))?;
    let opt = sieving_optimum(step)?;
    let header = vec![
        "alpha".into(),
        "gamma_max".into(),
        "time_exp".into(),
        "space_exp".into(),
    ];
    let mut rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| {
            vec![
                fmt6(p.alpha),
                fmt6(p.gamma_max),
                fmt6(p.time_exp),
                fmt6(p.space_exp),
            ]
        })
        .collect();
    // the optimum is appended as the final row so the table is self-contained
    rows.push(vec![
        fmt6(opt.alpha),
        fmt6(opt.gamma_max),
        fmt6(opt.time_exp),
        fmt6(opt.space_exp),
    ]);
    finish(spec, Vec::new(), None, header, rows, &[])
}

fn run_tradeoff_table(spec: &ExperimentSpec) -> Result<RunOutput> {
    let c = spec.c.ok_or_else(|| Error::invalid("tradeoff table requires c"))?;
    let step = spec.step.unwrap_or(0.01);
    let header = vec![
        "c".into(),
        "rho_s".into(),
        "rho_q_graph".into(),
        "rho_q_hash".into(),
    ];
    let mut rows = Vec::new();
    let mut rho_s = 0.0f64;
    while rho_s <= 1.0 + 1e-12 {
        let graph = sparse_graph_rho_q(c, rho_s.min(1.0))?;
        let hash = hash_rho_q(c, rho_s.min(1.0))?;
        rows.push(vec![
            fmt6(c),
            fmt6(rho_s.min(1.0)),
            fmt6(graph.rho_q),
            fmt6(hash.rho_q),
        ]);
        rho_s += step;
    }
    finish(spec, Vec::new(), None, header, rows, &[])
}

#[allow(clippy::too_many_arguments)]
fn aggregate(
    cell: usize,
    n: usize,
    d: u32,
    alpha: f64,
    gamma_star: f64,
    restart_budget: usize,
    records: &[TrialRecord],
    gamma_max_ref: Option<f64>,
) -> CellAggregate {
    let k = records.len() as f64;
    let successes = records.iter().filter(|r| r.success).count();
    let tours: u64 = records.iter().map(|r| r.restarts_used as u64 + 1).sum();
    CellAggregate {
        cell,
        n,
        d,
        alpha,
        gamma_star,
        restart_budget,
        trials: records.len(),
        success_rate: successes as f64 / k,
        per_tour_rate: successes as f64 / tours.max(1) as f64,
        mean_comparisons: records.iter().map(|r| r.comparisons as f64).sum::<f64>() / k,
        mean_steps: records.iter().map(|r| r.total_steps as f64).sum::<f64>() / k,
        mean_restarts_used: records.iter().map(|r| r.restarts_used as f64).sum::<f64>() / k,
        median_final_gamma: None,
        gamma_max_ref,
    }
}

fn sweep_header() -> Vec<String> {
    [
        "cell",
        "n",
        "d",
        "alpha",
        "gamma_star",
        "restart_budget",
        "trials",
        "success_rate",
        "per_tour_rate",
        "mean_comparisons",
        "mean_steps",
        "mean_restarts_used",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn sweep_row(c: &CellAggregate) -> Vec<String> {
    vec![
        c.cell.to_string(),
        c.n.to_string(),
        c.d.to_string(),
        fmt6(c.alpha),
        fmt6(c.gamma_star),
        c.restart_budget.to_string(),
        c.trials.to_string(),
        fmt6(c.success_rate),
        fmt6(c.per_tour_rate),
        fmt6(c.mean_comparisons),
        fmt6(c.mean_steps),
        fmt6(c.mean_restarts_used),
    ]
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn finish(
    spec: &ExperimentSpec,
    cells: Vec<CellAggregate>,
    fit: Option<ExponentFit>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    records: &[TrialRecord],
) -> Result<RunOutput> {
    let (mut jsonl_path, mut csv_path) = (None, None);
    if let Some(base) = &spec.out {
        let jp = base.with_extension("jsonl");
        let cp = base.with_extension("csv");
        let mut jw = std::io::BufWriter::new(std::fs::File::create(&jp)?);
        for r in records {
            serde_json::to_writer(&mut jw, r).map_err(|e| Error::invalid(e.to_string()))?;
            jw.write_all(b"\n")?;
        }
        jw.flush()?;
        write_csv(&cp, &header, &rows)?;
        jsonl_path = Some(jp);
        csv_path = Some(cp);
    }
    Ok(RunOutput {
        cells,
        fit,
        csv_header: header,
        csv_rows: rows,
        jsonl_path,
        csv_path,
    })
}

/// Writes a CSV with a single header row.
pub fn write_csv(path: impl AsRef<Path>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

use std::path::Path;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_powers() {
        let pts: Vec<(f64, f64)> = (10..16).map(|i| (2f64.powi(i), 2f64.powi(i))).collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.slope - 1.0).abs() <= 1e-12);
        let pts: Vec<(f64, f64)> = (10..16).map(|i| (2f64.powi(i), 7.5)).collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!(fit.slope.abs() <= 1e-12);
    }

    #[test]
    fn fit_covers_noisy_power_law() {
        use rand::Rng;
        let mut covered = 0;
        for resample in 0..20 {
            let mut rng = crate::rng::rng_from_seed(900 + resample);
            let pts: Vec<(f64, f64)> = (8..18)
                .map(|i| {
                    let n = 2f64.powi(i);
                    let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                    (n, n.powf(0.8) * noise)
                })
                .collect();
            let fit = fit_exponent(&pts).unwrap();
            if fit.ci_lo <= 0.8 && 0.8 <= fit.ci_hi {
                covered += 1;
            }
        }
        assert!(covered >= 17, "0.8 covered in only {covered}/20 resamples");
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_exponent(&[(1024.0, 5.0), (2048.0, 6.0)]).is_err());
        assert!(fit_exponent(&[(1024.0, 5.0), (1024.0, 6.0), (1024.0, 7.0)]).is_err());
        assert!(fit_exponent(&[(1024.0, 5.0), (2048.0, -6.0), (4096.0, 7.0)]).is_err());
    }

    #[test]
    fn sweep_single_cell_single_trial() {
        let spec = ExperimentSpec {
            kind: ExperimentKind::SuccessSweep,
            n_values: vec![128],
            d: 16,
            gamma_star: Some(0.5),
            c: None,
            kappa: Some(0.6),
            alpha: None,
            restarts: Some(8),
            trials: 1,
            seed: 5,
            eps: None,
            step: None,
            out: None,
        };
        let out = run_experiment(&spec).unwrap();
        assert_eq!(out.cells.len(), 1);
        assert_eq!(out.cells[0].trials, 1);
    }

    #[test]
    fn summaries_are_reproducible() {
        let spec = ExperimentSpec {
            kind: ExperimentKind::SuccessSweep,
            n_values: vec![64, 128],
            d: 16,
            gamma_star: Some(0.5),
            c: None,
            kappa: Some(0.6),
            alpha: None,
            restarts: Some(4),
            trials: 6,
            seed: 42,
            eps: None,
            step: None,
            out: None,
        };
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.csv_rows, b.csv_rows);
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn worker_count_does_not_change_summary() {
        let spec = ExperimentSpec {
            kind: ExperimentKind::SuccessSweep,
            n_values: vec![64],
            d: 12,
            gamma_star: Some(0.5),
            c: None,
            kappa: Some(0.6),
            alpha: None,
            restarts: Some(4),
            trials: 8,
            seed: 7,
            eps: None,
            step: None,
            out: None,
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&spec))
            .unwrap();
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_experiment(&spec))
            .unwrap();
        assert_eq!(single.csv_rows, multi.csv_rows);
    }

    #[test]
    fn files_are_written() {
        let dir = std::env::temp_dir().join(format!("anng-exp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let spec = ExperimentSpec {
            kind: ExperimentKind::AdversarialDemo,
            n_values: vec![32],
            d: 8,
            gamma_star: None,
            c: None,
            kappa: None,
            alpha: Some(0.5),
            restarts: Some(1),
            trials: 5,
            seed: 11,
            eps: Some(1e-3),
            step: None,
            out: Some(dir.join("demo")),
        };
        let out = run_experiment(&spec).unwrap();
        let jsonl = std::fs::read_to_string(out.jsonl_path.unwrap()).unwrap();
        assert_eq!(jsonl.lines().count(), 5);
        for line in jsonl.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("comparisons").is_some());
            assert!(v.get("wall_ns").is_some());
        }
        let csv = std::fs::read_to_string(out.csv_path.unwrap()).unwrap();
        assert!(csv.starts_with("cell,n,d,eps,trials,restarts,failure_rate"));
        assert_eq!(csv.lines().count(), 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn sieve_curve_table() {
        let spec = ExperimentSpec {
            kind: ExperimentKind::SieveCurve,
            n_values: vec![],
            d: 0,
            gamma_star: None,
            c: None,
            kappa: None,
            alpha: None,
            restarts: None,
            trials: 0,
            seed: 0,
            eps: None,
            step: Some(1e-3),
            out: None,
        };
        let out = run_experiment(&spec).unwrap();
        assert_eq!(
            out.csv_header,
            vec!["alpha", "gamma_max", "time_exp", "space_exp"]
        );
        // final row is the optimum
        let last = out.csv_rows.last().unwrap();
        let alpha: f64 = last[0].parse().unwrap();
        assert!((alpha - 0.4101).abs() <= 5e-4);
    }
}
