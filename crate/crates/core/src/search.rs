//! Greedy graph search with random restarts.
//!
//! A query runs *tours*: each tour starts at a uniformly random live vertex
//! and repeatedly scans the current vertex's bucket for a neighbor whose inner
//! product with the query improves on the current one by at least
//! `step_slack` (default 1/d). The first improving neighbor is adopted and the
//! scan restarts from its bucket; when a full scan finds none, the tour has
//! stalled. With a known target inner product `gamma_star` the query succeeds
//! as soon as any vertex reaches it; otherwise the best vertex encountered
//! across all tours is returned.
//!
//! Since every accepted step raises the inner product by at least the slack,
//! a tour takes at most 2/step_slack steps and revisits cannot cycle; no
//! visited-set is needed.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{cap_bits, gamma_max, wedge_bits};
use crate::graph::AlphaGraph;
use crate::instance::{PlantedQuery, UnitVector};
use crate::rng::{derive_seed, rng_from_seed};
use crate::Result;
use rand::Rng;

/// Query-time parameters. `step_slack` and `max_steps_per_tour` default to
/// 1/d and 2d when left unset.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryConfig {
    /// Known target inner product; `None` switches to exact-NN mode, where
    /// the best vertex seen over the whole tour budget is returned.
    pub gamma_star: Option<f64>,
    /// Total tour budget (the first tour counts); must be >= 1.
    pub max_restarts: usize,
    /// Minimum inner-product improvement per accepted step.
    pub step_slack: Option<f64>,
    /// Hard cap on accepted steps per tour.
    pub max_steps_per_tour: Option<usize>,
    /// Seed for start-vertex sampling.
    pub seed: u64,
    /// Scan the whole bucket and take the best improving neighbor instead of
    /// the first one.
    pub best_improvement: bool,
    /// Record the per-step inner-product trajectory in the result.
    pub record_trajectory: bool,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            gamma_star: None,
            max_restarts: 1,
            step_slack: None,
            max_steps_per_tour: None,
            seed: 0,
            best_improvement: false,
            record_trajectory: false,
        }
    }
}

impl QueryConfig {
    fn validate(&self, dim: usize) -> Result<(f64, usize)> {
        if self.max_restarts == 0 {
            return Err(Error::invalid("max_restarts must be >= 1"));
        }
        if let Some(g) = self.gamma_star {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::domain(format!("gamma_star = {g} not in (0, 1)")));
            }
        }
        let slack = match self.step_slack {
            Some(s) if s > 0.0 => s,
            Some(s) => return Err(Error::domain(format!("step_slack = {s} must be > 0"))),
            None => 1.0 / dim as f64,
        };
        let max_steps = match self.max_steps_per_tour {
            Some(0) => return Err(Error::invalid("max_steps_per_tour must be >= 1")),
            Some(m) => m,
            None => 2 * dim,
        };
        Ok((slack, max_steps))
    }
}

/// Outcome of one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkResult {
    /// Best vertex found (the successful vertex when `success` is set).
    pub returned_index: usize,
    /// Inner product of the returned vertex with the query.
    pub returned_gamma: f64,
    /// Whether the target inner product was reached (always false without a
    /// known `gamma_star`; callers in exact-NN mode check against brute force).
    pub success: bool,
    /// Tours started beyond the first.
    pub restarts_used: usize,
    /// Accepted steps across all tours.
    pub total_steps: usize,
    /// Bucket entries scanned (one inner product each) across all tours.
    pub comparisons: u64,
    /// Per-step inner products, when requested.
    pub trajectory_gammas: Option<Vec<f64>>,
}

/// One instrumented tour: the start vertex, every accepted step's inner
/// product (including the start), and how the tour ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourRecord {
    pub start_index: usize,
    pub end_index: usize,
    pub gammas: Vec<f64>,
    pub steps: usize,
    /// Bucket entries scanned during this tour.
    pub comparisons: u64,
    /// True if the tour ended on a full bucket scan without improvement
    /// (rather than by reaching the target or the step cap).
    pub stalled: bool,
}

struct TourOutcome {
    start_index: usize,
    end_index: usize,
    end_gamma: f64,
    steps: usize,
    stalled: bool,
    reached_target: bool,
    /// Best vertex seen anywhere in the tour, scanned candidates included.
    best_index: usize,
    best_gamma: f64,
}

/// Runs the greedy walk with restarts.
pub fn query(g: &AlphaGraph, q: &UnitVector, cfg: &QueryConfig) -> Result<WalkResult> {
    if g.is_empty() {
        return Err(Error::invalid("cannot query an empty graph"));
    }
    if q.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: q.dim(),
        });
    }
    let (slack, max_steps) = cfg.validate(g.dim())?;
    let qf = q.to_f64();
    let mut rng = rng_from_seed(cfg.seed);
    let mut comparisons = 0u64;
    let mut total_steps = 0usize;
    let mut trajectory = cfg.record_trajectory.then(Vec::new);
    let mut best = (usize::MAX, f64::NEG_INFINITY);

    for tour in 0..cfg.max_restarts {
        let out = run_tour(
            g,
            &qf,
            cfg.gamma_star,
            slack,
            max_steps,
            cfg.best_improvement,
            &mut rng,
            &mut comparisons,
            trajectory.as_mut(),
        );
        total_steps += out.steps;
        if out.best_gamma > best.1 {
            best = (out.best_index, out.best_gamma);
        }
        if out.reached_target {
            return Ok(WalkResult {
                returned_index: out.end_index,
                returned_gamma: out.end_gamma,
                success: true,
                restarts_used: tour,
                total_steps,
                comparisons,
                trajectory_gammas: trajectory,
            });
        }
    }
    Ok(WalkResult {
        returned_index: best.0,
        returned_gamma: best.1,
        success: false,
        restarts_used: cfg.max_restarts - 1,
        total_steps,
        comparisons,
        trajectory_gammas: trajectory,
    })
}

/// Runs `cfg.max_restarts` instrumented tours and returns one record per
/// tour. Tours never stop early on the target, so the records expose where
/// the walk stalls.
pub fn tour_gamma_profile(
    g: &AlphaGraph,
    q: &UnitVector,
    cfg: &QueryConfig,
) -> Result<Vec<TourRecord>> {
    if g.is_empty() {
        return Err(Error::invalid("cannot query an empty graph"));
    }
    if q.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: q.dim(),
        });
    }
    let (slack, max_steps) = cfg.validate(g.dim())?;
    let qf = q.to_f64();
    let mut rng = rng_from_seed(cfg.seed);
    let mut comparisons = 0u64;
    let mut records = Vec::with_capacity(cfg.max_restarts);
    for _ in 0..cfg.max_restarts {
        let mut gammas = Some(Vec::new());
        let before = comparisons;
        let out = run_tour(
            g,
            &qf,
            None,
            slack,
            max_steps,
            cfg.best_improvement,
            &mut rng,
            &mut comparisons,
            gammas.as_mut(),
        );
        let gammas = gammas.unwrap();
        records.push(TourRecord {
            start_index: out.start_index,
            end_index: out.end_index,
            steps: out.steps,
            comparisons: comparisons - before,
            stalled: out.stalled,
            gammas,
        });
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn run_tour(
    g: &AlphaGraph,
    qf: &[f64],
    gamma_star: Option<f64>,
    slack: f64,
    max_steps: usize,
    best_improvement: bool,
    rng: &mut rand_chacha::ChaCha8Rng,
    comparisons: &mut u64,
    mut trajectory: Option<&mut Vec<f64>>,
) -> TourOutcome {
    let start_index = random_live_vertex(g, rng);
    let mut cur = start_index;
    let mut cur_gamma = g.dot_query(cur, qf);
    let mut best = (cur, cur_gamma);
    if let Some(t) = trajectory.as_deref_mut() {
        t.push(cur_gamma);
    }

    let mut steps = 0usize;
    loop {
        if gamma_star.is_some_and(|t| cur_gamma >= t) {
            return TourOutcome {
                start_index,
                end_index: cur,
                end_gamma: cur_gamma,
                steps,
                stalled: false,
                reached_target: true,
                best_index: best.0,
                best_gamma: best.1,
            };
        }
        if steps >= max_steps {
            return TourOutcome {
                start_index,
                end_index: cur,
                end_gamma: cur_gamma,
                steps,
                stalled: false,
                reached_target: false,
                best_index: best.0,
                best_gamma: best.1,
            };
        }

        // scan the bucket for an improving neighbor
        let mut next: Option<(usize, f64)> = None;
        for &j in g.bucket(cur) {
            let j = j as usize;
            *comparisons += 1;
            let gj = g.dot_query(j, qf);
            if gj > best.1 {
                best = (j, gj);
            }
            // a vertex at the target ends the query even when the local
            // improvement is below the slack
            if gamma_star.is_some_and(|t| gj >= t) {
                if let Some(t) = trajectory.as_deref_mut() {
                    t.push(gj);
                }
                return TourOutcome {
                    start_index,
                    end_index: j,
                    end_gamma: gj,
                    steps: steps + 1,
                    stalled: false,
                    reached_target: true,
                    best_index: best.0,
                    best_gamma: best.1,
                };
            }
            if gj >= cur_gamma + slack {
                if best_improvement {
                    if next.is_none_or(|(_, bg)| gj > bg) {
                        next = Some((j, gj));
                    }
                } else {
                    next = Some((j, gj));
                    break;
                }
            }
        }

        match next {
            Some((j, gj)) => {
                cur = j;
                cur_gamma = gj;
                steps += 1;
                if let Some(t) = trajectory.as_deref_mut() {
                    t.push(cur_gamma);
                }
            }
            None => {
                // full scan without improvement: the tour has stalled
                return TourOutcome {
                    start_index,
                    end_index: cur,
                    end_gamma: cur_gamma,
                    steps,
                    stalled: true,
                    reached_target: false,
                    best_index: best.0,
                    best_gamma: best.1,
                };
            }
        }
    }
}

fn random_live_vertex(g: &AlphaGraph, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
    debug_assert!(!g.is_empty());
    loop {
        let i = rng.random_range(0..g.slots());
        if g.is_live(i) {
            return i;
        }
    }
}

/// A success rate with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInterval {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl RateInterval {
    /// Wilson score interval at 95% confidence.
    pub fn wilson(successes: u64, trials: u64) -> RateInterval {
        const Z: f64 = 1.959963984540054;
        if trials == 0 {
            return RateInterval {
                successes,
                trials,
                rate: f64::NAN,
                lo: 0.0,
                hi: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z * Z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = (Z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        RateInterval {
            successes,
            trials,
            rate: p,
            lo: (center - half).max(0.0),
            hi: (center + half).min(1.0),
        }
    }
}

/// Success rates over a batch of planted queries against one graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    /// Whole-query success rate (any tour reached the target).
    pub per_query: RateInterval,
    /// Per-tour success rate (each failed tour counts as a failed trial).
    pub per_tour: RateInterval,
    pub mean_comparisons: f64,
}

/// Runs each planted query against the graph and aggregates success rates.
///
/// Query `i` uses a seed derived from `cfg.seed` and `i`, so the batch is
/// reproducible and order-independent.
pub fn estimate_success_rate(
    g: &AlphaGraph,
    queries: &[PlantedQuery],
    cfg: &QueryConfig,
) -> Result<SuccessStats> {
    if queries.is_empty() {
        return Err(Error::invalid("need at least one planted query"));
    }
    let mut query_successes = 0u64;
    let mut tours = 0u64;
    let mut comparisons = 0u64;
    for (i, pq) in queries.iter().enumerate() {
        let mut qcfg = cfg.clone();
        qcfg.gamma_star = Some(cfg.gamma_star.unwrap_or(pq.gamma_star));
        qcfg.seed = derive_seed(cfg.seed, i as u64);
        let res = query(g, &pq.query, &qcfg)?;
        if res.success {
            query_successes += 1;
        }
        tours += res.restarts_used as u64 + 1;
        comparisons += res.comparisons;
    }
    Ok(SuccessStats {
        per_query: RateInterval::wilson(query_successes, queries.len() as u64),
        per_tour: RateInterval::wilson(query_successes, tours),
        mean_comparisons: comparisons as f64 / queries.len() as f64,
    })
}

/// Tour budget suggested by the analytic per-tour success estimate
/// W(alpha, gamma_star, gamma_max) / C(gamma_star): roughly 4 over that
/// probability, clamped to [1, 10^6].
pub fn suggested_restarts(d: u32, alpha: f64, gamma_star: f64, mu: f64) -> Result<usize> {
    let gm = gamma_max(mu, alpha)?;
    let rate_bits = wedge_bits(alpha, gamma_star, gm)? - cap_bits(gamma_star)?;
    let rate = (f64::from(d) * rate_bits).exp2().min(1.0);
    let tours = (4.0 / rate).ceil();
    Ok(tours.clamp(1.0, 1e6) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mu_of;
    use crate::graph::AlphaGraph;
    use crate::instance::{gen_adversarial, gen_planted, plant_queries, Dataset, InstanceSpec};

    fn planted_graph(n: usize, d: u32, gamma_star: f64, kappa: f64, seed: u64) -> (AlphaGraph, Dataset) {
        let spec = InstanceSpec::with_gamma_star(n, d, gamma_star, seed).unwrap();
        let ds = gen_planted(&spec).unwrap();
        let mu = mu_of(n as f64, d).unwrap();
        let g = AlphaGraph::build(&ds, kappa * mu).unwrap();
        (g, ds)
    }

    #[test]
    fn single_vertex_graph_returns_it() {
        let p = UnitVector::new(vec![1.0, 0.0]).unwrap();
        let q = UnitVector::new(vec![0.0, 1.0]).unwrap();
        let ds = Dataset::from_points(vec![p], None).unwrap();
        let g = AlphaGraph::build(&ds, 0.5).unwrap();
        let res = query(&g, &q, &QueryConfig::default()).unwrap();
        assert_eq!(res.returned_index, 0);
        assert_eq!(res.total_steps, 0);
        assert!(!res.success);
    }

    #[test]
    fn query_is_deterministic() {
        let (g, ds) = planted_graph(256, 24, 0.5, 0.6, 42);
        let q = &ds.planted.as_ref().unwrap().query;
        let cfg = QueryConfig {
            gamma_star: Some(0.5),
            max_restarts: 10,
            seed: 7,
            record_trajectory: true,
            ..QueryConfig::default()
        };
        let a = query(&g, q, &cfg).unwrap();
        let b = query(&g, q, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn success_respects_target_threshold() {
        let (g, ds) = planted_graph(512, 32, 0.5, 0.5, 3);
        let planted = ds.planted.as_ref().unwrap();
        let cfg = QueryConfig {
            gamma_star: Some(0.5),
            max_restarts: 64,
            seed: 1,
            ..QueryConfig::default()
        };
        let res = query(&g, &planted.query, &cfg).unwrap();
        if res.success {
            assert!(res.returned_gamma >= 0.5 - 1e-9);
            let ip = ds.dot_with(res.returned_index, &planted.query);
            assert!((ip - res.returned_gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn trajectory_is_strictly_improving_and_bounded() {
        let (g, ds) = planted_graph(2048, 32, 0.5, 0.55, 9);
        let q = &ds.planted.as_ref().unwrap().query;
        let d = 32usize;
        let cfg = QueryConfig {
            max_restarts: 50,
            seed: 2,
            ..QueryConfig::default()
        };
        let records = tour_gamma_profile(&g, q, &cfg).unwrap();
        assert_eq!(records.len(), 50);
        let slack = 1.0 / d as f64;
        for rec in &records {
            assert!(rec.steps <= 2 * d, "tour exceeded 2d steps");
            assert_eq!(rec.gammas.len(), rec.steps + 1);
            for w in rec.gammas.windows(2) {
                assert!(w[1] >= w[0] + slack - 1e-12, "step below slack: {w:?}");
            }
        }
    }

    #[test]
    fn adversarial_instance_defeats_single_tour() {
        // with one tour, the walk finds the planted point only when it starts
        // there, so the failure rate is about 1 - 1/n
        let mut failures = 0;
        let trials = 100;
        for seed in 0..trials {
            let ds = gen_adversarial(256, 16, 1e-3, seed).unwrap();
            let planted = ds.planted.as_ref().unwrap();
            let g = AlphaGraph::build(&ds, 0.5).unwrap();
            let cfg = QueryConfig {
                gamma_star: Some(planted.gamma_star),
                max_restarts: 1,
                seed: derive_seed(999, seed),
                ..QueryConfig::default()
            };
            let res = query(&g, &planted.query, &cfg).unwrap();
            if !res.success {
                failures += 1;
            }
        }
        assert!(failures >= 95, "only {failures}/{trials} failures");
    }

    #[test]
    fn one_iteration_regime_has_high_tour_rate() {
        // alpha below gamma_max * gamma_star: a single tour succeeds often
        let (n, d, gs) = (512usize, 48u32, 0.5f64);
        let kappa_threshold = (gs * gs / (1.0 + gs * gs)).sqrt();
        let (g, ds) = planted_graph(n, d, gs, 0.85 * kappa_threshold, 77);
        let queries = plant_queries(&ds, 200, gs, 123).unwrap();
        let cfg = QueryConfig {
            gamma_star: Some(gs),
            max_restarts: 1,
            seed: 5,
            ..QueryConfig::default()
        };
        let stats = estimate_success_rate(&g, &queries, &cfg).unwrap();
        assert!(
            stats.per_tour.rate >= 0.5,
            "per-tour rate {} too low",
            stats.per_tour.rate
        );
    }

    #[test]
    fn restart_budget_amortizes_failures() {
        // scaling the tour budget by 4 shrinks the failure rate by at least 2
        // in a regime where single tours mostly fail
        let (n, d, gs) = (2048usize, 32u32, 0.5f64);
        let (g, ds) = planted_graph(n, d, gs, 0.72, 55);
        let queries = plant_queries(&ds, 120, gs, 321).unwrap();
        let base = QueryConfig {
            gamma_star: Some(gs),
            max_restarts: 4,
            seed: 8,
            ..QueryConfig::default()
        };
        let more = QueryConfig {
            max_restarts: 16,
            ..base.clone()
        };
        let s1 = estimate_success_rate(&g, &queries, &base).unwrap();
        let s4 = estimate_success_rate(&g, &queries, &more).unwrap();
        let f1 = 1.0 - s1.per_query.rate;
        let f4 = 1.0 - s4.per_query.rate;
        assert!(
            s1.per_tour.rate <= 0.2,
            "regime check: per-tour rate {} too high for this test",
            s1.per_tour.rate
        );
        assert!(f4 * 2.0 <= f1, "failure {f1} -> {f4} did not halve");
    }

    #[test]
    fn removing_planted_point_kills_success() {
        let (n, d, gs) = (512usize, 48u32, 0.5f64);
        let (mut g, ds) = planted_graph(n, d, gs, 0.5, 1234);
        let planted = ds.planted.as_ref().unwrap();
        // ensure no other point reaches the target for this seed, so zero
        // success is the only possible outcome
        let mut runner_up = f64::NEG_INFINITY;
        for i in 0..ds.len() {
            if i != planted.planted_index {
                runner_up = runner_up.max(ds.dot_with(i, &planted.query));
            }
        }
        assert!(runner_up < gs, "seed produced a spurious near neighbor");
        g.delete(planted.planted_index).unwrap();
        let cfg = QueryConfig {
            gamma_star: Some(gs),
            max_restarts: 32,
            seed: 3,
            ..QueryConfig::default()
        };
        let res = query(&g, &planted.query, &cfg).unwrap();
        assert!(!res.success);
        assert!(g.is_live(res.returned_index));
    }

    #[test]
    fn comparisons_track_bucket_scans() {
        let (g, ds) = planted_graph(1024, 32, 0.5, 0.6, 21);
        let queries = plant_queries(&ds, 40, 0.5, 77).unwrap();
        let stats = g.stats().unwrap();
        let cfg = QueryConfig {
            gamma_star: Some(0.5),
            max_restarts: 8,
            seed: 10,
            ..QueryConfig::default()
        };
        let mut total_cmp = 0f64;
        let mut total_tours = 0f64;
        for (i, pq) in queries.iter().enumerate() {
            let mut c = cfg.clone();
            c.seed = derive_seed(4, i as u64);
            let res = query(&g, &pq.query, &c).unwrap();
            total_cmp += res.comparisons as f64;
            total_tours += res.restarts_used as f64 + 1.0;
        }
        let mean_cmp = total_cmp / queries.len() as f64;
        let mean_tour_cost = total_tours / queries.len() as f64 * stats.bucket_mean;
        let band = 4.0 * g.dim() as f64;
        assert!(
            mean_cmp <= band * mean_tour_cost && mean_cmp * band >= mean_tour_cost,
            "comparisons {mean_cmp} vs tour-scaled bucket mean {mean_tour_cost}"
        );
    }

    #[test]
    fn best_improvement_switch_works() {
        let (g, ds) = planted_graph(512, 24, 0.5, 0.5, 99);
        let q = &ds.planted.as_ref().unwrap().query;
        let cfg = QueryConfig {
            gamma_star: Some(0.5),
            max_restarts: 16,
            seed: 11,
            best_improvement: true,
            ..QueryConfig::default()
        };
        // both strategies must satisfy the same contracts
        let res = query(&g, q, &cfg).unwrap();
        if res.success {
            assert!(res.returned_gamma >= 0.5 - 1e-9);
        }
        assert!(res.restarts_used < 16);
    }

    #[test]
    fn suggested_restarts_reasonable() {
        // one-iteration regime: analytic rate is ~1, budget collapses to 4
        let r = suggested_restarts(48, 0.1, 0.5, 0.4).unwrap();
        assert!(r <= 8, "one-iteration budget {r}");
        // sparse regime: budget grows but stays clamped
        let r = suggested_restarts(48, 0.35, 0.5, 0.4).unwrap();
        assert!((4..=1_000_000).contains(&r));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (g, _) = planted_graph(64, 8, 0.5, 0.5, 1);
        let wrong_dim = UnitVector::new(vec![1.0, 0.0]).unwrap();
        assert!(query(&g, &wrong_dim, &QueryConfig::default()).is_err());
        let q = UnitVector::new({
            let mut v = vec![0.0f32; 8];
            v[0] = 1.0;
            v
        })
        .unwrap();
        let bad = QueryConfig {
            max_restarts: 0,
            ..QueryConfig::default()
        };
        assert!(query(&g, &q, &bad).is_err());
        let bad = QueryConfig {
            step_slack: Some(-0.1),
            ..QueryConfig::default()
        };
        assert!(query(&g, &q, &bad).is_err());
    }
}
