//! Shared fixtures for the criterion benchmarks.

use anng_core::graph::AlphaGraph;
use anng_core::instance::{gen_planted, Dataset, InstanceSpec};

/// A planted dataset and its graph at density alpha = kappa * mu(n, d).
pub fn planted_fixture(n: usize, d: u32, kappa: f64, seed: u64) -> (Dataset, AlphaGraph) {
    let spec = InstanceSpec::with_gamma_star(n, d, 0.5, seed).expect("valid spec");
    let ds = gen_planted(&spec).expect("generation succeeds");
    let mu = anng_core::geometry::mu_of(n as f64, d).expect("valid mu");
    let g = AlphaGraph::build(&ds, kappa * mu).expect("build succeeds");
    (ds, g)
}
