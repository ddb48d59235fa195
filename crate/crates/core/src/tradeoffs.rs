//! Analytic time-space trade-off curves for greedy graph search.
//!
//! Sparse regime (datasets of size 2^o(d)): exponents are powers of n, with
//! query time n^rho_q and total space n^(1 + rho_s). The frontier is
//!
//! ```text
//! (2c^2 - 1) rho_q + 2 c^2 (c^2 - 1) sqrt(rho_s (1 - rho_s)) >= c^4
//! ```
//!
//! and the module provides the graph frontier, the hash-based comparison
//! frontier, the balanced points of each, and the one-iteration /
//! many-iteration exponent sets they derive from.
//!
//! Dense regime (datasets of size 2^(Theta(d))): exponents are bits per
//! dimension at density lambda = log2(n)/d. [`sieving_curve`] specializes to
//! lambda = (1/2) log2(4/3), gamma_star = 1/2, the near-neighbor subproblem
//! inside lattice sieving, and [`sieving_optimum`] locates its minimum-time
//! graph density.
//!
//! Everything here is leading exponential order; polynomial factors in d are
//! dropped throughout.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{cap_bits, cap_volume_exact, gamma_max, mu_of, wedge_corner_bits, CapParams};
use crate::Result;

/// A point on a sparse trade-off frontier: base-n exponents.
///
/// `clamped` marks frontier evaluations whose raw value was negative and was
/// reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub rho_q: f64,
    pub rho_s: f64,
    pub clamped: bool,
}

/// Sparse-regime parameter bundle: approximation factor and graph density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseParams {
    pub c: f64,
    /// Planted inner product, 1 - 1/c^2.
    pub gamma_star: f64,
    /// Graph density parameter: alpha = kappa * mu.
    pub kappa: f64,
    /// Extra-space exponent, 1 - kappa^2.
    pub rho_s: f64,
}

impl SparseParams {
    pub fn new(c: f64, kappa: f64) -> Result<Self> {
        if c.is_nan() || c <= 1.0 {
            return Err(Error::domain(format!("c = {c} must be > 1")));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::domain(format!("kappa = {kappa} not in (0, 1)")));
        }
        Ok(SparseParams {
            c,
            gamma_star: 1.0 - 1.0 / (c * c),
            kappa,
            rho_s: 1.0 - kappa * kappa,
        })
    }

    /// Many-iteration cost exponents at this density; errors when kappa is
    /// at or below the one-iteration threshold.
    pub fn exponents(&self) -> Result<SparseExponents> {
        sparse_many_iter_exponents(self.kappa, self.gamma_star)
    }

    /// The frontier point this density realizes: substituting
    /// rho_s = 1 - kappa^2 into the frontier reproduces the many-iteration
    /// query exponent exactly.
    pub fn frontier_point(&self) -> Result<TradeoffPoint> {
        sparse_graph_rho_q(self.c, self.rho_s)
    }
}

/// The four sparse cost exponents (base n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseExponents {
    pub time_exp: f64,
    pub space_exp: f64,
    pub insert_exp: f64,
    pub delete_exp: f64,
}

/// Dense-regime parameters: density lambda = log2(n)/d, target inner product,
/// and graph threshold alpha < mu = sqrt(1 - 2^(-2 lambda)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub lambda: f64,
    pub gamma_star: f64,
    pub alpha: f64,
}

impl DenseParams {
    pub fn new(lambda: f64, gamma_star: f64, alpha: f64) -> Result<Self> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::domain(format!("lambda = {lambda} must be > 0")));
        }
        if !(gamma_star > 0.0 && gamma_star < 1.0) {
            return Err(Error::domain(format!("gamma_star = {gamma_star} not in (0, 1)")));
        }
        let mu = (1.0 - (-2.0 * lambda).exp2()).sqrt();
        if !(alpha >= 0.0 && alpha < mu) {
            return Err(Error::domain(format!("alpha = {alpha} not in [0, mu = {mu})")));
        }
        Ok(DenseParams {
            lambda,
            gamma_star,
            alpha,
        })
    }

    /// Density's expected top inner product, sqrt(1 - 2^(-2 lambda)).
    pub fn mu(&self) -> f64 {
        (1.0 - (-2.0 * self.lambda).exp2()).sqrt()
    }
}

/// Dense cost exponents in bits per dimension (base 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseExponents {
    /// Per-query cost exponent.
    pub query_exp: f64,
    /// Total cost exponent for n queries: lambda + query_exp.
    pub time_exp: f64,
    /// Storage exponent: 2 lambda + cap bits of alpha.
    pub space_exp: f64,
    pub gamma_max: f64,
}

/// One row of the lattice-sieving trade-off table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SievePoint {
    pub alpha: f64,
    pub gamma_max: f64,
    pub time_exp: f64,
    pub space_exp: f64,
}

/// Finite-d calibration of the cap-volume scaling C(kappa mu) ~ C(mu)^(kappa^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCheck {
    pub mu: f64,
    pub alpha: f64,
    /// log C(kappa mu) / log C(mu) at the given finite d.
    pub ratio: f64,
    /// The asymptotic value kappa^2 the ratio approaches.
    pub kappa_sq: f64,
}

// ---------------------------------------------------------------------------
// Sparse frontiers
// ---------------------------------------------------------------------------

/// Graph frontier: the smallest rho_q admitted at extra-space exponent rho_s,
/// rho_q = (c^4 - 2 c^2 (c^2 - 1) sqrt(rho_s (1 - rho_s))) / (2 c^2 - 1),
/// clamped below at 0.
pub fn sparse_graph_rho_q(c: f64, rho_s: f64) -> Result<TradeoffPoint> {
    check_c(c)?;
    check_unit("rho_s", rho_s)?;
    let c2 = c * c;
    let raw = (c2 * c2 - 2.0 * c2 * (c2 - 1.0) * (rho_s * (1.0 - rho_s)).sqrt()) / (2.0 * c2 - 1.0);
    Ok(TradeoffPoint {
        rho_q: raw.max(0.0),
        rho_s,
        clamped: raw < 0.0,
    })
}

/// Balanced graph trade-off rho_q = rho_s = c^4 / (2c^4 - 2c^2 + 1).
pub fn sparse_balanced_rho(c: f64) -> Result<f64> {
    check_c(c)?;
    let c2 = c * c;
    let c4 = c2 * c2;
    Ok(c4 / (2.0 * c4 - 2.0 * c2 + 1.0))
}

/// Hash-based comparison frontier:
/// rho_q = ((sqrt(2c^2 - 1) - (c^2 - 1) sqrt(rho_s)) / c^2)^2, clamped at 0
/// once the inner term goes negative.
pub fn hash_rho_q(c: f64, rho_s: f64) -> Result<TradeoffPoint> {
    check_c(c)?;
    if rho_s.is_nan() || rho_s < 0.0 {
        return Err(Error::domain(format!("rho_s = {rho_s} must be >= 0")));
    }
    let c2 = c * c;
    let inner = (2.0 * c2 - 1.0).sqrt() - (c2 - 1.0) * rho_s.sqrt();
    let clamped = inner <= 0.0;
    let rho_q = if clamped { 0.0 } else { (inner / c2) * (inner / c2) };
    Ok(TradeoffPoint {
        rho_q,
        rho_s,
        clamped,
    })
}

/// Balanced hash trade-off rho_q = rho_s = 1 / (2c^2 - 1).
pub fn hash_balanced_rho(c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(1.0 / (2.0 * c * c - 1.0))
}

/// The graph density below which one tour suffices:
/// kappa <= sqrt(gamma_star^2 / (1 + gamma_star^2)).
pub fn one_iteration_kappa_threshold(gamma_star: f64) -> Result<f64> {
    check_unit_open("gamma_star", gamma_star)?;
    Ok((gamma_star * gamma_star / (1.0 + gamma_star * gamma_star)).sqrt())
}

/// Cost exponents when one tour through the graph succeeds outright (alpha at
/// its one-iteration ceiling): Time = n^(1/(1+g*^2)), Space = n^((2+g*^2)/(1+g*^2)).
pub fn sparse_one_iter_exponents(gamma_star: f64) -> Result<SparseExponents> {
    check_unit_open("gamma_star", gamma_star)?;
    let g2 = gamma_star * gamma_star;
    Ok(SparseExponents {
        time_exp: 1.0 / (1.0 + g2),
        space_exp: (2.0 + g2) / (1.0 + g2),
        insert_exp: 1.0,
        delete_exp: 1.0 / (1.0 + g2),
    })
}

/// Cost exponents when many tours are needed (kappa above the one-iteration
/// threshold): Time = n^((1 - 2 g* sqrt(k^2 (1-k^2))) / (1 - g*^2)),
/// Space = n^(2 - k^2).
pub fn sparse_many_iter_exponents(kappa: f64, gamma_star: f64) -> Result<SparseExponents> {
    check_unit_open("gamma_star", gamma_star)?;
    if kappa.is_nan() || kappa >= 1.0 {
        return Err(Error::domain(format!("kappa = {kappa} must be < 1")));
    }
    let threshold = one_iteration_kappa_threshold(gamma_star)?;
    if kappa <= threshold {
        return Err(Error::domain(format!(
            "kappa = {kappa} at or below the one-iteration threshold {threshold}"
        )));
    }
    let k2 = kappa * kappa;
    let g2 = gamma_star * gamma_star;
    Ok(SparseExponents {
        time_exp: (1.0 - 2.0 * gamma_star * (k2 * (1.0 - k2)).sqrt()) / (1.0 - g2),
        space_exp: 2.0 - k2,
        insert_exp: 1.0,
        delete_exp: 1.0 - k2,
    })
}

// ---------------------------------------------------------------------------
// Dense regime
// ---------------------------------------------------------------------------

/// Dense cost exponents at density lambda:
/// query = lambda + cap(alpha) + cap(g*) - wedge(alpha, g*, gamma_max),
/// time = lambda + query (n queries), space = 2 lambda + cap(alpha),
/// all in bits per dimension. The wedge is the corner-dominated expression,
/// which the curve extends over the whole alpha range.
pub fn dense_exponents(p: DenseParams) -> Result<DenseExponents> {
    let mu = p.mu();
    let gm = gamma_max(mu, p.alpha)?;
    let cap_alpha = if p.alpha == 0.0 { 0.0 } else { cap_bits(p.alpha)? };
    let query_exp =
        p.lambda + cap_alpha + cap_bits(p.gamma_star)? - wedge_corner_bits(p.alpha, p.gamma_star, gm)?;
    Ok(DenseExponents {
        query_exp,
        time_exp: p.lambda + query_exp,
        space_exp: 2.0 * p.lambda + cap_alpha,
        gamma_max: gm,
    })
}

/// Density and target of the near-neighbor subproblem inside lattice sieving:
/// n = (4/3)^(d/2) unit vectors, target inner product 1/2.
pub fn sieving_params(alpha: f64) -> Result<DenseParams> {
    DenseParams::new(0.5 * (4.0f64 / 3.0).log2(), 0.5, alpha)
}

/// Tabulates the sieving trade-off curve on an alpha grid in (0, 1/2).
pub fn sieving_curve(alpha_grid: &[f64]) -> Result<Vec<SievePoint>> {
    let mut out = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::domain(format!("grid alpha = {alpha} not in (0, 0.5)")));
        }
        let e = dense_exponents(sieving_params(alpha)?)?;
        out.push(SievePoint {
            alpha,
            gamma_max: e.gamma_max,
            time_exp: e.time_exp,
            space_exp: e.space_exp,
        });
    }
    Ok(out)
}

/// Evenly spaced grid over (0, 0.5) with the given step, endpoints excluded.
pub fn sieving_grid(step: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut a = step;
    while a < 0.5 - step / 2.0 {
        grid.push(a);
        a += step;
    }
    grid
}

/// Minimum-time point of the sieving curve: a grid scan followed by
/// golden-section refinement to 1e-6 in alpha.
pub fn sieving_optimum(step: f64) -> Result<SievePoint> {
    let time_at = |a: f64| -> Result<f64> { Ok(dense_exponents(sieving_params(a)?)?.time_exp) };
    let grid = sieving_grid(step);
    if grid.is_empty() {
        return Err(Error::invalid("grid step too coarse"));
    }
    let mut best = (grid[0], time_at(grid[0])?);
    for &a in &grid[1..] {
        let t = time_at(a)?;
        if t < best.1 {
            best = (a, t);
        }
    }
    // golden-section on the bracketing cell
    let mut lo = (best.0 - step).max(1e-12);
    let mut hi = (best.0 + step).min(0.5 - 1e-12);
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (time_at(c)?, time_at(d)?);
    while hi - lo > 1e-6 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = time_at(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = time_at(d)?;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let e = dense_exponents(sieving_params(alpha)?)?;
    Ok(SievePoint {
        alpha,
        gamma_max: e.gamma_max,
        time_exp: e.time_exp,
        space_exp: e.space_exp,
    })
}

// ---------------------------------------------------------------------------
// Finite-d calibration
// ---------------------------------------------------------------------------

/// Measures how close log C(kappa mu) / log C(mu) is to kappa^2 at finite d,
/// using the exact cap volume on both sides.
pub fn sparse_calibration_check(n: f64, d: u32, kappa: f64) -> Result<CalibrationCheck> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::domain(format!("kappa = {kappa} not in (0, 1]")));
    }
    let mu = mu_of(n, d)?;
    if mu.is_nan() || mu <= 0.0 {
        return Err(Error::domain("n = 1 gives mu = 0; no cap to compare"));
    }
    let alpha = kappa * mu;
    let c_alpha = cap_volume_exact(CapParams::new(alpha, d)?)?;
    let c_mu = cap_volume_exact(CapParams::new(mu, d)?)?;
    Ok(CalibrationCheck {
        mu,
        alpha,
        ratio: c_alpha.ln() / c_mu.ln(),
        kappa_sq: kappa * kappa,
    })
}

fn check_c(c: f64) -> Result<()> {
    if !c.is_finite() || c <= 1.0 {
        return Err(Error::domain(format!("c = {c} must be > 1")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} = {v} not in [0, 1]")));
    }
    Ok(())
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::domain(format!("{name} = {v} not in (0, 1)")));
    }
    Ok(())
}
