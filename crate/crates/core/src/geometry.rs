//! Spherical-cap and wedge geometry on `S^(d-1)`.
//!
//! Two families of quantities live here:
//!
//! - **Asymptotic log-volumes** ([`cap_bits`], [`wedge_bits`]): the leading
//!   exponential term of a cap or wedge volume, expressed as log2(volume)/d in
//!   the d -> infinity limit. The polynomial prefactor in d is deliberately not
//!   modeled; consumers that compare against finite-d measurements must allow
//!   a polynomial slack band.
//! - **Finite-dimension volumes** ([`cap_volume_exact`], [`wedge_volume_mc`]):
//!   the exact cap probability via a regularized incomplete beta evaluation,
//!   and an unbiased Monte-Carlo estimate of the wedge probability. These are
//!   what desk-scale experiments calibrate against.
//!
//! The module also provides the instance density parameter [`mu_of`] and the
//! greedy-walk stall level [`gamma_max`].

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::rng_from_seed;
use crate::Result;

/// Parameters of a spherical cap: all points with first coordinate > `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapParams {
    /// Cap height (cosine threshold), strictly inside (-1, 1).
    pub alpha: f64,
    /// Ambient dimension, at least 2.
    pub d: u32,
}

impl CapParams {
    pub fn new(alpha: f64, d: u32) -> Result<Self> {
        if !(alpha.is_finite() && alpha.abs() < 1.0) {
            return Err(Error::domain(format!("cap height {alpha} not in (-1, 1)")));
        }
        if d < 2 {
            return Err(Error::domain(format!("dimension {d} < 2")));
        }
        Ok(CapParams { alpha, d })
    }
}

/// Parameters of a wedge: the intersection of two caps of heights `alpha` and
/// `beta` whose centers have inner product `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Ambient dimension, at least 2.
    pub d: u32,
}

impl WedgeParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, d: u32) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("wedge {name} = {v} not in (0, 1)")));
            }
        }
        if d < 2 {
            return Err(Error::domain(format!("dimension {d} < 2")));
        }
        Ok(WedgeParams {
            alpha,
            beta,
            gamma,
            d,
        })
    }
}

/// A relative volume expressed as log2(volume)/d, leading exponential order.
///
/// `d = 0` tags a value taken in the d -> infinity limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogVolume {
    pub bits_per_dim: f64,
    pub d: u32,
}

/// A Monte-Carlo probability estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
}

// ---------------------------------------------------------------------------
// Asymptotic log-volumes
// ---------------------------------------------------------------------------

/// Leading-order cap log-volume: log2 C(alpha) / d = (1/2) log2(1 - alpha^2).
pub fn cap_bits(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha.abs() < 1.0) {
        return Err(Error::domain(format!("cap height {alpha} not in (-1, 1)")));
    }
    Ok(0.5 * (1.0 - alpha * alpha).log2())
}

/// [`cap_bits`] wrapped in [`LogVolume`]; the result is a d -> infinity limit.
pub fn cap_log_volume(p: CapParams) -> Result<LogVolume> {
    Ok(LogVolume {
        bits_per_dim: cap_bits(p.alpha)?,
        d: 0,
    })
}

/// Leading-order wedge log-volume with the full three-case split.
///
/// For `gamma <= min(alpha/beta, beta/alpha)` both cap constraints bind and
/// the volume is governed by the corner of the two bounding hyperplanes; for
/// larger `gamma` one cap essentially contains the wedge and the volume
/// collapses to that cap's.
pub fn wedge_bits(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    WedgeParams::new(alpha, beta, gamma, 2)?;
    if gamma <= (alpha / beta).min(beta / alpha) {
        wedge_corner_bits(alpha, beta, gamma)
    } else if gamma >= beta / alpha {
        // beta-cap wide open relative to the angle: wedge ~ alpha-cap
        cap_bits(alpha)
    } else {
        // alpha/beta <= gamma: wedge ~ beta-cap
        cap_bits(beta)
    }
}

/// The corner-dominated (both-constraints-binding) wedge log-volume,
/// (1/2) log2[(1 - a^2 - b^2 - g^2 + 2abg) / (1 - g^2)], evaluated without the
/// case split.
///
/// This is the expression the trade-off curves extend over their whole
/// parameter range. Errors if the numerator is nonpositive (a degenerate or
/// empty wedge at leading order).
pub fn wedge_corner_bits(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    let num = 1.0 - alpha * alpha - beta * beta - gamma * gamma + 2.0 * alpha * beta * gamma;
    if num <= 0.0 {
        return Err(Error::domain(format!(
            "degenerate wedge: numerator {num:e} <= 0 at ({alpha}, {beta}, {gamma})"
        )));
    }
    Ok(0.5 * (num / (1.0 - gamma * gamma)).log2())
}

/// [`wedge_bits`] wrapped in [`LogVolume`].
pub fn wedge_log_volume(p: WedgeParams) -> Result<LogVolume> {
    Ok(LogVolume {
        bits_per_dim: wedge_bits(p.alpha, p.beta, p.gamma)?,
        d: 0,
    })
}

// ---------------------------------------------------------------------------
// Exact finite-d cap volume
// ---------------------------------------------------------------------------

/// Exact relative cap volume Pr[X_1 > alpha] for X uniform on `S^(d-1)`.
///
/// Evaluated as a regularized incomplete beta integral of the marginal
/// density proportional to (1 - t^2)^((d-3)/2); relative error is at the
/// 1e-13 level, well inside the 1e-10 contract.
pub fn cap_volume_exact(p: CapParams) -> Result<f64> {
    let CapParams { alpha, d } = p;
    if alpha == 0.0 {
        return Ok(0.5);
    }
    if alpha < 0.0 {
        return Ok(1.0 - cap_volume_exact(CapParams::new(-alpha, d)?)?);
    }
    let a = f64::from(d - 1) / 2.0;
    let x = 1.0 - alpha * alpha;
    Ok(0.5 * regularized_incomplete_beta(a, 0.5, x))
}

/// Smallest cap height whose exact volume equals `target`, by bisection.
///
/// `target` must lie in (0, 0.5]; the result is accurate to ~1e-14 in alpha.
pub fn alpha_for_cap_volume(target: f64, d: u32) -> Result<f64> {
    if !(target > 0.0 && target <= 0.5) {
        return Err(Error::domain(format!(
            "target volume {target} not in (0, 0.5]"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64 - 1e-15);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cap_volume_exact(CapParams::new(mid, d)?)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Monte-Carlo wedge and cap estimates
// ---------------------------------------------------------------------------

/// Unbiased Monte-Carlo estimate of the wedge probability
/// W(a, b, g) = Pr[X_1 > a and X_1 g + X_2 sqrt(1 - g^2) > b].
///
/// Each sample draws d independent standard normals and normalizes, streaming
/// so nothing is allocated per sample. Deterministic for a fixed seed.
pub fn wedge_volume_mc(p: WedgeParams, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("samples must be >= 1"));
    }
    let WedgeParams {
        alpha,
        beta,
        gamma,
        d,
    } = p;
    let sg = (1.0 - gamma * gamma).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let (x1, x2) = first_two_coords(&mut rng, d);
        if x1 > alpha && x1 * gamma + x2 * sg > beta {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, samples))
}

/// Monte-Carlo estimate of the cap probability Pr[X_1 > alpha], the sampling
/// counterpart of [`cap_volume_exact`].
pub fn cap_volume_mc(p: CapParams, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("samples must be >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let (x1, _) = first_two_coords(&mut rng, p.d);
        if x1 > p.alpha {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, samples))
}

fn binomial_estimate(hits: u64, samples: u64) -> McEstimate {
    let estimate = hits as f64 / samples as f64;
    let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    McEstimate {
        estimate,
        std_error,
        hits,
        samples,
    }
}

/// First two coordinates of a uniform point on `S^(d-1)`: d standard normals
/// are drawn in coordinate order and only (z1, z2, |z|) are retained.
fn first_two_coords<R: Rng>(rng: &mut R, d: u32) -> (f64, f64) {
    let mut norm_sq = 0.0f64;
    let mut z1 = 0.0f64;
    let mut z2 = 0.0f64;
    for i in 0..d {
        let z: f64 = rng.sample(StandardNormal);
        if i == 0 {
            z1 = z;
        } else if i == 1 {
            z2 = z;
        }
        norm_sq += z * z;
    }
    let inv = norm_sq.sqrt().recip();
    (z1 * inv, z2 * inv)
}

// ---------------------------------------------------------------------------
// Instance density and stall level
// ---------------------------------------------------------------------------

/// Density parameter mu = sqrt(1 - n^(-2/d)): the expected top inner product
/// between a random query and n uniform points on `S^(d-1)`.
pub fn mu_of(n: f64, d: u32) -> Result<f64> {
    if n.is_nan() || n < 1.0 {
        return Err(Error::domain(format!("n = {n} must be >= 1")));
    }
    if d == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    Ok((1.0 - n.powf(-2.0 / f64::from(d))).sqrt())
}

/// Stall level of the greedy walk: the inner-product height above which small
/// steps stop finding improving neighbors,
/// gamma_max = sqrt((mu^2 - alpha^2) / (1 - 2 alpha + mu^2)).
///
/// Leading term only; requires 0 <= alpha < mu < 1.
pub fn gamma_max(mu: f64, alpha: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::domain(format!("mu = {mu} not in (0, 1)")));
    }
    if !(alpha >= 0.0 && alpha < mu) {
        return Err(Error::domain(format!(
            "alpha = {alpha} not in [0, mu = {mu})"
        )));
    }
    Ok(((mu * mu - alpha * alpha) / (1.0 - 2.0 * alpha + mu * mu)).sqrt())
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// ln Gamma(x) for x > 0 (Lanczos approximation, g = 7, 9 coefficients).
#[allow(clippy::excessive_precision)]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (x + (i as f64) + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
pub(crate) fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
