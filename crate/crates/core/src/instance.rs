//! Random problem instances on the unit sphere.
//!
//! Datasets are either fully uniform, planted (n - 1 uniform points plus one
//! point constructed at a prescribed inner product from a hidden query), or
//! adversarial (query and planted point near +e1, everything else near -e1 --
//! the configuration on which greedy graph search provably fails).
//!
//! Point coordinates are stored as f32, exactly the precision of the on-disk
//! format, so a dataset round-trips through a file bit-for-bit. Generation and
//! all inner products run in f64; the f32 snap perturbs norms and planted
//! inner products by less than 1e-7, well inside every tolerance used
//! downstream.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::rng::rng_from_seed;
use crate::vecmath;
use crate::Result;

/// Maximum allowed deviation of a point's Euclidean norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Safety margin added to the planted inner product at construction time.
///
/// The f32 snap perturbs the realized inner product by up to ~2.4e-7; placing
/// the pre-snap value this far above `gamma_star` guarantees the stored
/// threshold test `ip >= gamma_star` holds exactly on the snapped data, while
/// staying well inside the 1e-6 metadata tolerance.
const PLANTED_MARGIN: f64 = 5e-7;

/// A point on `S^(d-1)`, stored at f32 precision.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f32>,
}

impl UnitVector {
    /// Wraps coordinates, checking the norm is within [`NORM_TOLERANCE`] of 1.
    pub fn new(coords: Vec<f32>) -> Result<Self> {
        let norm = vecmath::norm_sq(&vecmath::widen(&coords)).sqrt();
        let deviation = (norm - 1.0).abs();
        if !deviation.is_finite() || deviation > NORM_TOLERANCE {
            return Err(Error::NormViolation {
                deviation,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(UnitVector { coords })
    }

    /// Normalizes an f64 vector and snaps it to the f32 grid.
    pub fn from_f64(v: &[f64]) -> Result<Self> {
        let norm = vecmath::norm_sq(v).sqrt();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        let coords: Vec<f32> = v.iter().map(|&x| (x / norm) as f32).collect();
        UnitVector::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.coords
    }

    /// Coordinates widened to f64.
    pub fn to_f64(&self) -> Vec<f64> {
        vecmath::widen(&self.coords)
    }

    /// Inner product with another vector, accumulated in f64.
    pub fn dot(&self, other: &UnitVector) -> f64 {
        vecmath::dot(&self.to_f64(), &other.to_f64())
    }
}

/// Planted-neighbor metadata attached to a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    /// The hidden query vector.
    pub query: UnitVector,
    /// Index of the planted nearest neighbor within the dataset.
    pub planted_index: usize,
    /// Inner product between the planted point and the query.
    pub gamma_star: f64,
}

/// An ordered collection of n points on `S^(d-1)`, optionally planted.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    /// Row-major n x dim coordinates.
    data: Vec<f32>,
    pub planted: Option<Planted>,
}

impl Dataset {
    /// Builds a dataset from points that all share the same dimension.
    ///
    /// Planted metadata is checked for consistency: the recorded inner
    /// product must match the actual one within 1e-6.
    pub fn from_points(points: Vec<UnitVector>, planted: Option<Planted>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::invalid("dataset must contain at least one point"));
        };
        let dim = first.dim();
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            data.extend_from_slice(p.as_slice());
        }
        let ds = Dataset { dim, data, planted };
        ds.validate_planted()?;
        if let Some(p) = &ds.planted {
            let ip = ds.dot_with(p.planted_index, &p.query);
            if (ip - p.gamma_star).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "planted inner product {ip} does not match recorded gamma_star {}",
                    p.gamma_star
                )));
            }
        }
        Ok(ds)
    }

    /// Assembles a dataset from raw row-major f32 coordinates (file loading).
    pub fn from_raw(dim: usize, data: Vec<f32>, planted: Option<Planted>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "raw data length {} is not a positive multiple of dim {dim}",
                data.len()
            )));
        }
        let ds = Dataset { dim, data, planted };
        ds.validate_planted()?;
        Ok(ds)
    }

    fn validate_planted(&self) -> Result<()> {
        if let Some(p) = &self.planted {
            if p.query.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: p.query.dim(),
                });
            }
            if p.planted_index >= self.len() {
                return Err(Error::UnknownIndex(p.planted_index));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Point `i` as an owned [`UnitVector`].
    pub fn unit_vector(&self, i: usize) -> UnitVector {
        UnitVector {
            coords: self.point(i).to_vec(),
        }
    }

    /// Raw row-major coordinate block.
    pub fn raw_data(&self) -> &[f32] {
        &self.data
    }

    /// Inner product between point `i` and an arbitrary vector.
    pub fn dot_with(&self, i: usize, v: &UnitVector) -> f64 {
        vecmath::dot(&vecmath::widen(self.point(i)), &v.to_f64())
    }

    /// Index and inner product of the point closest to `q` (exhaustive scan).
    pub fn nearest(&self, q: &UnitVector) -> (usize, f64) {
        let qf = q.to_f64();
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..self.len() {
            let ip = vecmath::dot(&vecmath::widen(self.point(i)), &qf);
            if ip > best.1 {
                best = (i, ip);
            }
        }
        best
    }
}

/// Specification of a planted random instance.
///
/// Exactly one of the approximation factor `c > 1` or the planted inner
/// product `gamma_star` is given; with `c`, the inner product is
/// `gamma_star = 1 - 1/c^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub d: u32,
    pub gamma_star: f64,
    pub seed: u64,
}

impl InstanceSpec {
    /// Instance specification with the planted inner product given directly.
    pub fn with_gamma_star(n: usize, d: u32, gamma_star: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("n = {n} must be >= 2")));
        }
        if d < 2 {
            return Err(Error::invalid(format!("d = {d} must be >= 2")));
        }
        if !(gamma_star > 0.0 && gamma_star < 1.0) {
            return Err(Error::domain(format!("gamma_star = {gamma_star} not in (0, 1)")));
        }
        Ok(InstanceSpec {
            n,
            d,
            gamma_star,
            seed,
        })
    }

    /// Instance specification from an approximation factor: gamma_star = 1 - 1/c^2.
    pub fn with_c(n: usize, d: u32, c: f64, seed: u64) -> Result<Self> {
        if c.is_nan() || c <= 1.0 {
            return Err(Error::domain(format!("approximation factor c = {c} must be > 1")));
        }
        Self::with_gamma_star(n, d, 1.0 - 1.0 / (c * c), seed)
    }
}

/// A query planted against an existing dataset: `query` has inner product
/// `gamma_star` with point `planted_index` and is random otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedQuery {
    pub query: UnitVector,
    pub planted_index: usize,
    pub gamma_star: f64,
}

/// One uniform point on `S^(d-1)` drawn from the given stream.
pub fn sample_sphere(d: u32, rng: &mut ChaCha8Rng) -> Result<UnitVector> {
    if d < 2 {
        return Err(Error::invalid(format!("d = {d} must be >= 2")));
    }
    let v = sample_sphere_f64(d as usize, rng);
    UnitVector::from_f64(&v)
}

/// Uniform point on the sphere in f64, before the f32 snap.
fn sample_sphere_f64(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = vecmath::norm_sq(&v).sqrt();
        if norm > 1e-6 {
            return v.iter().map(|&x| x / norm).collect();
        }
    }
}

/// Uniform point on the subsphere orthogonal to `axis` (axis must be unit).
fn sample_orthogonal_f64(axis: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let z = sample_sphere_f64(axis.len(), rng);
        let proj = vecmath::dot(&z, axis);
        let mut u: Vec<f64> = z.iter().zip(axis).map(|(&zi, &ai)| zi - proj * ai).collect();
        let norm = vecmath::norm_sq(&u).sqrt();
        if norm > 1e-9 {
            for x in &mut u {
                *x /= norm;
            }
            return u;
        }
    }
}

/// Generates the planted random instance: n - 1 i.i.d. uniform points plus a
/// planted point `p* = g* q + sqrt(1 - g*^2) u` at a uniformly random slot.
pub fn gen_planted(spec: &InstanceSpec) -> Result<Dataset> {
    let mut rng = rng_from_seed(spec.seed);
    let d = spec.d as usize;
    let g = (spec.gamma_star + PLANTED_MARGIN).min(1.0 - 1e-9);

    let q = sample_sphere_f64(d, &mut rng);
    let u = sample_orthogonal_f64(&q, &mut rng);
    let scale = (1.0 - g * g).sqrt();
    let pstar: Vec<f64> = q.iter().zip(&u).map(|(&qi, &ui)| g * qi + scale * ui).collect();
    let slot = rng.random_range(0..spec.n);

    let mut points = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        if i == slot {
            points.push(UnitVector::from_f64(&pstar)?);
        } else {
            points.push(sample_sphere(spec.d, &mut rng)?);
        }
    }
    let planted = Planted {
        query: UnitVector::from_f64(&q)?,
        planted_index: slot,
        gamma_star: spec.gamma_star,
    };
    Dataset::from_points(points, Some(planted))
}

/// Generates the adversarial instance: query and planted point within angular
/// perturbation `eps` of +e1, all other points within `eps` of -e1.
///
/// The stored `gamma_star` is the measured planted inner product, so a search
/// succeeds against it only by returning the planted point itself.
pub fn gen_adversarial(n: usize, d: u32, eps: f64, seed: u64) -> Result<Dataset> {
    if n < 3 {
        return Err(Error::invalid(format!("n = {n} must be >= 3")));
    }
    if d < 2 {
        return Err(Error::invalid(format!("d = {d} must be >= 2")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(format!("eps = {eps} not in (0, 0.5)")));
    }
    let mut rng = rng_from_seed(seed);
    let dd = d as usize;
    let mut e1 = vec![0.0f64; dd];
    e1[0] = 1.0;

    let perturbed = |sign: f64, rng: &mut ChaCha8Rng| -> Result<UnitVector> {
        let theta = eps * rng.random::<f64>();
        let w = sample_orthogonal_f64(&e1, rng);
        let (c, s) = (theta.cos(), theta.sin());
        let v: Vec<f64> = (0..dd)
            .map(|i| c * sign * e1[i] + s * w[i])
            .collect();
        UnitVector::from_f64(&v)
    };

    let query = perturbed(1.0, &mut rng)?;
    let pstar = perturbed(1.0, &mut rng)?;
    let slot = rng.random_range(0..n);

    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        if i == slot {
            points.push(pstar.clone());
        } else {
            points.push(perturbed(-1.0, &mut rng)?);
        }
    }
    // the measured inner product, kept strictly inside (0, 1) so it remains a
    // valid stopping threshold
    let gamma_star = pstar.dot(&query).min(1.0 - 1e-9);
    let planted = Planted {
        query,
        planted_index: slot,
        gamma_star,
    };
    Dataset::from_points(points, Some(planted))
}

/// Plants `count` fresh queries against an existing dataset: each picks a
/// uniformly random target point and builds a query at inner product
/// `gamma_star` from it. Distributionally this matches [`gen_planted`] while
/// letting many trials share one graph.
pub fn plant_queries(
    dataset: &Dataset,
    count: usize,
    gamma_star: f64,
    seed: u64,
) -> Result<Vec<PlantedQuery>> {
    if !(gamma_star > 0.0 && gamma_star < 1.0) {
        return Err(Error::domain(format!("gamma_star = {gamma_star} not in (0, 1)")));
    }
    let mut rng = rng_from_seed(seed);
    let g = (gamma_star + PLANTED_MARGIN).min(1.0 - 1e-9);
    let scale = (1.0 - g * g).sqrt();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random_range(0..dataset.len());
        let p = vecmath::widen(dataset.point(target));
        let u = sample_orthogonal_f64(&p, &mut rng);
        let q: Vec<f64> = p
            .iter()
            .zip(&u)
            .map(|(&pi, &ui)| g * pi + scale * ui)
            .collect();
        out.push(PlantedQuery {
            query: UnitVector::from_f64(&q)?,
            planted_index: target,
            gamma_star,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mu_of;

    #[test]
    fn sampled_points_are_unit_norm() {
        let mut rng = rng_from_seed(1);
        for d in [2u32, 3, 8, 48, 301] {
            for _ in 0..20 {
                let v = sample_sphere(d, &mut rng).unwrap();
                let norm = vecmath::norm_sq(&v.to_f64()).sqrt();
                assert!((norm - 1.0).abs() <= 1e-6, "d={d}: norm {norm}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut a = rng_from_seed(7);
        let mut b = rng_from_seed(7);
        let va = sample_sphere(16, &mut a).unwrap();
        let vb = sample_sphere(16, &mut b).unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn circle_angles_are_uniform() {
        // chi-square over 16 arcs at the 1% level, 1e5 draws, 15 dof
        let mut rng = rng_from_seed(1234);
        let mut counts = [0u64; 16];
        let draws = 100_000;
        for _ in 0..draws {
            let v = sample_sphere(2, &mut rng).unwrap();
            let angle = (v.as_slice()[1] as f64).atan2(v.as_slice()[0] as f64);
            let frac = (angle / std::f64::consts::TAU).rem_euclid(1.0);
            counts[((frac * 16.0) as usize).min(15)] += 1;
        }
        let expected = draws as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let diff = c as f64 - expected;
                diff * diff / expected
            })
            .sum();
        // 99th percentile of chi-square with 15 dof
        assert!(chi2 < 30.578, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn planted_inner_product_is_exact() {
        for seed in 0..20 {
            let spec = InstanceSpec::with_gamma_star(64, 24, 0.62, seed).unwrap();
            let ds = gen_planted(&spec).unwrap();
            let p = ds.planted.as_ref().unwrap();
            let ip = ds.dot_with(p.planted_index, &p.query);
            assert!((ip - 0.62).abs() <= 1e-6, "seed {seed}: ip {ip}");
            assert!(ip >= 0.62, "snapped planted ip fell below the threshold");
        }
    }

    #[test]
    fn c_parameterization() {
        let spec = InstanceSpec::with_c(128, 16, std::f64::consts::SQRT_2, 5).unwrap();
        assert!((spec.gamma_star - 0.5).abs() <= 1e-15);
        assert!(InstanceSpec::with_c(128, 16, 1.0, 5).is_err());
        assert!(InstanceSpec::with_gamma_star(1, 16, 0.5, 5).is_err());
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let spec = InstanceSpec::with_gamma_star(100, 32, 0.5, 99).unwrap();
        let a = gen_planted(&spec).unwrap();
        let b = gen_planted(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_planted_top_inner_product_concentrates_near_mu() {
        // median over seeds of the best non-planted inner product vs mu(n, d)
        let (n, d) = (4096usize, 128u32);
        let mu = mu_of(n as f64, d).unwrap();
        let mut tops = Vec::new();
        for seed in 0..24 {
            let spec = InstanceSpec::with_gamma_star(n, d, 0.9, seed).unwrap();
            let ds = gen_planted(&spec).unwrap();
            let planted = ds.planted.as_ref().unwrap();
            let q = &planted.query;
            let mut best = f64::NEG_INFINITY;
            for i in 0..ds.len() {
                if i == planted.planted_index {
                    continue;
                }
                best = best.max(ds.dot_with(i, q));
            }
            tops.push(best);
        }
        tops.sort_by(f64::total_cmp);
        let median = tops[tops.len() / 2];
        assert!(
            (median - mu).abs() <= 0.05,
            "median top ip {median} vs mu {mu}"
        );
    }

    #[test]
    fn pairwise_inner_products_center_on_zero() {
        let spec = InstanceSpec::with_gamma_star(256, 32, 0.5, 11).unwrap();
        let ds = gen_planted(&spec).unwrap();
        let skip = ds.planted.as_ref().unwrap().planted_index;
        let mut sum = 0.0;
        let mut pairs = 0u64;
        for i in 0..ds.len() {
            if i == skip {
                continue;
            }
            let pi = vecmath::widen(ds.point(i));
            for j in (i + 1)..ds.len() {
                if j == skip {
                    continue;
                }
                sum += vecmath::dot(&pi, &vecmath::widen(ds.point(j)));
                pairs += 1;
            }
        }
        let mean = sum / pairs as f64;
        let band = 3.0 / ((pairs as f64) * 32.0).sqrt();
        assert!(mean.abs() <= band, "mean {mean} exceeds band {band}");
    }

    #[test]
    fn adversarial_layout() {
        let ds = gen_adversarial(64, 16, 1e-3, 3).unwrap();
        let p = ds.planted.as_ref().unwrap();
        let q = &p.query;
        assert!(ds.dot_with(p.planted_index, q) >= 1.0 - 1e-5);
        for i in 0..ds.len() {
            if i == p.planted_index {
                continue;
            }
            assert!(ds.dot_with(i, q) <= -1.0 + 1e-5, "point {i} not antipodal");
        }
        assert!((ds.dot_with(p.planted_index, q) - p.gamma_star).abs() <= 1e-9);
    }

    #[test]
    fn planted_queries_share_dataset() {
        let spec = InstanceSpec::with_gamma_star(128, 24, 0.5, 21).unwrap();
        let ds = gen_planted(&spec).unwrap();
        let queries = plant_queries(&ds, 50, 0.5, 77).unwrap();
        assert_eq!(queries.len(), 50);
        for pq in &queries {
            let ip = ds.dot_with(pq.planted_index, &pq.query);
            assert!((ip - 0.5).abs() <= 1e-6);
        }
    }

    #[test]
    fn unit_vector_rejects_bad_norm() {
        assert!(UnitVector::new(vec![0.5, 0.5]).is_err());
        assert!(UnitVector::new(vec![1.0, 0.0]).is_ok());
        let e = UnitVector::new(vec![2.0, 0.0]).unwrap_err();
        assert!(matches!(e, Error::NormViolation { .. }));
    }
}
