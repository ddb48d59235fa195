//! The alpha-near-neighbor graph.
//!
//! Vertices are dataset points; two vertices are adjacent iff their inner
//! product is at least `alpha` (ties included). Each vertex stores its sorted
//! adjacency bucket, and every edge appears in both endpoint buckets, so a
//! bucket scan during search needs no auxiliary structure and a delete is a
//! binary-search removal per neighbor.
//!
//! Deleted vertices are tombstoned rather than compacted: indices stay stable
//! across deletes, which keeps planted-pair bookkeeping valid. [`AlphaGraph::compact`]
//! rebuilds dense indices when wanted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{cap_volume_exact, CapParams};
use crate::instance::{Dataset, UnitVector, NORM_TOLERANCE};
use crate::vecmath;
use crate::Result;

/// Alpha-near-neighbor graph over a set of unit vectors.
///
/// Point coordinates are kept in f64 internally; inner products accumulate in
/// f64 with a fixed association, so membership decisions are deterministic
/// and symmetric in the pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGraph {
    alpha: f64,
    dim: usize,
    /// Row-major coordinates for every slot ever created (tombstones keep
    /// their coordinates; they are simply never scanned).
    points: Vec<f64>,
    /// Sorted, duplicate-free adjacency per slot.
    buckets: Vec<Vec<u32>>,
    live: Vec<bool>,
    n_live: usize,
}

/// Structural counts of a graph, plus the analytic bucket-size expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub edge_count: u64,
    pub bucket_min: usize,
    pub bucket_mean: f64,
    pub bucket_max: usize,
    /// n * C(alpha) with the exact finite-d cap volume.
    pub expected_bucket: f64,
}

impl AlphaGraph {
    /// Builds the graph over a dataset with threshold `alpha`.
    ///
    /// The O(n^2 d) pair scan is split row-wise across threads; the result is
    /// identical regardless of thread count.
    pub fn build(dataset: &Dataset, alpha: f64) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::invalid("cannot build a graph over an empty dataset"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} not in (0, 1)")));
        }
        let n = dataset.len();
        if n > u32::MAX as usize {
            return Err(Error::invalid("dataset too large for u32 vertex indices"));
        }
        let dim = dataset.dim();
        let points: Vec<f64> = dataset.raw_data().iter().map(|&x| f64::from(x)).collect();

        // Forward adjacency (j > i) per row, computed independently per row.
        let forward: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let pi = &points[i * dim..(i + 1) * dim];
                let mut row = Vec::new();
                for j in (i + 1)..n {
                    let pj = &points[j * dim..(j + 1) * dim];
                    if vecmath::dot(pi, pj) >= alpha {
                        row.push(j as u32);
                    }
                }
                row
            })
            .collect();

        // Mirror into full buckets; both push orders are ascending, so each
        // bucket ends up sorted without an extra sort.
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, row) in forward.iter().enumerate() {
            for &j in row {
                buckets[i].push(j);
                buckets[j as usize].push(i as u32);
            }
        }

        Ok(AlphaGraph {
            alpha,
            dim,
            points,
            buckets,
            live: vec![true; n],
            n_live: n,
        })
    }

    /// Reassembles a graph from its parts (file loading). Buckets must be
    /// sorted, duplicate-free, in-range, and empty on tombstoned slots.
    pub fn from_parts(
        alpha: f64,
        dataset: &Dataset,
        buckets: Vec<Vec<u32>>,
        live: Vec<bool>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} not in (0, 1)")));
        }
        let n = dataset.len();
        if buckets.len() != n || live.len() != n {
            return Err(Error::invalid(format!(
                "graph has {} slots but dataset has {n} points",
                buckets.len()
            )));
        }
        for (i, b) in buckets.iter().enumerate() {
            if !b.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Format(format!("bucket {i} not sorted/duplicate-free")));
            }
            if b.iter().any(|&j| j as usize >= n || j as usize == i) {
                return Err(Error::Format(format!("bucket {i} has an out-of-range neighbor")));
            }
            if !live[i] && !b.is_empty() {
                return Err(Error::Format(format!("tombstoned slot {i} has neighbors")));
            }
        }
        let n_live = live.iter().filter(|&&l| l).count();
        Ok(AlphaGraph {
            alpha,
            dim: dataset.dim(),
            points: dataset.raw_data().iter().map(|&x| f64::from(x)).collect(),
            buckets,
            live,
            n_live,
        })
    }

    /// Inserts a point: creates its bucket and adds it to the bucket of every
    /// live point within the threshold. O(n d) comparisons.
    pub fn insert(&mut self, p: &UnitVector) -> Result<usize> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        let pf = p.to_f64();
        let norm = vecmath::norm_sq(&pf).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NormViolation {
                deviation: (norm - 1.0).abs(),
                tolerance: NORM_TOLERANCE,
            });
        }
        let new_index = self.buckets.len();
        if new_index > u32::MAX as usize {
            return Err(Error::invalid("graph is full for u32 vertex indices"));
        }
        let mut bucket = Vec::new();
        for j in 0..self.buckets.len() {
            if !self.live[j] {
                continue;
            }
            if vecmath::dot(&pf, self.point(j)) >= self.alpha {
                bucket.push(j as u32);
                // the new index is the largest, so a push keeps the
                // neighbor's bucket sorted
                self.buckets[j].push(new_index as u32);
            }
        }
        self.points.extend_from_slice(&pf);
        self.buckets.push(bucket);
        self.live.push(true);
        self.n_live += 1;
        Ok(new_index)
    }

    /// Deletes vertex `i`: removes it from every neighbor's bucket (binary
    /// search each), then tombstones its slot.
    pub fn delete(&mut self, i: usize) -> Result<()> {
        if i >= self.buckets.len() || !self.live[i] {
            return Err(Error::UnknownIndex(i));
        }
        let bucket = std::mem::take(&mut self.buckets[i]);
        for &j in &bucket {
            let nb = &mut self.buckets[j as usize];
            if let Ok(pos) = nb.binary_search(&(i as u32)) {
                nb.remove(pos);
            }
        }
        self.live[i] = false;
        self.n_live -= 1;
        Ok(())
    }

    /// Structural counts over live vertices.
    pub fn stats(&self) -> Result<GraphStats> {
        let mut total = 0u64;
        let mut min = usize::MAX;
        let mut max = 0usize;
        let mut live_count = 0u64;
        for (i, b) in self.buckets.iter().enumerate() {
            if !self.live[i] {
                continue;
            }
            live_count += 1;
            total += b.len() as u64;
            min = min.min(b.len());
            max = max.max(b.len());
        }
        if live_count == 0 {
            min = 0;
        }
        let expected = self.n_live as f64
            * cap_volume_exact(CapParams::new(self.alpha, self.dim as u32)?)?;
        Ok(GraphStats {
            edge_count: total / 2,
            bucket_min: min,
            bucket_mean: total as f64 / live_count.max(1) as f64,
            bucket_max: max,
            expected_bucket: expected,
        })
    }

    /// Rebuilds dense indices, dropping tombstones. Returns, for each new
    /// index, the old index it came from.
    pub fn compact(&mut self) -> Vec<usize> {
        let mut old_of_new = Vec::with_capacity(self.n_live);
        let mut new_of_old = vec![u32::MAX; self.buckets.len()];
        for (old, &alive) in self.live.iter().enumerate() {
            if alive {
                new_of_old[old] = old_of_new.len() as u32;
                old_of_new.push(old);
            }
        }
        let mut points = Vec::with_capacity(old_of_new.len() * self.dim);
        let mut buckets = Vec::with_capacity(old_of_new.len());
        for &old in &old_of_new {
            points.extend_from_slice(&self.points[old * self.dim..(old + 1) * self.dim]);
            let remapped: Vec<u32> = self.buckets[old]
                .iter()
                .map(|&j| new_of_old[j as usize])
                .collect();
            debug_assert!(remapped.windows(2).all(|w| w[0] < w[1]));
            buckets.push(remapped);
        }
        self.points = points;
        self.buckets = buckets;
        self.live = vec![true; old_of_new.len()];
        self.n_live = old_of_new.len();
        old_of_new
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of live vertices.
    pub fn len(&self) -> usize {
        self.n_live
    }

    pub fn is_empty(&self) -> bool {
        self.n_live == 0
    }

    /// Total number of slots, tombstones included.
    pub fn slots(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_live(&self, i: usize) -> bool {
        i < self.live.len() && self.live[i]
    }

    /// Adjacency bucket of vertex `i` (empty for tombstones).
    pub fn bucket(&self, i: usize) -> &[u32] {
        &self.buckets[i]
    }

    /// Coordinates of slot `i` in f64.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Inner product between slot `i` and a query in f64 coordinates.
    pub fn dot_query(&self, i: usize, q: &[f64]) -> f64 {
        vecmath::dot(self.point(i), q)
    }
}
