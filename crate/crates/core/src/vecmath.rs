//! Small dense-vector kernels.
//!
//! Dot products accumulate in f64 with a fixed 8-lane association so the
//! compiler can vectorize while results stay bit-identical run to run and
//! symmetric in the argument order.

/// Dot product of two f64 slices, 8 partial sums combined in a fixed order.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let lanes = n / 8 * 8;
    let mut acc = [0.0f64; 8];
    let mut i = 0;
    while i < lanes {
        // one iteration per lane keeps each accumulator independent
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
        acc[4] += a[i + 4] * b[i + 4];
        acc[5] += a[i + 5] * b[i + 5];
        acc[6] += a[i + 6] * b[i + 6];
        acc[7] += a[i + 7] * b[i + 7];
        i += 8;
    }
    let mut tail = 0.0f64;
    while i < n {
        tail += a[i] * b[i];
        i += 1;
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

/// Squared Euclidean norm.
#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Widen an f32 slice to f64 (exact).
pub(crate) fn widen(a: &[f32]) -> Vec<f64> {
    a.iter().map(|&x| f64::from(x)).collect()
}
