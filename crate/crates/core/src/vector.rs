//! Small dense vector kernels over `Complex64`.
//!
//! All reductions run in index order so that repeated runs produce
//! bit-identical residual histories.

use num_complex::Complex64 as c64;

pub const ZERO: c64 = c64::new(0.0, 0.0);
pub const ONE: c64 = c64::new(1.0, 0.0);

/// Conjugated inner product `xᴴ y`.
#[inline]
pub fn dot(x: &[c64], y: &[c64]) -> c64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

#[inline]
pub fn norm(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: c64, x: &[c64], y: &mut [c64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: c64, x: &mut [c64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

pub fn sub(x: &[c64], y: &[c64]) -> Vec<c64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn zeros(n: usize) -> Vec<c64> {
    vec![ZERO; n]
}

pub fn unit(n: usize, index: usize) -> Vec<c64> {
    let mut e = zeros(n);
    e[index] = ONE;
    e
}

/// Relative distance `‖x − y‖ / ‖y‖` (absolute when `y` vanishes).
pub fn rel_diff(x: &[c64], y: &[c64]) -> f64 {
    let d = norm(&sub(x, y));
    let n = norm(y);
    if n == 0.0 {
        d
    } else {
        d / n
    }
}
