//! LU factorization with partial (row) pivoting for complex matrices.
//!
//! Matrices whose bandwidth is within the configured threshold use banded
//! storage in the LAPACK `gbtrf` layout: `kl` extra super-diagonals absorb
//! the fill produced by row interchanges. Everything else goes through a
//! dense row-major factorization.

use num_complex::Complex64 as c64;

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseComplexMatrix;
use crate::vector::ZERO;

/// Pivots with modulus below this are treated as exact zeros.
pub const PIVOT_TOLERANCE: f64 = 1e-300;

/// Banded storage is used when `max(kl, ku)` does not exceed this.
pub const DEFAULT_BAND_THRESHOLD: usize = 64;
/// Largest matrix factored with full dense storage.
pub const MAX_DENSE_LU: usize = 8192;

#[derive(Debug, Clone)]
enum Storage {
    Dense {
        /// Row-major `n × n`; strictly lower part holds `L` (unit diagonal).
        lu: Vec<c64>,
    },
    Banded {
        kl: usize,
        ku: usize,
        /// Column-major `(2kl + ku + 1) × n`; entry `(i, j)` at row `kl + ku + i - j`.
        ab: Vec<c64>,
    },
}

/// Packed `PA = LU` factors.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    /// Row interchanged with row `k` at step `k`.
    pivots: Vec<usize>,
    storage: Storage,
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.storage, Storage::Banded { .. })
    }

    /// `(kl, ku)` of the banded path.
    pub fn bandwidths(&self) -> Option<(usize, usize)> {
        match self.storage {
            Storage::Banded { kl, ku, .. } => Some((kl, ku)),
            Storage::Dense { .. } => None,
        }
    }

    pub fn solve(&self, b: &[c64]) -> Result<Vec<c64>> {
        lu_solve(self, b)
    }
}

/// Factors a square sparse matrix, choosing banded storage when the
/// bandwidth is at most [`DEFAULT_BAND_THRESHOLD`] or an eighth of the size.
pub fn lu_factor(m: &SparseComplexMatrix) -> Result<LuFactors> {
    lu_factor_with_threshold(m, DEFAULT_BAND_THRESHOLD.max(m.n_rows() / 8))
}

pub fn lu_factor_with_threshold(m: &SparseComplexMatrix, band_threshold: usize) -> Result<LuFactors> {
    check_len(m.n_rows(), m.n_cols())?;
    let (kl, ku) = m.bandwidths();
    let n = m.n_rows();
    if kl.max(ku) <= band_threshold {
        factor_banded(m, kl, ku)
    } else {
        if n > MAX_DENSE_LU {
            return Err(Error::TooLarge { size: n, limit: MAX_DENSE_LU });
        }
        let mut lu = vec![ZERO; n * n];
        for (i, j, v) in m.triplets() {
            lu[i * n + j] = v;
        }
        factor_dense(n, lu)
    }
}

/// Factors a dense row-major `n × n` matrix.
pub fn lu_factor_dense(n: usize, a: &[c64]) -> Result<LuFactors> {
    check_len(n * n, a.len())?;
    factor_dense(n, a.to_vec())
}

fn factor_dense(n: usize, mut lu: Vec<c64>) -> Result<LuFactors> {
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let (p, modulus) =
            (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if modulus.is_nan() || modulus < PIVOT_TOLERANCE {
            return Err(Error::SingularMatrix { index: k, modulus });
        }
        pivots.push(p);
        if p != k {
            // L columns stay in place; the solve applies pivots step by step
            for j in k..n {
                lu.swap(k * n + j, p * n + j);
            }
        }
        let inv = 1.0 / lu[k * n + k];
        for i in k + 1..n {
            let l = lu[i * n + k] * inv;
            lu[i * n + k] = l;
            if l != ZERO {
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= l * u;
                }
            }
        }
    }
    Ok(LuFactors { n, pivots, storage: Storage::Dense { lu } })
}

fn factor_banded(m: &SparseComplexMatrix, kl: usize, ku: usize) -> Result<LuFactors> {
    let n = m.n_rows();
    let ld = 2 * kl + ku + 1;
    let off = kl + ku;
    let mut ab = vec![ZERO; ld * n];
    let at = |i: usize, j: usize| (off + i - j) + j * ld;
    for (i, j, v) in m.triplets() {
        ab[at(i, j)] = v;
    }
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let last_col = (k + kl + ku).min(n - 1);
        let (p, modulus) =
            (k..=last_row)
                .map(|i| (i, ab[at(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if modulus.is_nan() || modulus < PIVOT_TOLERANCE {
            return Err(Error::SingularMatrix { index: k, modulus });
        }
        pivots.push(p);
        if p != k {
            for j in k..=last_col {
                ab.swap(at(k, j), at(p, j));
            }
        }
        let inv = 1.0 / ab[at(k, k)];
        for i in k + 1..=last_row {
            ab[at(i, k)] *= inv;
        }
        for j in k + 1..=last_col {
            let u = ab[at(k, j)];
            if u == ZERO {
                continue;
            }
            for i in k + 1..=last_row {
                let l = ab[at(i, k)];
                ab[at(i, j)] -= l * u;
            }
        }
    }
    Ok(LuFactors { n, pivots, storage: Storage::Banded { kl, ku, ab } })
}

/// Solves `A x = b` from the factors of `A`.
pub fn lu_solve(f: &LuFactors, b: &[c64]) -> Result<Vec<c64>> {
    check_len(f.n, b.len())?;
    let n = f.n;
    let mut x = b.to_vec();
    match &f.storage {
        Storage::Dense { lu } => {
            for k in 0..n {
                x.swap(k, f.pivots[k]);
                let xk = x[k];
                if xk != ZERO {
                    for i in k + 1..n {
                        x[i] -= lu[i * n + k] * xk;
                    }
                }
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for j in i + 1..n {
                    s -= lu[i * n + j] * x[j];
                }
                x[i] = s / lu[i * n + i];
            }
        }
        Storage::Banded { kl, ku, ab } => {
            let (kl, ku) = (*kl, *ku);
            let ld = 2 * kl + ku + 1;
            let off = kl + ku;
            let at = |i: usize, j: usize| (off + i - j) + j * ld;
            for k in 0..n {
                x.swap(k, f.pivots[k]);
                let xk = x[k];
                if xk != ZERO {
                    for i in k + 1..=(k + kl).min(n - 1) {
                        x[i] -= ab[at(i, k)] * xk;
                    }
                }
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for j in i + 1..=(i + kl + ku).min(n - 1) {
                    s -= ab[at(i, j)] * x[j];
                }
                x[i] = s / ab[at(i, i)];
            }
        }
    }
    Ok(x)
}
