//! Dense spectral diagnostics: eigenvalues, 2-norm condition numbers and
//! materialized preconditioned operators.

use nalgebra::DMatrix;
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::precond::{ExpansionConfig, ExpansionPreconditioner, InnerMode, Preconditioner};
use crate::problem::Problem;
use crate::sparse::SparseComplexMatrix;
use crate::vector::unit;

/// Largest dimension accepted by the dense routines.
pub const DENSE_LIMIT: usize = 2000;

const SCHUR_SWEEPS_PER_ROW: usize = 200;

/// Deflation tolerances tried in turn, in units of machine epsilon.
const SCHUR_DEFLATION: [f64; 3] = [1.0, 8.0, 64.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<c64>,
    /// `σ_max / σ_min`.
    pub condition_number: f64,
    pub label: String,
}

impl SpectrumReport {
    /// `max_j |λ_j − 1|`, the radius of the eigenvalue cloud around one.
    pub fn max_distance_from_one(&self) -> f64 {
        self.eigenvalues.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max)
    }

    /// `max |λ| / min |λ|`, an eigenvalue-based conditioning proxy.
    pub fn eigenvalue_ratio(&self) -> f64 {
        let mods = self.eigenvalues.iter().map(|z| z.norm());
        let (lo, hi) = mods.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        hi / lo
    }
}

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: DENSE_LIMIT });
    }
    Ok(())
}

/// All eigenvalues of a square dense matrix via the complex Schur form.
pub fn eigenvalues(m: &DMatrix<c64>) -> Result<Vec<c64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    check_dense(m.nrows())?;
    if m.iter().any(|z| !z.is_finite()) {
        return Err(Error::EigenFailure("matrix has non-finite entries".into()));
    }
    let max_iter = SCHUR_SWEEPS_PER_ROW * m.nrows().max(1);
    // clustered spectra can stall deflation at ε; loosen it a little before giving up
    let schur = SCHUR_DEFLATION
        .iter()
        .find_map(|&scale| m.clone().try_schur(scale * f64::EPSILON, max_iter))
        .ok_or_else(|| Error::EigenFailure(format!("Schur iteration exceeded {max_iter} steps")))?;
    let eig = schur.eigenvalues().ok_or_else(|| Error::EigenFailure("Schur form is not triangular".into()))?;
    Ok(eig.iter().copied().collect())
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<c64>) -> Result<Vec<f64>> {
    check_dense(m.nrows().max(m.ncols()))?;
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// 2-norm condition number `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(m: &DMatrix<c64>) -> Result<f64> {
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

pub fn spectrum(m: &DMatrix<c64>, label: impl Into<String>) -> Result<SpectrumReport> {
    Ok(SpectrumReport { eigenvalues: eigenvalues(m)?, condition_number: condition_number(m)?, label: label.into() })
}

/// Dense matrix of a linear preconditioner, one unit vector per column.
pub fn materialize<P: Preconditioner + ?Sized>(p: &P, n: usize) -> Result<DMatrix<c64>> {
    check_dense(n)?;
    let mut out = DMatrix::from_element(n, n, c64::new(0.0, 0.0));
    for j in 0..n {
        let col = p.apply(&unit(n, j))?;
        out.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    Ok(out)
}

/// Spectrum of `P·A` for a materialized linear preconditioner `P`.
pub fn preconditioned_operator_spectrum<P: Preconditioner + ?Sized>(
    p: &P,
    a: &SparseComplexMatrix,
    label: impl Into<String>,
) -> Result<SpectrumReport> {
    let pa = materialize(p, a.n_rows())? * a.to_dense();
    spectrum(&pa, label)
}

/// Spectrum and κ of `EX(m)·A` (or `EX_ω(m)·A`) with exact CSL inverses.
pub fn preconditioned_spectrum(config: &ExpansionConfig, problem: &Problem) -> Result<SpectrumReport> {
    check_dense(problem.size())?;
    let inner = problem.inner_solver(config.beta0, InnerMode::ExactLu)?;
    let p = ExpansionPreconditioner::new(*config, inner)?;
    preconditioned_operator_spectrum(&p, &problem.a, config.label())
}

/// κ(EX(m)·A) for every `m` in `ms`.
pub fn condition_vs_m(problem: &Problem, beta0: f64, ms: &[usize]) -> Result<Vec<(usize, f64)>> {
    check_dense(problem.size())?;
    let inner = problem.inner_solver(beta0, InnerMode::ExactLu)?;
    let a = problem.a.to_dense();
    // EX(m) = Σ_{n<m} Lⁿ·M⁻¹, built incrementally from the dense M⁻¹
    let minv = materialize(&inner, problem.size())?;
    let l = &minv * c64::new(0.0, -beta0 * problem.spec.k_squared);
    let max_m = ms.iter().copied().max().unwrap_or(0);
    let mut term = minv.clone();
    let mut ex = DMatrix::from_element(minv.nrows(), minv.ncols(), c64::new(0.0, 0.0));
    let mut kappa = Vec::with_capacity(max_m);
    for _ in 0..max_m {
        ex += &term;
        kappa.push(condition_number(&(&ex * &a))?);
        term = &l * &term;
    }
    ms.iter()
        .map(|&m| match m {
            0 => Err(Error::InvalidConfig("m must be at least 1".into())),
            _ => Ok((m, kappa[m - 1])),
        })
        .collect()
}

/// κ(EX_ω(m)·A) for every `ω` in `omegas`.
pub fn condition_vs_omega(problem: &Problem, beta0: f64, m: usize, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    omegas
        .iter()
        .map(|&omega| {
            let cfg = ExpansionConfig::weighted(m, omega, beta0, problem.spec.k_squared);
            Ok((omega, preconditioned_spectrum(&cfg, problem)?.condition_number))
        })
        .collect()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // ties share their mean rank
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation of two equally long samples.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    Ok(sxy / (sxx * syy).sqrt())
}
