//! Expansion polynomial preconditioners built on a complex shifted
//! Laplacian (CSL) inner solver.
//!
//! With `M = M(β₀)` and `L = −β₀k²i·M⁻¹` the Helmholtz operator factors as
//! `A = M(I − L)`, so `A⁻¹ = Σₙ Lⁿ M⁻¹`. `EX(m)` truncates that series after
//! `m` terms; `EX_ω(m)` runs a weighted fixed-point iteration instead, and
//! the GMRES variant picks the polynomial coefficients by minimizing a
//! residual.
//!
//! Cost is measured in work units (WU), one WU being one CSL inversion.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as c64;

use crate::analysis::{self, DENSE_LIMIT};
use crate::direct::{lu_factor, LuFactors};
use crate::error::{check_len, Error, Result};
use crate::multigrid::MultigridHierarchy;
use crate::sparse::SparseComplexMatrix;
use crate::vector::{axpy, dot, norm, scale, zeros, ONE};

/// Series coefficients above this modulus are reported as overflowing.
pub const ALPHA_OVERFLOW: f64 = 1e280;
/// Arnoldi vectors are orthogonalized a second time above this loss level.
pub const REORTHOGONALIZATION_THRESHOLD: f64 = 1e-8;
const BREAKDOWN_TOLERANCE: f64 = 1e-14;
const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// A linear map applied to vectors, such as an approximate inverse.
pub trait Preconditioner {
    fn apply(&self, w: &[c64]) -> Result<Vec<c64>>;

    /// CSL inversions performed so far, for implementations that count them.
    fn work_units(&self) -> u64 {
        0
    }
}

impl<F> Preconditioner for F
where
    F: Fn(&[c64]) -> Result<Vec<c64>>,
{
    fn apply(&self, w: &[c64]) -> Result<Vec<c64>> {
        self(w)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, w: &[c64]) -> Result<Vec<c64>> {
        Ok(w.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMode {
    ExactLu,
    VCycle,
}

impl FromStr for InnerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "lu" | "exactlu" => Ok(Self::ExactLu),
            "vcycle" | "v-cycle" | "mg" => Ok(Self::VCycle),
            other => Err(Error::InvalidConfig(format!("unknown inner mode '{other}'"))),
        }
    }
}

impl fmt::Display for InnerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExactLu => "exact",
            Self::VCycle => "vcycle",
        })
    }
}

#[derive(Debug)]
enum Backend {
    Lu(LuFactors),
    Multigrid(MultigridHierarchy),
}

/// Applies `M(β₀)⁻¹` exactly or by one V-cycle and counts every application.
#[derive(Debug)]
pub struct CslInnerSolver {
    backend: Backend,
    work_units: AtomicU64,
}

impl CslInnerSolver {
    pub fn exact(factors: LuFactors) -> Self {
        Self { backend: Backend::Lu(factors), work_units: AtomicU64::new(0) }
    }

    pub fn vcycle(hierarchy: MultigridHierarchy) -> Self {
        Self { backend: Backend::Multigrid(hierarchy), work_units: AtomicU64::new(0) }
    }

    pub fn mode(&self) -> InnerMode {
        match self.backend {
            Backend::Lu(_) => InnerMode::ExactLu,
            Backend::Multigrid(_) => InnerMode::VCycle,
        }
    }

    pub fn size(&self) -> usize {
        match &self.backend {
            Backend::Lu(f) => f.n(),
            Backend::Multigrid(h) => h.size(),
        }
    }

    /// One CSL inversion (1 WU).
    pub fn solve(&self, b: &[c64]) -> Result<Vec<c64>> {
        check_len(self.size(), b.len())?;
        self.work_units.fetch_add(1, Ordering::Relaxed);
        let x = match &self.backend {
            Backend::Lu(f) => f.solve(b),
            Backend::Multigrid(h) => h.apply(b),
        }
        .map_err(|e| Error::InnerSolveFailure(e.to_string()))?;
        if x.iter().any(|z| !z.is_finite()) {
            return Err(Error::InnerSolveFailure("non-finite CSL solution".into()));
        }
        Ok(x)
    }

    pub fn work_units(&self) -> u64 {
        self.work_units.load(Ordering::Relaxed)
    }

    pub fn reset_work_units(&self) {
        self.work_units.store(0, Ordering::Relaxed);
    }
}

impl Preconditioner for CslInnerSolver {
    fn apply(&self, w: &[c64]) -> Result<Vec<c64>> {
        self.solve(w)
    }

    fn work_units(&self) -> u64 {
        CslInnerSolver::work_units(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Truncated Taylor series `EX(m)`.
    Taylor,
    /// Weighted fixed-point iteration `EX_ω(m)`.
    Weighted,
    /// Minimal-residual polynomial in `M⁻¹` of degree `m`.
    GmresPoly,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "taylor" | "ex" => Ok(Self::Taylor),
            "weighted" | "ex-omega" | "exw" => Ok(Self::Weighted),
            "gmres-poly" | "gmres" | "gmrespoly" => Ok(Self::GmresPoly),
            other => Err(Error::InvalidConfig(format!("unknown preconditioner family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Taylor => "taylor",
            Self::Weighted => "weighted",
            Self::GmresPoly => "gmres-poly",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionConfig {
    pub family: Family,
    /// Polynomial degree; `m = 1` is the plain CSL preconditioner.
    pub m: usize,
    /// Weight of the fixed-point iteration, used by [`Family::Weighted`].
    pub omega: f64,
    pub beta0: f64,
    pub k_squared: f64,
}

impl ExpansionConfig {
    pub fn taylor(m: usize, beta0: f64, k_squared: f64) -> Self {
        Self { family: Family::Taylor, m, omega: 1.0, beta0, k_squared }
    }

    pub fn weighted(m: usize, omega: f64, beta0: f64, k_squared: f64) -> Self {
        Self { family: Family::Weighted, m, omega, beta0, k_squared }
    }

    pub fn gmres_poly(m: usize, beta0: f64, k_squared: f64) -> Self {
        Self { family: Family::GmresPoly, m, omega: 1.0, beta0, k_squared }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("degree m must be at least 1".into()));
        }
        if !(self.beta0.is_finite() && self.beta0 >= 0.0) {
            return Err(Error::InvalidConfig(format!("shift beta0 = {} must be finite and non-negative", self.beta0)));
        }
        if !(self.k_squared.is_finite() && self.k_squared > 0.0) {
            return Err(Error::InvalidConfig(format!("k^2 = {} must be positive", self.k_squared)));
        }
        if self.family == Family::Weighted && !(0.0..=2.0).contains(&self.omega) {
            return Err(Error::InvalidConfig(format!("omega = {} outside [0, 2]", self.omega)));
        }
        Ok(())
    }

    /// `α₁ = −β₀k²i`, the ratio of consecutive series coefficients.
    pub fn alpha(&self) -> c64 {
        c64::new(0.0, -self.beta0 * self.k_squared)
    }

    /// `αₙ = (−β₀k²i)ⁿ`, or `None` once its modulus exceeds [`ALPHA_OVERFLOW`].
    pub fn coefficient(&self, n: usize) -> Option<c64> {
        let modulus = (self.beta0 * self.k_squared).powi(n as i32);
        (modulus <= ALPHA_OVERFLOW).then(|| self.alpha().powu(n as u32))
    }

    /// CSL inversions actually performed by one application.
    pub fn work_units_per_apply(&self) -> u64 {
        match self.family {
            Family::Weighted if self.omega == 0.0 => 1,
            _ => self.m as u64,
        }
    }

    /// Cost charged per application: `m` for Taylor, `m + 1` otherwise.
    pub fn nominal_work_units_per_apply(&self) -> u64 {
        match self.family {
            Family::Taylor => self.m as u64,
            Family::Weighted | Family::GmresPoly => self.m as u64 + 1,
        }
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::Taylor => format!("EX({})", self.m),
            Family::Weighted => format!("EX_{}({})", self.omega, self.m),
            Family::GmresPoly => format!("GMRES-poly({})", self.m),
        }
    }
}

/// `EX(m)·w = Σ_{n<m} αₙ M⁻⁽ⁿ⁺¹⁾ w` in `m` inner solves.
///
/// Terms are generated as `t₀ = M⁻¹w`, `tₙ = α₁·M⁻¹tₙ₋₁`, so the scalar
/// powers `αₙ` never appear on their own.
pub fn apply_ex(config: &ExpansionConfig, inner: &CslInnerSolver, w: &[c64]) -> Result<Vec<c64>> {
    config.validate()?;
    check_len(inner.size(), w.len())?;
    let alpha = config.alpha();
    let mut term = inner.solve(w)?;
    let mut sum = term.clone();
    for _ in 1..config.m {
        term = inner.solve(&term)?;
        scale(alpha, &mut term);
        axpy(ONE, &term, &mut sum);
    }
    Ok(sum)
}

/// `EX_ω(m)·w = M⁻¹u⁽ᵐ⁾` with `u ← (1−ω)u + ωLu + ωw` from `u⁽⁰⁾ = 0`.
///
/// The first step needs no inner solve, so one application costs `m` WU.
/// `ω = 0` would give the zero map; it is taken as its scale-free limit
/// `M⁻¹w`, which is the CSL preconditioner.
pub fn apply_ex_weighted(config: &ExpansionConfig, inner: &CslInnerSolver, w: &[c64]) -> Result<Vec<c64>> {
    config.validate()?;
    check_len(inner.size(), w.len())?;
    let omega = config.omega;
    if omega == 0.0 {
        return inner.solve(w);
    }
    let alpha = config.alpha();
    let mut u: Vec<c64> = w.iter().map(|x| x * omega).collect();
    for _ in 1..config.m {
        let lu = inner.solve(&u)?;
        for ((ui, li), wi) in u.iter_mut().zip(&lu).zip(w) {
            *ui = *ui * (1.0 - omega) + alpha * li * omega + wi * omega;
        }
    }
    inner.solve(&u)
}

/// Minimal-residual polynomial `z = Σⱼ yⱼ M⁻¹vⱼ` over the Krylov basis
/// `vⱼ` of `M⁻¹` started at a seed vector.
///
/// The Arnoldi coefficients and `y` are frozen after [`GmresPolynomial::fit`],
/// so [`GmresPolynomial::apply`] replays the same recurrence on any input and
/// is linear in it. Applying the fit to its own seed reproduces the fitted
/// output exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GmresPolynomial {
    config: ExpansionConfig,
    /// Column `j` holds `h₀ⱼ … hⱼ₊₁,ⱼ`.
    hessenberg: Vec<Vec<c64>>,
    coefficients: Vec<c64>,
    seed_norm: f64,
}

impl GmresPolynomial {
    pub fn fit(
        config: &ExpansionConfig,
        inner: &CslInnerSolver,
        a: &SparseComplexMatrix,
        seed: &[c64],
    ) -> Result<Self> {
        Ok(fit_gmres_poly(config, inner, a, seed)?.0)
    }

    /// Degree actually reached; below `m` after an Arnoldi breakdown.
    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[c64] {
        &self.coefficients
    }

    pub fn config(&self) -> &ExpansionConfig {
        &self.config
    }

    pub fn apply(&self, inner: &CslInnerSolver, w: &[c64]) -> Result<Vec<c64>> {
        check_len(inner.size(), w.len())?;
        let d = self.degree();
        let mut basis: Vec<Vec<c64>> = Vec::with_capacity(d);
        basis.push(w.iter().map(|x| x / self.seed_norm).collect());
        let mut z = zeros(w.len());
        for j in 0..d {
            let lv = inner.solve(&basis[j])?;
            axpy(self.coefficients[j], &lv, &mut z);
            if j + 1 < d {
                let h = &self.hessenberg[j];
                let mut next = lv;
                for (i, v) in basis.iter().enumerate() {
                    axpy(-h[i], v, &mut next);
                }
                scale(c64::new(1.0 / h[j + 1].re, 0.0), &mut next);
                basis.push(next);
            }
        }
        Ok(z)
    }
}

/// Orthogonalizes `q` against `basis` by modified Gram–Schmidt, repeating
/// the pass once when the result is not orthogonal to within
/// [`REORTHOGONALIZATION_THRESHOLD`]. Returns the projection coefficients.
fn orthogonalize(basis: &[Vec<c64>], q: &mut [c64]) -> Vec<c64> {
    let mut h: Vec<c64> = basis
        .iter()
        .map(|v| {
            let c = dot(v, q);
            axpy(-c, v, q);
            c
        })
        .collect();
    let qn = norm(q);
    let loss = basis.iter().map(|v| dot(v, q).norm()).fold(0.0, f64::max);
    if qn > 0.0 && loss > REORTHOGONALIZATION_THRESHOLD * qn {
        for (hi, v) in h.iter_mut().zip(basis) {
            let c = dot(v, q);
            axpy(-c, v, q);
            *hi += c;
        }
    }
    h
}

fn fit_gmres_poly(
    config: &ExpansionConfig,
    inner: &CslInnerSolver,
    a: &SparseComplexMatrix,
    seed: &[c64],
) -> Result<(GmresPolynomial, Vec<c64>)> {
    config.validate()?;
    check_len(inner.size(), seed.len())?;
    check_len(a.n_rows(), seed.len())?;
    let seed_norm = norm(seed);
    if seed_norm == 0.0 {
        return Err(Error::InvalidConfig("GMRES polynomial needs a nonzero seed vector".into()));
    }
    let n = seed.len();
    let mut basis = vec![seed.iter().map(|x| x / seed_norm).collect::<Vec<_>>()];
    let mut images: Vec<Vec<c64>> = Vec::with_capacity(config.m);
    let mut hessenberg = Vec::with_capacity(config.m);
    for j in 0..config.m {
        let lv = inner.solve(&basis[j])?;
        let mut q = lv.clone();
        let mut h = orthogonalize(&basis, &mut q);
        let hn = norm(&q);
        h.push(c64::new(hn, 0.0));
        hessenberg.push(h);
        images.push(lv);
        if hn <= BREAKDOWN_TOLERANCE * norm(&images[j]) {
            // the Krylov space is invariant and holds the exact answer
            break;
        }
        if j + 1 < config.m {
            scale(c64::new(1.0 / hn, 0.0), &mut q);
            basis.push(q);
        }
    }

    // min ‖seed − Σⱼ yⱼ A·M⁻¹vⱼ‖ by a thin QR of the n × d image matrix
    let d = images.len();
    let mut b = DMatrix::from_element(n, d, c64::new(0.0, 0.0));
    for (j, lv) in images.iter().enumerate() {
        b.set_column(j, &DVector::from_vec(a.matvec(lv)?));
    }
    let qr = b.qr();
    let rhs = qr.q().adjoint() * DVector::from_column_slice(seed);
    let y = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::InnerSolveFailure("rank-deficient GMRES polynomial least squares".into()))?;
    let coefficients: Vec<c64> = y.iter().copied().collect();

    let mut z = zeros(n);
    for (c, lv) in y.iter().zip(&images) {
        axpy(*c, lv, &mut z);
    }
    let poly = GmresPolynomial { config: *config, hessenberg, coefficients, seed_norm };
    Ok((poly, z))
}

/// Degree-`m` minimal-residual polynomial preconditioner fitted to `w`
/// itself and applied to it. The map is not linear in `w`; use
/// [`GmresPolynomial`] for a fixed operator.
pub fn apply_gmres_poly(
    config: &ExpansionConfig,
    inner: &CslInnerSolver,
    a: &SparseComplexMatrix,
    w: &[c64],
) -> Result<Vec<c64>> {
    Ok(fit_gmres_poly(config, inner, a, w)?.1)
}

/// A fixed expansion preconditioner together with its inner solver.
#[derive(Debug)]
pub struct ExpansionPreconditioner {
    config: ExpansionConfig,
    inner: CslInnerSolver,
    polynomial: Option<GmresPolynomial>,
}

impl ExpansionPreconditioner {
    /// Taylor or weighted preconditioner; GMRES polynomials need [`Self::gmres_fitted`].
    pub fn new(config: ExpansionConfig, inner: CslInnerSolver) -> Result<Self> {
        config.validate()?;
        if config.family == Family::GmresPoly {
            return Err(Error::InvalidConfig("a GMRES polynomial must be fitted to a seed vector".into()));
        }
        Ok(Self { config, inner, polynomial: None })
    }

    pub fn gmres_fitted(
        config: ExpansionConfig,
        inner: CslInnerSolver,
        a: &SparseComplexMatrix,
        seed: &[c64],
    ) -> Result<Self> {
        let poly = GmresPolynomial::fit(&config, &inner, a, seed)?;
        inner.reset_work_units();
        Ok(Self { config, inner, polynomial: Some(poly) })
    }

    pub fn config(&self) -> &ExpansionConfig {
        &self.config
    }

    pub fn inner(&self) -> &CslInnerSolver {
        &self.inner
    }

    pub fn polynomial(&self) -> Option<&GmresPolynomial> {
        self.polynomial.as_ref()
    }
}

impl Preconditioner for ExpansionPreconditioner {
    fn apply(&self, w: &[c64]) -> Result<Vec<c64>> {
        match (self.config.family, &self.polynomial) {
            (Family::Taylor, _) => apply_ex(&self.config, &self.inner, w),
            (Family::Weighted, _) => apply_ex_weighted(&self.config, &self.inner, w),
            (Family::GmresPoly, Some(p)) => p.apply(&self.inner, w),
            (Family::GmresPoly, None) => Err(Error::InvalidConfig("GMRES polynomial was not fitted".into())),
        }
    }

    fn work_units(&self) -> u64 {
        self.inner.work_units()
    }
}

/// `ρ(L)` for `L = −β₀k²i·M⁻¹`: dense eigenvalues of `M` up to
/// [`DENSE_LIMIT`] unknowns, power iteration on `M⁻¹` above.
#[allow(non_snake_case)]
pub fn spectral_radius_L(m_matrix: &SparseComplexMatrix, beta0: f64, k_squared: f64) -> Result<f64> {
    if m_matrix.n_rows() <= DENSE_LIMIT {
        let eig = analysis::eigenvalues(&m_matrix.to_dense())?;
        let smallest = eig.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if smallest == 0.0 {
            return Err(Error::SingularMatrix { index: 0, modulus: 0.0 });
        }
        Ok(beta0 * k_squared / smallest)
    } else {
        spectral_radius_power(m_matrix, beta0, k_squared)
    }
}

/// `ρ(L)` by power iteration on `M⁻¹`.
pub fn spectral_radius_power(m_matrix: &SparseComplexMatrix, beta0: f64, k_squared: f64) -> Result<f64> {
    let f = lu_factor(m_matrix)?;
    let n = m_matrix.n_rows();
    let mut v: Vec<c64> = (0..n).map(|i| c64::new(1.0, (0.7 * i as f64).sin())).collect();
    let vn = norm(&v);
    scale(c64::new(1.0 / vn, 0.0), &mut v);
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mut w = f.solve(&v)?;
        let growth = norm(&w);
        if growth == 0.0 || !growth.is_finite() {
            return Err(Error::ConvergenceFailure { method: "power iteration", iterations: 0 });
        }
        scale(c64::new(1.0 / growth, 0.0), &mut w);
        v = w;
        if (growth - estimate).abs() <= POWER_TOLERANCE * growth {
            return Ok(beta0 * k_squared * growth);
        }
        estimate = growth;
    }
    Err(Error::ConvergenceFailure { method: "power iteration", iterations: POWER_MAX_ITER })
}
