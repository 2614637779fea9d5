//! Left-preconditioned BiCGStab and full GMRES.
//!
//! Both solvers start from `x₀ = 0` and stop on the preconditioned relative
//! residual `‖P(f − Ax)‖ / ‖Pf‖`. The true residual `‖f − Ax‖ / ‖f‖` is
//! tracked alongside when requested.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as c64;

use crate::error::{check_len, Error, Result};
use crate::precond::Preconditioner;
use crate::sparse::SparseComplexMatrix;
use crate::vector::{axpy, dot, norm, scale, zeros, ONE, ZERO};

/// Scalars below this modulus count as a BiCGStab breakdown.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-290;
const HAPPY_BREAKDOWN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BiCgStab,
    Gmres,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bicgstab" => Ok(Self::BiCgStab),
            "gmres" => Ok(Self::Gmres),
            other => Err(Error::InvalidConfig(format!("unknown Krylov method '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BiCgStab => "bicgstab",
            Self::Gmres => "gmres",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub record_true_residual: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: Method::BiCgStab, tol: 1e-8, max_iter: 1000, record_true_residual: true }
    }
}

impl SolverConfig {
    pub fn new(method: Method, tol: f64, max_iter: usize) -> Self {
        Self { method, tol, max_iter, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged,
    /// The Krylov space became invariant and holds the exact solution.
    HappyBreakdown,
    MaxIterations,
    Breakdown(String),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Converged => f.write_str("converged"),
            Self::HappyBreakdown => f.write_str("happy_breakdown"),
            Self::MaxIterations => f.write_str("max_iterations"),
            Self::Breakdown(what) => write!(f, "breakdown:{what}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    /// Outer iterations `p`.
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Preconditioned relative residuals, starting at 1.
    pub residual_history: Vec<f64>,
    /// True relative residuals `‖f − Ax‖ / ‖f‖`, aligned with `residual_history`.
    pub true_residual_history: Vec<f64>,
    pub preconditioner_applies: usize,
    /// CSL inversions, as counted by the preconditioner.
    pub work_units: u64,
    /// Seconds spent in the iteration loop.
    pub wall_time: f64,
    pub final_true_residual: f64,
}

impl SolveReport {
    /// Whether the preconditioned residual never increased.
    pub fn is_monotone(&self) -> bool {
        self.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
    }
}

/// Runs the method selected in `cfg`.
pub fn solve<P: Preconditioner + ?Sized>(
    a: &SparseComplexMatrix,
    precond: &P,
    f: &[c64],
    cfg: &SolverConfig,
) -> Result<(Vec<c64>, SolveReport)> {
    match cfg.method {
        Method::BiCgStab => bicgstab(a, precond, f, cfg),
        Method::Gmres => gmres(a, precond, f, cfg),
    }
}

struct Tracker<'a, P: ?Sized> {
    a: &'a SparseComplexMatrix,
    precond: &'a P,
    f: &'a [c64],
    f_norm: f64,
    applies: usize,
    history: Vec<f64>,
    true_history: Vec<f64>,
}

impl<'a, P: Preconditioner + ?Sized> Tracker<'a, P> {
    fn new(a: &'a SparseComplexMatrix, precond: &'a P, f: &'a [c64]) -> Self {
        Self { a, precond, f, f_norm: norm(f), applies: 0, history: vec![1.0], true_history: Vec::new() }
    }

    /// `P·v`
    fn precondition(&mut self, v: &[c64]) -> Result<Vec<c64>> {
        self.applies += 1;
        self.precond.apply(v)
    }

    /// `P·A·v`
    fn operator(&mut self, v: &[c64]) -> Result<Vec<c64>> {
        let av = self.a.matvec(v)?;
        self.precondition(&av)
    }

    fn true_residual(&self, x: &[c64]) -> Result<f64> {
        let r = norm(&self.a.residual(self.f, x)?);
        Ok(if self.f_norm > 0.0 { r / self.f_norm } else { r })
    }

    fn record(&mut self, rel: f64, x: Option<&[c64]>) -> Result<()> {
        self.history.push(rel);
        if let Some(x) = x {
            let t = self.true_residual(x)?;
            self.true_history.push(t);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        method: Method,
        x: Vec<c64>,
        iterations: usize,
        converged: bool,
        stop_reason: StopReason,
        wu_start: u64,
        start: Instant,
    ) -> Result<(Vec<c64>, SolveReport)> {
        let wall_time = start.elapsed().as_secs_f64();
        let final_true_residual = self.true_residual(&x)?;
        let report = SolveReport {
            method,
            iterations,
            converged,
            stop_reason,
            residual_history: self.history,
            true_residual_history: self.true_history,
            preconditioner_applies: self.applies,
            work_units: self.precond.work_units() - wu_start,
            wall_time,
            final_true_residual,
        };
        Ok((x, report))
    }
}

fn check_inputs(a: &SparseComplexMatrix, f: &[c64], cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    check_len(a.n_rows(), a.n_cols())?;
    check_len(a.n_rows(), f.len())
}

/// Left-preconditioned BiCGStab on `P·A·x = P·f`. Each iteration applies
/// the preconditioner twice.
pub fn bicgstab<P: Preconditioner + ?Sized>(
    a: &SparseComplexMatrix,
    precond: &P,
    f: &[c64],
    cfg: &SolverConfig,
) -> Result<(Vec<c64>, SolveReport)> {
    check_inputs(a, f, cfg)?;
    let wu_start = precond.work_units();
    let start = Instant::now();
    let n = f.len();
    let mut t = Tracker::new(a, precond, f);
    let mut x = zeros(n);
    let method = Method::BiCgStab;

    let mut r = t.precondition(f)?;
    let r0_norm = norm(&r);
    if cfg.record_true_residual {
        t.true_history.push(if t.f_norm > 0.0 { 1.0 } else { 0.0 });
    }
    if r0_norm == 0.0 {
        return t.finish(method, x, 0, true, StopReason::Converged, wu_start, start);
    }
    let r_hat = r.clone();
    let mut p = zeros(n);
    let mut v = zeros(n);
    let (mut rho_prev, mut alpha, mut omega) = (ONE, ONE, ONE);

    for it in 1..=cfg.max_iter {
        let rho = dot(&r_hat, &r);
        if rho.norm() < BREAKDOWN_THRESHOLD {
            return t.finish(method, x, it - 1, false, StopReason::Breakdown("rho".into()), wu_start, start);
        }
        if it == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_prev) * (alpha / omega);
            for ((pi, ri), vi) in p.iter_mut().zip(&r).zip(&v) {
                *pi = ri + beta * (*pi - omega * vi);
            }
        }
        v = t.operator(&p)?;
        let denom = dot(&r_hat, &v);
        if denom.norm() < BREAKDOWN_THRESHOLD {
            return t.finish(method, x, it - 1, false, StopReason::Breakdown("r_hat.v".into()), wu_start, start);
        }
        alpha = rho / denom;
        let mut s = r.clone();
        axpy(-alpha, &v, &mut s);
        let s_rel = norm(&s) / r0_norm;
        if s_rel < cfg.tol {
            // converged at the half step
            axpy(alpha, &p, &mut x);
            let rec = cfg.record_true_residual.then_some(x.as_slice());
            t.record(s_rel, rec)?;
            return t.finish(method, x, it, true, StopReason::Converged, wu_start, start);
        }
        let tv = t.operator(&s)?;
        let tt = dot(&tv, &tv).re;
        if tt == 0.0 {
            return t.finish(method, x, it - 1, false, StopReason::Breakdown("t".into()), wu_start, start);
        }
        omega = dot(&tv, &s) / tt;
        axpy(alpha, &p, &mut x);
        axpy(omega, &s, &mut x);
        r = s;
        axpy(-omega, &tv, &mut r);
        let rel = norm(&r) / r0_norm;
        let rec = cfg.record_true_residual.then_some(x.as_slice());
        t.record(rel, rec)?;
        if rel < cfg.tol {
            return t.finish(method, x, it, true, StopReason::Converged, wu_start, start);
        }
        if omega.norm() < BREAKDOWN_THRESHOLD {
            return t.finish(method, x, it, false, StopReason::Breakdown("omega".into()), wu_start, start);
        }
        rho_prev = rho;
    }
    let iters = cfg.max_iter;
    t.finish(method, x, iters, false, StopReason::MaxIterations, wu_start, start)
}

/// Complex Givens rotation `(c, s)` with `[c s; −s̄ c]·[a; b] = [r; 0]`.
fn givens(a: c64, b: c64) -> (f64, c64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, ONE);
    }
    let (na, nb) = (a.norm(), b.norm());
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Back substitution for the leading `k × k` block of the rotated Hessenberg matrix.
fn solve_upper(h: &[Vec<c64>], g: &[c64], k: usize) -> Vec<c64> {
    let mut y = vec![ZERO; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for (j, yj) in y.iter().enumerate().take(k).skip(i + 1) {
            acc -= h[j][i] * yj;
        }
        y[i] = acc / h[i][i];
    }
    y
}

fn combine(basis: &[Vec<c64>], y: &[c64], n: usize) -> Vec<c64> {
    let mut x = zeros(n);
    for (v, c) in basis.iter().zip(y) {
        axpy(*c, v, &mut x);
    }
    x
}

/// Full (unrestarted) left-preconditioned GMRES with modified Gram–Schmidt
/// Arnoldi and Givens rotations.
pub fn gmres<P: Preconditioner + ?Sized>(
    a: &SparseComplexMatrix,
    precond: &P,
    f: &[c64],
    cfg: &SolverConfig,
) -> Result<(Vec<c64>, SolveReport)> {
    check_inputs(a, f, cfg)?;
    let wu_start = precond.work_units();
    let start = Instant::now();
    let n = f.len();
    let method = Method::Gmres;
    let mut t = Tracker::new(a, precond, f);

    let mut r0 = t.precondition(f)?;
    let beta = norm(&r0);
    if cfg.record_true_residual {
        t.true_history.push(if t.f_norm > 0.0 { 1.0 } else { 0.0 });
    }
    if beta == 0.0 {
        return t.finish(method, zeros(n), 0, true, StopReason::Converged, wu_start, start);
    }
    scale(c64::new(1.0 / beta, 0.0), &mut r0);
    let mut basis = vec![r0];
    // column j of the Hessenberg matrix, rotated in place
    let mut h: Vec<Vec<c64>> = Vec::new();
    let mut rotations: Vec<(f64, c64)> = Vec::new();
    let mut g = vec![c64::new(beta, 0.0)];

    for j in 0..cfg.max_iter {
        let mut w = t.operator(&basis[j])?;
        let w_norm = norm(&w);
        let mut col: Vec<c64> = Vec::with_capacity(j + 2);
        for v in &basis {
            let c = dot(v, &w);
            axpy(-c, v, &mut w);
            col.push(c);
        }
        let next_norm = norm(&w);
        col.push(c64::new(next_norm, 0.0));
        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a0, b0) = (col[i], col[i + 1]);
            col[i] = a0 * c + s * b0;
            col[i + 1] = -s.conj() * a0 + b0 * c;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        col[j] = col[j] * c + s * col[j + 1];
        col[j + 1] = ZERO;
        rotations.push((c, s));
        let gj = g[j];
        g[j] = gj * c;
        g.push(-s.conj() * gj);
        h.push(col);

        let rel = g[j + 1].norm() / beta;
        let happy = next_norm <= HAPPY_BREAKDOWN * w_norm;
        let done = rel < cfg.tol || happy;
        let last = j + 1 == cfg.max_iter;
        if cfg.record_true_residual || done || last {
            let y = solve_upper(&h, &g, j + 1);
            let x = combine(&basis, &y, n);
            let rec = cfg.record_true_residual.then_some(x.as_slice());
            t.record(rel, rec)?;
            if done {
                let reason = if rel < cfg.tol { StopReason::Converged } else { StopReason::HappyBreakdown };
                return t.finish(method, x, j + 1, true, reason, wu_start, start);
            }
            if last {
                return t.finish(method, x, j + 1, false, StopReason::MaxIterations, wu_start, start);
            }
        } else {
            t.record(rel, None)?;
        }
        scale(c64::new(1.0 / next_norm, 0.0), &mut w);
        basis.push(w);
    }
    // max_iter == 0
    t.finish(method, zeros(n), 0, false, StopReason::MaxIterations, wu_start, start)
}
