//! Geometric multigrid V(ν₁,ν₂)-cycles for the complex shifted Laplacian.
//!
//! Intergrid transfers are linear interpolation and full weighting on the
//! nested point hierarchy of the (complex) grid; absorbing-layer points
//! coarsen exactly like interior points. Coarse operators are either Galerkin
//! products `R·A·P` or the shifted operator reassembled on the coarse grid;
//! the coarsest level is solved with a complex LU.

use log::warn;
use num_complex::Complex64 as c64;

use crate::direct::{lu_factor, LuFactors};
use crate::error::{check_len, Error, Result};
use crate::grid::ComplexGrid1D;
use crate::operator::{assemble_1d, assemble_2d, ShiftConfig};
use crate::sparse::SparseComplexMatrix;
use crate::vector::{norm, scale, zeros, ZERO};

/// Damped Jacobi weight used for 1D problems.
pub const JACOBI_WEIGHT_1D: f64 = 2.0 / 3.0;
/// Damped Jacobi weight used for 2D problems.
pub const JACOBI_WEIGHT_2D: f64 = 4.0 / 5.0;
/// Coarsening stops once an axis carries at most this many unknowns.
pub const MAX_COARSE_POINTS_PER_AXIS: usize = 7;
/// Shifts below this are not reliably inverted by a V-cycle.
pub const MIN_STABLE_SHIFT: f64 = 0.5;

pub fn default_jacobi_weight(dim: usize) -> f64 {
    if dim >= 2 {
        JACOBI_WEIGHT_2D
    } else {
        JACOBI_WEIGHT_1D
    }
}

/// Logs a warning when `beta` is below the multigrid stability threshold.
pub fn check_shift_stability(beta: f64) -> bool {
    let ok = beta >= MIN_STABLE_SHIFT;
    if !ok {
        warn!("shift beta = {beta} is below {MIN_STABLE_SHIFT}; V-cycles on the shifted operator may diverge");
    }
    ok
}

/// How coarse-level operators are formed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CoarseOperator {
    /// Galerkin triple product `R·A·P`.
    #[default]
    Galerkin,
    /// The shifted operator reassembled on each coarsened grid.
    Rediscretized { k_squared: f64, shift: ShiftConfig },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultigridOptions {
    /// Number of levels including the finest; `None` coarsens as far as possible.
    pub levels: Option<usize>,
    pub smoother_weight: f64,
    pub nu_pre: usize,
    pub nu_post: usize,
    pub coarse: CoarseOperator,
}

impl MultigridOptions {
    /// V(1,1) with the default Jacobi weight for `dim`.
    pub fn v11(dim: usize) -> Self {
        Self {
            levels: None,
            smoother_weight: default_jacobi_weight(dim),
            nu_pre: 1,
            nu_post: 1,
            coarse: CoarseOperator::Galerkin,
        }
    }

    /// Reassembles `−Δ − (1 + βi)k²` on every coarse grid instead of forming `R·A·P`.
    pub fn rediscretized(self, k_squared: f64, beta: f64) -> Self {
        Self { coarse: CoarseOperator::Rediscretized { k_squared, shift: ShiftConfig::new(beta) }, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub matrix: SparseComplexMatrix,
    /// Interpolation from the next coarser level.
    pub prolongation: SparseComplexMatrix,
    /// Full weighting onto the next coarser level.
    pub restriction: SparseComplexMatrix,
    inv_diag: Vec<c64>,
}

#[derive(Debug, Clone)]
pub struct MultigridHierarchy {
    /// All levels above the coarsest, finest first.
    pub levels: Vec<Level>,
    pub coarsest_matrix: SparseComplexMatrix,
    pub coarsest: LuFactors,
    pub smoother_weight: f64,
    pub nu_pre: usize,
    pub nu_post: usize,
    pub dim: usize,
}

impl MultigridHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn size(&self) -> usize {
        self.levels.first().map(|l| l.matrix.n_rows()).unwrap_or_else(|| self.coarsest_matrix.n_rows())
    }

    /// Unknown counts from finest to coarsest.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.matrix.n_rows()).chain(std::iter::once(self.coarsest_matrix.n_rows())).collect()
    }

    /// One V-cycle; see [`vcycle`].
    pub fn vcycle(&self, b: &[c64], x0: &[c64]) -> Result<Vec<c64>> {
        vcycle(self, b, x0)
    }

    /// Asymptotic residual reduction per cycle on `A x = 0`, measured over
    /// `cycles` iterations from a fixed oscillatory start.
    pub fn convergence_factor(&self, cycles: usize) -> Result<f64> {
        let a = self.levels.first().map(|l| &l.matrix).unwrap_or(&self.coarsest_matrix);
        let n = a.n_rows();
        let b = zeros(n);
        let mut x: Vec<c64> = (0..n).map(|i| c64::new((0.7 * i as f64 + 0.3).sin(), (1.3 * i as f64).cos())).collect();
        let mut factor = 0.0;
        for _ in 0..cycles {
            let r = norm(&a.matvec(&x)?);
            if r == 0.0 {
                return Ok(0.0);
            }
            scale(c64::new(1.0 / r, 0.0), &mut x);
            x = self.vcycle(&b, &x)?;
            factor = norm(&a.matvec(&x)?);
        }
        Ok(factor)
    }

    /// One V-cycle from a zero initial guess. This is a fixed linear map of `b`.
    pub fn apply(&self, b: &[c64]) -> Result<Vec<c64>> {
        check_len(self.size(), b.len())?;
        let mut x = zeros(b.len());
        self.cycle(0, b, &mut x)?;
        Ok(x)
    }

    fn cycle(&self, depth: usize, b: &[c64], x: &mut [c64]) -> Result<()> {
        let Some(level) = self.levels.get(depth) else {
            let sol = self.coarsest.solve(b)?;
            x.copy_from_slice(&sol);
            return Ok(());
        };
        let a = &level.matrix;
        let mut r = zeros(b.len());
        for _ in 0..self.nu_pre {
            jacobi_in_place(a, &level.inv_diag, b, x, self.smoother_weight, &mut r)?;
        }
        a.matvec_into(x, &mut r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rc = level.restriction.matvec(&r)?;
        let mut ec = zeros(rc.len());
        self.cycle(depth + 1, &rc, &mut ec)?;
        let e = level.prolongation.matvec(&ec)?;
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        for _ in 0..self.nu_post {
            jacobi_in_place(a, &level.inv_diag, b, x, self.smoother_weight, &mut r)?;
        }
        Ok(())
    }
}

/// Linear interpolation from a coarse axis grid to the fine one. Fine
/// unknown `2I+1` coincides with coarse unknown `I`.
pub fn axis_prolongation(fine_unknowns: usize) -> Result<SparseComplexMatrix> {
    if fine_unknowns.is_multiple_of(2) || fine_unknowns < 3 {
        return Err(Error::NotCoarsenable(format!("{fine_unknowns} unknowns per axis cannot be halved")));
    }
    let nc = (fine_unknowns - 1) / 2;
    let half = c64::new(0.5, 0.0);
    let mut t = Vec::with_capacity(3 * nc);
    for i in 0..nc {
        t.push((2 * i, i, half));
        t.push((2 * i + 1, i, c64::new(1.0, 0.0)));
        t.push((2 * i + 2, i, half));
    }
    SparseComplexMatrix::from_triplets(fine_unknowns, nc, t)
}

/// Builds the hierarchy for `fine`, which must live on `grid` (1D) or on
/// the tensor product `grid × grid` (2D).
pub fn build_hierarchy(
    fine: &SparseComplexMatrix,
    grid: &ComplexGrid1D,
    opts: MultigridOptions,
) -> Result<MultigridHierarchy> {
    let n_axis = grid.unknowns();
    let dim = if fine.n_rows() == n_axis {
        1
    } else if fine.n_rows() == n_axis * n_axis {
        2
    } else {
        return Err(Error::DimensionMismatch { expected: n_axis, found: fine.n_rows() });
    };
    check_len(fine.n_rows(), fine.n_cols())?;

    // count how many times every section of the grid halves
    let mut possible = 1;
    let mut g = grid.clone();
    while g.unknowns() > MAX_COARSE_POINTS_PER_AXIS {
        match g.coarsen() {
            Some(c) if c.unknowns() >= 1 => {
                possible += 1;
                g = c;
            }
            _ => break,
        }
    }
    let num_levels = match opts.levels {
        None => possible,
        Some(0) => return Err(Error::NotCoarsenable("at least one level is required".into())),
        Some(l) => {
            let mut g = grid.clone();
            for _ in 1..l {
                g = g.coarsen().ok_or_else(|| {
                    Error::NotCoarsenable(format!(
                        "cell counts ({}, {}, {}) not divisible by 2^{}",
                        grid.n_left,
                        grid.n_interior,
                        grid.n_right,
                        l - 1
                    ))
                })?;
            }
            l
        }
    };

    let mut levels = Vec::with_capacity(num_levels - 1);
    let mut a = fine.clone();
    let mut axis = n_axis;
    let mut g = grid.clone();
    for _ in 1..num_levels {
        let p1 = axis_prolongation(axis)?;
        let p = if dim == 1 { p1 } else { p1.kron(&p1) };
        let r = p.transpose().scaled(c64::new(0.5f64.powi(dim as i32), 0.0));
        g = g.coarsen().ok_or_else(|| Error::NotCoarsenable("grid cannot be halved".into()))?;
        let coarse = match opts.coarse {
            CoarseOperator::Galerkin => r.matmul(&a)?.matmul(&p)?,
            CoarseOperator::Rediscretized { k_squared, shift } => match dim {
                1 => assemble_1d(&g, k_squared, shift),
                _ => assemble_2d(&g, &g, k_squared, shift)?,
            },
        };
        let inv_diag = inverse_diagonal(&a)?;
        levels.push(Level { matrix: a, prolongation: p, restriction: r, inv_diag });
        a = coarse;
        axis = (axis - 1) / 2;
    }
    let coarsest = lu_factor(&a)?;
    Ok(MultigridHierarchy {
        levels,
        coarsest_matrix: a,
        coarsest,
        smoother_weight: opts.smoother_weight,
        nu_pre: opts.nu_pre,
        nu_post: opts.nu_post,
        dim,
    })
}

/// One V(ν₁,ν₂)-cycle for `A x = b` starting from `x0`.
pub fn vcycle(h: &MultigridHierarchy, b: &[c64], x0: &[c64]) -> Result<Vec<c64>> {
    check_len(h.size(), b.len())?;
    check_len(h.size(), x0.len())?;
    let mut x = x0.to_vec();
    h.cycle(0, b, &mut x)?;
    Ok(x)
}

fn inverse_diagonal(a: &SparseComplexMatrix) -> Result<Vec<c64>> {
    a.diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| if d == ZERO { Err(Error::ZeroDiagonal(i)) } else { Ok(1.0 / d) })
        .collect()
}

fn jacobi_in_place(
    a: &SparseComplexMatrix,
    inv_diag: &[c64],
    b: &[c64],
    x: &mut [c64],
    weight: f64,
    scratch: &mut [c64],
) -> Result<()> {
    a.matvec_into(x, scratch)?;
    for i in 0..x.len() {
        x[i] += weight * inv_diag[i] * (b[i] - scratch[i]);
    }
    Ok(())
}

/// One damped Jacobi sweep `x + ω·D⁻¹(b − A x)`.
pub fn smoother_sweep(a: &SparseComplexMatrix, b: &[c64], x: &[c64], weight: f64) -> Result<Vec<c64>> {
    check_len(a.n_rows(), b.len())?;
    let inv_diag = inverse_diagonal(a)?;
    let mut out = x.to_vec();
    let mut scratch = zeros(b.len());
    jacobi_in_place(a, &inv_diag, b, &mut out, weight, &mut scratch)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_axis_grid, build_grid_1d, ProblemSpec};
    use crate::operator::{assemble_1d, assemble_2d, ShiftConfig};
    use crate::vector::rel_diff;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(seed: u64, n: usize) -> Vec<c64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn benchmark_csl() -> (ComplexGrid1D, SparseComplexMatrix) {
        let g = build_grid_1d(&ProblemSpec::benchmark_1d()).unwrap();
        let m = assemble_1d(&g, 2.0e4, ShiftConfig::new(0.6));
        (g, m)
    }

    #[test]
    fn benchmark_coarsening_sequence() {
        let (g, m) = benchmark_csl();
        let h = build_hierarchy(&m, &g, MultigridOptions::v11(1)).unwrap();
        assert_eq!(h.level_sizes(), vec![383, 191, 95, 47, 23, 11, 5]);
        assert_eq!(h.num_levels(), 7);
    }

    #[test]
    fn restriction_is_scaled_transpose() {
        let (g, m) = benchmark_csl();
        let h = build_hierarchy(&m, &g, MultigridOptions::v11(1)).unwrap();
        for l in &h.levels {
            let pt = l.prolongation.transpose().scaled(c64::new(0.5, 0.0));
            assert_eq!(pt, l.restriction);
        }
        let s = ProblemSpec::new(2, 50.0, 16);
        let g2 = build_axis_grid(&s).unwrap();
        let a2 = assemble_2d(&g2, &g2, s.k_squared, ShiftConfig::new(0.6)).unwrap();
        let h2 = build_hierarchy(&a2, &g2, MultigridOptions::v11(2)).unwrap();
        assert_eq!(h2.dim, 2);
        for l in &h2.levels {
            assert_eq!(l.prolongation.transpose().scaled(c64::new(0.25, 0.0)), l.restriction);
        }
    }

    #[test]
    fn galerkin_operator_matches_dense_triple_product() {
        let s = ProblemSpec::new(1, 50.0, 16);
        let g = build_grid_1d(&s).unwrap();
        let a = assemble_1d(&g, s.k_squared, ShiftConfig::new(0.6));
        let h = build_hierarchy(&a, &g, MultigridOptions { levels: Some(2), ..MultigridOptions::v11(1) }).unwrap();
        let p = h.levels[0].prolongation.to_dense();
        let expect: DMatrix<c64> = p.transpose() * a.to_dense() * &p * c64::new(0.5, 0.0);
        let got = h.coarsest_matrix.to_dense();
        assert!((got - &expect).norm() <= 1e-13 * expect.norm());
    }

    #[test]
    fn single_level_is_direct_solve() {
        let (g, m) = benchmark_csl();
        let h = build_hierarchy(&m, &g, MultigridOptions { levels: Some(1), ..MultigridOptions::v11(1) }).unwrap();
        assert_eq!(h.num_levels(), 1);
        let b = random_vec(1, m.n_rows());
        let x = h.apply(&b).unwrap();
        let exact = lu_factor(&m).unwrap().solve(&b).unwrap();
        assert!(rel_diff(&x, &exact) < 1e-10);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let (g, m) = benchmark_csl();
        let h = build_hierarchy(&m, &g, MultigridOptions::v11(1)).unwrap();
        let z = zeros(m.n_rows());
        assert_eq!(h.vcycle(&z, &z).unwrap(), z);
    }

    #[test]
    fn vcycle_is_linear() {
        let (g, m) = benchmark_csl();
        let h = build_hierarchy(&m, &g, MultigridOptions::v11(1)).unwrap();
        let b1 = random_vec(2, m.n_rows());
        let b2 = random_vec(3, m.n_rows());
        let alpha = c64::new(0.3, -1.7);
        let comb: Vec<c64> = b1.iter().zip(&b2).map(|(x, y)| alpha * x + y).collect();
        let lhs = h.apply(&comb).unwrap();
        let y1 = h.apply(&b1).unwrap();
        let y2 = h.apply(&b2).unwrap();
        let rhs: Vec<c64> = y1.iter().zip(&y2).map(|(x, y)| alpha * x + y).collect();
        assert!(rel_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn csl_vcycle_converges_on_benchmark() {
        let (g, m) = benchmark_csl();
        let h = build_hierarchy(&m, &g, MultigridOptions::v11(1)).unwrap();
        let rho = h.convergence_factor(20).unwrap();
        assert!(rho < 1.0, "factor {rho}");
    }

    #[test]
    fn rediscretized_coarse_levels_are_reassembled() {
        let (g, m) = benchmark_csl();
        let opts = MultigridOptions::v11(1).rediscretized(2.0e4, 0.6);
        let h = build_hierarchy(&m, &g, opts).unwrap();
        let mut gc = g.clone();
        for l in h.levels.iter().skip(1) {
            gc = gc.coarsen().unwrap();
            let direct = assemble_1d(&gc, 2.0e4, ShiftConfig::new(0.6));
            assert!(rel_diff(l.matrix.values(), direct.values()) < 1e-14);
        }
        let rho = h.convergence_factor(30).unwrap();
        assert!(rho < 0.7, "factor {rho}");
    }

    #[test]
    fn rediscretized_2d_cycle_converges() {
        let spec = ProblemSpec::new(2, 1.25e3, 64);
        let g = build_axis_grid(&spec).unwrap();
        let m = assemble_2d(&g, &g, 1.25e3, ShiftConfig::new(0.6)).unwrap();
        let opts = MultigridOptions::v11(2).rediscretized(1.25e3, 0.6);
        let h = build_hierarchy(&m, &g, opts).unwrap();
        assert_eq!(h.level_sizes().last(), Some(&25));
        let rho = h.convergence_factor(30).unwrap();
        assert!(rho < 1.0, "factor {rho}");
    }

    /// Dense error propagator of a V(1,1)-cycle built level by level from
    /// the textbook recursion, independent of the sparse implementation.
    fn dense_vcycle_propagator(a: &DMatrix<c64>, w: f64, levels: usize) -> DMatrix<c64> {
        let n = a.nrows();
        let id = DMatrix::<c64>::identity(n, n);
        if levels == 1 {
            return DMatrix::from_element(n, n, ZERO);
        }
        let nc = (n - 1) / 2;
        let mut p = DMatrix::from_element(n, nc, ZERO);
        for i in 0..nc {
            p[(2 * i, i)] = c64::new(0.5, 0.0);
            p[(2 * i + 1, i)] = c64::new(1.0, 0.0);
            p[(2 * i + 2, i)] = c64::new(0.5, 0.0);
        }
        let r = p.transpose() * c64::new(0.5, 0.0);
        let ac = &r * a * &p;
        let ec = dense_vcycle_propagator(&ac, w, levels - 1);
        let coarse_inv = (DMatrix::<c64>::identity(nc, nc) - ec) * ac.clone().try_inverse().unwrap();
        let dinv = DMatrix::from_diagonal(&a.diagonal().map(|d| c64::new(w, 0.0) / d));
        let s = &id - dinv * a;
        &s * (&id - p * coarse_inv * r * a) * &s
    }

    #[test]
    fn poisson_model_problem_factor() {
        let g = ComplexGrid1D::uniform(256);
        let a = assemble_1d(&g, 0.0, ShiftConfig::NONE);
        let dense = a.to_dense();
        // normalized dense power iteration on the propagator
        let radius = |e: DMatrix<c64>| {
            let mut v = nalgebra::DVector::from_element(e.nrows(), c64::new(1.0, 0.3));
            let mut r = 0.0;
            for _ in 0..400 {
                let w = &e * &v;
                r = w.norm() / v.norm();
                v = w.unscale(w.norm());
            }
            r
        };

        // two-grid: the classical 1/9
        let two = build_hierarchy(&a, &g, MultigridOptions { levels: Some(2), ..MultigridOptions::v11(1) }).unwrap();
        let rho2 = two.convergence_factor(30).unwrap();
        assert!(rho2 < 0.15, "two-grid factor {rho2}");
        assert!((rho2 - radius(dense_vcycle_propagator(&dense, 2.0 / 3.0, 2))).abs() < 5e-3);

        // full V-cycle down to 7 unknowns degrades to about 0.19
        let full = build_hierarchy(&a, &g, MultigridOptions::v11(1)).unwrap();
        let rho = full.convergence_factor(30).unwrap();
        let oracle = radius(dense_vcycle_propagator(&dense, 2.0 / 3.0, full.num_levels()));
        assert!((rho - oracle).abs() < 5e-3, "measured {rho}, dense oracle {oracle}");
        assert!(rho < 0.2);
    }

    #[test]
    fn jacobi_edge_cases() {
        let d = SparseComplexMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, c64::new(2.0, 0.0)), (1, 1, c64::new(0.0, 3.0)), (2, 2, c64::new(-1.0, 1.0))],
        )
        .unwrap();
        let b = random_vec(4, 3);
        let x0 = random_vec(6, 3);
        let x = smoother_sweep(&d, &b, &x0, 1.0).unwrap();
        assert!(rel_diff(&d.matvec(&x).unwrap(), &b) < 1e-15);
        assert_eq!(smoother_sweep(&d, &b, &x0, 0.0).unwrap(), x0);
        let z = SparseComplexMatrix::from_triplets(2, 2, vec![(0, 1, c64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(smoother_sweep(&z, &[ZERO; 2], &[ZERO; 2], 0.5), Err(Error::ZeroDiagonal(0))));
    }

    #[test]
    fn jacobi_error_propagator_radius() {
        let g = ComplexGrid1D::uniform(16);
        let a = assemble_1d(&g, 0.0, ShiftConfig::NONE);
        let n = a.n_rows();
        let w = 2.0 / 3.0;
        // columns of the error propagator E = I − ωD⁻¹A, applied via the sweep with b = 0
        let mut e = DMatrix::from_element(n, n, ZERO);
        for j in 0..n {
            let col = smoother_sweep(&a, &zeros(n), &crate::vector::unit(n, j), w).unwrap();
            for i in 0..n {
                e[(i, j)] = col[i];
            }
        }
        let dense = DMatrix::<c64>::identity(n, n) - a.to_dense() * c64::new(w / (2.0 * 256.0), 0.0);
        let rho_sweep =
            e.try_schur(1e-14, 100_000).unwrap().eigenvalues().unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let rho_dense = dense
            .try_schur(1e-14, 100_000)
            .unwrap()
            .eigenvalues()
            .unwrap()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!((rho_sweep - rho_dense).abs() < 1e-10);
        // closed form for the model problem: 1 − 2ω sin²(π h / 2)
        let expect = 1.0 - 2.0 * w * (std::f64::consts::PI / 32.0).sin().powi(2);
        assert!((rho_dense - expect).abs() < 1e-10);
    }

    #[test]
    fn rejects_indivisible_levels() {
        let (g, m) = benchmark_csl();
        let err = build_hierarchy(&m, &g, MultigridOptions { levels: Some(9), ..MultigridOptions::v11(1) });
        assert!(matches!(err, Err(Error::NotCoarsenable(_))));
        let bad = SparseComplexMatrix::identity(10);
        assert!(matches!(build_hierarchy(&bad, &g, MultigridOptions::v11(1)), Err(Error::DimensionMismatch { .. })));
    }
}
