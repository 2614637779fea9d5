//! Finite-difference assembly of the Helmholtz operator `A = -Δ - k²` and
//! the complex shifted Laplacian `M(β) = -Δ - (1 + βi)k²`.
//!
//! On a complex grid with local spacings `h_l`, `h_r` the second derivative
//! uses the Shortley–Weller three-point formula
//!
//! ```text
//! -u''(z_i) ≈ -2/(h_l(h_l+h_r))·u_{i-1} + 2/(h_l h_r)·u_i - 2/(h_r(h_l+h_r))·u_{i+1}
//! ```
//!
//! which reduces to `[-1, 2, -1]/h²` on uniform cells.

use num_complex::Complex64 as c64;

use crate::error::{check_len, Result};
use crate::grid::ComplexGrid1D;
use crate::sparse::SparseComplexMatrix;

/// Imaginary shift parameter `β` of `M(β)`; `β = 0` gives the Helmholtz operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftConfig {
    pub beta: f64,
}

impl ShiftConfig {
    pub const NONE: ShiftConfig = ShiftConfig { beta: 0.0 };

    pub fn new(beta: f64) -> Self {
        Self { beta }
    }

    /// `-(1 + βi)·k²`
    pub fn diagonal_term(self, k_squared: f64) -> c64 {
        -c64::new(1.0, self.beta) * k_squared
    }
}

/// Row form of the nonuniform stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Plain Shortley–Weller rows.
    #[default]
    Standard,
    /// Each row multiplied by `(h_l + h_r)/2`, giving a complex-symmetric
    /// matrix. The right-hand side must be scaled by [`symmetrizing_weights`].
    Symmetrized,
}

/// Row scaling that turns the standard rows into the symmetrized ones.
pub fn symmetrizing_weights(grid: &ComplexGrid1D) -> Vec<c64> {
    (0..grid.unknowns()).map(|i| (grid.spacings[i] + grid.spacings[i + 1]) * 0.5).collect()
}

/// Assembles the 1D operator `-d²/dz² - (1 + βi)k²` on `grid`.
pub fn assemble_1d(grid: &ComplexGrid1D, k_squared: f64, shift: ShiftConfig) -> SparseComplexMatrix {
    assemble_1d_with(grid, k_squared, shift, Stencil::Standard, 1.0)
}

/// Like [`assemble_1d`] with an explicit stencil form and a factor on the
/// diagonal `-(1 + βi)k²` term.
pub fn assemble_1d_with(
    grid: &ComplexGrid1D,
    k_squared: f64,
    shift: ShiftConfig,
    stencil: Stencil,
    shift_weight: f64,
) -> SparseComplexMatrix {
    let n = grid.unknowns();
    let reaction = shift.diagonal_term(k_squared) * shift_weight;
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        let hl = grid.spacings[i];
        let hr = grid.spacings[i + 1];
        let (lower, diag, upper) = match stencil {
            Stencil::Standard => (-2.0 / (hl * (hl + hr)), 2.0 / (hl * hr) + reaction, -2.0 / (hr * (hl + hr))),
            Stencil::Symmetrized => (-1.0 / hl, 1.0 / hl + 1.0 / hr + reaction * (hl + hr) * 0.5, -1.0 / hr),
        };
        if i > 0 {
            t.push((i, i - 1, lower));
        }
        t.push((i, i, diag));
        if i + 1 < n {
            t.push((i, i + 1, upper));
        }
    }
    SparseComplexMatrix::from_triplets(n, n, t).expect("tridiagonal indices in range")
}

/// Assembles the 2D operator as the Kronecker sum `A_x ⊗ I_y + I_x ⊗ A_y`.
///
/// Each 1D factor carries half of the `-(1 + βi)k²` term so that the 2D
/// diagonal holds it exactly once. Unknown `(ix, iy)` has index `ix·n_y + iy`.
pub fn assemble_2d(
    grid_x: &ComplexGrid1D,
    grid_y: &ComplexGrid1D,
    k_squared: f64,
    shift: ShiftConfig,
) -> Result<SparseComplexMatrix> {
    let ax = assemble_1d_with(grid_x, k_squared, shift, Stencil::Standard, 0.5);
    let ay = assemble_1d_with(grid_y, k_squared, shift, Stencil::Standard, 0.5);
    kron_sum(&ax, &ay)
}

/// `a ⊗ I + I ⊗ b` for square `a`, `b`.
pub fn kron_sum(a: &SparseComplexMatrix, b: &SparseComplexMatrix) -> Result<SparseComplexMatrix> {
    check_len(a.n_rows(), a.n_cols())?;
    check_len(b.n_rows(), b.n_cols())?;
    let na = a.n_rows();
    let nb = b.n_rows();
    let mut t = Vec::with_capacity(a.nnz() * nb + b.nnz() * na);
    for ix in 0..na {
        let (acols, avals) = a.row(ix);
        for iy in 0..nb {
            let row = ix * nb + iy;
            for (jx, v) in acols.iter().zip(avals) {
                t.push((row, jx * nb + iy, *v));
            }
            let (bcols, bvals) = b.row(iy);
            for (jy, v) in bcols.iter().zip(bvals) {
                t.push((row, ix * nb + jy, *v));
            }
        }
    }
    SparseComplexMatrix::from_triplets(na * nb, na * nb, t)
}
