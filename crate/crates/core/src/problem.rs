//! Assembled benchmark problems: Helmholtz operator, right-hand side and
//! CSL inner solvers built from a [`ProblemSpec`].

use num_complex::Complex64 as c64;

use crate::direct::lu_factor;
use crate::error::Result;
use crate::grid::{build_axis_grid, build_rhs, ComplexGrid1D, ProblemSpec};
use crate::multigrid::{build_hierarchy, MultigridOptions};
use crate::operator::{assemble_1d, assemble_2d, ShiftConfig};
use crate::precond::{CslInnerSolver, InnerMode};
use crate::sparse::SparseComplexMatrix;

#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    /// Grid of one axis; 2D problems live on its tensor square.
    pub grid: ComplexGrid1D,
    /// Unshifted Helmholtz operator `A`.
    pub a: SparseComplexMatrix,
    pub rhs: Vec<c64>,
}

impl Problem {
    pub fn build(spec: &ProblemSpec) -> Result<Self> {
        let grid = build_axis_grid(spec)?;
        let a = operator_on(spec, &grid, ShiftConfig::NONE)?;
        let rhs = build_rhs(spec, &grid)?;
        Ok(Self { spec: spec.clone(), grid, a, rhs })
    }

    pub fn size(&self) -> usize {
        self.a.n_rows()
    }

    /// The complex shifted Laplacian `M(β)`.
    pub fn csl_operator(&self, beta: f64) -> Result<SparseComplexMatrix> {
        operator_on(&self.spec, &self.grid, ShiftConfig::new(beta))
    }

    /// Inner solver for `M(β)`. Multigrid mode runs one V(1,1) cycle with
    /// the shifted operator rediscretized on every coarse grid.
    pub fn inner_solver(&self, beta: f64, mode: InnerMode) -> Result<CslInnerSolver> {
        let opts = MultigridOptions::v11(self.spec.dim).rediscretized(self.spec.k_squared, beta);
        self.inner_solver_with(beta, mode, opts)
    }

    pub fn inner_solver_with(&self, beta: f64, mode: InnerMode, opts: MultigridOptions) -> Result<CslInnerSolver> {
        let m = self.csl_operator(beta)?;
        Ok(match mode {
            InnerMode::ExactLu => CslInnerSolver::exact(lu_factor(&m)?),
            InnerMode::VCycle => CslInnerSolver::vcycle(build_hierarchy(&m, &self.grid, opts)?),
        })
    }
}

fn operator_on(spec: &ProblemSpec, grid: &ComplexGrid1D, shift: ShiftConfig) -> Result<SparseComplexMatrix> {
    match spec.dim {
        1 => Ok(assemble_1d(grid, spec.k_squared, shift)),
        _ => assemble_2d(grid, grid, spec.k_squared, shift),
    }
}
