//! Expansion polynomial preconditioners for the indefinite Helmholtz equation.

pub mod analysis;
pub mod direct;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod multigrid;
pub mod operator;
pub mod precond;
pub mod problem;
pub mod sparse;
pub mod vector;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use grid::{ComplexGrid1D, ProblemSpec};
pub use krylov::{Method, SolveReport, SolverConfig};
pub use precond::{CslInnerSolver, ExpansionConfig, ExpansionPreconditioner, Family, InnerMode, Preconditioner};
pub use problem::Problem;
pub use sparse::SparseComplexMatrix;
