//! Exterior-complex-scaled grids on the unit interval and unit square.
//!
//! The real domain `[0, 1]` is discretized with `N` equal cells of width
//! `h = 1/N`. An absorbing layer of `fraction·N` cells is attached on each
//! side; inside the layers the grid is rotated into the complex plane,
//! `z = e^{iθ}·x` measured from the nearest real boundary. Both outermost
//! layer points carry homogeneous Dirichlet conditions and are removed from
//! the unknown vector.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::vector::zeros;

/// Upper bound on `k·h` (about ten points per wavelength).
pub const MAX_KH: f64 = 0.625;

/// Number of grid points removed from the unknown vector by the Dirichlet
/// conditions at the two outermost layer points. A grid with `C` cells
/// therefore carries `C + 1 - DIRICHLET_ENDPOINTS` unknowns.
pub const DIRICHLET_ENDPOINTS: usize = 2;

/// Right-hand side selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsKind {
    /// A single unit entry at the domain center.
    #[default]
    CenterUnitSource,
}

/// Layer length as a fraction `num/den` of the interior cell count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: usize,
    pub den: usize,
}

impl Fraction {
    pub const QUARTER: Fraction = Fraction { num: 1, den: 4 };

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self · n` when it is an integer.
    pub fn of(self, n: usize) -> Option<usize> {
        if self.den == 0 || !(self.num * n).is_multiple_of(self.den) {
            None
        } else {
            Some(self.num * n / self.den)
        }
    }
}

impl std::str::FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("cannot parse fraction {s:?}"));
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s.trim(), "1"),
        };
        let num = num.parse().map_err(|_| bad())?;
        let den: usize = den.parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        Ok(Fraction { num, den })
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Physical and discretization parameters of a benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub k_squared: f64,
    /// Number of cells `N` on the unit interval, per axis.
    pub n_interior: usize,
    /// Rotation angle of the absorbing layers, in radians.
    pub ecs_angle: f64,
    pub ecs_fraction: Fraction,
    pub rhs_kind: RhsKind,
}

impl ProblemSpec {
    pub fn new(dim: usize, k_squared: f64, n_interior: usize) -> Self {
        Self {
            dim,
            k_squared,
            n_interior,
            ecs_angle: std::f64::consts::FRAC_PI_6,
            ecs_fraction: Fraction::QUARTER,
            rhs_kind: RhsKind::CenterUnitSource,
        }
    }

    /// 1D benchmark: `k² = 2·10⁴`, `N = 256`.
    pub fn benchmark_1d() -> Self {
        Self::new(1, 2.0e4, 256)
    }

    /// 2D benchmark at moderate wavenumber: `k² = 5·10³`, `128 × 128`.
    pub fn benchmark_2d_small() -> Self {
        Self::new(2, 5.0e3, 128)
    }

    /// 2D benchmark at high wavenumber: `k² = 2·10⁴`, `256 × 256`.
    pub fn benchmark_2d_large() -> Self {
        Self::new(2, 2.0e4, 256)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_interior as f64
    }

    pub fn kh(&self) -> f64 {
        self.k_squared.sqrt() * self.h()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidSpec(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if !self.k_squared.is_finite() || self.k_squared <= 0.0 {
            return Err(Error::InvalidSpec(format!("k_squared must be positive, got {}", self.k_squared)));
        }
        if self.n_interior < 2 {
            return Err(Error::InvalidSpec("n_interior must be at least 2".into()));
        }
        if self.kh() >= MAX_KH {
            return Err(Error::InvalidSpec(format!(
                "wavenumber criterion violated: kh = {:.4} >= {MAX_KH}",
                self.kh()
            )));
        }
        if !(self.ecs_angle > 0.0 && self.ecs_angle < FRAC_PI_2) {
            return Err(Error::InvalidSpec(format!("ecs_angle must lie in (0, pi/2), got {}", self.ecs_angle)));
        }
        match self.ecs_fraction.of(self.n_interior) {
            Some(n) if n > 0 => Ok(()),
            _ => Err(Error::InvalidSpec(format!(
                "ecs_fraction {} times n_interior {} is not a positive integer",
                self.ecs_fraction, self.n_interior
            ))),
        }
    }

    /// Unknowns per axis after Dirichlet elimination.
    pub fn unknowns_per_axis(&self) -> Result<usize> {
        self.validate()?;
        let layer = self.ecs_fraction.of(self.n_interior).unwrap_or(0);
        Ok(2 * layer + self.n_interior + 1 - DIRICHLET_ENDPOINTS)
    }
}

/// A 1D grid of complex coordinates: absorbing layer, real interior, absorbing layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid1D {
    /// All points, including the two Dirichlet endpoints.
    pub points: Vec<c64>,
    /// Cells in the left layer.
    pub n_left: usize,
    /// Cells on the real interval `[0, 1]`.
    pub n_interior: usize,
    /// Cells in the right layer.
    pub n_right: usize,
    /// `spacings[j] = points[j + 1] - points[j]`.
    pub spacings: Vec<c64>,
}

impl ComplexGrid1D {
    /// Plain real Dirichlet grid on `[0, 1]` without absorbing layers.
    pub fn uniform(n_interior: usize) -> Self {
        Self::with_layers(n_interior, 0, 0.0)
    }

    fn with_layers(n_interior: usize, layer: usize, angle: f64) -> Self {
        let h = 1.0 / n_interior as f64;
        let rot = c64::from_polar(1.0, angle);
        let left = (1..=layer).rev().map(|j| rot * (-(j as f64) * h));
        let interior = (0..=n_interior).map(|j| c64::new(j as f64 * h, 0.0));
        let right = (1..=layer).map(|j| c64::new(1.0, 0.0) + rot * (j as f64 * h));
        let points: Vec<c64> = left.chain(interior).chain(right).collect();
        let spacings = points.windows(2).map(|w| w[1] - w[0]).collect();
        Self { points, n_left: layer, n_interior, n_right: layer, spacings }
    }

    pub fn cells(&self) -> usize {
        self.n_left + self.n_interior + self.n_right
    }

    pub fn unknowns(&self) -> usize {
        self.cells() + 1 - DIRICHLET_ENDPOINTS
    }

    /// Grid point carried by unknown `i`.
    pub fn point_of_unknown(&self, i: usize) -> c64 {
        self.points[i + 1]
    }

    /// Unknown index of the interior point `x_j = j·h`.
    pub fn unknown_of_interior_point(&self, j: usize) -> usize {
        self.n_left + j - 1
    }

    /// Grid with every second point removed; `None` unless every section has
    /// an even cell count.
    pub fn coarsen(&self) -> Option<Self> {
        if !self.n_left.is_multiple_of(2) || !self.n_interior.is_multiple_of(2) || !self.n_right.is_multiple_of(2) {
            return None;
        }
        let points: Vec<c64> = self.points.iter().step_by(2).copied().collect();
        let spacings = points.windows(2).map(|w| w[1] - w[0]).collect();
        Some(Self {
            points,
            n_left: self.n_left / 2,
            n_interior: self.n_interior / 2,
            n_right: self.n_right / 2,
            spacings,
        })
    }
}

/// Builds the 1D absorbing-layer grid described by `spec`.
pub fn build_grid_1d(spec: &ProblemSpec) -> Result<ComplexGrid1D> {
    spec.validate()?;
    if spec.dim != 1 {
        return Err(Error::InvalidSpec(format!("expected dim = 1, got {}", spec.dim)));
    }
    Ok(axis_grid(spec))
}

/// Per-axis grid of a spec of any dimension; 2D grids are tensor products
/// of two copies of it.
pub fn build_axis_grid(spec: &ProblemSpec) -> Result<ComplexGrid1D> {
    spec.validate()?;
    Ok(axis_grid(spec))
}

fn axis_grid(spec: &ProblemSpec) -> ComplexGrid1D {
    let layer = spec.ecs_fraction.of(spec.n_interior).unwrap_or(0);
    ComplexGrid1D::with_layers(spec.n_interior, layer, spec.ecs_angle)
}

/// Right-hand side: unit source at the center of the real domain.
///
/// In 2D the unknown `(ix, iy)` has index `ix·ny + iy`.
pub fn build_rhs(spec: &ProblemSpec, grid: &ComplexGrid1D) -> Result<Vec<c64>> {
    spec.validate()?;
    if !spec.n_interior.is_multiple_of(2) {
        return Err(Error::InvalidSpec("center source requires an even interior cell count".into()));
    }
    match spec.rhs_kind {
        RhsKind::CenterUnitSource => {
            let n = grid.unknowns();
            let c = grid.unknown_of_interior_point(grid.n_interior / 2);
            let mut f = match spec.dim {
                1 => zeros(n),
                _ => zeros(n * n),
            };
            let idx = if spec.dim == 1 { c } else { c * n + c };
            f[idx] = c64::new(1.0, 0.0);
            Ok(f)
        }
    }
}
