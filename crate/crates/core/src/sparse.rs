//! Compressed sparse row storage over complex scalars.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as c64;

use crate::error::{check_len, Error, Result};
use crate::vector::ZERO;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseComplexMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<c64>,
}

impl SparseComplexMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; explicit zeros are kept so the sparsity pattern is stable
    /// across shifts.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, c64)>) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= n_rows {
                return Err(Error::DimensionMismatch { expected: n_rows, found: r + 1 });
            }
            if c >= n_cols {
                return Err(Error::DimensionMismatch { expected: n_cols, found: c + 1 });
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<c64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_indices.push(c);
            values.push(v);
            row_offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self { n_rows, n_cols, row_offsets, col_indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![c64::new(1.0, 0.0); n],
        }
    }

    /// Stores every entry whose modulus is nonzero.
    pub fn from_dense(m: &DMatrix<c64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t).expect("indices in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    /// `(columns, values)` of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[c64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal(&self) -> Vec<c64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// Lower and upper bandwidth.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n_rows {
            let (cols, _) = self.row(i);
            if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
                kl = kl.max(i.saturating_sub(first));
                ku = ku.max(last.saturating_sub(i));
            }
        }
        (kl, ku)
    }

    pub fn matvec(&self, v: &[c64]) -> Result<Vec<c64>> {
        let mut out = vec![ZERO; self.n_rows];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = self · v`, summing each row in ascending column order.
    pub fn matvec_into(&self, v: &[c64], out: &mut [c64]) -> Result<()> {
        check_len(self.n_cols, v.len())?;
        check_len(self.n_rows, out.len())?;
        for (i, o) in out.iter_mut().enumerate() {
            let r = self.row_offsets[i]..self.row_offsets[i + 1];
            let mut acc = ZERO;
            for (c, a) in self.col_indices[r.clone()].iter().zip(&self.values[r]) {
                acc += a * v[*c];
            }
            *o = acc;
        }
        Ok(())
    }

    /// `b - self · x`
    pub fn residual(&self, b: &[c64], x: &[c64]) -> Result<Vec<c64>> {
        let mut r = self.matvec(x)?;
        check_len(self.n_rows, b.len())?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        Ok(r)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push((*c, i, *v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, t).expect("indices in range")
    }

    pub fn scaled(&self, alpha: c64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= alpha;
        }
        out
    }

    /// Adds `shift` to every diagonal entry (the diagonal must be stored).
    pub fn add_diagonal(&self, shift: c64) -> Self {
        let mut t = self.triplets();
        t.extend((0..self.n_rows.min(self.n_cols)).map(|i| (i, i, shift)));
        Self::from_triplets(self.n_rows, self.n_cols, t).expect("indices in range")
    }

    pub fn triplets(&self) -> Vec<(usize, usize, c64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).map(|(c, v)| (i, *c, *v)));
        }
        t
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_len(self.n_cols, other.n_rows)?;
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![ZERO; other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.n_rows {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (k, a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(*k);
                for (j, b) in ocols.iter().zip(ovals) {
                    if marker[*j] != i {
                        marker[*j] = i;
                        acc[*j] = ZERO;
                        touched.push(*j);
                    }
                    acc[*j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets[i + 1] = col_indices.len();
        }
        Ok(Self { n_rows: self.n_rows, n_cols: other.n_cols, row_offsets, col_indices, values })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for i in 0..self.n_rows {
            let (ac, av) = self.row(i);
            for p in 0..other.n_rows {
                let (bc, bv) = other.row(p);
                for (j, a) in ac.iter().zip(av) {
                    for (q, b) in bc.iter().zip(bv) {
                        t.push((i * other.n_rows + p, j * other.n_cols + q, a * b));
                    }
                }
            }
        }
        Self::from_triplets(self.n_rows * other.n_rows, self.n_cols * other.n_cols, t).expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<c64> {
        let mut m = DMatrix::from_element(self.n_rows, self.n_cols, ZERO);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Writes the matrix in Matrix Market coordinate format (complex, general).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
        }
        Ok(())
    }

    /// Checks the structural CSR invariants.
    pub fn is_well_formed(&self) -> bool {
        self.row_offsets.len() == self.n_rows + 1
            && self.row_offsets[0] == 0
            && *self.row_offsets.last().unwrap() == self.nnz()
            && self.row_offsets.windows(2).all(|w| w[0] <= w[1])
            && (0..self.n_rows).all(|i| {
                let (cols, _) = self.row(i);
                cols.windows(2).all(|w| w[0] < w[1]) && cols.iter().all(|&c| c < self.n_cols)
            })
    }
}
