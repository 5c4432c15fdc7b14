//! Compressed sparse row storage plus thin wrappers over the faer factorizations.
//!
//! Assembly works on triplets; everything downstream (structure checks, time
//! stepping, modal reduction) consumes [`CsrMatrix`]. Factorizations convert to
//! faer's column-compressed format on demand.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, value)` entries. Duplicates are summed
    /// in input order; entries summing to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of range");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = cursor[r];
            cols[slot] = c;
            vals[slot] = v;
            cursor[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            // stable: duplicates keep their insertion order before summation
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == c {
                    acc += row[k].1;
                    k += 1;
                }
                if acc != 0.0 {
                    indices.push(c);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: MatRef<'_, f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Row-major iteration over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension mismatch");
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `self^T x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                out[j] += v * xi;
            }
        }
        out
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let t: Vec<_> = self
            .iter()
            .filter(|&(_, j, _)| map[j] != usize::MAX)
            .map(|(i, j, v)| (i, map[j], v))
            .collect();
        Self::from_triplets(self.nrows, cols.len(), &t)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut t = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            t.extend(self.row(r).map(|(j, v)| (k, j, v)));
        }
        Self::from_triplets(rows.len(), self.ncols, &t)
    }

    /// Extracts the sub-block with the given row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut t = Vec::new();
        for i in rows.clone() {
            for (j, v) in self.row(i) {
                if cols.contains(&j) {
                    t.push((i - rows.start, j - cols.start, v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &t)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<_> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t).expect("valid sparse structure")
    }

    /// Sparse times dense.
    pub fn mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut out = Mat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let col = x.col(c);
            for i in 0..self.nrows {
                let mut acc = 0.0;
                for (j, v) in self.row(i) {
                    acc += v * col[j];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    /// `self^T` times dense.
    pub fn tr_mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.nrows);
        let mut out = Mat::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, c)];
                if xi == 0.0 {
                    continue;
                }
                for (j, v) in self.row(i) {
                    out[(j, c)] += v * xi;
                }
            }
        }
        out
    }

    /// Sparse times sparse, accumulated row by row.
    pub fn matmul(&self, rhs: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, rhs.nrows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; rhs.ncols];
        let mut touched = Vec::new();
        let mut mark = vec![false; rhs.ncols];
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
        }
        CsrMatrix::from_triplets(self.nrows, rhs.ncols, &t)
    }

    /// Largest `|a_ij + a_ji|` with its location.
    pub fn skew_defect(&self) -> (f64, usize, usize) {
        self.pair_defect(1.0)
    }

    /// Largest `|a_ij - a_ji|` with its location.
    pub fn symmetry_defect(&self) -> (f64, usize, usize) {
        self.pair_defect(-1.0)
    }

    fn pair_defect(&self, sign: f64) -> (f64, usize, usize) {
        assert_eq!(self.nrows, self.ncols);
        let mut worst = (0.0, 0, 0);
        for (i, j, v) in self.iter() {
            let d = (v + sign * self.get(j, i)).abs();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
        worst
    }
}

/// Accumulates triplets for block-structured matrices.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn add_block(&mut self, row0: usize, col0: usize, block: &CsrMatrix, scale: f64) {
        for (i, j, v) in block.iter() {
            self.entries.push((row0 + i, col0 + j, scale * v));
        }
    }

    pub fn add_block_transposed(&mut self, row0: usize, col0: usize, block: &CsrMatrix, scale: f64) {
        for (i, j, v) in block.iter() {
            self.entries.push((row0 + j, col0 + i, scale * v));
        }
    }

    pub fn build(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, &self.entries)
    }
}

/// Sparse Cholesky factorization of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix, name: &str) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!("{name} is not square")));
        }
        let llt = a.to_faer().sp_cholesky(Side::Lower).map_err(|e| Error::Factorization {
            matrix: name.to_string(),
            message: format!("not positive definite ({e:?})"),
        })?;
        Ok(Self { n: a.nrows(), llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    pub fn solve_dense(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        let mut rhs = b.to_owned();
        self.llt.solve_in_place(rhs.as_mut());
        rhs
    }
}

/// Sparse LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl LuFactor {
    pub fn new(a: &CsrMatrix, name: &str) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!("{name} is not square")));
        }
        let lu = a.to_faer().sp_lu().map_err(|e| Error::Factorization {
            matrix: name.to_string(),
            message: format!("{e:?}"),
        })?;
        Ok(Self { n: a.nrows(), lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Indices of a maximal linearly independent subset of the rows of `rows`,
/// in increasing order. Uses column-pivoted QR on the transpose with a
/// relative threshold on the diagonal of R.
pub fn independent_rows(rows: MatRef<'_, f64>, rel_tol: f64) -> Vec<usize> {
    let r = rows.nrows();
    if r == 0 {
        return Vec::new();
    }
    let qr = rows.transpose().to_owned().col_piv_qr();
    let rmat = qr.R();
    let perm = qr.P();
    let (forward, _) = perm.arrays();
    let k = rmat.nrows().min(rmat.ncols());
    let lead = if k > 0 { rmat[(0, 0)].abs() } else { 0.0 };
    let mut keep = Vec::new();
    if lead == 0.0 {
        return keep;
    }
    for d in 0..k {
        if rmat[(d, d)].abs() > rel_tol * lead {
            keep.push(forward[d]);
        } else {
            break;
        }
    }
    keep.sort_unstable();
    keep
}

/// Orthonormal basis of the null space of a dense matrix, from its SVD.
pub fn null_space(a: MatRef<'_, f64>, rel_tol: f64) -> Result<Mat<f64>> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let svd = a.svd().map_err(|e| Error::Solver(format!("SVD did not converge ({e:?})")))?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).fold(0.0f64, |m, i| m.max(s[i].abs()));
    let rank = (0..s.nrows()).filter(|&i| s[i].abs() > rel_tol * smax).count();
    let v = svd.V();
    Ok(Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]))
}

/// Number of worker threads for dense and sparse kernels; `1` runs sequentially.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(match std::num::NonZeroUsize::new(n) {
        Some(n) if n.get() > 1 => faer::Par::Rayon(n),
        _ => faer::Par::Seq,
    });
}

/// Eigen-decomposition of a dense symmetric matrix, ascending, by
/// tridiagonal QR iteration. The result is checked through `||A U - U S||`.
pub fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    use faer::diag::Diag;
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors, SelfAdjointEvdParams};
    use faer::{Auto, Spec};

    let n = a.nrows();
    let mut params = <SelfAdjointEvdParams as Auto<f64>>::auto();
    params.recursion_threshold = usize::MAX;
    let spec: Spec<SelfAdjointEvdParams, f64> = params.into();
    let par = faer::get_global_parallelism();
    let mut u = Mat::<f64>::zeros(n, n);
    let mut s = Diag::<f64>::zeros(n);
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, par, spec));
    self_adjoint_evd(a, s.as_mut(), Some(u.as_mut()), par, MemStack::new(&mut buf), spec)
        .map_err(|e| Error::Solver(format!("symmetric eigensolver did not converge ({e:?})")))?;
    let s: Vec<f64> = (0..n).map(|i| s[i]).collect();

    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let tol = 1e-12 * norm * (n.max(1) as f64).sqrt();
    let au = a * &u;
    let residual = (0..n)
        .map(|c| (0..n).map(|i| (au[(i, c)] - s[c] * u[(i, c)]).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::Solver(format!(
            "symmetric eigensolver residual {residual:e} exceeds {tol:e}"
        )));
    }
    Ok((s, u))
}

/// C-style `%.17g` formatting.
pub fn format_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        strip_fraction_zeros(&fixed).to_string()
    } else {
        let m = strip_fraction_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn strip_fraction_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a sparse matrix as `row col value` lines (0-based, `%.17g`).
pub fn write_coordinate<W: std::io::Write>(m: &CsrMatrix, mut out: W) -> std::io::Result<()> {
    for (i, j, v) in m.iter() {
        writeln!(out, "{i} {j} {}", format_g17(v))?;
    }
    Ok(())
}
