//! Dense matrices over F_q and F_{q^s}.
//!
//! Matrices are plain row-major data; every operation that needs arithmetic
//! takes the field description explicitly. The F_q-rank of an extension-field
//! matrix is obtained by expanding each entry into its s base-field
//! coordinates (`expand_fq`) and eliminating over F_q.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::field::{ExtFieldSpec, FieldSpec, FqElem, FqsElem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("singular matrix")]
    Singular,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Row-major matrix over F_q.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatFq {
    rows: usize,
    cols: usize,
    data: Vec<FqElem>,
}

/// Row-major matrix over F_{q^s}.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatFqs {
    rows: usize,
    cols: usize,
    data: Vec<FqsElem>,
}

/// Field operations needed by the shared elimination routines.
pub(crate) trait Arith {
    type Elem: Clone + PartialEq;
    fn a_zero(&self) -> Self::Elem;
    fn a_one(&self) -> Self::Elem;
    fn a_is_zero(&self, a: &Self::Elem) -> bool;
    fn a_sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn a_mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn a_inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
}

impl Arith for FieldSpec {
    type Elem = FqElem;
    fn a_zero(&self) -> FqElem {
        self.zero()
    }
    fn a_one(&self) -> FqElem {
        self.one()
    }
    fn a_is_zero(&self, a: &FqElem) -> bool {
        self.is_zero(a)
    }
    fn a_sub(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.sub(a, b)
    }
    fn a_mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        self.mul(a, b)
    }
    fn a_inv(&self, a: &FqElem) -> Option<FqElem> {
        self.inv(a).ok()
    }
}

impl Arith for ExtFieldSpec {
    type Elem = FqsElem;
    fn a_zero(&self) -> FqsElem {
        self.zero()
    }
    fn a_one(&self) -> FqsElem {
        self.one()
    }
    fn a_is_zero(&self, a: &FqsElem) -> bool {
        self.is_zero(a)
    }
    fn a_sub(&self, a: &FqsElem, b: &FqsElem) -> FqsElem {
        self.sub(a, b)
    }
    fn a_mul(&self, a: &FqsElem, b: &FqsElem) -> FqsElem {
        self.mul(a, b)
    }
    fn a_inv(&self, a: &FqsElem) -> Option<FqsElem> {
        self.inv(a).ok()
    }
}

/// One-shot Gaussian elimination rank. Kept independent of the incremental
/// echelon accumulator so the two can cross-check each other.
fn gauss_rank<F: Arith>(f: &F, rows: usize, cols: usize, data: &mut [F::Elem]) -> usize {
    let at = |r: usize, c: usize| r * cols + c;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !f.a_is_zero(&data[at(r, col)])) else {
            continue;
        };
        if pivot != rank {
            for c in 0..cols {
                data.swap(at(pivot, c), at(rank, c));
            }
        }
        let inv = f.a_inv(&data[at(rank, col)]).expect("pivot is nonzero");
        for c in col..cols {
            data[at(rank, c)] = f.a_mul(&data[at(rank, c)], &inv);
        }
        for r in 0..rows {
            if r == rank || f.a_is_zero(&data[at(r, col)]) {
                continue;
            }
            let factor = data[at(r, col)].clone();
            for c in col..cols {
                let t = f.a_mul(&factor, &data[at(rank, c)]);
                data[at(r, c)] = f.a_sub(&data[at(r, c)], &t);
            }
        }
        rank += 1;
    }
    rank
}

/// Gauss-Jordan inverse on [M | I].
fn gauss_inverse<F: Arith>(f: &F, n: usize, data: &[F::Elem]) -> Result<Vec<F::Elem>, MatrixError> {
    let w = 2 * n;
    let mut aug: Vec<F::Elem> = Vec::with_capacity(n * w);
    for r in 0..n {
        aug.extend_from_slice(&data[r * n..(r + 1) * n]);
        for c in 0..n {
            aug.push(if c == r { f.a_one() } else { f.a_zero() });
        }
    }
    let at = |r: usize, c: usize| r * w + c;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !f.a_is_zero(&aug[at(r, col)])) else {
            return Err(MatrixError::Singular);
        };
        if pivot != col {
            for c in 0..w {
                aug.swap(at(pivot, c), at(col, c));
            }
        }
        let inv = f.a_inv(&aug[at(col, col)]).expect("pivot is nonzero");
        for c in 0..w {
            aug[at(col, c)] = f.a_mul(&aug[at(col, c)], &inv);
        }
        for r in 0..n {
            if r == col || f.a_is_zero(&aug[at(r, col)]) {
                continue;
            }
            let factor = aug[at(r, col)].clone();
            for c in 0..w {
                let t = f.a_mul(&factor, &aug[at(col, c)]);
                aug[at(r, c)] = f.a_sub(&aug[at(r, c)], &t);
            }
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        out.extend_from_slice(&aug[r * w + n..(r + 1) * w]);
    }
    Ok(out)
}

impl MatFq {
    pub fn zeros(rows: usize, cols: usize, spec: &FieldSpec) -> Self {
        MatFq {
            rows,
            cols,
            data: vec![spec.zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, spec: &FieldSpec) -> Self {
        let mut m = Self::zeros(n, n, spec);
        for i in 0..n {
            m[(i, i)] = spec.one();
        }
        m
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<FqElem>) -> Self {
        assert_eq!(rows * cols, data.len());
        MatFq { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> FqElem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        MatFq { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[FqElem] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[FqElem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn add(&self, rhs: &MatFq, spec: &FieldSpec) -> MatFq {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        MatFq {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| spec.add(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &MatFq, spec: &FieldSpec) -> MatFq {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        MatFq {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| spec.sub(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &MatFq, spec: &FieldSpec) -> MatFq {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = MatFq::zeros(self.rows, rhs.cols, spec);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = &self[(i, t)];
                if spec.is_zero(a) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = spec.mul(a, &rhs[(t, j)]);
                    out[(i, j)] = spec.add(&out[(i, j)], &prod);
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[FqElem], spec: &FieldSpec) -> Vec<FqElem> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![spec.zero(); self.cols];
        for (t, vt) in v.iter().enumerate() {
            if spec.is_zero(vt) {
                continue;
            }
            for j in 0..self.cols {
                let prod = spec.mul(vt, &self[(t, j)]);
                out[j] = spec.add(&out[j], &prod);
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[FqElem], spec: &FieldSpec) -> Vec<FqElem> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![spec.zero(); self.rows];
        for i in 0..self.rows {
            for (t, vt) in v.iter().enumerate() {
                if spec.is_zero(vt) {
                    continue;
                }
                let prod = spec.mul(&self[(i, t)], vt);
                out[i] = spec.add(&out[i], &prod);
            }
        }
        out
    }

    /// Rank by one-shot Gaussian elimination over F_q.
    pub fn rank(&self, spec: &FieldSpec) -> usize {
        let mut work = self.data.clone();
        gauss_rank(spec, self.rows, self.cols, &mut work)
    }

    pub fn inverse(&self, spec: &FieldSpec) -> Result<MatFq, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "cannot invert {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let data = gauss_inverse(spec, self.rows, &self.data)?;
        Ok(MatFq {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Horizontal concatenation; all blocks must share the row count.
    pub fn hstack(blocks: &[MatFq]) -> Result<MatFq, MatrixError> {
        assert!(!blocks.is_empty());
        let rows = blocks[0].rows;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(MatrixError::ShapeMismatch(
                "hstack blocks differ in row count".into(),
            ));
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Ok(MatFq { rows, cols, data })
    }

    /// New matrix from a contiguous range of columns.
    pub fn col_range(&self, start: usize, end: usize) -> MatFq {
        assert!(start <= end && end <= self.cols);
        let cols = end - start;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        MatFq {
            rows: self.rows,
            cols,
            data,
        }
    }
}

impl Index<(usize, usize)> for MatFq {
    type Output = FqElem;
    fn index(&self, (r, c): (usize, usize)) -> &FqElem {
        assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for MatFq {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FqElem {
        assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl MatFqs {
    pub fn zeros(rows: usize, cols: usize, ext: &ExtFieldSpec) -> Self {
        MatFqs {
            rows,
            cols,
            data: vec![ext.zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, ext: &ExtFieldSpec) -> Self {
        let mut m = Self::zeros(n, n, ext);
        for i in 0..n {
            m[(i, i)] = ext.one();
        }
        m
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<FqsElem>) -> Self {
        assert_eq!(rows * cols, data.len());
        MatFqs { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<FqsElem>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        MatFqs {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> FqsElem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        MatFqs { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[FqsElem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn add(&self, rhs: &MatFqs, ext: &ExtFieldSpec) -> MatFqs {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        MatFqs {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| ext.add(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &MatFqs, ext: &ExtFieldSpec) -> MatFqs {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        MatFqs {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| ext.sub(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &MatFqs, ext: &ExtFieldSpec) -> MatFqs {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = MatFqs::zeros(self.rows, rhs.cols, ext);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = &self[(i, t)];
                if ext.is_zero(a) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = ext.mul(a, &rhs[(t, j)]);
                    out[(i, j)] = ext.add(&out[(i, j)], &prod);
                }
            }
        }
        out
    }

    /// Row vector times matrix over F_{q^s}.
    pub fn vec_mul(&self, v: &[FqsElem], ext: &ExtFieldSpec) -> Vec<FqsElem> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![ext.zero(); self.cols];
        for (t, vt) in v.iter().enumerate() {
            if ext.is_zero(vt) {
                continue;
            }
            for j in 0..self.cols {
                let prod = ext.mul(vt, &self[(t, j)]);
                out[j] = ext.add(&out[j], &prod);
            }
        }
        out
    }

    /// Rank over F_{q^s}.
    pub fn rank(&self, ext: &ExtFieldSpec) -> usize {
        let mut work = self.data.clone();
        gauss_rank(ext, self.rows, self.cols, &mut work)
    }

    pub fn inverse(&self, ext: &ExtFieldSpec) -> Result<MatFqs, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "cannot invert {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let data = gauss_inverse(ext, self.rows, &self.data)?;
        Ok(MatFqs {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Coordinate expansion: each F_{q^s} entry becomes its s polynomial-basis
    /// coordinates, so an r x c matrix becomes r x (c*s) over F_q. The F_q row
    /// space (hence the F_q-rank) is preserved.
    pub fn expand_fq(&self, ext: &ExtFieldSpec) -> MatFq {
        let s = ext.ext_degree();
        let mut data = Vec::with_capacity(self.rows * self.cols * s);
        for entry in &self.data {
            data.extend_from_slice(entry.coeffs());
        }
        MatFq {
            rows: self.rows,
            cols: self.cols * s,
            data,
        }
    }

    /// Rank of the matrix viewed over F_q (rank of the expansion).
    pub fn rank_fq(&self, ext: &ExtFieldSpec) -> usize {
        self.expand_fq(ext).rank(ext.base())
    }

    pub fn select_cols(&self, sel: &[usize]) -> MatFqs {
        let mut data = Vec::with_capacity(self.rows * sel.len());
        for r in 0..self.rows {
            let row = self.row(r);
            for &c in sel {
                data.push(row[c].clone());
            }
        }
        MatFqs {
            rows: self.rows,
            cols: sel.len(),
            data,
        }
    }

    /// New matrix consisting of rows start..end.
    pub fn row_range(&self, start: usize, end: usize) -> MatFqs {
        assert!(start <= end && end <= self.rows);
        MatFqs {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// New matrix with rows start..end removed.
    pub fn delete_row_range(&self, start: usize, end: usize) -> MatFqs {
        assert!(start <= end && end <= self.rows);
        let mut data = Vec::with_capacity((self.rows - (end - start)) * self.cols);
        data.extend_from_slice(&self.data[..start * self.cols]);
        data.extend_from_slice(&self.data[end * self.cols..]);
        MatFqs {
            rows: self.rows - (end - start),
            cols: self.cols,
            data,
        }
    }

    pub fn vstack(blocks: &[MatFqs]) -> Result<MatFqs, MatrixError> {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(MatrixError::ShapeMismatch(
                "vstack blocks differ in column count".into(),
            ));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(MatFqs { rows, cols, data })
    }
}

impl Index<(usize, usize)> for MatFqs {
    type Output = FqsElem;
    fn index(&self, (r, c): (usize, usize)) -> &FqsElem {
        assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for MatFqs {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FqsElem {
        assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Product of an F_q matrix with an F_{q^s} matrix: base-field scalars acting
/// coefficient-wise on extension-field entries. This is the server's
/// answer-side multiplication.
pub fn mul_fq_fqs(x: &MatFq, q: &MatFqs, ext: &ExtFieldSpec) -> Result<MatFqs, MatrixError> {
    if x.cols() != q.rows() {
        return Err(MatrixError::ShapeMismatch(format!(
            "{}x{} times {}x{}",
            x.rows(),
            x.cols(),
            q.rows(),
            q.cols()
        )));
    }
    let spec = ext.base();
    let mut out = MatFqs::zeros(x.rows(), q.cols(), ext);
    for i in 0..x.rows() {
        for t in 0..x.cols() {
            let a = &x[(i, t)];
            if spec.is_zero(a) {
                continue;
            }
            for j in 0..q.cols() {
                let prod = ext.scale(&q[(t, j)], a);
                out[(i, j)] = ext.add(&out[(i, j)], &prod);
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a base-field column vector (embedded in F_{q^s}) with
/// an extension-field matrix: block t of the result is c_t * M.
pub fn kron_vec(c: &[FqElem], m: &MatFqs, ext: &ExtFieldSpec) -> MatFqs {
    let spec = ext.base();
    let mut out = MatFqs::zeros(c.len() * m.rows(), m.cols(), ext);
    for (t, ct) in c.iter().enumerate() {
        if spec.is_zero(ct) {
            continue;
        }
        for r in 0..m.rows() {
            for j in 0..m.cols() {
                out[(t * m.rows() + r, j)] = ext.scale(&m[(r, j)], ct);
            }
        }
    }
    out
}
