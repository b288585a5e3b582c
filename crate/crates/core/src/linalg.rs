//! Small dense linear algebra: symmetric matrices and a growable Cholesky factor.

use thiserror::Error;

use crate::scalar::{dot, Scalar};

/// First jitter added to a diagonal when a factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Number of times the jitter is doubled before giving up.
pub const JITTER_DOUBLINGS: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite even with jitter {jitter:e} (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64, jitter: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Jitter values tried in order: zero, then `JITTER_START` doubled up to `JITTER_DOUBLINGS` times.
pub fn jitter_ladder<T: Scalar>() -> impl Iterator<Item = T> {
    std::iter::once(T::zero()).chain(
        (0..=JITTER_DOUBLINGS).map(|k| T::lit(JITTER_START * f64::from(1u32 << k))),
    )
}

/// Dense square matrix stored row-major. Used for Gram matrices, which are symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    /// Builds the matrix from a function of `(row, col)` evaluated on the upper
    /// triangle and mirrored, so the result is exactly symmetric.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// The principal submatrix selected by `idx` (indices may repeat).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Cholesky factorization, retrying with the jitter ladder on failure.
    /// Returns the factor and the jitter that was added to the diagonal.
    pub fn cholesky(&self) -> Result<(Cholesky<T>, T), LinalgError> {
        let mut last = None;
        for jitter in jitter_ladder::<T>() {
            match Cholesky::factor_with_shift(self, jitter) {
                Ok(l) => return Ok((l, jitter)),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("jitter ladder is nonempty"))
    }
}

/// Lower-triangular Cholesky factor stored as packed rows; row `i` holds `i + 1` entries.
/// Rows can be appended, which is how the GP posterior grows by one point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cholesky<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn empty() -> Self {
        Self { rows: Vec::new() }
    }

    fn factor_with_shift(a: &SymMatrix<T>, shift: T) -> Result<Self, LinalgError> {
        let n = a.dim();
        let mut l = Self { rows: Vec::with_capacity(n) };
        for i in 0..n {
            let mut row = Vec::with_capacity(i + 1);
            for j in 0..i {
                let s = a.get(i, j) - dot(&row[..j], &l.rows[j][..j]);
                row.push(s / l.rows[j][j]);
            }
            let pivot = a.get(i, i) + shift - dot(&row, &row);
            if !(pivot > T::zero()) || !pivot.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    row: i,
                    pivot: pivot.to_f64_lossy(),
                    jitter: shift.to_f64_lossy(),
                });
            }
            row.push(pivot.sqrt());
            l.rows.push(row);
        }
        Ok(l)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> T {
        self.rows[i][i]
    }

    /// Appends a row: `off_diagonal` must already be `L⁻¹ b` for the new column `b`.
    pub fn push_row(&mut self, mut off_diagonal: Vec<T>, diagonal: T) {
        debug_assert_eq!(off_diagonal.len(), self.rows.len());
        off_diagonal.push(diagonal);
        self.rows.push(off_diagonal);
    }

    /// Solves `L x = b` using only the leading `k` rows; `b` needs at least `k` entries.
    pub fn forward_solve_prefix(&self, b: &[T], k: usize) -> Vec<T> {
        let mut x: Vec<T> = Vec::with_capacity(k);
        for i in 0..k {
            let row = &self.rows[i];
            let s = b[i] - dot(&row[..i], &x);
            x.push(s / row[i]);
        }
        x
    }

    pub fn forward_solve(&self, b: &[T]) -> Vec<T> {
        self.forward_solve_prefix(b, self.dim())
    }

    /// Solves `Lᵀ x = b`.
    pub fn backward_solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let xi = x[i] / self.rows[i][i];
            x[i] = xi;
            for j in 0..i {
                x[j] -= self.rows[i][j] * xi;
            }
        }
        x
    }

    /// Computes `L z`.
    pub fn mul_vec(&self, z: &[T]) -> Vec<T> {
        self.rows.iter().map(|row| dot(row, &z[..row.len()])).collect()
    }

    /// `ln det(L Lᵀ)`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        self.rows.iter().enumerate().map(|(i, r)| two * r[i].ln()).sum()
    }
}

/// Low-rank factor `G` with `G Gᵀ ≈ A`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor<T> {
    n: usize,
    cols: Vec<Vec<T>>,
    /// Largest residual diagonal entry left out of the factor.
    residual: T,
}

impl<T: Scalar> LowRankFactor<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn residual(&self) -> T {
        self.residual
    }

    /// Computes `G z` for `z` of length `rank()`.
    pub fn mul_vec(&self, z: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (col, &zk) in self.cols.iter().zip(z) {
            for (o, &c) in out.iter_mut().zip(col) {
                *o += c * zk;
            }
        }
        out
    }
}

/// Diagonally pivoted Cholesky of the PSD matrix with entries `entry(i, j)`, stopped once
/// every residual diagonal entry is at most `tol`. Never needs jitter: a near-singular
/// direction is dropped instead of being factored.
pub fn pivoted_cholesky<T: Scalar>(
    n: usize,
    mut entry: impl FnMut(usize, usize) -> T,
    tol: T,
) -> Result<LowRankFactor<T>, LinalgError> {
    let mut residual: Vec<T> = (0..n).map(|i| entry(i, i)).collect();
    if let Some(row) = residual.iter().position(|d| !d.is_finite()) {
        return Err(LinalgError::NotPositiveDefinite { row, pivot: residual[row].to_f64_lossy(), jitter: 0.0 });
    }
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let pivot = (0..n)
            .filter(|&i| !used[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if residual[b] >= residual[i] => Some(b),
                _ => Some(i),
            });
        let Some(p) = pivot else { break };
        let dp = residual[p];
        if !(dp > tol) {
            break;
        }
        let root = dp.sqrt();
        let mut col = vec![T::zero(); n];
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = if i == p { dp } else { entry(i, p) };
            if i != p {
                for c in &cols {
                    v -= c[i] * c[p];
                }
            }
            col[i] = v / root;
        }
        col[p] = root;
        used[p] = true;
        for i in 0..n {
            residual[i] = if used[i] { T::zero() } else { (residual[i] - col[i] * col[i]).max(T::zero()) };
        }
        cols.push(col);
    }
    let left = residual.iter().copied().fold(T::zero(), T::max);
    Ok(LowRankFactor { n, cols, residual: left })
}
