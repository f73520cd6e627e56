//! Dense complex matrices, LU factorization and a banded variant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Build from a row-major entry closure. Panics on non-finite entries.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert!(
                    v.re.is_finite() && v.im.is_finite(),
                    "non-finite entry at ({i},{j})"
                );
                data.push(v);
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Real matrix promoted to complex.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![Complex64::ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for (a, b) in self.row(i).iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// `y += alpha * A * x`, for accumulating history sums.
    pub fn matvec_acc(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(self.cols, x.len());
        assert_eq!(self.rows, y.len());
        for i in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for (a, b) in self.row(i).iter().zip(x) {
                acc += a * b;
            }
            y[i] += alpha * acc;
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max_ij |a_ij|
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Paste `block` at offset (`r0`, `c0`).
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Add `alpha * block` at offset (`r0`, `c0`).
    pub fn add_block(&mut self, r0: usize, c0: usize, alpha: Complex64, block: &CMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] += alpha * block[(i, j)];
            }
        }
    }

    pub fn lu(&self) -> Result<LuFactorization> {
        LuFactorization::new(self)
    }

    /// Inverse via LU. Intended for small matrices.
    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let lu = self.lu()?;
        let mut inv = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Complex64::ZERO; n];
            e[j] = Complex64::ONE;
            let col = lu.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting of a square complex matrix.
///
/// The trailing-submatrix update is row-parallel; the elimination order is
/// fixed, so results do not depend on the thread count.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Dimension(format!(
                "LU requires a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);

        for k in 0..n {
            // Pivot search in column k.
            let mut p = k;
            let mut pmax = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax <= 1e-14 * scale {
                return Err(Error::Singular {
                    context: "dense LU",
                    pivot: pmax,
                });
            }
            if p != k {
                piv.swap(k, p);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let inv_pivot = Complex64::ONE / lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n + k + 1..k * n + n];
            par::par_chunks_mut(tail, n, |_, row| {
                let m = row[k] * inv_pivot;
                row[k] = m;
                if m != Complex64::ZERO {
                    for (r, p) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *r -= m * p;
                    }
                }
            });
        }
        Ok(Self { n, lu, piv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        if rhs.len() != self.n {
            return Err(Error::Dimension(format!(
                "solve: rhs length {} != {}",
                rhs.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| rhs[p]).collect();
        // Forward substitution with unit lower factor.
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        Ok(x)
    }

    pub fn determinant(&self) -> Complex64 {
        let mut det = Complex64::ONE;
        for i in 0..self.n {
            det *= self.lu[i * self.n + i];
        }
        // Sign of the permutation.
        let mut perm = self.piv.clone();
        let mut sign = 1.0;
        for i in 0..perm.len() {
            while perm[i] != i {
                let j = perm[i];
                perm.swap(i, j);
                sign = -sign;
            }
        }
        det * sign
    }
}

/// Banded complex LU with partial pivoting, LAPACK `gbtrf` layout.
///
/// Used for the 1D coupled step systems, which are block tridiagonal by node.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// (2*kl + ku + 1) x n column storage; row band index, column = matrix column.
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

/// Assembly-side banded matrix: kl subdiagonals, ku superdiagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Entry (i, j) lives at band index kl + ku + i - j, column j.
    ab: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            ab: vec![Complex64::ZERO; (2 * kl + ku + 1) * n],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j <= i + self.ku && i <= j + self.kl, "outside band");
        let band_row = self.kl + self.ku + i - j;
        band_row * self.n + j
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j > i + self.ku || i > j + self.kl {
            return Complex64::ZERO;
        }
        self.ab[self.slot(i, j)]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::ZERO; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            let mut acc = Complex64::ZERO;
            for j in j0..=j1 {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Factor in place; the extra `kl` superdiagonals hold pivoting fill.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku; // effective superdiagonal count after pivoting
        let mut piv = vec![0usize; n];
        let idx = |band_row: usize, col: usize| band_row * n + col;
        let scale = self
            .ab
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()))
            .max(f64::MIN_POSITIVE);

        for k in 0..n {
            // Rows k..=k+kl of column k live at band rows kv..kv+kl.
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut pmax = self.ab[idx(kv, k)].norm();
            for i in k + 1..=last {
                let v = self.ab[idx(kv + i - k, k)].norm();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax <= 1e-14 * scale {
                return Err(Error::Singular {
                    context: "banded LU",
                    pivot: pmax,
                });
            }
            piv[k] = p;
            let jmax = (k + kv).min(n - 1);
            if p != k {
                // Swap the in-band parts of rows k and p; for j >= k both
                // band row indices kv+k-j and kv+p-j are valid.
                for j in k..=jmax {
                    let a = kv + k - j;
                    let b = kv + p - j;
                    self.ab.swap(a * n + j, b * n + j);
                }
            }
            let pivot = self.ab[idx(kv, k)];
            let inv_pivot = Complex64::ONE / pivot;
            for i in k + 1..=last {
                let li = idx(kv + i - k, k);
                let m = self.ab[li] * inv_pivot;
                self.ab[li] = m;
                if m != Complex64::ZERO {
                    for j in k + 1..=jmax {
                        let sub = m * self.ab[(kv + k - j) * n + j];
                        self.ab[(kv + i - j) * n + j] -= sub;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ab: self.ab,
            piv,
        })
    }
}

impl BandedLu {
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        if rhs.len() != self.n {
            return Err(Error::Dimension(format!(
                "banded solve: rhs length {} != {}",
                rhs.len(),
                self.n
            )));
        }
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let mut x = rhs.to_vec();
        // Apply L (with row interchanges).
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                let m = self.ab[(kv + i - k) * n + k];
                let sub = m * x[k];
                x[i] -= sub;
            }
        }
        // Back substitution with U.
        for i in (0..n).rev() {
            let jmax = (i + kv).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=jmax {
                acc -= self.ab[(kv + i - j) * n + j] * x[j];
            }
            x[i] = acc / self.ab[kv * n + i];
        }
        Ok(x)
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.add_block(i * b.rows(), j * b.cols(), a[(i, j)], b);
        }
    }
    out
}
