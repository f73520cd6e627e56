//! Eigendecomposition of small (dim <= 3) complex matrices.
//!
//! Dimensions 1 and 2 use closed forms; dimension 3 solves the
//! characteristic cubic and polishes the roots with Newton steps.
//! Eigenvectors come from rank-deficient row cross products with an
//! inverse-iteration fallback near defectiveness.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::dense::CMatrix;

/// Eigenvector condition above which diagonalization is considered unusable
/// and callers should fall back to the contour calculus.
pub const DEFECTIVE_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub vectors: CMatrix,
    pub vectors_inv: CMatrix,
    /// Frobenius condition estimate of the eigenvector matrix, >= 1.
    pub condition: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_reliable(&self) -> bool {
        self.condition <= DEFECTIVE_CONDITION_LIMIT
    }

    /// P * diag(f(values)) * P^{-1}.
    pub fn apply_scalar_function(&self, f: impl Fn(Complex64) -> Complex64) -> CMatrix {
        let m = self.dim();
        let mut d = CMatrix::zeros(m, m);
        for i in 0..m {
            d[(i, i)] = f(self.values[i]);
        }
        self.vectors.matmul(&d).matmul(&self.vectors_inv)
    }

    /// Reconstruct the decomposed matrix.
    pub fn reconstruct(&self) -> CMatrix {
        self.apply_scalar_function(|v| v)
    }
}

/// Eigendecomposition of a 1x1, 2x2 or 3x3 complex matrix.
pub fn eig_small(m: &CMatrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    if n != m.cols() || n == 0 || n > 3 {
        return Err(Error::Dimension(format!(
            "eig_small supports square dims 1..=3, got {}x{}",
            n,
            m.cols()
        )));
    }
    let mut values = eigenvalues(m);
    // Deterministic ordering.
    values.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut vectors = CMatrix::zeros(n, n);
    for (j, &lambda) in values.iter().enumerate() {
        let v = eigenvector(m, lambda, scale);
        for i in 0..n {
            vectors[(i, j)] = v[i];
        }
    }
    let (vectors_inv, condition) = match vectors.inverse() {
        Ok(inv) => {
            let cond = (vectors.norm() * inv.norm()).max(1.0);
            (inv, cond)
        }
        Err(_) => (CMatrix::identity(n), f64::INFINITY),
    };
    Ok(EigenDecomposition {
        values,
        vectors,
        vectors_inv,
        condition,
    })
}

fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    match m.rows() {
        1 => vec![m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr - 4.0 * det).sqrt();
            vec![0.5 * (tr + disc), 0.5 * (tr - disc)]
        }
        3 => {
            // det(M - x I) = -x^3 + c2 x^2 - c1 x + c0
            let c2 = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
            let c1 = minor(m, 0, 0) + minor(m, 1, 1) + minor(m, 2, 2);
            let c0 = m[(0, 0)] * cof(m, 0, 0) + m[(0, 1)] * cof(m, 0, 1)
                + m[(0, 2)] * cof(m, 0, 2);
            let mut roots = cubic_roots(-c2, c1, -c0);
            // Newton polish on p(x) = x^3 - c2 x^2 + c1 x - c0.
            for r in roots.iter_mut() {
                for _ in 0..8 {
                    let p = ((*r - c2) * *r + c1) * *r - c0;
                    let dp = (3.0 * *r - 2.0 * c2) * *r + c1;
                    if dp.norm() < 1e-300 {
                        break;
                    }
                    let step = p / dp;
                    *r -= step;
                    if step.norm() <= 1e-16 * (1.0 + r.norm()) {
                        break;
                    }
                }
            }
            roots
        }
        _ => unreachable!(),
    }
}

fn minor(m: &CMatrix, i: usize, j: usize) -> Complex64 {
    let rows: Vec<usize> = (0..3).filter(|&r| r != i).collect();
    let cols: Vec<usize> = (0..3).filter(|&c| c != j).collect();
    m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
}

fn cof(m: &CMatrix, i: usize, j: usize) -> Complex64 {
    let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
    s * minor(m, i, j)
}

/// Roots of x^3 + a x^2 + b x + c via Cardano in complex arithmetic.
fn cubic_roots(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    let third = 1.0 / 3.0;
    let shift = -a * third;
    // Depressed cubic t^3 + p t + q with x = t + shift.
    let p = b - a * a * third;
    let q = c + a * (2.0 * a * a - 9.0 * b) / 27.0;
    let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
    // Pick the cube-root branch maximizing |u| for stability.
    let u3a = -q * 0.5 + disc;
    let u3b = -q * 0.5 - disc;
    let u3 = if u3a.norm() >= u3b.norm() { u3a } else { u3b };
    if u3.norm() == 0.0 {
        // Triple root.
        return vec![shift; 3];
    }
    let u = u3.cbrt();
    let omega = Complex64::new(-0.5, 0.5 * 3.0f64.sqrt());
    let mut roots = Vec::with_capacity(3);
    for k in 0..3 {
        let uk = u * omega.powu(k);
        let t = uk - p / (3.0 * uk);
        roots.push(t + shift);
    }
    roots
}

/// Null vector of (M - lambda I) via the best row cross product, with an
/// inverse-iteration fallback when the matrix is nearly rank one.
fn eigenvector(m: &CMatrix, lambda: Complex64, scale: f64) -> Vec<Complex64> {
    let n = m.rows();
    match n {
        1 => vec![Complex64::ONE],
        2 => {
            let a = m[(0, 0)] - lambda;
            let b = m[(0, 1)];
            let c = m[(1, 0)];
            let d = m[(1, 1)] - lambda;
            // Rows of (M - lambda I) are (a, b) and (c, d); a null vector is
            // orthogonal (without conjugation) to the larger row.
            let cand1 = [b, -a];
            let cand2 = [d, -c];
            let n1 = cand1[0].norm_sqr() + cand1[1].norm_sqr();
            let n2 = cand2[0].norm_sqr() + cand2[1].norm_sqr();
            let v = if n1 >= n2 { cand1 } else { cand2 };
            let vn = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            if vn > 1e-14 * scale {
                vec![v[0] / vn, v[1] / vn]
            } else {
                // (M - lambda I) ~ 0: any direction is an eigenvector.
                vec![Complex64::ONE, Complex64::ZERO]
            }
        }
        3 => {
            let row = |i: usize| -> [Complex64; 3] {
                [
                    m[(i, 0)] - if i == 0 { lambda } else { Complex64::ZERO },
                    m[(i, 1)] - if i == 1 { lambda } else { Complex64::ZERO },
                    m[(i, 2)] - if i == 2 { lambda } else { Complex64::ZERO },
                ]
            };
            let rows = [row(0), row(1), row(2)];
            let mut best: Option<[Complex64; 3]> = None;
            let mut best_norm = 0.0;
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let v = cross(&rows[i], &rows[j]);
                let vn = (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt();
                if vn > best_norm {
                    best_norm = vn;
                    best = Some(v);
                }
            }
            if best_norm > 1e-12 * scale * scale {
                let v = best.unwrap();
                return v.iter().map(|x| x / best_norm).collect();
            }
            inverse_iteration(m, lambda, scale)
        }
        _ => unreachable!(),
    }
}

fn cross(a: &[Complex64; 3], b: &[Complex64; 3]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn inverse_iteration(m: &CMatrix, lambda: Complex64, scale: f64) -> Vec<Complex64> {
    let n = m.rows();
    let shift = lambda + Complex64::new(1e-8 * scale.max(1e-8), 0.0);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let start: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + i as f64 * 0.25, 0.25 - i as f64 * 0.125))
        .collect();
    let mut v = start.clone();
    if let Ok(lu) = shifted.lu() {
        for _ in 0..4 {
            if let Ok(w) = lu.solve(&v) {
                let nw = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if nw == 0.0 {
                    break;
                }
                v = w.iter().map(|x| x / nw).collect();
            } else {
                break;
            }
        }
        return v;
    }
    let nv = start.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    start.iter().map(|x| x / nv).collect()
}
