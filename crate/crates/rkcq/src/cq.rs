//! Convolution-quadrature operational calculus.
//!
//! A Laplace-domain symbol `F` is discretized by substituting the Runge-Kutta
//! generating matrix `delta(z)/k` for the frequency variable and reading off
//! the power-series coefficients of `F(delta(z)/k)` as convolution weights.
//! The coefficients are approximated by a trapezoidal rule on a circle of
//! radius `lambda` inside the unit disk, evaluated with an FFT.
//!
//! Matrix arguments are handled by diagonalization with a trapezoidal
//! resolvent-contour fallback when the eigenvector basis is too
//! ill-conditioned.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_small, inverse_contour_stack, CMatrix, EigenDecomposition, DEFECTIVE_CONDITION_LIMIT,
};
use crate::par;
use crate::tableau::Tableau;

/// Node count of the resolvent-contour fallback in [`matrix_function_scalar`].
pub const CONTOUR_FALLBACK_NODES: usize = 64;

/// delta(z) = (A + z/(1-z) * 1 b^T)^{-1}.
pub fn delta_matrix(t: &Tableau, z: Complex64) -> Result<CMatrix> {
    let m = t.stages;
    if (Complex64::ONE - z).norm() < 1e-300 {
        return Err(Error::Domain("delta(z) undefined at z = 1".into()));
    }
    let w = z / (Complex64::ONE - z);
    let mut inner = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            inner[(i, j)] = Complex64::new(t.a[i][j], 0.0) + w * t.b[j];
        }
    }
    inner.inverse().map_err(|_| Error::Singular {
        context: "delta(z)",
        pivot: 0.0,
    })
}

/// Sherman-Morrison form A^{-1} - z A^{-1} 1 b^T A^{-1} / (1 - z R(inf)),
/// an independent algebraic route to the same matrix.
pub fn delta_matrix_rank_one(t: &Tableau, z: Complex64) -> Result<CMatrix> {
    let m = t.stages;
    let denom = Complex64::ONE - z * t.r_infinity;
    if denom.norm() < 1e-300 {
        return Err(Error::Singular {
            context: "delta(z) rank-one form",
            pivot: denom.norm(),
        });
    }
    let ones = vec![Complex64::ONE; m];
    let u = t.a_inv.matvec(&ones); // A^{-1} 1
    let vt: Vec<Complex64> = (0..m)
        .map(|j| {
            (0..m)
                .map(|i| Complex64::new(t.b[i], 0.0) * t.a_inv[(i, j)])
                .sum()
        })
        .collect(); // b^T A^{-1}
    let mut out = t.a_inv.clone();
    let factor = z / denom;
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] -= factor * u[i] * vt[j];
        }
    }
    Ok(out)
}

/// Principal square root of `v0 - i*s`, the scalar exterior wave number.
pub fn scalar_wavenumber(s: Complex64, v0: f64) -> Complex64 {
    (Complex64::new(v0, 0.0) - Complex64::i() * s).sqrt()
}

/// B(z) = sqrt(-(i delta(z)/k - V0)), taken eigenvalue-wise after
/// diagonalizing delta(z); falls back to the resolvent contour when the
/// eigenvector basis is unusable.
pub fn wavenumber_matrix(t: &Tableau, z: Complex64, k: f64, v0: f64) -> Result<CMatrix> {
    let delta = delta_matrix(t, z)?;
    let delta_over_k = delta.scale(Complex64::new(1.0 / k, 0.0));
    matrix_function_scalar(&delta_over_k, |s| scalar_wavenumber(s, v0))
}

/// Circle enclosing the given spectrum, used by the contour fallback.
fn spectral_circle(values: &[Complex64]) -> (Complex64, f64) {
    let n = values.len() as f64;
    let center = values.iter().sum::<Complex64>() / n;
    let maxdist = values
        .iter()
        .fold(0.0f64, |m, v| m.max((v - center).norm()));
    let radius = maxdist + (0.25 * maxdist).max(0.1 * (1.0 + center.norm()));
    (center, radius)
}

/// F(M) for a scalar symbol `f`: diagonalization when the eigenvector
/// condition allows it, trapezoidal Riesz-Dunford contour otherwise.
pub fn matrix_function_scalar(
    m: &CMatrix,
    f: impl Fn(Complex64) -> Complex64,
) -> Result<CMatrix> {
    let eig = eig_small(m)?;
    if eig.is_reliable() {
        return Ok(eig.apply_scalar_function(f));
    }
    matrix_function_contour_scalar(m, &eig.values, f)
}

/// Contour evaluation (1/2 pi i) \oint f(l) (l I - M)^{-1} dl on a circle
/// enclosing the spectrum, `CONTOUR_FALLBACK_NODES` trapezoidal nodes.
pub fn matrix_function_contour_scalar(
    m: &CMatrix,
    spectrum: &[Complex64],
    f: impl Fn(Complex64) -> Complex64,
) -> Result<CMatrix> {
    let dim = m.rows();
    let (center, radius) = spectral_circle(spectrum);
    let n = CONTOUR_FALLBACK_NODES;
    let mut out = CMatrix::zeros(dim, dim);
    for q in 0..n {
        let theta = 2.0 * std::f64::consts::PI * q as f64 / n as f64;
        let e = Complex64::new(theta.cos(), theta.sin());
        let lambda = center + radius * e;
        let mut shifted = m.scale(-Complex64::ONE);
        for i in 0..dim {
            shifted[(i, i)] += lambda;
        }
        let resolvent = shifted.inverse().map_err(|_| Error::Domain(
            "contour node hit the spectrum; matrix function fallback failed".into(),
        ))?;
        let w = f(lambda) * e * (radius / n as f64);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += w * resolvent[(i, j)];
            }
        }
    }
    Ok(out)
}

/// F(M) for an operator-valued symbol: `assemble(s)` yields the dense
/// `rows x cols` operator at the scalar frequency `s`; the result is the
/// `(m*rows) x (m*cols)` stage-block operator.
pub fn matrix_function_operator(
    m: &CMatrix,
    rows: usize,
    cols: usize,
    assemble: &dyn Fn(Complex64) -> Result<CMatrix>,
) -> Result<CMatrix> {
    let dim = m.rows();
    let eig = eig_small(m)?;
    let mut out = CMatrix::zeros(dim * rows, dim * cols);
    if eig.is_reliable() {
        for (i, &li) in eig.values.iter().enumerate() {
            let op = assemble(li)?;
            if op.rows() != rows || op.cols() != cols {
                return Err(Error::Dimension("assemble callback shape mismatch".into()));
            }
            for r in 0..dim {
                for s in 0..dim {
                    let coeff = eig.vectors[(r, i)] * eig.vectors_inv[(i, s)];
                    if coeff.norm() > 0.0 {
                        out.add_block(r * rows, s * cols, coeff, &op);
                    }
                }
            }
        }
        return Ok(out);
    }
    // Resolvent contour: sum_q w_q (lambda_q - M)^{-1} (x) assemble(lambda_q).
    let (center, radius) = spectral_circle(&eig.values);
    let n = CONTOUR_FALLBACK_NODES;
    for q in 0..n {
        let theta = 2.0 * std::f64::consts::PI * q as f64 / n as f64;
        let e = Complex64::new(theta.cos(), theta.sin());
        let lambda = center + radius * e;
        let mut shifted = m.scale(-Complex64::ONE);
        for i in 0..dim {
            shifted[(i, i)] += lambda;
        }
        let resolvent = shifted.inverse().map_err(|_| Error::Domain(
            "contour node hit the spectrum; operator function fallback failed".into(),
        ))?;
        let op = assemble(lambda)?;
        let w = e * (radius / n as f64);
        for r in 0..dim {
            for s in 0..dim {
                let coeff = w * resolvent[(r, s)];
                out.add_block(r * rows, s * cols, coeff, &op);
            }
        }
    }
    Ok(out)
}

/// Contour radius rule lambda = eps^{1/(2(Q+1))} with eps = 2^{-52}.
///
/// This balances the two error sources of the trapezoidal coefficient
/// extraction: aliasing lambda^{Q+1} and round-off amplification
/// lambda^{-n}, both landing at sqrt(eps) relative to the symbol scale.
pub fn contour_radius(q: usize) -> f64 {
    let eps = 2.0f64.powi(-52);
    eps.powf(1.0 / (2.0 * (q as f64 + 1.0)))
}

/// Perturbation-robust variant max(eps^{1/(2(Q+1))}, k^{3/(Q+1)}), intended
/// for operators that themselves carry O(k^3) approximation error (e.g.
/// compressed matrices). Not used by default: the operators here are
/// assembled exactly and this rule caps weight accuracy at k^3. Only
/// meaningful for k < 1; for k >= 1 the k-term would leave the unit disk.
pub fn contour_radius_perturbed(k: f64, q: usize) -> f64 {
    let base = contour_radius(q);
    if k < 1.0 {
        base.max(k.powf(3.0 / (q as f64 + 1.0)))
    } else {
        base
    }
}

/// One evaluation frequency on the contour: delta(z_l)/k and its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct Frequency {
    pub z: Complex64,
    pub delta_over_k: CMatrix,
    pub eig: EigenDecomposition,
}

impl Frequency {
    /// The matrix wave number B(z_l) at this frequency.
    pub fn wavenumber(&self, v0: f64) -> Result<CMatrix> {
        if self.eig.is_reliable() {
            Ok(self
                .eig
                .apply_scalar_function(|s| scalar_wavenumber(s, v0)))
        } else {
            matrix_function_contour_scalar(&self.delta_over_k, &self.eig.values, |s| {
                scalar_wavenumber(s, v0)
            })
        }
    }

    /// Scalar wave numbers at the eigenvalues of delta(z_l)/k.
    pub fn scalar_wavenumbers(&self, v0: f64) -> Vec<Complex64> {
        self.eig
            .values
            .iter()
            .map(|&s| scalar_wavenumber(s, v0))
            .collect()
    }
}

/// Time-stepping context for the operational calculus: step size, contour
/// parameters and the evaluation frequencies delta(lambda zeta^{-l})/k.
#[derive(Debug, Clone)]
pub struct CqContext {
    pub tableau: Tableau,
    pub k: f64,
    pub n_steps: usize,
    pub q: usize,
    pub lambda: f64,
    pub v0: f64,
    pub frequencies: Vec<Frequency>,
}

impl CqContext {
    /// `q_override` defaults to Q = N.
    pub fn new(
        tableau: Tableau,
        k: f64,
        n_steps: usize,
        q_override: Option<usize>,
        v0: f64,
    ) -> Result<Self> {
        if k <= 0.0 || !k.is_finite() {
            return Err(Error::Config(format!("time step k = {k} must be positive")));
        }
        let q = q_override.unwrap_or(n_steps);
        if q < n_steps {
            return Err(Error::Config(format!(
                "contour node count Q = {q} must be at least N = {n_steps}"
            )));
        }
        let lambda = contour_radius(q);
        debug_assert!(lambda > 0.0 && lambda < 1.0);
        let frequencies = (0..=q)
            .map(|l| {
                let angle = -2.0 * std::f64::consts::PI * l as f64 / (q as f64 + 1.0);
                let z = lambda * Complex64::new(angle.cos(), angle.sin());
                let delta_over_k = delta_matrix(&tableau, z)?.scale(Complex64::new(1.0 / k, 0.0));
                let eig = eig_small(&delta_over_k)?;
                Ok(Frequency {
                    z,
                    delta_over_k,
                    eig,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tableau,
            k,
            n_steps,
            q,
            lambda,
            v0,
            frequencies,
        })
    }

    pub fn stages(&self) -> usize {
        self.tableau.stages
    }
}

/// A labelled holomorphic scalar symbol s -> F(s).
pub struct ScalarSymbol {
    pub label: String,
    pub eval: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
}

impl ScalarSymbol {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Box::new(eval),
        }
    }
}

/// Whether a scalar symbol acts on the frequency variable directly or is
/// composed with the exterior wave number first. Composition is the default
/// convention of the calculus here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolMode {
    /// F applied to delta(z)/k.
    Direct,
    /// F applied to B(z) = sqrt(-(i delta(z)/k - V0)).
    ComposedWithWavenumber,
}

/// Convolution weights W^0..W^N of a symbol; each weight is an m x m matrix.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    pub label: String,
    pub weights: Vec<CMatrix>,
}

impl WeightSequence {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weights of a scalar symbol via the contour trapezoidal rule.
pub fn cq_weights(ctx: &CqContext, symbol: &ScalarSymbol, mode: SymbolMode) -> Result<WeightSequence> {
    let m = ctx.stages();
    let entry_count = m * m;
    let samples: Vec<CMatrix> = ctx
        .frequencies
        .iter()
        .map(|fr| -> Result<CMatrix> {
            match mode {
                SymbolMode::Direct => {
                    if fr.eig.is_reliable() {
                        Ok(fr.eig.apply_scalar_function(|s| (symbol.eval)(s)))
                    } else {
                        matrix_function_contour_scalar(&fr.delta_over_k, &fr.eig.values, |s| {
                            (symbol.eval)(s)
                        })
                    }
                }
                SymbolMode::ComposedWithWavenumber => {
                    if fr.eig.is_reliable() {
                        Ok(fr
                            .eig
                            .apply_scalar_function(|s| (symbol.eval)(scalar_wavenumber(s, ctx.v0))))
                    } else {
                        matrix_function_contour_scalar(&fr.delta_over_k, &fr.eig.values, |s| {
                            (symbol.eval)(scalar_wavenumber(s, ctx.v0))
                        })
                    }
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut stack = vec![Complex64::ZERO; (ctx.q + 1) * entry_count];
    for (l, s) in samples.iter().enumerate() {
        stack[l * entry_count..(l + 1) * entry_count].copy_from_slice(s.data());
    }
    inverse_contour_stack(&mut stack, ctx.q + 1, entry_count, ctx.lambda);

    let weights = (0..=ctx.n_steps)
        .map(|n| {
            let slice = &stack[n * entry_count..(n + 1) * entry_count];
            CMatrix::from_fn(m, m, |i, j| slice[i * m + j])
        })
        .collect();
    Ok(WeightSequence {
        label: symbol.label.clone(),
        weights,
    })
}

/// (F(d_t^k) g)_n = sum_{j=0}^{n} W^{n-j} g_j.
pub fn cq_apply(weights: &WeightSequence, history: &[Vec<Complex64>], n: usize) -> Result<Vec<Complex64>> {
    if history.len() <= n {
        return Err(Error::Dimension(format!(
            "cq_apply: history has {} entries, need {}",
            history.len(),
            n + 1
        )));
    }
    if n >= weights.len() {
        return Err(Error::Dimension(format!(
            "cq_apply: weight sequence has {} entries, need {}",
            weights.len(),
            n + 1
        )));
    }
    let dim = weights.weights[0].rows();
    let mut out = vec![Complex64::ZERO; dim];
    for j in 0..=n {
        let w = &weights.weights[n - j];
        w.matvec_acc(Complex64::ONE, &history[j], &mut out);
    }
    Ok(out)
}

/// Solve the stage-coupled system (-i A^{-1} (x) M + k I (x) H) U = rhs by
/// diagonalizing -i A^{-1}: `solve_scalar(nu, y)` must solve
/// (nu M + k H) x = y for the scalar stage frequency `nu`.
///
/// `rhs` and the result are stage-major (m blocks of length n). Fails with
/// [`Error::Defective`] when A^{-1} cannot be diagonalized reliably; the
/// caller then falls back to a direct coupled solve.
pub fn decouple_stages(
    t: &Tableau,
    rhs: &[Complex64],
    solve_scalar: &(dyn Fn(Complex64, &[Complex64]) -> Result<Vec<Complex64>> + Sync),
) -> Result<Vec<Complex64>> {
    let m = t.stages;
    if rhs.len() % m != 0 {
        return Err(Error::Dimension(format!(
            "decouple_stages: rhs length {} not divisible by {m}",
            rhs.len()
        )));
    }
    let n = rhs.len() / m;
    let eig = eig_small(&t.a_inv)?;
    if !eig.is_reliable() {
        return Err(Error::Defective {
            cond: eig.condition,
            limit: DEFECTIVE_CONDITION_LIMIT,
        });
    }
    // -i A^{-1} = T diag(-i w_i) T^{-1} with A^{-1} = T diag(w_i) T^{-1}.
    let transformed: Vec<Vec<Complex64>> = par::par_map(m, |i| {
        let mut block = vec![Complex64::ZERO; n];
        for j in 0..m {
            let coeff = eig.vectors_inv[(i, j)];
            if coeff.norm() == 0.0 {
                continue;
            }
            for (bi, ri) in block.iter_mut().zip(&rhs[j * n..(j + 1) * n]) {
                *bi += coeff * ri;
            }
        }
        block
    });
    let solved: Vec<Vec<Complex64>> = transformed
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let nu = -Complex64::i() * eig.values[i];
            solve_scalar(nu, block)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Complex64::ZERO; m * n];
    for i in 0..m {
        for j in 0..m {
            let coeff = eig.vectors[(i, j)];
            if coeff.norm() == 0.0 {
                continue;
            }
            for (o, s) in out[i * n..(i + 1) * n].iter_mut().zip(&solved[j]) {
                *o += coeff * s;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{builtin_tableau, builtin_tableau_by_name, TableauKind, BUILTIN_NAMES};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn delta_at_zero_is_a_inverse() {
        for name in BUILTIN_NAMES {
            let t = builtin_tableau_by_name(name).unwrap();
            let d = delta_matrix(&t, Complex64::ZERO).unwrap();
            assert!(d.sub(&t.a_inv).norm() < 1e-12, "{name}");
        }
    }

    #[test]
    fn delta_backward_euler_closed_form() {
        // For the one-stage Radau method delta(z) = 1 - z.
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let d = delta_matrix(&t, c(0.5, 0.0)).unwrap();
        assert!((d[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        let d = delta_matrix(&t, c(0.3, -0.2)).unwrap();
        assert!((d[(0, 0)] - c(0.7, 0.2)).norm() < 1e-14);
    }

    #[test]
    fn delta_agrees_with_rank_one_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for name in BUILTIN_NAMES {
            let t = builtin_tableau_by_name(name).unwrap();
            for _ in 0..200 {
                let r = rng.gen_range(0.0..0.99);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                let z = r * c(phi.cos(), phi.sin());
                let d1 = delta_matrix(&t, z).unwrap();
                let d2 = delta_matrix_rank_one(&t, z).unwrap();
                let rel = d1.sub(&d2).norm() / d1.norm();
                assert!(rel <= 1e-12, "{name} z={z}: rel {rel:.3e}");
            }
        }
    }

    #[test]
    fn delta_spectrum_in_right_half_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for name in BUILTIN_NAMES {
            let t = builtin_tableau_by_name(name).unwrap();
            for _ in 0..1000 {
                let r = rng.gen_range(0.0..=0.99);
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                let z = r * c(phi.cos(), phi.sin());
                let d = delta_matrix(&t, z).unwrap();
                let eig = eig_small(&d).unwrap();
                for v in &eig.values {
                    assert!(v.re > 0.0, "{name}: sigma(delta({z})) contains {v}");
                }
            }
        }
    }

    #[test]
    fn wavenumber_principal_root_of_minus_i() {
        // One stage, k=1, V0=0, z=0: B = sqrt(-i) = exp(-i pi/4).
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let b = wavenumber_matrix(&t, Complex64::ZERO, 1.0, 0.0).unwrap();
        let want = c(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2);
        assert!((b[(0, 0)] - want).norm() < 1e-14);
    }

    #[test]
    fn wavenumber_square_reconstructs_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for name in BUILTIN_NAMES {
            let t = builtin_tableau_by_name(name).unwrap();
            for &v0 in &[0.0, 1.0] {
                for _ in 0..50 {
                    let r = rng.gen_range(0.0..0.95);
                    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                    let z = r * c(phi.cos(), phi.sin());
                    let k = rng.gen_range(0.01..0.5);
                    let b = wavenumber_matrix(&t, z, k, v0).unwrap();
                    let delta = delta_matrix(&t, z).unwrap();
                    let mut arg = delta.scale(c(0.0, -1.0 / k));
                    for i in 0..t.stages {
                        arg[(i, i)] += v0;
                    }
                    let rel = b.matmul(&b).sub(&arg).norm() / arg.norm();
                    assert!(rel <= 1e-10, "{name} v0={v0}: rel {rel:.3e}");
                }
            }
        }
    }

    #[test]
    fn wavenumber_spectrum_has_positive_real_part() {
        // gauss1, z=0, k=0.1: delta(0)/k = 20, argument -20i, principal
        // square root lies in the right half-plane.
        let t = builtin_tableau(TableauKind::Gauss1).unwrap();
        let b = wavenumber_matrix(&t, Complex64::ZERO, 0.1, 0.0).unwrap();
        let eig = eig_small(&b).unwrap();
        for v in &eig.values {
            assert!(v.re > 0.0);
        }
        assert!((b[(0, 0)] * b[(0, 0)] - c(0.0, -20.0)).norm() < 1e-10);
    }

    #[test]
    fn matrix_function_identity_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let m = CMatrix::from_fn(3, 3, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let f = matrix_function_scalar(&m, |s| s).unwrap();
            assert!(f.sub(&m).norm() <= 1e-10 * m.norm());
        }
    }

    #[test]
    fn matrix_function_square_upper_triangular() {
        let m = CMatrix::from_real_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        let f = matrix_function_scalar(&m, |s| s * s).unwrap();
        let want = CMatrix::from_real_rows(&[vec![4.0, 5.0], vec![0.0, 9.0]]);
        assert!(f.sub(&want).norm() < 1e-12);
    }

    #[test]
    fn matrix_function_inverse_diagonal() {
        let m = CMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let f = matrix_function_scalar(&m, |s| s.inv()).unwrap();
        assert!((f[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((f[(1, 1)] - c(0.25, 0.0)).norm() < 1e-14);
        assert!(f[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn matrix_function_contour_matches_eig_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            // Right-half-plane spectrum keeps sqrt well-defined on the contour.
            let mut m = CMatrix::from_fn(2, 2, |_, _| {
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
            });
            for i in 0..2 {
                m[(i, i)] += c(2.0, 0.0);
            }
            let eig = eig_small(&m).unwrap();
            let by_eig = eig.apply_scalar_function(|s| s.sqrt());
            let by_contour =
                matrix_function_contour_scalar(&m, &eig.values, |s| s.sqrt()).unwrap();
            let rel = by_eig.sub(&by_contour).norm() / by_eig.norm();
            assert!(rel <= 1e-8, "rel {rel:.3e}");
        }
    }

    #[test]
    fn matrix_function_contour_handles_defective() {
        // Jordan block: diagonalization impossible, contour is exact.
        let m = CMatrix::from_real_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]);
        let f = matrix_function_contour_scalar(&m, &[c(2.0, 0.0), c(2.0, 0.0)], |s| s * s).unwrap();
        let want = CMatrix::from_real_rows(&[vec![4.0, 4.0], vec![0.0, 4.0]]);
        assert!(f.sub(&want).norm() < 1e-9, "err {}", f.sub(&want).norm());
    }

    #[test]
    fn sqrt_then_square_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut done = 0;
        while done < 100 {
            let n = rng.gen_range(1..=3);
            let mut m = CMatrix::from_fn(n, n, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            for i in 0..n {
                m[(i, i)] += c(3.0, 0.0); // push spectrum into Re > 0
            }
            let eig = eig_small(&m).unwrap();
            if !eig.is_reliable() || eig.values.iter().any(|v| v.re <= 0.1) {
                continue;
            }
            let r = matrix_function_scalar(&m, |s| s.sqrt()).unwrap();
            let rel = r.matmul(&r).sub(&m).norm() / m.norm();
            assert!(rel <= 1e-10, "rel {rel:.3e}");
            done += 1;
        }
    }

    /// Truncated power-series arithmetic: the independent route to CQ
    /// weights for one-stage methods, via long division of the rational
    /// symbol evaluated at delta(z)/k.
    pub(super) struct Series(pub Vec<Complex64>);

    impl Series {
        /// delta(z)/k = (1 - z) / (k a + k (b - a) z) for a one-stage method.
        pub(super) fn delta_over_k(a: f64, b: f64, k: f64, len: usize) -> Series {
            let num = [c(1.0, 0.0), c(-1.0, 0.0)];
            let den = [c(k * a, 0.0), c(k * (b - a), 0.0)];
            let mut out = vec![Complex64::ZERO; len];
            for n in 0..len {
                let mut acc = if n < 2 { num[n] } else { Complex64::ZERO };
                if n >= 1 {
                    acc -= den[1] * out[n - 1];
                }
                out[n] = acc / den[0];
            }
            Series(out)
        }

        pub(super) fn square(&self) -> Series {
            let n = self.0.len();
            let mut out = vec![Complex64::ZERO; n];
            for i in 0..n {
                for j in 0..n - i {
                    out[i + j] += self.0[i] * self.0[j];
                }
            }
            Series(out)
        }

        pub(super) fn reciprocal(&self) -> Series {
            let n = self.0.len();
            let mut out = vec![Complex64::ZERO; n];
            out[0] = self.0[0].inv();
            for k in 1..n {
                let mut acc = Complex64::ZERO;
                for j in 1..=k {
                    acc += self.0[j] * out[k - j];
                }
                out[k] = -acc / self.0[0];
            }
            Series(out)
        }
    }

    #[test]
    fn weights_backward_difference() {
        // F(s) = s, one-stage Radau, k = 0.1: F(delta(z)/k) = (1-z)/k.
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let ctx = CqContext::new(t, 0.1, 8, None, 0.0).unwrap();
        let sym = ScalarSymbol::new("s", |s| s);
        let w = cq_weights(&ctx, &sym, SymbolMode::Direct).unwrap();
        // Contour extraction carries a sqrt(eps)-scale noise floor.
        assert!((w.weights[0][(0, 0)] - c(10.0, 0.0)).norm() < 1e-7);
        assert!((w.weights[1][(0, 0)] - c(-10.0, 0.0)).norm() < 1e-7);
        for n in 2..=8 {
            assert!(w.weights[n][(0, 0)].norm() < 1e-7, "n={n}");
        }
    }

    #[test]
    fn weights_constant_symbol() {
        let t = builtin_tableau(TableauKind::RadauIIA2).unwrap();
        let ctx = CqContext::new(t, 0.05, 6, None, 0.0).unwrap();
        let sym = ScalarSymbol::new("1", |_| Complex64::ONE);
        let w = cq_weights(&ctx, &sym, SymbolMode::Direct).unwrap();
        assert!(w.weights[0].sub(&CMatrix::identity(2)).norm() < 1e-8);
        for n in 1..=6 {
            assert!(w.weights[n].norm() < 1e-8);
        }
    }

    #[test]
    fn weights_integration_symbol() {
        // F(s) = 1/s, one-stage Radau, k = 1: 1/(1-z) = sum z^n, all ones.
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let ctx = CqContext::new(t, 1.0, 10, None, 0.0).unwrap();
        let sym = ScalarSymbol::new("1/s", |s| s.inv());
        let w = cq_weights(&ctx, &sym, SymbolMode::Direct).unwrap();
        // Weights of 1/(1-z) do not decay, so the aliasing term sits exactly
        // at lambda^{Q+1} = sqrt(eps) ~ 1.5e-8.
        for n in 0..=10 {
            assert!(
                (w.weights[n][(0, 0)] - Complex64::ONE).norm() < 5e-8,
                "n={n}: {}",
                w.weights[n][(0, 0)]
            );
        }
    }

    #[test]
    fn weights_match_taylor_oracle() {
        // FFT-contour weights vs exact series coefficients. The achievable
        // accuracy is governed by two error sources: round-off amplified by
        // lambda^{-n} (grows with n) and aliasing lambda^{Q+1} |W^{n+Q+1}|.
        // For radau_iia_1 all three probe symbols have decaying weights and
        // the early coefficients come out at 1e-8; for gauss1 the symbol has
        // a pole at z = -1, |W^n(s)| = 4/k does not decay, and aliasing
        // floors the error at sqrt(eps)*4/k ~ 1.2e-6 for every n.
        let n_steps = 64;
        let k = 0.05;

        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let ctx = CqContext::new(t, k, n_steps, None, 0.0).unwrap();
        let base = Series::delta_over_k(1.0, 1.0, k, 2 * n_steps);
        let cases: Vec<(ScalarSymbol, Series)> = vec![
            (ScalarSymbol::new("s", |s| s), Series(base.0.clone())),
            (ScalarSymbol::new("s^2", |s| s * s), base.square()),
            (ScalarSymbol::new("1/s", |s| s.inv()), base.reciprocal()),
        ];
        for (sym, exact) in cases {
            let w = cq_weights(&ctx, &sym, SymbolMode::Direct).unwrap();
            for n in 0..=32 {
                let got = w.weights[n][(0, 0)];
                let diff = (got - exact.0[n]).norm();
                assert!(
                    diff <= 1e-8,
                    "radau_iia_1 {}: n={n} got {got} want {} diff {diff:.3e}",
                    sym.label,
                    exact.0[n]
                );
            }
        }

        let t = builtin_tableau(TableauKind::Gauss1).unwrap();
        let ctx = CqContext::new(t, k, n_steps, None, 0.0).unwrap();
        let base = Series::delta_over_k(0.5, 1.0, k, 2 * n_steps);
        let w = cq_weights(&ctx, &ScalarSymbol::new("1/s", |s| s.inv()), SymbolMode::Direct).unwrap();
        let exact = base.reciprocal();
        for n in 0..=32 {
            let diff = (w.weights[n][(0, 0)] - exact.0[n]).norm();
            assert!(diff <= 1e-8, "gauss1 1/s: n={n} diff {diff:.3e}");
        }
        let w = cq_weights(&ctx, &ScalarSymbol::new("s", |s| s), SymbolMode::Direct).unwrap();
        for n in 0..=32 {
            let diff = (w.weights[n][(0, 0)] - base.0[n]).norm();
            assert!(diff <= 4e-6, "gauss1 s: n={n} diff {diff:.3e}");
        }
    }

    #[test]
    fn apply_identity_weights() {
        let weights = WeightSequence {
            label: "id".into(),
            weights: vec![
                CMatrix::identity(2),
                CMatrix::zeros(2, 2),
                CMatrix::zeros(2, 2),
            ],
        };
        let hist = vec![
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 1.0), c(-1.0, 0.5)],
        ];
        let out = cq_apply(&weights, &hist, 1).unwrap();
        assert!((out[0] - hist[1][0]).norm() < 1e-15);
        assert!((out[1] - hist[1][1]).norm() < 1e-15);
    }

    #[test]
    fn apply_discrete_derivative_of_ramp() {
        // Backward difference weights on g_j = j*k: result 1 for n >= 1.
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let k = 0.25;
        let ctx = CqContext::new(t, k, 8, None, 0.0).unwrap();
        let sym = ScalarSymbol::new("s", |s| s);
        let w = cq_weights(&ctx, &sym, SymbolMode::Direct).unwrap();
        let hist: Vec<Vec<Complex64>> = (0..=8).map(|j| vec![c(j as f64 * k, 0.0)]).collect();
        for n in 1..=8 {
            let out = cq_apply(&w, &hist, n).unwrap();
            assert!((out[0] - Complex64::ONE).norm() < 1e-6, "n={n}: {}", out[0]);
        }
    }

    #[test]
    fn apply_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let m = 2usize;
        let n_steps = 12usize;
        let weights = WeightSequence {
            label: "random".into(),
            weights: (0..=n_steps)
                .map(|_| {
                    CMatrix::from_fn(m, m, |_, _| {
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                })
                .collect(),
        };
        let hist: Vec<Vec<Complex64>> = (0..=n_steps)
            .map(|_| {
                (0..m)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        for n in 0..=n_steps {
            let got = cq_apply(&weights, &hist, n).unwrap();
            // Independent double loop.
            let mut want = vec![Complex64::ZERO; m];
            for j in 0..=n {
                for r in 0..m {
                    for s in 0..m {
                        want[r] += weights.weights[n - j][(r, s)] * hist[j][s];
                    }
                }
            }
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn z_transform_compatibility() {
        // Truncated power series of the weighted sequence equals
        // F(delta(z)/k) * ghat(z) at sample points on |z| = 0.3.
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for kind in [TableauKind::RadauIIA1, TableauKind::Gauss1] {
            let t = builtin_tableau(kind).unwrap();
            let k = 0.1;
            let n_steps = 26;
            let ctx = CqContext::new(t, k, n_steps, None, 0.0).unwrap();
            let sym = ScalarSymbol::new("1/s", |s| s.inv());
            let w = cq_weights(&ctx, &sym, SymbolMode::Direct).unwrap();
            // Random finite sequence with 8 nonzero terms.
            let g: Vec<Vec<Complex64>> = (0..=n_steps)
                .map(|j| {
                    vec![if j < 8 {
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::ZERO
                    }]
                })
                .collect();
            let conv: Vec<Complex64> = (0..=n_steps)
                .map(|n| cq_apply(&w, &g, n).unwrap()[0])
                .collect();
            for p in 0..10 {
                let phi = std::f64::consts::TAU * p as f64 / 10.0;
                let z = 0.3 * c(phi.cos(), phi.sin());
                let lhs: Complex64 = conv
                    .iter()
                    .enumerate()
                    .map(|(n, h)| h * z.powu(n as u32))
                    .sum();
                let ghat: Complex64 = g
                    .iter()
                    .enumerate()
                    .map(|(n, gn)| gn[0] * z.powu(n as u32))
                    .sum();
                let f_of_delta = delta_matrix(&builtin_tableau(kind).unwrap(), z)
                    .unwrap()
                    .scale(c(1.0 / k, 0.0))[(0, 0)]
                    .inv();
                let rhs = f_of_delta * ghat;
                assert!(
                    (lhs - rhs).norm() <= 1e-6,
                    "{}: z={z} lhs {lhs} rhs {rhs}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn decouple_single_stage_is_plain_solve() {
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        let rhs = vec![c(2.0, -1.0)];
        // System (-i * 1 + k H) u = rhs with M = 1, k H = 3.
        let out = decouple_stages(&t, &rhs, &|nu, y| {
            Ok(vec![y[0] / (nu + c(3.0, 0.0))])
        })
        .unwrap();
        let want = rhs[0] / (c(3.0, 0.0) - Complex64::i());
        assert!((out[0] - want).norm() < 1e-14);
    }

    #[test]
    fn decouple_matches_dense_solve() {
        // Diagonal H on 2 DOF with the 2-stage Radau method vs a direct
        // 4x4 dense solve of the Kronecker system.
        use crate::linalg::kron;
        let t = builtin_tableau(TableauKind::RadauIIA2).unwrap();
        let k = 0.2;
        let h = CMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]);
        let mass = CMatrix::identity(2);
        let rhs: Vec<Complex64> = vec![c(1.0, 0.5), c(-0.25, 1.0), c(0.75, 0.0), c(0.0, -2.0)];

        let got = decouple_stages(&t, &rhs, &|nu, y| {
            let mut sys = h.scale(c(k, 0.0));
            for i in 0..2 {
                sys[(i, i)] += nu * mass[(i, i)];
            }
            sys.lu()?.solve(y)
        })
        .unwrap();

        let minus_i_ainv = t.a_inv.scale(c(0.0, -1.0));
        let sys = kron(&minus_i_ainv, &mass).add(&kron(&CMatrix::identity(2), &h.scale(c(k, 0.0))));
        let want = sys.lu().unwrap().solve(&rhs).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() <= 1e-12, "{g} vs {w}");
        }

        // Residual of the coupled system.
        let res: Vec<Complex64> = sys
            .matvec(&got)
            .iter()
            .zip(&rhs)
            .map(|(a, b)| a - b)
            .collect();
        let rel = crate::linalg::vec_norm(&res) / crate::linalg::vec_norm(&rhs);
        assert!(rel <= 1e-9);
    }

    #[test]
    fn decouple_zero_rhs_gives_zero() {
        let t = builtin_tableau(TableauKind::RadauIIA2).unwrap();
        let rhs = vec![Complex64::ZERO; 6];
        let out = decouple_stages(&t, &rhs, &|nu, y| {
            Ok(y.iter().map(|v| v / (nu + c(1.0, 0.0))).collect())
        })
        .unwrap();
        assert!(crate::linalg::vec_norm(&out) == 0.0);
    }

    #[test]
    fn context_validates_parameters() {
        let t = builtin_tableau(TableauKind::Gauss1).unwrap();
        assert!(CqContext::new(t.clone(), -1.0, 4, None, 0.0).is_err());
        assert!(CqContext::new(t.clone(), 0.1, 8, Some(4), 0.0).is_err());
        let ctx = CqContext::new(t, 0.1, 8, None, 0.0).unwrap();
        assert_eq!(ctx.q, 8);
        assert!(ctx.lambda > 0.0 && ctx.lambda < 1.0);
        assert_eq!(ctx.frequencies.len(), 9);
        for f in &ctx.frequencies {
            for v in &f.eig.values {
                assert!(v.re > 0.0);
            }
        }
    }

    #[test]
    fn contour_radius_stays_inside_unit_disk() {
        for &q in &[0usize, 4, 16, 64, 256] {
            let l = contour_radius(q);
            assert!(l > 0.0 && l < 1.0, "q={q}: lambda={l}");
        }
        for &(k, q) in &[(0.001, 4usize), (0.5, 64), (1.0, 16), (10.0, 8)] {
            let l = contour_radius_perturbed(k, q);
            assert!(l > 0.0 && l < 1.0, "k={k} q={q}: lambda={l}");
        }
    }
}
