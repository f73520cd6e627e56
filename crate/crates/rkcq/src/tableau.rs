//! Butcher tableaus of the A-stable implicit Runge-Kutta methods used by the
//! time stepper, together with their derived stability quantities.
//!
//! All built-in tableaus have invertible `A` and spectrum of `A` in the open
//! right half-plane. Coefficients are validated at construction against the
//! collocation order conditions, so transcription errors fail loudly instead
//! of silently degrading convergence orders.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_small, CMatrix};

/// Built-in method names accepted by configs and the CLI.
pub const BUILTIN_NAMES: [&str; 5] = ["gauss1", "gauss2", "radau_iia_1", "radau_iia_2", "radau_iia_3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableauKind {
    Gauss1,
    Gauss2,
    RadauIIA1,
    RadauIIA2,
    RadauIIA3,
}

impl TableauKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gauss1" => Ok(Self::Gauss1),
            "gauss2" => Ok(Self::Gauss2),
            "radau_iia_1" => Ok(Self::RadauIIA1),
            "radau_iia_2" => Ok(Self::RadauIIA2),
            "radau_iia_3" => Ok(Self::RadauIIA3),
            other => Err(Error::Config(format!(
                "unknown tableau '{other}'; expected one of {BUILTIN_NAMES:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gauss1 => "gauss1",
            Self::Gauss2 => "gauss2",
            Self::RadauIIA1 => "radau_iia_1",
            Self::RadauIIA2 => "radau_iia_2",
            Self::RadauIIA3 => "radau_iia_3",
        }
    }
}

/// An m-stage Runge-Kutta method (A, b, c) with derived quantities.
#[derive(Debug, Clone)]
pub struct Tableau {
    pub name: &'static str,
    pub stages: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
    pub stage_order: usize,
    /// A^{-1}
    pub a_inv: CMatrix,
    /// R(inf) = 1 - b^T A^{-1} 1
    pub r_infinity: Complex64,
    /// d = -i A^{-1} 1
    pub d: Vec<Complex64>,
    /// b^T A^{-1}
    pub bt_a_inv: Vec<f64>,
    pub stiffly_accurate: bool,
}

/// Construct a built-in tableau by name.
pub fn builtin_tableau(kind: TableauKind) -> Result<Tableau> {
    let s3 = 3.0f64.sqrt();
    let s6 = 6.0f64.sqrt();
    let (name, a, b, c, order, stage_order) = match kind {
        TableauKind::RadauIIA1 => (
            "radau_iia_1",
            vec![vec![1.0]],
            vec![1.0],
            vec![1.0],
            1usize,
            1usize,
        ),
        TableauKind::Gauss1 => (
            "gauss1",
            vec![vec![0.5]],
            vec![1.0],
            vec![0.5],
            2,
            1,
        ),
        TableauKind::RadauIIA2 => (
            "radau_iia_2",
            vec![vec![5.0 / 12.0, -1.0 / 12.0], vec![3.0 / 4.0, 1.0 / 4.0]],
            vec![3.0 / 4.0, 1.0 / 4.0],
            vec![1.0 / 3.0, 1.0],
            3,
            2,
        ),
        TableauKind::Gauss2 => (
            "gauss2",
            vec![
                vec![0.25, 0.25 - s3 / 6.0],
                vec![0.25 + s3 / 6.0, 0.25],
            ],
            vec![0.5, 0.5],
            vec![0.5 - s3 / 6.0, 0.5 + s3 / 6.0],
            4,
            2,
        ),
        TableauKind::RadauIIA3 => (
            "radau_iia_3",
            vec![
                vec![
                    (88.0 - 7.0 * s6) / 360.0,
                    (296.0 - 169.0 * s6) / 1800.0,
                    (-2.0 + 3.0 * s6) / 225.0,
                ],
                vec![
                    (296.0 + 169.0 * s6) / 1800.0,
                    (88.0 + 7.0 * s6) / 360.0,
                    (-2.0 - 3.0 * s6) / 225.0,
                ],
                vec![(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
            ],
            vec![(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
            vec![(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
            5,
            3,
        ),
    };
    Tableau::new(name, a, b, c, order, stage_order)
}

pub fn builtin_tableau_by_name(name: &str) -> Result<Tableau> {
    builtin_tableau(TableauKind::parse(name)?)
}

impl Tableau {
    fn new(
        name: &'static str,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        order: usize,
        stage_order: usize,
    ) -> Result<Self> {
        let m = b.len();
        let a_mat = CMatrix::from_real_rows(&a);
        let a_inv = a_mat.inverse().map_err(|_| {
            Error::Config(format!("tableau {name}: coefficient matrix is singular"))
        })?;
        let det = a_mat.lu()?.determinant();
        if det.norm() <= 1e-14 {
            return Err(Error::Config(format!("tableau {name}: |det A| too small")));
        }

        let ones = vec![Complex64::ONE; m];
        let a_inv_ones = a_inv.matvec(&ones);
        let bt_a_inv: Vec<f64> = (0..m)
            .map(|j| (0..m).map(|i| b[i] * a_inv[(i, j)].re).sum())
            .collect();
        let r_inf = Complex64::ONE
            - b.iter()
                .zip(&a_inv_ones)
                .map(|(bi, v)| bi * v)
                .sum::<Complex64>();
        let d: Vec<Complex64> = a_inv_ones
            .iter()
            .map(|v| -Complex64::i() * v)
            .collect();
        let stiffly_accurate = (0..m).all(|j| (a[m - 1][j] - b[j]).abs() <= 1e-13);

        let t = Self {
            name,
            stages: m,
            a,
            b,
            c,
            order,
            stage_order,
            a_inv,
            r_infinity: r_inf,
            d,
            bt_a_inv,
            stiffly_accurate,
        };
        t.validate()?;
        Ok(t)
    }

    /// Consistency, order-condition, spectrum and A-stability gates, run at
    /// load for every built-in tableau.
    fn validate(&self) -> Result<()> {
        let m = self.stages;
        let fail = |msg: String| Err(Error::Config(format!("tableau {}: {msg}", self.name)));

        // Row sums of A equal c.
        for i in 0..m {
            let row: f64 = self.a[i].iter().sum();
            if (row - self.c[i]).abs() > 1e-13 {
                return fail(format!("row sum {i} = {row} != c_{i} = {}", self.c[i]));
            }
        }
        // Order conditions b^T c^{j-1} = 1/j for j = 1..=order.
        for j in 1..=self.order {
            let lhs: f64 = self
                .b
                .iter()
                .zip(&self.c)
                .map(|(bi, ci)| bi * ci.powi(j as i32 - 1))
                .sum();
            if (lhs - 1.0 / j as f64).abs() > 1e-12 {
                return fail(format!("order condition j={j}: {lhs} != 1/{j}"));
            }
        }
        // Spectrum of A in the open right half-plane.
        let eig = eig_small(&CMatrix::from_real_rows(&self.a))?;
        for v in &eig.values {
            if v.re <= 0.0 {
                return fail(format!("eigenvalue {v} of A not in right half-plane"));
            }
        }
        // Sampled A-stability on the imaginary axis.
        let mut t = -1000.0;
        while t <= 1000.0 {
            let z = Complex64::new(0.0, t);
            let r = self.stability_function(z)?;
            if r.norm() > 1.0 + 1e-12 {
                return fail(format!("|R({z})| = {} > 1", r.norm()));
            }
            t += 2.0;
        }
        Ok(())
    }

    /// R(z) = 1 + z b^T (I - zA)^{-1} 1.
    pub fn stability_function(&self, z: Complex64) -> Result<Complex64> {
        let m = self.stages;
        let mut sys = CMatrix::identity(m);
        for i in 0..m {
            for j in 0..m {
                sys[(i, j)] -= z * self.a[i][j];
            }
        }
        let ones = vec![Complex64::ONE; m];
        let x = sys.lu().map_err(|_| Error::Pole(z))?.solve(&ones)?;
        let dot: Complex64 = self.b.iter().zip(&x).map(|(bi, xi)| bi * xi).sum();
        Ok(Complex64::ONE + z * dot)
    }

    /// Alternative form R(inf) + b^T A^{-1} (I - zA)^{-1} 1, used as a
    /// cross-check of the primary form.
    pub fn stability_function_alt(&self, z: Complex64) -> Result<Complex64> {
        let m = self.stages;
        let mut sys = CMatrix::identity(m);
        for i in 0..m {
            for j in 0..m {
                sys[(i, j)] -= z * self.a[i][j];
            }
        }
        let ones = vec![Complex64::ONE; m];
        let x = sys.lu().map_err(|_| Error::Pole(z))?.solve(&ones)?;
        let dot: Complex64 = self.bt_a_inv.iter().zip(&x).map(|(bi, xi)| bi * xi).sum();
        Ok(self.r_infinity + dot)
    }

    /// Step update u^{n+1} = R(inf) u^n + b^T A^{-1} U^n applied blockwise to
    /// stage data laid out stage-major.
    pub fn step_update(&self, u: &[Complex64], stages: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        assert_eq!(stages.len(), self.stages * n);
        let mut next: Vec<Complex64> = u.iter().map(|v| self.r_infinity * v).collect();
        for s in 0..self.stages {
            let w = self.bt_a_inv[s];
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                next[i] += w * stages[s * n + i];
            }
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_tableaus_load_and_validate() {
        for name in BUILTIN_NAMES {
            let t = builtin_tableau_by_name(name).unwrap();
            assert_eq!(t.name, name);
        }
    }

    #[test]
    fn radau1_is_backward_euler() {
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        assert_eq!(t.a, vec![vec![1.0]]);
        assert_eq!(t.b, vec![1.0]);
        assert_eq!(t.c, vec![1.0]);
        assert!(t.stiffly_accurate);
    }

    #[test]
    fn gauss1_is_implicit_midpoint() {
        let t = builtin_tableau(TableauKind::Gauss1).unwrap();
        assert_eq!(t.a, vec![vec![0.5]]);
        assert_eq!(t.b, vec![1.0]);
        assert_eq!(t.c, vec![0.5]);
        assert!(!t.stiffly_accurate);
    }

    #[test]
    fn radau2_coefficients_and_order() {
        let t = builtin_tableau(TableauKind::RadauIIA2).unwrap();
        assert_eq!(t.order, 3);
        assert!(t.stiffly_accurate);
        assert!((t.a[0][0] - 5.0 / 12.0).abs() < 1e-15);
        assert!((t.a[0][1] + 1.0 / 12.0).abs() < 1e-15);
        assert!((t.b[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn r_infinity_values() {
        let r1 = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        assert!(r1.r_infinity.norm() < 1e-13);
        let r2 = builtin_tableau(TableauKind::RadauIIA2).unwrap();
        assert!(r2.r_infinity.norm() < 1e-13);
        let r3 = builtin_tableau(TableauKind::RadauIIA3).unwrap();
        assert!(r3.r_infinity.norm() < 1e-12);
        let g1 = builtin_tableau(TableauKind::Gauss1).unwrap();
        assert!((g1.r_infinity - Complex64::new(-1.0, 0.0)).norm() < 1e-13);
        let g2 = builtin_tableau(TableauKind::Gauss2).unwrap();
        assert!((g2.r_infinity.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_function_values() {
        let t = builtin_tableau(TableauKind::RadauIIA1).unwrap();
        // Backward Euler: R(z) = 1/(1-z).
        let r = t.stability_function(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((r - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let r0 = t.stability_function(Complex64::ZERO).unwrap();
        assert!((r0 - Complex64::ONE).norm() < 1e-14);

        let g = builtin_tableau(TableauKind::Gauss1).unwrap();
        let z = Complex64::i();
        let want = (Complex64::ONE + z * 0.5) / (Complex64::ONE - z * 0.5);
        let got = g.stability_function(z).unwrap();
        assert!((got - want).norm() < 1e-14);
        assert!((got.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stability_function_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in BUILTIN_NAMES {
            let t = builtin_tableau_by_name(name).unwrap();
            let mut checked = 0;
            while checked < 1000 {
                let z = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
                let (Ok(r1), Ok(r2)) = (t.stability_function(z), t.stability_function_alt(z))
                else {
                    continue; // z at or near a pole
                };
                if r1.norm() > 1e6 {
                    continue;
                }
                assert!(
                    (r1 - r2).norm() <= 1e-11 * r1.norm().max(1.0),
                    "{name} at z={z}: {r1} vs {r2}"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn gauss_methods_unit_modulus_on_imaginary_axis() {
        for kind in [TableauKind::Gauss1, TableauKind::Gauss2] {
            let t = builtin_tableau(kind).unwrap();
            for i in 0..200 {
                let ti = -50.0 + i as f64 * 0.5;
                let r = t.stability_function(Complex64::new(0.0, ti)).unwrap();
                assert!((r.norm() - 1.0).abs() < 1e-12, "{}: t={ti}", t.name);
            }
        }
    }

    #[test]
    fn unknown_name_is_config_error() {
        assert!(builtin_tableau_by_name("rk4").is_err());
    }
}
