//! 1D backend: interior Runge-Kutta steps with exact transparent boundary
//! conditions at both endpoints.
//!
//! On the half-lines outside (a, b) the solution satisfies
//! -U'' + B^2 U = 0 with decay at infinity, so the outgoing closure is
//! dn U + B(dt^k) gamma U = 0 at each endpoint; its CQ weights are the
//! power-series coefficients of the m x m matrix symbol B(z). No boundary
//! element assembly is involved.

use num_complex::Complex64;

use crate::cq::{cq_weights, CqContext, ScalarSymbol, SymbolMode};
use crate::error::{Error, Result};
use crate::fem::{error_norms_1d, InteriorForms, IntervalMesh};
use crate::linalg::BandedMatrix;
use crate::solver::Monitors;

/// Boundary treatment of the 1D marcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClosure {
    /// Outgoing-wave closure via CQ weights of the wave-number symbol.
    Transparent,
    /// Homogeneous Dirichlet with all boundary operator terms zeroed;
    /// reduces the scheme to a plain interior Runge-Kutta method (used by
    /// the oracle-equivalence checks).
    Dirichlet,
}

/// Reference solution for error monitoring: value and x-derivative at (x, t).
pub struct ExactRef1d<'a> {
    pub value: &'a (dyn Fn(f64, f64) -> Complex64 + Sync),
    pub dx: &'a (dyn Fn(f64, f64) -> Complex64 + Sync),
}

/// March output: step values, endpoint stage traces, monitors.
pub struct Run1d {
    /// u^n for n = 0..=N.
    pub u: Vec<Vec<Complex64>>,
    /// Stage trace vectors (gamma U^n at both endpoints), n = 0..N-1.
    pub traces: Vec<[Vec<Complex64>; 2]>,
    pub monitors: Monitors,
}

pub fn solve_1d(
    mesh: &IntervalMesh,
    forms: &InteriorForms,
    ctx: &CqContext,
    u0: &[Complex64],
    closure: BoundaryClosure,
    exact: Option<&ExactRef1d>,
) -> Result<Run1d> {
    let m = ctx.stages();
    let nd = forms.n_dofs;
    if u0.len() != nd {
        return Err(Error::Dimension(format!(
            "initial condition has {} entries, mesh has {nd} DOFs",
            u0.len()
        )));
    }
    let t = &ctx.tableau;
    let k = ctx.k;
    let boundary = mesh.boundary_dofs();

    // Weights of the matrix wave-number symbol.
    let b_weights = match closure {
        BoundaryClosure::Transparent => Some(cq_weights(
            ctx,
            &ScalarSymbol::new("wavenumber", |s| s),
            SymbolMode::ComposedWithWavenumber,
        )?),
        BoundaryClosure::Dirichlet => None,
    };

    // Node-major banded system: unknown (node, stage) at node*m + stage.
    let dim = nd * m;
    let band = 2 * m - 1;
    let mut sys = BandedMatrix::zeros(dim, band, band);
    for r in 0..nd {
        let mass_row: Vec<(usize, f64)> = forms.mass.row(r).collect();
        let sv_row: Vec<(usize, f64)> = {
            let mut merged: std::collections::BTreeMap<usize, f64> = Default::default();
            for (c, v) in forms.stiffness.row(r) {
                *merged.entry(c).or_insert(0.0) += v;
            }
            for (c, v) in forms.potential.row(r) {
                *merged.entry(c).or_insert(0.0) += v;
            }
            merged.into_iter().collect()
        };
        for i in 0..m {
            let row = r * m + i;
            for j in 0..m {
                let coeff = -Complex64::i() * t.a_inv[(i, j)];
                for &(c, v) in &mass_row {
                    sys.add(row, c * m + j, coeff * v);
                }
            }
            for &(c, v) in &sv_row {
                sys.add(row, c * m + i, Complex64::new(k * v, 0.0));
            }
        }
    }
    match closure {
        BoundaryClosure::Transparent => {
            let w0 = &b_weights.as_ref().unwrap().weights[0];
            for &b in &boundary {
                for i in 0..m {
                    for j in 0..m {
                        sys.add(b * m + i, b * m + j, k * w0[(i, j)]);
                    }
                }
            }
        }
        BoundaryClosure::Dirichlet => {
            // Row replacement: stage values pinned to zero at the endpoints.
            for &b in &boundary {
                for i in 0..m {
                    let row = b * m + i;
                    for j in row.saturating_sub(band)..=(row + band).min(dim - 1) {
                        let cur = sys.get(row, j);
                        if cur != Complex64::ZERO {
                            sys.add(row, j, -cur);
                        }
                    }
                    sys.add(row, row, Complex64::ONE);
                }
            }
        }
    }
    let lu = sys.factor()?;

    let n_steps = ctx.n_steps;
    let mut u = Vec::with_capacity(n_steps + 1);
    u.push(u0.to_vec());
    let mut traces: Vec<[Vec<Complex64>; 2]> = Vec::with_capacity(n_steps);
    let mut monitors = Monitors::default();
    let record = |un: &[Complex64], n: usize, monitors: &mut Monitors| {
        monitors.l2.push(forms.l2_norm(un));
        monitors.h1.push(forms.h1_norm(un));
        monitors.energy.push(forms.energy(un));
        if let Some(ex) = exact {
            let tn = n as f64 * k;
            let (l2e, h1e) = error_norms_1d(mesh, un, &|x| (ex.value)(x, tn), &|x| (ex.dx)(x, tn));
            monitors.l2_error.push(l2e);
            monitors.h1_error.push(h1e);
        }
    };
    record(&u[0], 0, &mut monitors);

    for n in 0..n_steps {
        let un = &u[n];
        // (d (x) M) u^n in node-major layout.
        let mu = forms.mass.matvec(un);
        let mut rhs = vec![Complex64::ZERO; dim];
        for r in 0..nd {
            for i in 0..m {
                rhs[r * m + i] = t.d[i] * mu[r];
            }
        }
        match closure {
            BoundaryClosure::Transparent => {
                // History part of the boundary convolution, j >= 1.
                let weights = b_weights.as_ref().unwrap();
                for (side, &b) in boundary.iter().enumerate() {
                    for j in 1..=n {
                        let w = &weights.weights[j];
                        let g = &traces[n - j][side];
                        for i in 0..m {
                            let mut acc = Complex64::ZERO;
                            for l in 0..m {
                                acc += w[(i, l)] * g[l];
                            }
                            rhs[b * m + i] -= k * acc;
                        }
                    }
                }
            }
            BoundaryClosure::Dirichlet => {
                for &b in &boundary {
                    for i in 0..m {
                        rhs[b * m + i] = Complex64::ZERO;
                    }
                }
            }
        }
        let stages = lu.solve(&rhs).map_err(|e| Error::Step {
            step: n,
            reason: e.to_string(),
        })?;
        traces.push([
            (0..m).map(|i| stages[boundary[0] * m + i]).collect(),
            (0..m).map(|i| stages[boundary[1] * m + i]).collect(),
        ]);
        let mut next = vec![Complex64::ZERO; nd];
        for r in 0..nd {
            let mut acc = t.r_infinity * un[r];
            for i in 0..m {
                acc += t.bt_a_inv[i] * stages[r * m + i];
            }
            next[r] = acc;
        }
        record(&next, n + 1, &mut monitors);
        u.push(next);
    }
    Ok(Run1d {
        u,
        traces,
        monitors,
    })
}
