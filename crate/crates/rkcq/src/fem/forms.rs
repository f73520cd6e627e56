//! P1 interior forms: mass, stiffness, lumped potential, traces, norms.

use num_complex::Complex64;

use crate::bem::mesh::{cross, dot, sub, Point3};
use crate::error::{Error, Result};
use crate::fem::mesh::{tet_volume, IntervalMesh, TetMesh};
use crate::linalg::CMatrix;
use crate::par;
use crate::tableau::Tableau;

/// Compressed sparse rows with real coefficients.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] = indices.len();
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            if indptr[r + 1] < indptr[r] {
                indptr[r + 1] = indptr[r];
            }
        }
        Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// x^H A y (sesquilinear, conjugating the left argument).
    pub fn inner(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for i in 0..self.n_rows {
            let mut row = Complex64::ZERO;
            for (j, v) in self.row(i) {
                row += v * y[j];
            }
            acc += x[i].conj() * row;
        }
        acc
    }
}

/// Interior Galerkin pieces of a Runge-Kutta step, plus the Dirichlet trace.
#[derive(Debug, Clone)]
pub struct InteriorForms {
    pub n_dofs: usize,
    pub mass: Csr,
    pub stiffness: Csr,
    /// Lumped potential term (diagonal as assembled).
    pub potential: Csr,
    /// Dirichlet-trace DOF -> interior DOF.
    pub trace_map: Vec<usize>,
}

impl InteriorForms {
    pub fn n_trace(&self) -> usize {
        self.trace_map.len()
    }

    /// Restrict interior coefficients to the trace space.
    pub fn trace(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.trace_map.iter().map(|&i| u[i]).collect()
    }

    /// Adjoint of the trace: scatter trace coefficients into interior slots.
    pub fn trace_adjoint_add(&self, g: &[Complex64], alpha: Complex64, out: &mut [Complex64]) {
        for (s, &i) in self.trace_map.iter().enumerate() {
            out[i] += alpha * g[s];
        }
    }

    pub fn l2_norm(&self, u: &[Complex64]) -> f64 {
        self.mass.inner(u, u).re.max(0.0).sqrt()
    }

    pub fn h1_norm(&self, u: &[Complex64]) -> f64 {
        (self.mass.inner(u, u).re + self.stiffness.inner(u, u).re)
            .max(0.0)
            .sqrt()
    }

    /// Discrete energy |grad u|^2 + <V u, u> over the domain.
    pub fn energy(&self, u: &[Complex64]) -> f64 {
        self.stiffness.inner(u, u).re + self.potential.inner(u, u).re
    }
}

/// Assemble 1D interval forms; the potential is integrated by vertex
/// quadrature (lumping), which keeps it real and diagonal.
pub fn assemble_interval(mesh: &IntervalMesh, potential: &dyn Fn(f64) -> f64) -> Result<InteriorForms> {
    let n = mesh.n_vertices();
    let h = mesh.h();
    let mut tm = Vec::with_capacity(4 * mesh.n_elements);
    let mut ts = Vec::with_capacity(4 * mesh.n_elements);
    let mut tv = vec![0.0f64; n];
    for e in 0..mesh.n_elements {
        let (i, j) = (e, e + 1);
        tm.push((i, i, h / 3.0));
        tm.push((j, j, h / 3.0));
        tm.push((i, j, h / 6.0));
        tm.push((j, i, h / 6.0));
        ts.push((i, i, 1.0 / h));
        ts.push((j, j, 1.0 / h));
        ts.push((i, j, -1.0 / h));
        ts.push((j, i, -1.0 / h));
        tv[i] += h / 2.0;
        tv[j] += h / 2.0;
    }
    let mut tpot = Vec::with_capacity(n);
    for (i, w) in tv.iter().enumerate() {
        let v = potential(mesh.vertices[i]);
        if !v.is_finite() {
            return Err(Error::Config(format!(
                "potential is not finite at x = {}",
                mesh.vertices[i]
            )));
        }
        tpot.push((i, i, v * w));
    }
    Ok(InteriorForms {
        n_dofs: n,
        mass: Csr::from_triplets(n, n, tm),
        stiffness: Csr::from_triplets(n, n, ts),
        potential: Csr::from_triplets(n, n, tpot),
        trace_map: mesh.boundary_dofs().to_vec(),
    })
}

/// Assemble 3D tetrahedral P1 forms; the potential uses vertex quadrature.
pub fn assemble_tet(mesh: &TetMesh, potential: &(dyn Fn(Point3) -> f64 + Sync)) -> Result<InteriorForms> {
    let n = mesh.n_vertices();
    // Element contributions in parallel, merged serially in element order.
    let locals: Vec<([usize; 4], [[f64; 4]; 4], [[f64; 4]; 4], f64)> =
        par::par_map(mesh.n_tets(), |e| {
            let t = mesh.tets[e];
            let vol = tet_volume(&mesh.vertices, t);
            let p0 = mesh.vertices[t[0]];
            // Gradients of barycentric coordinates: rows of the inverse
            // Jacobian; grad(lambda_0) is minus their sum.
            let a = sub(mesh.vertices[t[1]], p0);
            let b = sub(mesh.vertices[t[2]], p0);
            let c = sub(mesh.vertices[t[3]], p0);
            let det = dot(cross(a, b), c);
            let g1 = [
                (b[1] * c[2] - b[2] * c[1]) / det,
                (b[2] * c[0] - b[0] * c[2]) / det,
                (b[0] * c[1] - b[1] * c[0]) / det,
            ];
            let g2 = [
                (c[1] * a[2] - c[2] * a[1]) / det,
                (c[2] * a[0] - c[0] * a[2]) / det,
                (c[0] * a[1] - c[1] * a[0]) / det,
            ];
            let g3 = [
                (a[1] * b[2] - a[2] * b[1]) / det,
                (a[2] * b[0] - a[0] * b[2]) / det,
                (a[0] * b[1] - a[1] * b[0]) / det,
            ];
            let g0 = [
                -(g1[0] + g2[0] + g3[0]),
                -(g1[1] + g2[1] + g3[1]),
                -(g1[2] + g2[2] + g3[2]),
            ];
            let grads = [g0, g1, g2, g3];
            let mut s = [[0.0; 4]; 4];
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    s[i][j] = vol * dot(grads[i], grads[j]);
                    m[i][j] = vol / if i == j { 10.0 } else { 20.0 };
                }
            }
            (t, s, m, vol)
        });

    let mut ts = Vec::with_capacity(16 * mesh.n_tets());
    let mut tm = Vec::with_capacity(16 * mesh.n_tets());
    let mut lump = vec![0.0f64; n];
    for (t, s, m, vol) in locals {
        for i in 0..4 {
            for j in 0..4 {
                ts.push((t[i], t[j], s[i][j]));
                tm.push((t[i], t[j], m[i][j]));
            }
            lump[t[i]] += vol / 4.0;
        }
    }
    let mut tpot = Vec::with_capacity(n);
    for (i, w) in lump.iter().enumerate() {
        let v = potential(mesh.vertices[i]);
        if !v.is_finite() {
            return Err(Error::Config(format!(
                "potential is not finite at vertex {i}"
            )));
        }
        tpot.push((i, i, v * w));
    }
    Ok(InteriorForms {
        n_dofs: n,
        mass: Csr::from_triplets(n, n, tm),
        stiffness: Csr::from_triplets(n, n, ts),
        potential: Csr::from_triplets(n, n, tpot),
        trace_map: mesh.surface_to_volume.clone(),
    })
}

/// The stage-coupled interior operator (-i A^{-1} (x) M) + k I (x) (S + M_V)
/// and the right-hand-side map u -> (d (x) M) u. Stage-major layout.
pub struct StepForm<'a> {
    pub forms: &'a InteriorForms,
    pub tableau: &'a Tableau,
    pub k: f64,
}

impl<'a> StepForm<'a> {
    pub fn new(forms: &'a InteriorForms, tableau: &'a Tableau, k: f64) -> Self {
        Self { forms, tableau, k }
    }

    pub fn dim(&self) -> usize {
        self.tableau.stages * self.forms.n_dofs
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let m = self.tableau.stages;
        let n = self.forms.n_dofs;
        assert_eq!(u.len(), m * n);
        let mut out = vec![Complex64::ZERO; m * n];
        for i in 0..m {
            // k (S + M_V) on the diagonal block.
            let block = &u[i * n..(i + 1) * n];
            let sv: Vec<Complex64> = self
                .forms
                .stiffness
                .matvec(block)
                .iter()
                .zip(self.forms.potential.matvec(block).iter())
                .map(|(a, b)| self.k * (a + b))
                .collect();
            for (o, v) in out[i * n..(i + 1) * n].iter_mut().zip(sv) {
                *o += v;
            }
            // -i A^{-1} (x) M coupling.
            for j in 0..m {
                let coeff = -Complex64::i() * self.tableau.a_inv[(i, j)];
                if coeff.norm() == 0.0 {
                    continue;
                }
                let mv = self.forms.mass.matvec(&u[j * n..(j + 1) * n]);
                for (o, v) in out[i * n..(i + 1) * n].iter_mut().zip(mv) {
                    *o += coeff * v;
                }
            }
        }
        out
    }

    /// (d (x) M) u with d = -i A^{-1} 1.
    pub fn rhs_from_step_value(&self, u: &[Complex64]) -> Vec<Complex64> {
        let m = self.tableau.stages;
        let n = self.forms.n_dofs;
        assert_eq!(u.len(), n);
        let mu = self.forms.mass.matvec(u);
        let mut out = vec![Complex64::ZERO; m * n];
        for i in 0..m {
            let di = self.tableau.d[i];
            for (o, v) in out[i * n..(i + 1) * n].iter_mut().zip(&mu) {
                *o = di * v;
            }
        }
        out
    }

    /// Dense materialization, for small oracle problems and tests.
    pub fn to_dense(&self) -> CMatrix {
        let m = self.tableau.stages;
        let n = self.forms.n_dofs;
        let mut out = CMatrix::zeros(m * n, m * n);
        for i in 0..m {
            for j in 0..m {
                let coeff = -Complex64::i() * self.tableau.a_inv[(i, j)];
                for r in 0..n {
                    for (cidx, v) in self.forms.mass.row(r) {
                        out[(i * n + r, j * n + cidx)] += coeff * v;
                    }
                }
            }
            for r in 0..n {
                for (cidx, v) in self.forms.stiffness.row(r) {
                    out[(i * n + r, i * n + cidx)] += self.k * v;
                }
                for (cidx, v) in self.forms.potential.row(r) {
                    out[(i * n + r, i * n + cidx)] += self.k * v;
                }
            }
        }
        out
    }
}

/// L2 and H1 errors of a 1D P1 function against a smooth reference, 2-point
/// Gauss per element.
pub fn error_norms_1d(
    mesh: &IntervalMesh,
    u: &[Complex64],
    exact: &dyn Fn(f64) -> Complex64,
    exact_dx: &dyn Fn(f64) -> Complex64,
) -> (f64, f64) {
    let h = mesh.h();
    let gp = 1.0 / 3.0f64.sqrt();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for e in 0..mesh.n_elements {
        let x0 = mesh.vertices[e];
        let x1 = mesh.vertices[e + 1];
        let mid = 0.5 * (x0 + x1);
        let du = (u[e + 1] - u[e]) / h;
        for &xi in &[-gp, gp] {
            let x = mid + 0.5 * h * xi;
            let lam = (x - x0) / h;
            let uh = u[e] * (1.0 - lam) + u[e + 1] * lam;
            let ev = uh - exact(x);
            let eg = du - exact_dx(x);
            l2 += 0.5 * h * ev.norm_sqr();
            h1 += 0.5 * h * eg.norm_sqr();
        }
    }
    (l2.sqrt(), (l2 + h1).sqrt())
}

/// L2 and H1 errors of a 3D P1 function, 4-point degree-2 rule per element.
pub fn error_norms_3d(
    mesh: &TetMesh,
    u: &[Complex64],
    exact: &(dyn Fn(Point3) -> Complex64 + Sync),
    exact_grad: &(dyn Fn(Point3) -> [Complex64; 3] + Sync),
) -> (f64, f64) {
    let a = (5.0 + 3.0 * 5.0f64.sqrt()) / 20.0;
    let b = (5.0 - 5.0f64.sqrt()) / 20.0;
    let qp = [
        [a, b, b, b],
        [b, a, b, b],
        [b, b, a, b],
        [b, b, b, a],
    ];
    let partial: Vec<(f64, f64)> = par::par_map(mesh.n_tets(), |e| {
        let t = mesh.tets[e];
        let vol = tet_volume(&mesh.vertices, t);
        let p = [
            mesh.vertices[t[0]],
            mesh.vertices[t[1]],
            mesh.vertices[t[2]],
            mesh.vertices[t[3]],
        ];
        let av = sub(p[1], p[0]);
        let bv = sub(p[2], p[0]);
        let cv = sub(p[3], p[0]);
        let det = dot(cross(av, bv), cv);
        let g1 = [
            (bv[1] * cv[2] - bv[2] * cv[1]) / det,
            (bv[2] * cv[0] - bv[0] * cv[2]) / det,
            (bv[0] * cv[1] - bv[1] * cv[0]) / det,
        ];
        let g2 = [
            (cv[1] * av[2] - cv[2] * av[1]) / det,
            (cv[2] * av[0] - cv[0] * av[2]) / det,
            (cv[0] * av[1] - cv[1] * av[0]) / det,
        ];
        let g3 = [
            (av[1] * bv[2] - av[2] * bv[1]) / det,
            (av[2] * bv[0] - av[0] * bv[2]) / det,
            (av[0] * bv[1] - av[1] * bv[0]) / det,
        ];
        let g0 = [
            -(g1[0] + g2[0] + g3[0]),
            -(g1[1] + g2[1] + g3[1]),
            -(g1[2] + g2[2] + g3[2]),
        ];
        let grads = [g0, g1, g2, g3];
        // constant gradient of u_h on the element
        let mut gh = [Complex64::ZERO; 3];
        for i in 0..4 {
            for d in 0..3 {
                gh[d] += u[t[i]] * grads[i][d];
            }
        }
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        for lam in qp {
            let mut x = [0.0; 3];
            let mut uh = Complex64::ZERO;
            for i in 0..4 {
                for d in 0..3 {
                    x[d] += lam[i] * p[i][d];
                }
                uh += lam[i] * u[t[i]];
            }
            let ev = uh - exact(x);
            let ge = exact_grad(x);
            let mut gd = 0.0;
            for d in 0..3 {
                gd += (gh[d] - ge[d]).norm_sqr();
            }
            l2 += 0.25 * vol * ev.norm_sqr();
            h1 += 0.25 * vol * gd;
        }
        (l2, h1)
    });
    let (l2, h1) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    (l2.sqrt(), (l2 + h1).sqrt())
}

/// Nodal interpolation of a smooth function (1D).
pub fn interpolate_1d(mesh: &IntervalMesh, f: &dyn Fn(f64) -> Complex64) -> Vec<Complex64> {
    mesh.vertices.iter().map(|&x| f(x)).collect()
}

/// Nodal interpolation of a smooth function (3D).
pub fn interpolate_3d(mesh: &TetMesh, f: &dyn Fn(Point3) -> Complex64) -> Vec<Complex64> {
    mesh.vertices.iter().map(|&x| f(x)).collect()
}
