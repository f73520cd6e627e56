//! 3D backend: symmetric FEM-BEM coupling with convolution-quadrature
//! boundary operators.
//!
//! The per-step block system couples the interior stage operator with the
//! n = 0 weights of the four boundary operators:
//!
//! ```text
//! [ A_int + k G' W0_W G     k G' (-1/2 + W0_KT) ] [U^n]   [ (d x M) u^n - history ]
//! [ (1/2 - W0_K) G          W0_V                ] [l^n] = [ history               ]
//! ```
//!
//! where G is the Dirichlet trace. The matrix is time-independent: one LU
//! factorization is reused for every step, and all j >= 1 weights act on
//! known history in the right-hand side.

use num_complex::Complex64;

use crate::bem::{assemble_operators, evaluate_potentials, SurfaceMesh, TraceSpaces};
use crate::cq::CqContext;
use crate::error::{Error, Result};
use crate::fem::{error_norms_3d, InteriorForms, TetMesh};
use crate::linalg::{inverse_contour_stack, CMatrix, LuFactorization};
use crate::solver::Monitors;

/// A sequence of dense stage-block weight matrices stored as one
/// contiguous stack (`data[j * rows * cols ..]` is weight j, row-major).
#[derive(Debug, Clone)]
pub struct WeightFamily {
    pub rows: usize,
    pub cols: usize,
    pub count: usize,
    data: Vec<Complex64>,
}

impl WeightFamily {
    fn from_stack(data: Vec<Complex64>, rows: usize, cols: usize, count: usize) -> Self {
        assert!(data.len() >= rows * cols * count);
        Self {
            rows,
            cols,
            count,
            data,
        }
    }

    pub fn weight(&self, j: usize) -> &[Complex64] {
        assert!(j < self.count);
        &self.data[j * self.rows * self.cols..(j + 1) * self.rows * self.cols]
    }

    /// out += alpha * W^j x
    pub fn matvec_acc(&self, j: usize, alpha: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        let w = self.weight(j);
        for r in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for (a, b) in w[r * self.cols..(r + 1) * self.cols].iter().zip(x) {
                acc += a * b;
            }
            out[r] += alpha * acc;
        }
    }

    /// Weight j as a dense matrix.
    pub fn to_matrix(&self, j: usize) -> CMatrix {
        let w = self.weight(j);
        CMatrix::from_fn(self.rows, self.cols, |r, c| w[r * self.cols + c])
    }

    pub fn max_abs(&self, j: usize) -> f64 {
        self.weight(j).iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }
}

/// CQ weight sequences of the four boundary operators at stage-block size.
pub struct OperatorWeights {
    pub stages: usize,
    pub n_flux: usize,
    pub n_dirichlet: usize,
    pub v: WeightFamily,
    pub k: WeightFamily,
    pub kt: WeightFamily,
    pub w: WeightFamily,
}

/// Assemble the boundary operators at every contour frequency B(z_l)
/// (diagonalized per frequency) and transform entrywise to weights
/// W^j for j = 0..=N.
pub fn precompute_operator_weights(
    ctx: &CqContext,
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
) -> Result<OperatorWeights> {
    let m = ctx.stages();
    let nt = spaces.n_flux;
    let nx = spaces.n_dirichlet;
    let q1 = ctx.q + 1;
    let sizes = [
        (m * nt) * (m * nt),
        (m * nt) * (m * nx),
        (m * nx) * (m * nt),
        (m * nx) * (m * nx),
    ];
    let mut stacks: Vec<Vec<Complex64>> = sizes
        .iter()
        .map(|&s| vec![Complex64::ZERO; q1 * s])
        .collect();

    for (l, fr) in ctx.frequencies.iter().enumerate() {
        if !fr.eig.is_reliable() {
            return Err(Error::Defective {
                cond: fr.eig.condition,
                limit: crate::linalg::DEFECTIVE_CONDITION_LIMIT,
            });
        }
        // Scalar assemblies at the eigen-frequencies of B(z_l), recombined
        // through the eigenvectors of delta(z_l)/k (B shares them).
        let wavenumbers = fr.scalar_wavenumbers(ctx.v0);
        let mut blocks = [
            CMatrix::zeros(m * nt, m * nt),
            CMatrix::zeros(m * nt, m * nx),
            CMatrix::zeros(m * nx, m * nt),
            CMatrix::zeros(m * nx, m * nx),
        ];
        for (i, &s) in wavenumbers.iter().enumerate() {
            if s.re <= 0.0 {
                return Err(Error::Domain(format!(
                    "contour frequency {l} produced wave number {s} outside Re > 0"
                )));
            }
            let ops = assemble_operators(mesh, spaces, s)?;
            for r in 0..m {
                for c in 0..m {
                    let coeff = fr.eig.vectors[(r, i)] * fr.eig.vectors_inv[(i, c)];
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    blocks[0].add_block(r * nt, c * nt, coeff, &ops.v);
                    blocks[1].add_block(r * nt, c * nx, coeff, &ops.k);
                    blocks[2].add_block(r * nx, c * nt, coeff, &ops.kt);
                    blocks[3].add_block(r * nx, c * nx, coeff, &ops.w);
                }
            }
        }
        for (stack, block) in stacks.iter_mut().zip(&blocks) {
            let size = block.rows() * block.cols();
            stack[l * size..(l + 1) * size].copy_from_slice(block.data());
        }
    }

    for (stack, &size) in stacks.iter_mut().zip(&sizes) {
        inverse_contour_stack(stack, q1, size, ctx.lambda);
        stack.truncate((ctx.n_steps + 1) * size);
    }
    let mut it = stacks.into_iter();
    Ok(OperatorWeights {
        stages: m,
        n_flux: nt,
        n_dirichlet: nx,
        v: WeightFamily::from_stack(it.next().unwrap(), m * nt, m * nt, ctx.n_steps + 1),
        k: WeightFamily::from_stack(it.next().unwrap(), m * nt, m * nx, ctx.n_steps + 1),
        kt: WeightFamily::from_stack(it.next().unwrap(), m * nx, m * nt, ctx.n_steps + 1),
        w: WeightFamily::from_stack(it.next().unwrap(), m * nx, m * nx, ctx.n_steps + 1),
    })
}

/// The factorized time-independent per-step block system.
pub struct CoupledStepSystem {
    pub n_interior: usize,
    pub n_flux: usize,
    pub n_dirichlet: usize,
    pub stages: usize,
    lu: LuFactorization,
}

impl CoupledStepSystem {
    pub fn new(
        forms: &InteriorForms,
        spaces: &TraceSpaces,
        ctx: &CqContext,
        weights: &OperatorWeights,
    ) -> Result<Self> {
        let m = ctx.stages();
        let t = &ctx.tableau;
        let k = ctx.k;
        let ni = forms.n_dofs;
        let nt = spaces.n_flux;
        let nx = spaces.n_dirichlet;
        if forms.n_trace() != nx {
            return Err(Error::Dimension(format!(
                "interior trace count {} does not match surface vertex count {nx}",
                forms.n_trace()
            )));
        }
        let nu = m * ni;
        let dim = nu + m * nt;
        let mut sys = CMatrix::zeros(dim, dim);
        let kc = Complex64::new(k, 0.0);
        let half = Complex64::new(0.5, 0.0);

        // Interior stage operator.
        for i in 0..m {
            for j in 0..m {
                let coeff = -Complex64::i() * t.a_inv[(i, j)];
                for r in 0..ni {
                    for (c, v) in forms.mass.row(r) {
                        sys[(i * ni + r, j * ni + c)] += coeff * v;
                    }
                }
            }
            for r in 0..ni {
                for (c, v) in forms.stiffness.row(r) {
                    sys[(i * ni + r, i * ni + c)] += kc * v;
                }
                for (c, v) in forms.potential.row(r) {
                    sys[(i * ni + r, i * ni + c)] += kc * v;
                }
            }
        }
        // k G' W0_W G on the interior block.
        let w0w = weights.w.weight(0);
        for bi in 0..m {
            for bj in 0..m {
                for a in 0..nx {
                    let ra = bi * ni + forms.trace_map[a];
                    for b in 0..nx {
                        let cb = bj * ni + forms.trace_map[b];
                        sys[(ra, cb)] += kc * w0w[(bi * nx + a) * (m * nx) + bj * nx + b];
                    }
                }
            }
        }
        // Top right: k G' (-1/2 duality^T + W0_KT).
        let w0kt = weights.kt.weight(0);
        for bi in 0..m {
            for bj in 0..m {
                for a in 0..nx {
                    let ra = bi * ni + forms.trace_map[a];
                    for c in 0..nt {
                        let cc = nu + bj * nt + c;
                        sys[(ra, cc)] += kc * w0kt[(bi * nx + a) * (m * nt) + bj * nt + c];
                    }
                }
            }
        }
        {
            // -k/2 tested identity, block diagonal in the stages.
            let mut dual = CMatrix::zeros(nx, nt);
            spaces.duality_t_add_into(&mut dual, 0, 0, Complex64::ONE);
            for bi in 0..m {
                for a in 0..nx {
                    let ra = bi * ni + forms.trace_map[a];
                    for c in 0..nt {
                        sys[(ra, nu + bi * nt + c)] -= kc * half * dual[(a, c)];
                    }
                }
            }
        }
        // Bottom left: (1/2 duality - W0_K) G.
        let w0k = weights.k.weight(0);
        for bi in 0..m {
            for bj in 0..m {
                for r in 0..nt {
                    let rr = nu + bi * nt + r;
                    for b in 0..nx {
                        let cb = bj * ni + forms.trace_map[b];
                        sys[(rr, cb)] -= w0k[(bi * nt + r) * (m * nx) + bj * nx + b];
                    }
                }
            }
        }
        {
            let mut dual = CMatrix::zeros(nt, nx);
            spaces.duality_add_into(&mut dual, 0, 0, Complex64::ONE);
            for bi in 0..m {
                for r in 0..nt {
                    let rr = nu + bi * nt + r;
                    for b in 0..nx {
                        sys[(rr, bi * ni + forms.trace_map[b])] += half * dual[(r, b)];
                    }
                }
            }
        }
        // Bottom right: W0_V.
        let w0v = weights.v.weight(0);
        for bi in 0..m {
            for bj in 0..m {
                for r in 0..nt {
                    for c in 0..nt {
                        sys[(nu + bi * nt + r, nu + bj * nt + c)] +=
                            w0v[(bi * nt + r) * (m * nt) + bj * nt + c];
                    }
                }
            }
        }

        let lu = sys.lu()?;
        Ok(Self {
            n_interior: ni,
            n_flux: nt,
            n_dirichlet: nx,
            stages: m,
            lu,
        })
    }
}

/// Step history: step values, stage traces, and boundary densities.
#[derive(Debug, Clone, Default)]
pub struct TimeHistory {
    /// u^n, n = 0..=current.
    pub u: Vec<Vec<Complex64>>,
    /// gamma U^n stage traces (m * n_dirichlet), n = 0..current-1.
    pub traces: Vec<Vec<Complex64>>,
    /// lambda^n stage densities (m * n_flux).
    pub densities: Vec<Vec<Complex64>>,
    /// Stage vectors U^n (m * n_interior).
    pub stages: Vec<Vec<Complex64>>,
}

/// One coupled Runge-Kutta step: build the history right-hand side, solve,
/// update the step value.
pub fn advance_step(
    system: &CoupledStepSystem,
    forms: &InteriorForms,
    ctx: &CqContext,
    weights: &OperatorWeights,
    hist: &mut TimeHistory,
) -> Result<()> {
    let m = system.stages;
    let ni = system.n_interior;
    let nt = system.n_flux;
    let nx = system.n_dirichlet;
    let n = hist.traces.len();
    if hist.u.len() != n + 1 {
        return Err(Error::Step {
            step: n,
            reason: format!("history has {} step values, expected {}", hist.u.len(), n + 1),
        });
    }
    let t = &ctx.tableau;
    let k = ctx.k;
    let un = &hist.u[n];
    let nu = m * ni;
    let dim = nu + m * nt;
    let mut rhs = vec![Complex64::ZERO; dim];

    // (d (x) M) u^n
    let mu = forms.mass.matvec(un);
    for i in 0..m {
        let di = t.d[i];
        for (r, v) in mu.iter().enumerate() {
            rhs[i * ni + r] = di * v;
        }
    }
    // History sums, j = 1..=n.
    let mut bdry_u = vec![Complex64::ZERO; m * nx];
    let mut bdry_l = vec![Complex64::ZERO; m * nt];
    for j in 1..=n {
        let g = &hist.traces[n - j];
        let lam = &hist.densities[n - j];
        weights.w.matvec_acc(j, Complex64::ONE, g, &mut bdry_u);
        weights.kt.matvec_acc(j, Complex64::ONE, lam, &mut bdry_u);
        weights.k.matvec_acc(j, -Complex64::ONE, g, &mut bdry_l);
        weights.v.matvec_acc(j, Complex64::ONE, lam, &mut bdry_l);
    }
    let kc = Complex64::new(k, 0.0);
    for bi in 0..m {
        for a in 0..nx {
            rhs[bi * ni + forms.trace_map[a]] -= kc * bdry_u[bi * nx + a];
        }
    }
    for (slot, v) in rhs[nu..].iter_mut().zip(&bdry_l) {
        *slot = -v;
    }

    let sol = system.lu.solve(&rhs).map_err(|e| Error::Step {
        step: n,
        reason: e.to_string(),
    })?;
    let stages_u = &sol[..nu];
    let lam = sol[nu..].to_vec();
    let mut gtrace = vec![Complex64::ZERO; m * nx];
    for bi in 0..m {
        for a in 0..nx {
            gtrace[bi * nx + a] = stages_u[bi * ni + forms.trace_map[a]];
        }
    }
    let next = t.step_update(un, stages_u);
    hist.traces.push(gtrace);
    hist.densities.push(lam);
    hist.stages.push(stages_u.to_vec());
    hist.u.push(next);
    Ok(())
}

/// Reference solution for 3D error monitoring.
pub struct ExactRef3d<'a> {
    pub value: &'a (dyn Fn([f64; 3], f64) -> Complex64 + Sync),
    pub grad: &'a (dyn Fn([f64; 3], f64) -> [Complex64; 3] + Sync),
}

/// Full 3D run result.
pub struct Run3d {
    pub history: TimeHistory,
    pub monitors: Monitors,
}

/// March the coupled scheme for N steps.
pub fn run_coupled(
    mesh: &TetMesh,
    forms: &InteriorForms,
    spaces: &TraceSpaces,
    ctx: &CqContext,
    weights: &OperatorWeights,
    u0: &[Complex64],
    exact: Option<&ExactRef3d>,
) -> Result<Run3d> {
    let system = CoupledStepSystem::new(forms, spaces, ctx, weights)?;
    let mut hist = TimeHistory {
        u: vec![u0.to_vec()],
        ..Default::default()
    };
    let mut monitors = Monitors::default();
    let record = |un: &[Complex64], n: usize, monitors: &mut Monitors| {
        monitors.l2.push(forms.l2_norm(un));
        monitors.h1.push(forms.h1_norm(un));
        monitors.energy.push(forms.energy(un));
        if let Some(ex) = exact {
            let tn = n as f64 * ctx.k;
            let (l2e, h1e) = error_norms_3d(
                mesh,
                un,
                &|x| (ex.value)(x, tn),
                &|x| (ex.grad)(x, tn),
            );
            monitors.l2_error.push(l2e);
            monitors.h1_error.push(h1e);
        }
    };
    record(&hist.u[0], 0, &mut monitors);
    for n in 0..ctx.n_steps {
        advance_step(&system, forms, ctx, weights, &mut hist)?;
        record(&hist.u[n + 1], n + 1, &mut monitors);
    }
    Ok(Run3d {
        history: hist,
        monitors,
    })
}

/// Exterior field values recovered from boundary data by CQ applied to the
/// representation formula: U*^n = -S(dt^k) lambda^n + D(dt^k) gamma U^n and
/// u*^{n+1} = R(inf) u*^n + b^T A^{-1} U*^n.
pub struct ExteriorRecovery {
    /// u*^n at each requested point, n = 0..=N (u*^0 = 0).
    pub values: Vec<Vec<Complex64>>,
    /// Stage values U*^n per point, n = 0..N-1.
    pub stage_values: Vec<Vec<Complex64>>,
    pub near_field: Vec<bool>,
}

pub fn recover_exterior(
    ctx: &CqContext,
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
    points: &[[f64; 3]],
    hist: &TimeHistory,
) -> Result<ExteriorRecovery> {
    let m = ctx.stages();
    let npts = points.len();
    let nt = spaces.n_flux;
    let nx = spaces.n_dirichlet;
    let q1 = ctx.q + 1;
    let s_size = (m * npts) * (m * nt);
    let d_size = (m * npts) * (m * nx);
    let mut s_stack = vec![Complex64::ZERO; q1 * s_size];
    let mut d_stack = vec![Complex64::ZERO; q1 * d_size];
    let mut near_field = vec![false; npts];

    for (l, fr) in ctx.frequencies.iter().enumerate() {
        let wavenumbers = fr.scalar_wavenumbers(ctx.v0);
        let mut s_block = CMatrix::zeros(m * npts, m * nt);
        let mut d_block = CMatrix::zeros(m * npts, m * nx);
        for (i, &s) in wavenumbers.iter().enumerate() {
            let pot = evaluate_potentials(mesh, spaces, points, s)?;
            for (p, &flag) in pot.near_field.iter().enumerate() {
                near_field[p] = near_field[p] || flag;
            }
            for r in 0..m {
                for c in 0..m {
                    let coeff = fr.eig.vectors[(r, i)] * fr.eig.vectors_inv[(i, c)];
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    s_block.add_block(r * npts, c * nt, coeff, &pot.s_mat);
                    d_block.add_block(r * npts, c * nx, coeff, &pot.d_mat);
                }
            }
        }
        s_stack[l * s_size..(l + 1) * s_size].copy_from_slice(s_block.data());
        d_stack[l * d_size..(l + 1) * d_size].copy_from_slice(d_block.data());
    }
    inverse_contour_stack(&mut s_stack, q1, s_size, ctx.lambda);
    inverse_contour_stack(&mut d_stack, q1, d_size, ctx.lambda);
    let n_kept = ctx.n_steps + 1;
    s_stack.truncate(n_kept * s_size);
    d_stack.truncate(n_kept * d_size);
    let s_w = WeightFamily::from_stack(s_stack, m * npts, m * nt, n_kept);
    let d_w = WeightFamily::from_stack(d_stack, m * npts, m * nx, n_kept);

    let t = &ctx.tableau;
    let n_done = hist.traces.len();
    let mut values = vec![vec![Complex64::ZERO; npts]]; // u*^0 = 0
    let mut stage_values = Vec::with_capacity(n_done);
    for n in 0..n_done {
        let mut ustar = vec![Complex64::ZERO; m * npts];
        for j in 0..=n {
            s_w.matvec_acc(j, -Complex64::ONE, &hist.densities[n - j], &mut ustar);
            d_w.matvec_acc(j, Complex64::ONE, &hist.traces[n - j], &mut ustar);
        }
        let prev = values.last().unwrap().clone();
        let next = t.step_update(&prev, &ustar);
        values.push(next);
        stage_values.push(ustar);
    }
    Ok(ExteriorRecovery {
        values,
        stage_values,
        near_field,
    })
}
