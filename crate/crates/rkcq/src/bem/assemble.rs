//! Galerkin assembly of the complex-frequency boundary operators V, K, K^T,
//! W and panel-wise evaluation of the layer potentials.
//!
//! All operators use the duality pairing on the surface as inner product;
//! the hypersingular operator is assembled through the surface-curl
//! (integration by parts) identity, which reduces it to weakly singular
//! integrals with kernel Phi plus an s^2-weighted mass-like term:
//!
//! ```text
//! <W(s) phi, psi> = II Phi(x,y;s) curl_G phi(y) . curl_G psi(x)
//!                 + s^2 II Phi(x,y;s) (n(x).n(y)) phi(y) psi(x).
//! ```

use num_complex::Complex64;

use crate::bem::mesh::{dist, dot, sub, PanelRelation, Point3, SurfaceMesh};
use crate::bem::quad::{
    barycentric, triangle_rule, visit_coincident, visit_common_edge, visit_common_vertex,
    visit_regular, TriangleRule,
};
use crate::error::{Error, Result};
use crate::linalg::{eig_small, CMatrix};
use crate::par;

/// Tensor Gauss order of the singular panel-pair transforms.
const SINGULAR_ORDER: usize = 4;
/// Node count of the resolvent contour fallback for defective wave numbers.
const CONTOUR_NODES: usize = 64;

/// e^{-s|x-y|} / (4 pi |x-y|), the kernel of the operator Delta - s^2 for
/// Re(s) > 0.
pub fn fundamental_solution_3d(x: Point3, y: Point3, s: Complex64) -> Result<Complex64> {
    if s.re <= 0.0 {
        return Err(Error::Domain(format!(
            "fundamental solution requires Re(s) > 0, got s = {s}"
        )));
    }
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Domain("coincident evaluation points".into()));
    }
    Ok((-s * r).exp() / (4.0 * std::f64::consts::PI * r))
}

/// Discrete trace spaces on a surface mesh: continuous P1 for Dirichlet
/// data (one DOF per vertex) and piecewise constants for Neumann data (one
/// DOF per triangle), plus the duality and mass matrices between them.
#[derive(Debug, Clone)]
pub struct TraceSpaces {
    pub n_dirichlet: usize,
    pub n_flux: usize,
    /// <chi_i, phi_j>: (triangle, vertex, area/3) triplets.
    duality: Vec<(usize, usize, f64)>,
    /// P1 surface mass triplets.
    p1_mass: Vec<(usize, usize, f64)>,
    /// P0 mass diagonal (panel areas).
    p0_mass: Vec<f64>,
}

impl TraceSpaces {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let mut duality = Vec::with_capacity(3 * mesh.n_triangles());
        let mut p1_mass = Vec::with_capacity(9 * mesh.n_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.areas[t];
            for (i, &gi) in tri.iter().enumerate() {
                duality.push((t, gi, a / 3.0));
                for (j, &gj) in tri.iter().enumerate() {
                    p1_mass.push((gi, gj, a / if i == j { 6.0 } else { 12.0 }));
                }
            }
        }
        Self {
            n_dirichlet: mesh.n_vertices(),
            n_flux: mesh.n_triangles(),
            duality,
            p1_mass,
            p0_mass: mesh.areas.clone(),
        }
    }

    /// <chi_i, phi> for P1 coefficients phi: the flux-tested identity part.
    pub fn duality_apply(&self, phi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.n_flux];
        for &(t, v, w) in &self.duality {
            out[t] += w * phi[v];
        }
        out
    }

    /// <mu, phi_a> for P0 coefficients mu: the Dirichlet-tested identity part.
    pub fn duality_apply_transposed(&self, mu: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.n_dirichlet];
        for &(t, v, w) in &self.duality {
            out[v] += w * mu[t];
        }
        out
    }

    /// Add alpha times the duality matrix (n_flux x n_dirichlet) into a
    /// dense block at the given offset.
    pub fn duality_add_into(&self, out: &mut CMatrix, r0: usize, c0: usize, alpha: Complex64) {
        for &(t, v, w) in &self.duality {
            out[(r0 + t, c0 + v)] += alpha * w;
        }
    }

    /// Transposed variant (n_dirichlet x n_flux).
    pub fn duality_t_add_into(&self, out: &mut CMatrix, r0: usize, c0: usize, alpha: Complex64) {
        for &(t, v, w) in &self.duality {
            out[(r0 + v, c0 + t)] += alpha * w;
        }
    }

    pub fn p1_mass_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_dirichlet, self.n_dirichlet);
        for &(i, j, w) in &self.p1_mass {
            m[(i, j)] += Complex64::new(w, 0.0);
        }
        m
    }

    /// Dual norm of a functional on the flux space (diagonal mass).
    pub fn flux_dual_norm(&self, r: &[Complex64]) -> f64 {
        r.iter()
            .zip(&self.p0_mass)
            .map(|(v, a)| v.norm_sqr() / a)
            .sum::<f64>()
            .sqrt()
    }

    /// Dual norm of a functional on the Dirichlet space (P1 mass inverse).
    pub fn dirichlet_dual_norm(&self, r: &[Complex64]) -> Result<f64> {
        let m = self.p1_mass_dense();
        let x = m.lu()?.solve(r)?;
        let ip: Complex64 = r.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        Ok(ip.re.max(0.0).sqrt())
    }
}

/// Dense Galerkin matrices of the four boundary operators at one scalar
/// frequency with Re(s) > 0.
#[derive(Debug, Clone)]
pub struct BoundaryOperatorSet {
    pub s: Complex64,
    /// n_flux x n_flux single layer.
    pub v: CMatrix,
    /// n_flux x n_dirichlet double layer.
    pub k: CMatrix,
    /// n_dirichlet x n_flux adjoint double layer.
    pub kt: CMatrix,
    /// n_dirichlet x n_dirichlet hypersingular (regularized).
    pub w: CMatrix,
}

/// Stage-block operator set at a matrix frequency B (spectrum in the right
/// half-plane); each matrix is (m*n) x (m*n') with stage-major blocks.
#[derive(Debug, Clone)]
pub struct BlockOperatorSet {
    pub stages: usize,
    pub v: CMatrix,
    pub k: CMatrix,
    pub kt: CMatrix,
    pub w: CMatrix,
}

/// Surface curl of the P1 hat function of local vertex `a`: constant per
/// panel, (p_{a+1} - p_{a+2}) / (2 area) for outward orientation.
fn curl_vectors(mesh: &SurfaceMesh, t: usize) -> [Point3; 3] {
    let p = mesh.corners(t);
    let inv2a = 1.0 / (2.0 * mesh.areas[t]);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        let q = p[(i + 1) % 3];
        let r = p[(i + 2) % 3];
        out[i] = [
            (q[0] - r[0]) * inv2a,
            (q[1] - r[1]) * inv2a,
            (q[2] - r[2]) * inv2a,
        ];
    }
    out
}

/// Chart = corner points in a chosen order plus the map from chart corner
/// index to mesh-local corner index.
#[derive(Clone, Copy)]
struct Chart {
    corners: [Point3; 3],
    perm: [usize; 3],
}

impl Chart {
    fn natural(mesh: &SurfaceMesh, t: usize) -> Self {
        Self {
            corners: mesh.corners(t),
            perm: [0, 1, 2],
        }
    }

    fn with_order(mesh: &SurfaceMesh, t: usize, perm: [usize; 3]) -> Self {
        let p = mesh.corners(t);
        Self {
            corners: [p[perm[0]], p[perm[1]], p[perm[2]]],
            perm,
        }
    }

    #[inline]
    fn point(&self, u: f64, v: f64) -> Point3 {
        let [p1, p2, p3] = self.corners;
        [
            p1[0] + u * (p2[0] - p1[0]) + v * (p3[0] - p2[0]),
            p1[1] + u * (p2[1] - p1[1]) + v * (p3[1] - p2[1]),
            p1[2] + u * (p2[2] - p1[2]) + v * (p3[2] - p2[2]),
        ]
    }

    /// Barycentric values in mesh-local corner order.
    #[inline]
    fn shape(&self, u: f64, v: f64) -> [f64; 3] {
        let l = barycentric(u, v);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[self.perm[i]] = l[i];
        }
        out
    }
}

/// All weakly singular moments of one ordered panel pair.
#[derive(Clone, Copy)]
pub(crate) struct PairMoments {
    /// II Phi
    pub(crate) i0: Complex64,
    /// II Phi l_a(x) l_b(y), mesh-local indices.
    pub(crate) i1: [[Complex64; 3]; 3],
    /// II d_{n(y)}Phi l_b(y)
    pub(crate) jy: [Complex64; 3],
    /// II d_{n(x)}Phi l_a(x)
    pub(crate) jx: [Complex64; 3],
}

impl PairMoments {
    fn zero() -> Self {
        Self {
            i0: Complex64::ZERO,
            i1: [[Complex64::ZERO; 3]; 3],
            jy: [Complex64::ZERO; 3],
            jx: [Complex64::ZERO; 3],
        }
    }
}

fn edge_chart(mesh: &SurfaceMesh, t: usize, shared: &[usize; 2]) -> Chart {
    let third = (0..3).find(|i| !shared.contains(i)).unwrap();
    Chart::with_order(mesh, t, [shared[0], shared[1], third])
}

fn vertex_chart(mesh: &SurfaceMesh, t: usize, shared: usize) -> Chart {
    let mut rest = (0..3).filter(|&i| i != shared);
    let a = rest.next().unwrap();
    let b = rest.next().unwrap();
    Chart::with_order(mesh, t, [shared, a, b])
}

pub(crate) fn pair_moments(
    mesh: &SurfaceMesh,
    s: Complex64,
    tx: usize,
    ty: usize,
    singular_order: usize,
) -> PairMoments {
    let (relation, shared) = mesh.relation(tx, ty);
    let nx = mesh.normals[tx];
    let ny = mesh.normals[ty];
    let jac = 4.0 * mesh.areas[tx] * mesh.areas[ty];
    let mut m = PairMoments::zero();
    let four_pi = 4.0 * std::f64::consts::PI;

    let skip_normal = relation == PanelRelation::Identical;
    let mut visit = |w: f64, xr: (f64, f64), yr: (f64, f64), cx: &Chart, cy: &Chart| {
        let x = cx.point(xr.0, xr.1);
        let y = cy.point(yr.0, yr.1);
        let d = sub(x, y);
        let r = dot(d, d).sqrt();
        let es = (-s * r).exp();
        let phi = es / (four_pi * r);
        let wj = w * jac;
        let lx = cx.shape(xr.0, xr.1);
        let ly = cy.shape(yr.0, yr.1);
        let wphi = wj * phi;
        m.i0 += wphi;
        for a in 0..3 {
            for b in 0..3 {
                m.i1[a][b] += wphi * lx[a] * ly[b];
            }
        }
        if !skip_normal {
            // grad_x Phi = gf (x - y); d_{n(y)}Phi = -n_y . grad_x Phi.
            let gf = -(1.0 + s * r) * es / (four_pi * r * r * r);
            let dnx = wj * gf * dot(nx, d);
            let dny = -wj * gf * dot(ny, d);
            for b in 0..3 {
                m.jy[b] += dny * ly[b];
            }
            for a in 0..3 {
                m.jx[a] += dnx * lx[a];
            }
        }
    };

    match relation {
        PanelRelation::Identical => {
            // Flat panel: n . (x - y) = 0, the double-layer moments vanish.
            let chart = Chart::natural(mesh, tx);
            visit_coincident(singular_order, &mut |w, xr, yr| {
                visit(w, xr, yr, &chart, &chart)
            });
        }
        PanelRelation::SharedEdge => {
            // Canonical edge direction (ascending global index) on both
            // charts, so the transposed pair integrates the same points and
            // the assembled V and W stay symmetric to round-off.
            let ga = mesh.triangles[tx][shared[0].0];
            let gb = mesh.triangles[tx][shared[1].0];
            let (first, second) = if ga <= gb { (ga, gb) } else { (gb, ga) };
            let order_for = |t: usize| -> [usize; 2] {
                let tri = mesh.triangles[t];
                let la = (0..3).find(|&i| tri[i] == first).unwrap();
                let lb = (0..3).find(|&i| tri[i] == second).unwrap();
                [la, lb]
            };
            let cx = edge_chart(mesh, tx, &order_for(tx));
            let cy = edge_chart(mesh, ty, &order_for(ty));
            visit_common_edge(singular_order, &mut |w, xr, yr| {
                visit(w, xr, yr, &cx, &cy)
            });
        }
        PanelRelation::SharedVertex => {
            let cx = vertex_chart(mesh, tx, shared[0].0);
            let cy = vertex_chart(mesh, ty, shared[0].1);
            visit_common_vertex(singular_order, &mut |w, xr, yr| {
                visit(w, xr, yr, &cx, &cy)
            });
        }
        PanelRelation::Disjoint => {
            let cx = Chart::natural(mesh, tx);
            let cy = Chart::natural(mesh, ty);
            let near = dist(mesh.centroids[tx], mesh.centroids[ty])
                < 2.0 * mesh.diameters[tx].max(mesh.diameters[ty]);
            let rule = if near {
                TriangleRule::Degree4
            } else {
                TriangleRule::Degree2
            };
            visit_regular(rule, &mut |w, xr, yr| visit(w, xr, yr, &cx, &cy));
        }
    }
    m
}

/// Assemble the four Galerkin operators at one scalar frequency.
pub fn assemble_operators(
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
    s: Complex64,
) -> Result<BoundaryOperatorSet> {
    assemble_operators_with_order(mesh, spaces, s, SINGULAR_ORDER)
}

/// Same with an explicit singular quadrature order (used by the
/// self-convergence diagnostics).
pub fn assemble_operators_with_order(
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
    s: Complex64,
    singular_order: usize,
) -> Result<BoundaryOperatorSet> {
    if s.re <= 0.0 {
        return Err(Error::Domain(format!(
            "boundary operators require Re(s) > 0, got {s}"
        )));
    }
    let nt = spaces.n_flux;
    let nx = spaces.n_dirichlet;
    let mut v = CMatrix::zeros(nt, nt);
    let mut k = CMatrix::zeros(nt, nx);
    let mut kt = CMatrix::zeros(nx, nt);
    let mut w = CMatrix::zeros(nx, nx);
    let s2 = s * s;

    // Row-panel contributions computed in parallel chunks and scattered
    // serially: W and K^T rows are vertex-indexed and overlap across row
    // panels.
    struct RowPart {
        v_row: Vec<Complex64>,
        k_row: Vec<Complex64>,
        kt_rows: [Vec<Complex64>; 3],
        w_rows: [Vec<Complex64>; 3],
    }
    let chunk = 64usize;
    let mut tx0 = 0;
    while tx0 < nt {
        let tx1 = (tx0 + chunk).min(nt);
        let parts: Vec<RowPart> = par::par_map(tx1 - tx0, |off| {
            let tx = tx0 + off;
            let curl_x = curl_vectors(mesh, tx);
            let mut part = RowPart {
                v_row: vec![Complex64::ZERO; nt],
                k_row: vec![Complex64::ZERO; nx],
                kt_rows: std::array::from_fn(|_| vec![Complex64::ZERO; nt]),
                w_rows: std::array::from_fn(|_| vec![Complex64::ZERO; nx]),
            };
            for ty in 0..nt {
                let m = pair_moments(mesh, s, tx, ty, singular_order);
                let curl_y = curl_vectors(mesh, ty);
                let nn = dot(mesh.normals[tx], mesh.normals[ty]);
                part.v_row[ty] = m.i0;
                for b in 0..3 {
                    part.k_row[mesh.triangles[ty][b]] += m.jy[b];
                }
                for a in 0..3 {
                    part.kt_rows[a][ty] += m.jx[a];
                    for b in 0..3 {
                        let gb = mesh.triangles[ty][b];
                        part.w_rows[a][gb] +=
                            dot(curl_x[a], curl_y[b]) * m.i0 + s2 * nn * m.i1[a][b];
                    }
                }
            }
            part
        });
        for (off, part) in parts.into_iter().enumerate() {
            let tx = tx0 + off;
            for ty in 0..nt {
                v[(tx, ty)] = part.v_row[ty];
            }
            for j in 0..nx {
                k[(tx, j)] += part.k_row[j];
            }
            for a in 0..3 {
                let ga = mesh.triangles[tx][a];
                for ty in 0..nt {
                    kt[(ga, ty)] += part.kt_rows[a][ty];
                }
                for j in 0..nx {
                    w[(ga, j)] += part.w_rows[a][j];
                }
            }
        }
        tx0 = tx1;
    }
    Ok(BoundaryOperatorSet { s, v, k, kt, w })
}

/// Stage-block operators at a matrix wave number B: diagonalize B and
/// recombine scalar-frequency assemblies; trapezoidal resolvent contour if
/// the eigenvector basis is unusable. All four operators share the same
/// per-frequency assemblies.
pub fn assemble_matrix_frequency(
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
    b: &CMatrix,
) -> Result<BlockOperatorSet> {
    let m = b.rows();
    let nt = spaces.n_flux;
    let nx = spaces.n_dirichlet;
    let eig = eig_small(b)?;
    let mut out = BlockOperatorSet {
        stages: m,
        v: CMatrix::zeros(m * nt, m * nt),
        k: CMatrix::zeros(m * nt, m * nx),
        kt: CMatrix::zeros(m * nx, m * nt),
        w: CMatrix::zeros(m * nx, m * nx),
    };
    let add_weighted =
        |out: &mut BlockOperatorSet, ops: &BoundaryOperatorSet, coeff: &[Vec<Complex64>]| {
            for (r, row) in coeff.iter().enumerate() {
                for (c, &alpha) in row.iter().enumerate() {
                    if alpha.norm() == 0.0 {
                        continue;
                    }
                    out.v.add_block(r * nt, c * nt, alpha, &ops.v);
                    out.k.add_block(r * nt, c * nx, alpha, &ops.k);
                    out.kt.add_block(r * nx, c * nt, alpha, &ops.kt);
                    out.w.add_block(r * nx, c * nx, alpha, &ops.w);
                }
            }
        };

    if eig.is_reliable() {
        for (i, &li) in eig.values.iter().enumerate() {
            if li.re <= 0.0 {
                return Err(Error::Domain(format!(
                    "matrix wave number has eigenvalue {li} outside the right half-plane"
                )));
            }
            let ops = assemble_operators(mesh, spaces, li)?;
            let coeff: Vec<Vec<Complex64>> = (0..m)
                .map(|r| {
                    (0..m)
                        .map(|c| eig.vectors[(r, i)] * eig.vectors_inv[(i, c)])
                        .collect()
                })
                .collect();
            add_weighted(&mut out, &ops, &coeff);
        }
        return Ok(out);
    }

    // Resolvent contour around the spectrum.
    let center = eig.values.iter().sum::<Complex64>() / m as f64;
    let maxdist = eig
        .values
        .iter()
        .fold(0.0f64, |acc, v| acc.max((v - center).norm()));
    let radius = maxdist + (0.25 * maxdist).max(0.1 * (1.0 + center.norm()));
    for q in 0..CONTOUR_NODES {
        let theta = 2.0 * std::f64::consts::PI * q as f64 / CONTOUR_NODES as f64;
        let e = Complex64::new(theta.cos(), theta.sin());
        let lambda = center + radius * e;
        if lambda.re <= 0.0 {
            return Err(Error::Domain(
                "resolvent contour leaves the right half-plane".into(),
            ));
        }
        let mut shifted = b.scale(-Complex64::ONE);
        for i in 0..m {
            shifted[(i, i)] += lambda;
        }
        let resolvent = shifted.inverse()?;
        let ops = assemble_operators(mesh, spaces, lambda)?;
        let wq = e * (radius / CONTOUR_NODES as f64);
        let coeff: Vec<Vec<Complex64>> = (0..m)
            .map(|r| (0..m).map(|c| wq * resolvent[(r, c)]).collect())
            .collect();
        add_weighted(&mut out, &ops, &coeff);
    }
    Ok(out)
}

/// Evaluation matrices of the single and double layer potentials at a set
/// of off-surface points: `s_mat` maps flux coefficients and `d_mat` maps
/// Dirichlet coefficients to point values. Points closer to a panel than
/// one local diameter are flagged near-field (still computed).
#[derive(Debug, Clone)]
pub struct PotentialMatrices {
    pub s_mat: CMatrix,
    pub d_mat: CMatrix,
    pub near_field: Vec<bool>,
}

pub fn evaluate_potentials(
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
    points: &[Point3],
    s: Complex64,
) -> Result<PotentialMatrices> {
    if s.re <= 0.0 {
        return Err(Error::Domain(format!(
            "potential evaluation requires Re(s) > 0, got {s}"
        )));
    }
    let npts = points.len();
    let four_pi = 4.0 * std::f64::consts::PI;
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>, bool)> = par::par_map(npts, |p| {
        let x = points[p];
        let mut srow = vec![Complex64::ZERO; spaces.n_flux];
        let mut drow = vec![Complex64::ZERO; spaces.n_dirichlet];
        let mut near = false;
        for t in 0..mesh.n_triangles() {
            let d = dist(x, mesh.centroids[t]);
            if d < mesh.diameters[t] {
                near = true;
            }
            let rule = if d < 2.0 * mesh.diameters[t] {
                TriangleRule::Degree6
            } else {
                TriangleRule::Degree4
            };
            let chart = Chart::natural(mesh, t);
            let ny = mesh.normals[t];
            let area = mesh.areas[t];
            for (l, wq) in triangle_rule(rule) {
                let (u, v) = crate::bem::quad::from_barycentric(l);
                let y = chart.point(u, v);
                let dvec = sub(x, y);
                let r = dot(dvec, dvec).sqrt();
                let es = (-s * r).exp();
                srow[t] += area * wq * es / (four_pi * r);
                let gf = -(1.0 + s * r) * es / (four_pi * r * r * r);
                let dny = -gf * dot(ny, dvec);
                let shape = chart.shape(u, v);
                for b in 0..3 {
                    drow[mesh.triangles[t][b]] += area * wq * dny * shape[b];
                }
            }
        }
        (srow, drow, near)
    });
    let mut s_mat = CMatrix::zeros(npts, spaces.n_flux);
    let mut d_mat = CMatrix::zeros(npts, spaces.n_dirichlet);
    let mut near_field = Vec::with_capacity(npts);
    for (p, (srow, drow, near)) in rows.into_iter().enumerate() {
        for (j, v) in srow.into_iter().enumerate() {
            s_mat[(p, j)] = v;
        }
        for (j, v) in drow.into_iter().enumerate() {
            d_mat[(p, j)] = v;
        }
        near_field.push(near);
    }
    Ok(PotentialMatrices {
        s_mat,
        d_mat,
        near_field,
    })
}

/// Discrete residual of the exterior Calderón identities for given traces
/// (gamma u, dn u) of an exterior solution:
///
/// ```text
/// row 1 (flux test):      (1/2 - K) gamma_u + V dn_u   = 0
/// row 2 (Dirichlet test): W gamma_u + (1/2 + K^T) dn_u = 0
/// ```
///
/// Returns the dual norms of both rows.
pub fn calderon_residual(
    mesh: &SurfaceMesh,
    spaces: &TraceSpaces,
    s: Complex64,
    gamma_u: &[Complex64],
    dn_u: &[Complex64],
) -> Result<(f64, f64)> {
    let ops = assemble_operators(mesh, spaces, s)?;
    let (r1, r2) = calderon_residual_with(spaces, &ops, gamma_u, dn_u);
    let n1 = spaces.flux_dual_norm(&r1);
    let n2 = spaces.dirichlet_dual_norm(&r2)?;
    Ok((n1, n2))
}

/// Residual vectors with preassembled operators.
pub fn calderon_residual_with(
    spaces: &TraceSpaces,
    ops: &BoundaryOperatorSet,
    gamma_u: &[Complex64],
    dn_u: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let half = Complex64::new(0.5, 0.0);
    let mut r1 = spaces.duality_apply(gamma_u);
    let kg = ops.k.matvec(gamma_u);
    let vd = ops.v.matvec(dn_u);
    for i in 0..r1.len() {
        r1[i] = half * r1[i] - kg[i] + vd[i];
    }
    let mut r2 = spaces.duality_apply_transposed(dn_u);
    let wg = ops.w.matvec(gamma_u);
    let ktd = ops.kt.matvec(dn_u);
    for i in 0..r2.len() {
        r2[i] = half * r2[i] + wg[i] + ktd[i];
    }
    (r1, r2)
}
