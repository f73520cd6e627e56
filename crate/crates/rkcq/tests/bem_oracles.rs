//! Independent oracles for the boundary-element kernels: a recursive
//! subdivision quadrature for the singular Galerkin integrals, the
//! point-source representation formula, and the Calderón residual decay.

use num_complex::Complex64;
use rkcq::bem::{
    assemble_operators, calderon_residual, evaluate_potentials, fundamental_solution_3d,
    icosphere, SurfaceMesh, TraceSpaces,
};
use rkcq::fem::build_box_mesh;
use rkcq::linalg::vec_norm;

type Point3 = [f64; 3];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn area(t: &[Point3; 3]) -> f64 {
    0.5 * dot(cross(sub(t[1], t[0]), sub(t[2], t[0])), [0.0; 3]).abs().max({
        let n = cross(sub(t[1], t[0]), sub(t[2], t[0]));
        0.5 * (dot(n, n)).sqrt() * 2.0
    }) / 1.0
}

/// Degree-6 barycentric rule reproduced locally so the oracle shares no
/// quadrature code with the implementation under test.
fn rule12() -> Vec<([f64; 3], f64)> {
    let mut pts = Vec::new();
    for (a, w) in [
        (0.873821971016996f64, 0.050844906370207f64),
        (0.501426509658179, 0.116786275726379),
    ] {
        let b = (1.0 - a) / 2.0;
        for i in 0..3 {
            let mut l = [b; 3];
            l[i] = a;
            pts.push((l, w));
        }
    }
    let (a, b, w) = (0.636502499121399, 0.310352451033785, 0.082851075618374);
    let cc = 1.0 - a - b;
    for perm in [
        [a, b, cc],
        [a, cc, b],
        [b, a, cc],
        [b, cc, a],
        [cc, a, b],
        [cc, b, a],
    ] {
        pts.push((perm, w));
    }
    pts
}

fn touching(tx: &[Point3; 3], ty: &[Point3; 3]) -> bool {
    let diam = |t: &[Point3; 3]| {
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                let e = sub(t[i], t[j]);
                d = d.max(dot(e, e).sqrt());
            }
        }
        d
    };
    let tol = 1e-12 * diam(tx).max(diam(ty));
    for a in tx {
        for b in ty {
            let e = sub(*a, *b);
            if dot(e, e).sqrt() <= tol {
                return true;
            }
        }
    }
    false
}

fn split(t: &[Point3; 3]) -> [[Point3; 3]; 4] {
    let mid = |a: Point3, b: Point3| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
    let m01 = mid(t[0], t[1]);
    let m12 = mid(t[1], t[2]);
    let m20 = mid(t[2], t[0]);
    [
        [t[0], m01, m20],
        [t[1], m12, m01],
        [t[2], m20, m12],
        [m01, m12, m20],
    ]
}

/// II_{tx x ty} Phi(x,y;s) by recursive subdivision: disjoint descendants
/// use a tensor degree-6 rule, touching descendants recurse; at the bottom
/// the touching contributions (which vanish like h^3) are dropped.
fn subdivision_oracle(tx: &[Point3; 3], ty: &[Point3; 3], s: Complex64, depth: usize) -> Complex64 {
    if !touching(tx, ty) {
        let r = rule12();
        let ax = area(tx);
        let ay = area(ty);
        let mut acc = Complex64::ZERO;
        for (lx, wx) in &r {
            let x = [
                lx[0] * tx[0][0] + lx[1] * tx[1][0] + lx[2] * tx[2][0],
                lx[0] * tx[0][1] + lx[1] * tx[1][1] + lx[2] * tx[2][1],
                lx[0] * tx[0][2] + lx[1] * tx[1][2] + lx[2] * tx[2][2],
            ];
            for (ly, wy) in &r {
                let y = [
                    ly[0] * ty[0][0] + ly[1] * ty[1][0] + ly[2] * ty[2][0],
                    ly[0] * ty[0][1] + ly[1] * ty[1][1] + ly[2] * ty[2][1],
                    ly[0] * ty[0][2] + ly[1] * ty[1][2] + ly[2] * ty[2][2],
                ];
                let d = sub(x, y);
                let r = dot(d, d).sqrt();
                acc += wx * wy * (-s * r).exp() / (4.0 * std::f64::consts::PI * r);
            }
        }
        return acc * ax * ay;
    }
    if depth == 0 {
        return Complex64::ZERO;
    }
    let mut acc = Complex64::ZERO;
    for cx in split(tx) {
        for cy in split(ty) {
            acc += subdivision_oracle(&cx, &cy, s, depth - 1);
        }
    }
    acc
}

#[test]
fn singular_entries_match_subdivision_oracle() {
    let mesh = build_box_mesh([0.0; 3], 2.0, 2).unwrap().surface;
    let spaces = TraceSpaces::new(&mesh);
    let s = c(1.0, 0.8);
    let ops = assemble_operators(&mesh, &spaces, s).unwrap();
    // one pair of each relation class
    let mut picked = [None::<(usize, usize)>; 3];
    'outer: for i in 0..mesh.n_triangles() {
        for j in 0..mesh.n_triangles() {
            let (rel, _) = mesh.relation(i, j);
            let slot = match rel {
                rkcq::bem::PanelRelation::Identical => 0,
                rkcq::bem::PanelRelation::SharedEdge => 1,
                rkcq::bem::PanelRelation::SharedVertex => 2,
                rkcq::bem::PanelRelation::Disjoint => continue,
            };
            if picked[slot].is_none() {
                picked[slot] = Some((i, j));
            }
            if picked.iter().all(|p| p.is_some()) {
                break 'outer;
            }
        }
    }
    for (slot, name, tol) in [(0usize, "coincident", 4e-3), (1, "edge", 2e-3), (2, "vertex", 1e-3)] {
        let (i, j) = picked[slot].unwrap();
        let tx = mesh.corners(i);
        let ty = mesh.corners(j);
        // The dropped touching contributions vanish first order in
        // 2^{-depth}; Richardson extrapolation removes the leading term.
        let i6 = subdivision_oracle(&tx, &ty, s, 6);
        let i7 = subdivision_oracle(&tx, &ty, s, 7);
        let want = 2.0 * i7 - i6;
        let got = ops.v[(i, j)];
        let rel_err = (got - want).norm() / want.norm();
        assert!(
            rel_err <= tol,
            "{name} pair ({i},{j}): assembled {got}, oracle {want}, rel {rel_err:.3e}"
        );
    }
}

/// Traces of the field of an interior point source: gamma = Phi(.,y0) at
/// the vertices, dn = normal derivative at the panel centroids.
fn point_source_traces(
    mesh: &SurfaceMesh,
    y0: Point3,
    s: Complex64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let gamma: Vec<Complex64> = mesh
        .vertices
        .iter()
        .map(|&x| fundamental_solution_3d(x, y0, s).unwrap())
        .collect();
    let dn: Vec<Complex64> = (0..mesh.n_triangles())
        .map(|t| {
            let x = mesh.centroids[t];
            let n = mesh.normals[t];
            let d = sub(x, y0);
            let r = dot(d, d).sqrt();
            let gf = -(1.0 + s * r) * (-s * r).exp() / (4.0 * std::f64::consts::PI * r * r * r);
            gf * dot(n, d)
        })
        .collect();
    (gamma, dn)
}

#[test]
fn point_source_representation_formula() {
    // The zero-extended exterior field X of an interior point source has
    // jumps [gamma X] = -phi, [dn X] = -psi, so -S psi + D phi must
    // reproduce Phi(., y0) outside and vanish inside, better under
    // refinement.
    let s = c(1.2, 0.9);
    let y0 = [0.2, -0.1, 0.15];
    let ext = [2.5, 1.0, -0.7];
    let interior = [-0.4, 0.35, 0.1];
    let mut prev_ext = f64::INFINITY;
    let mut prev_int = f64::INFINITY;
    for n in [2usize, 4, 8] {
        let mesh = build_box_mesh([0.0; 3], 2.0, n).unwrap().surface;
        let spaces = TraceSpaces::new(&mesh);
        let (gamma, dn) = point_source_traces(&mesh, y0, s);
        let pot = evaluate_potentials(&mesh, &spaces, &[ext, interior], s).unwrap();
        let sv = pot.s_mat.matvec(&dn);
        let dv = pot.d_mat.matvec(&gamma);
        let ext_val = -sv[0] + dv[0];
        let int_val = -sv[1] + dv[1];
        let want = fundamental_solution_3d(ext, y0, s).unwrap();
        let ext_err = (ext_val - want).norm() / want.norm();
        let int_err = int_val.norm();
        assert!(
            ext_err < prev_ext,
            "n={n}: exterior error {ext_err:.3e} did not improve over {prev_ext:.3e}"
        );
        assert!(
            int_err < prev_int,
            "n={n}: interior null-field {int_err:.3e} did not improve over {prev_int:.3e}"
        );
        prev_ext = ext_err;
        prev_int = int_err;
    }
    assert!(prev_ext < 2e-2, "final exterior error {prev_ext:.3e}");
}

#[test]
fn calderon_residual_decays_for_point_source() {
    let s = c(1.5, 2.0);
    let y0 = [0.1, 0.2, -0.05];
    let mut rows1 = Vec::new();
    let mut rows2 = Vec::new();
    for n in [2usize, 4, 8] {
        let mesh = build_box_mesh([0.0; 3], 2.0, n).unwrap().surface;
        let spaces = TraceSpaces::new(&mesh);
        let (gamma, dn) = point_source_traces(&mesh, y0, s);
        let (r1, r2) = calderon_residual(&mesh, &spaces, s, &gamma, &dn).unwrap();
        rows1.push(r1);
        rows2.push(r2);
    }
    for (name, rows) in [("flux row", &rows1), ("Dirichlet row", &rows2)] {
        for lvl in 0..rows.len() - 1 {
            let rate = (rows[lvl] / rows[lvl + 1]).log2();
            assert!(
                rate >= 1.0,
                "{name}: levels {:?} rate {rate:.2} < 1",
                rows
            );
        }
    }
}

#[test]
fn calderon_residual_large_for_random_traces() {
    // Negative control: non-solution traces must not look like solutions.
    let s = c(1.5, 2.0);
    let mesh = build_box_mesh([0.0; 3], 2.0, 4).unwrap().surface;
    let spaces = TraceSpaces::new(&mesh);
    let y0 = [0.1, 0.2, -0.05];
    let (gamma, dn) = point_source_traces(&mesh, y0, s);
    let (p1, p2) = calderon_residual(&mesh, &spaces, s, &gamma, &dn).unwrap();
    // deterministic pseudo-random traces of comparable size
    let scale = vec_norm(&gamma) / (gamma.len() as f64).sqrt();
    let junk_gamma: Vec<Complex64> = (0..gamma.len())
        .map(|i| {
            let x = (i as f64 * 0.7391 + 0.31).sin();
            let y = (i as f64 * 1.313 + 1.7).cos();
            scale * c(x, y)
        })
        .collect();
    let junk_dn: Vec<Complex64> = (0..dn.len())
        .map(|i| {
            let x = (i as f64 * 0.912 + 2.3).sin();
            let y = (i as f64 * 0.417 + 0.9).cos();
            scale * c(x, y)
        })
        .collect();
    let (j1, j2) = calderon_residual(&mesh, &spaces, s, &junk_gamma, &junk_dn).unwrap();
    assert!(j1 > 5.0 * p1, "flux row: junk {j1:.3e} vs solution {p1:.3e}");
    assert!(j2 > 5.0 * p2, "Dirichlet row: junk {j2:.3e} vs solution {p2:.3e}");
}

#[test]
fn icosphere_point_source() {
    // Same representation check on the curved built-in mesh.
    let s = c(1.0, 0.5);
    let y0 = [0.3, 0.0, -0.2];
    let ext = [0.0, 2.4, 0.8];
    let mesh = icosphere(1.0, 2).unwrap();
    let spaces = TraceSpaces::new(&mesh);
    let (gamma, dn) = point_source_traces(&mesh, y0, s);
    let pot = evaluate_potentials(&mesh, &spaces, &[ext], s).unwrap();
    let val = -pot.s_mat.matvec(&dn)[0] + pot.d_mat.matvec(&gamma)[0];
    let want = fundamental_solution_3d(ext, y0, s).unwrap();
    let rel = (val - want).norm() / want.norm();
    assert!(rel < 5e-2, "icosphere representation error {rel:.3e}");
}
