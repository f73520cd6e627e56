//! 3D complex-frequency layer potentials and Galerkin boundary operators.

pub mod assemble;
pub mod mesh;
pub mod quad;

pub use assemble::{
    assemble_matrix_frequency, assemble_operators, assemble_operators_with_order,
    calderon_residual, calderon_residual_with, evaluate_potentials, fundamental_solution_3d,
    BlockOperatorSet, BoundaryOperatorSet, PotentialMatrices, TraceSpaces,
};
pub use mesh::{icosphere, PanelRelation, Point3, SurfaceMesh};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_box_mesh;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fundamental_solution_values() {
        // |x-y| = 1, s = 1: e^{-1}/(4 pi)
        let v = fundamental_solution_3d([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], c(1.0, 0.0)).unwrap();
        assert!((v.re - (-1.0f64).exp() / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(v.im.abs() < 1e-18);
        assert!((v.re - 0.0292749).abs() < 1e-6);

        // symmetry in the arguments
        let a = [0.3, -0.2, 0.9];
        let b = [-1.0, 0.4, 0.2];
        let s = c(2.0, 1.5);
        assert_eq!(
            fundamental_solution_3d(a, b, s).unwrap(),
            fundamental_solution_3d(b, a, s).unwrap()
        );

        // |x-y| = 2, s = 1+i: e^{-2}(cos 2 - i sin 2)/(8 pi)
        let v = fundamental_solution_3d([0.0; 3], [2.0, 0.0, 0.0], c(1.0, 1.0)).unwrap();
        let want = (-2.0f64).exp() * c((2.0f64).cos(), -(2.0f64).sin())
            / (8.0 * std::f64::consts::PI);
        assert!((v - want).norm() < 1e-15);

        // rejected inputs
        assert!(fundamental_solution_3d(a, a, s).is_err());
        assert!(fundamental_solution_3d(a, b, c(0.0, 1.0)).is_err());
    }

    #[test]
    fn icosphere_geometry() {
        let m = icosphere(2.0, 2).unwrap();
        let vol = m.enclosed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 8.0;
        assert!(vol > 0.9 * exact && vol < exact, "vol {vol} vs {exact}");
        for v in &m.vertices {
            assert!((mesh::norm(*v) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ascii_round_trip() {
        let m = build_box_mesh([0.5, 0.0, -0.25], 2.0, 1).unwrap().surface;
        let dir = std::env::temp_dir().join("rkcq_mesh_roundtrip.txt");
        m.write_ascii(&dir).unwrap();
        let m2 = SurfaceMesh::read_ascii(&dir).unwrap();
        assert_eq!(m.triangles, m2.triangles);
        for (a, b) in m.vertices.iter().zip(&m2.vertices) {
            for d in 0..3 {
                assert_eq!(a[d], b[d]);
            }
        }
        let _ = std::fs::remove_file(dir);
    }

    #[test]
    fn partition_of_unity() {
        let m = build_box_mesh([0.0; 3], 2.0, 2).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        // <chi_i, sum_j phi_j> = area_i: P1 basis sums to one everywhere.
        let ones = vec![Complex64::ONE; spaces.n_dirichlet];
        let d = spaces.duality_apply(&ones);
        for (i, v) in d.iter().enumerate() {
            assert!((v.re - m.areas[i]).abs() < 1e-13);
            assert!(v.im.abs() < 1e-15);
        }
        // constants are exactly representable in the flux space
        let mu = vec![Complex64::ONE; spaces.n_flux];
        let dt = spaces.duality_apply_transposed(&mu);
        let total: f64 = dt.iter().map(|v| v.re).sum();
        assert!((total - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn operators_symmetry() {
        let m = build_box_mesh([0.0; 3], 2.0, 2).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let ops = assemble_operators(&m, &spaces, c(1.0, 0.5)).unwrap();
        let vt = ops.v.transpose();
        let rel_v = ops.v.sub(&vt).norm() / ops.v.norm();
        assert!(rel_v <= 1e-8, "V asymmetry {rel_v:.3e}");
        let wt = ops.w.transpose();
        let rel_w = ops.w.sub(&wt).norm() / ops.w.norm();
        assert!(rel_w <= 1e-8, "W asymmetry {rel_w:.3e}");
        let ktt = ops.k.transpose();
        let rel_k = ops.kt.sub(&ktt).norm() / ops.k.norm();
        assert!(rel_k <= 1e-8, "K^T vs K' deviation {rel_k:.3e}");
    }

    #[test]
    fn far_field_entry_matches_one_point_kernel() {
        // A pair separated by >= 10 local diameters needs a fine cube; use
        // the pair quadrature directly rather than a full assembly.
        let m = build_box_mesh([0.0; 3], 2.0, 10).unwrap().surface;
        let s = c(1.0, 0.3);
        let mut best = (0usize, 0usize, 0.0f64);
        for i in 0..m.n_triangles() {
            for j in 0..m.n_triangles() {
                let d = mesh::dist(m.centroids[i], m.centroids[j]);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (i, j, d) = best;
        assert!(
            d >= 9.5 * m.diameters[i].max(m.diameters[j]),
            "separation only {d} vs diameter {}",
            m.diameters[i]
        );
        let mom = assemble::pair_moments(&m, s, i, j, 4);
        let want = fundamental_solution_3d(m.centroids[i], m.centroids[j], s).unwrap()
            * m.areas[i]
            * m.areas[j];
        assert!(
            (mom.i0 - want).norm() <= 0.01 * want.norm(),
            "V[{i},{j}] = {} vs one-point {want}",
            mom.i0
        );
    }

    #[test]
    fn v_self_entry_positive_real() {
        let m = build_box_mesh([0.0; 3], 2.0, 1).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        for s in [c(0.5, 0.0), c(2.0, 0.0)] {
            let ops = assemble_operators(&m, &spaces, s).unwrap();
            for i in 0..m.n_triangles() {
                assert!(ops.v[(i, i)].re > 0.0, "V[{i},{i}] = {}", ops.v[(i, i)]);
            }
        }
    }

    #[test]
    fn singular_quadrature_self_convergence() {
        // Cauchy differences of V entries as the tensor Gauss order rises.
        let m = build_box_mesh([0.0; 3], 2.0, 2).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let s = c(1.5, 1.0);
        let o6 = assemble_operators_with_order(&m, &spaces, s, 6).unwrap();
        let o8 = assemble_operators_with_order(&m, &spaces, s, 8).unwrap();
        let o10 = assemble_operators_with_order(&m, &spaces, s, 10).unwrap();
        let scale = o10.v.max_abs();
        let d68 = o6.v.sub(&o8.v).max_abs() / scale;
        let d810 = o8.v.sub(&o10.v).max_abs() / scale;
        assert!(d810 < d68, "no convergence: {d68:.3e} then {d810:.3e}");
        assert!(d810 <= 1e-6, "order 8->10 relative Cauchy difference {d810:.3e}");
    }

    #[test]
    fn matrix_frequency_single_stage_reduces_to_scalar() {
        let m = build_box_mesh([0.0; 3], 2.0, 1).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let s = c(1.2, -0.7);
        let b = crate::linalg::CMatrix::from_rows(&[vec![s]]);
        let block = assemble_matrix_frequency(&m, &spaces, &b).unwrap();
        let scalar = assemble_operators(&m, &spaces, s).unwrap();
        assert!(block.v.sub(&scalar.v).norm() <= 1e-12 * scalar.v.norm());
        assert!(block.w.sub(&scalar.w).norm() <= 1e-12 * scalar.w.norm());
    }

    #[test]
    fn matrix_frequency_diagonal_is_block_diagonal() {
        let m = build_box_mesh([0.0; 3], 2.0, 1).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let (s1, s2) = (c(1.0, 0.4), c(2.0, -1.0));
        let mut b = crate::linalg::CMatrix::zeros(2, 2);
        b[(0, 0)] = s1;
        b[(1, 1)] = s2;
        let block = assemble_matrix_frequency(&m, &spaces, &b).unwrap();
        let ops1 = assemble_operators(&m, &spaces, s1).unwrap();
        let ops2 = assemble_operators(&m, &spaces, s2).unwrap();
        let nt = spaces.n_flux;
        for i in 0..nt {
            for j in 0..nt {
                assert!((block.v[(i, j)] - ops1.v[(i, j)]).norm() < 1e-12);
                assert!((block.v[(nt + i, nt + j)] - ops2.v[(i, j)]).norm() < 1e-12);
                assert!(block.v[(i, nt + j)].norm() < 1e-12);
                assert!(block.v[(nt + i, j)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_frequency_conjugation_identity() {
        // Full 2x2 wave number from the 2-stage Radau method at z=0.
        use crate::cq::wavenumber_matrix;
        use crate::tableau::{builtin_tableau, TableauKind};
        let t = builtin_tableau(TableauKind::RadauIIA2).unwrap();
        let b = wavenumber_matrix(&t, Complex64::ZERO, 0.1, 0.0).unwrap();
        let m = build_box_mesh([0.0; 3], 2.0, 1).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let block = assemble_matrix_frequency(&m, &spaces, &b).unwrap();
        // independent reconstruction: per-eigenvalue scalar assemblies
        // conjugated by the eigenvector matrix
        let eig = crate::linalg::eig_small(&b).unwrap();
        let nt = spaces.n_flux;
        let mut want = crate::linalg::CMatrix::zeros(2 * nt, 2 * nt);
        for (i, &li) in eig.values.iter().enumerate() {
            let ops = assemble_operators(&m, &spaces, li).unwrap();
            for r in 0..2 {
                for cc in 0..2 {
                    let coeff = eig.vectors[(r, i)] * eig.vectors_inv[(i, cc)];
                    want.add_block(r * nt, cc * nt, coeff, &ops.v);
                }
            }
        }
        let rel = block.v.sub(&want).norm() / want.norm();
        assert!(rel <= 1e-9, "conjugation identity violated: {rel:.3e}");
        assert!(block.v.max_abs().is_finite());
    }

    #[test]
    fn potentials_zero_densities() {
        let m = build_box_mesh([0.0; 3], 2.0, 1).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let pts = [[6.0, 0.0, 0.0], [0.1, 0.2, 0.0]];
        let pot = evaluate_potentials(&m, &spaces, &pts, c(1.0, 0.0)).unwrap();
        let zero_flux = vec![Complex64::ZERO; spaces.n_flux];
        let zero_dir = vec![Complex64::ZERO; spaces.n_dirichlet];
        let sv = pot.s_mat.matvec(&zero_flux);
        let dv = pot.d_mat.matvec(&zero_dir);
        assert!(sv.iter().chain(dv.iter()).all(|v| v.norm() == 0.0));
        assert!(!pot.near_field[0], "far point flagged near");
        assert!(pot.near_field[1], "near point not flagged");
    }

    #[test]
    fn calderon_zero_traces() {
        let m = build_box_mesh([0.0; 3], 2.0, 1).unwrap().surface;
        let spaces = TraceSpaces::new(&m);
        let (r1, r2) = calderon_residual(
            &m,
            &spaces,
            c(1.0, 0.0),
            &vec![Complex64::ZERO; spaces.n_dirichlet],
            &vec![Complex64::ZERO; spaces.n_flux],
        )
        .unwrap();
        assert_eq!(r1, 0.0);
        assert_eq!(r2, 0.0);
    }
}
