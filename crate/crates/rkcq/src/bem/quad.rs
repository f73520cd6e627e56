//! Quadrature rules for panel integrals.
//!
//! Reference element: T = {(u, v) : 0 <= v <= u <= 1} with the affine chart
//! chi(u, v) = P1 + u (P2 - P1) + v (P3 - P2), so the edge P1->P2 is v = 0.
//! Barycentric coordinates of (u, v) are (1-u, u-v, v).
//!
//! Singular panel pairs (identical, shared edge, shared vertex) use
//! relative-coordinate transformations that remove the kernel singularity:
//! after the substitution the integrand of a 1/r kernel is bounded on
//! [0,1]^4 and a fixed tensor Gauss rule applies. Each transform was derived
//! by splitting the difference domain into radial sectors; the volume
//! identities are pinned in the unit tests and the kernels are validated
//! against a subdivision oracle in the integration tests.

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n with Chebyshev initial guess, on [-1, 1].
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Symmetric triangle rule: barycentric triples with weights summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleRule {
    Centroid,
    Degree2,
    Degree4,
    Degree6,
}

pub fn triangle_rule(rule: TriangleRule) -> Vec<([f64; 3], f64)> {
    match rule {
        TriangleRule::Centroid => vec![([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)],
        TriangleRule::Degree2 => {
            let mut pts = Vec::new();
            for i in 0..3 {
                let mut l = [1.0 / 6.0; 3];
                l[i] = 2.0 / 3.0;
                pts.push((l, 1.0 / 3.0));
            }
            pts
        }
        TriangleRule::Degree4 => {
            let mut pts = Vec::new();
            for (a, w) in [
                (0.816847572980459f64, 0.109951743655322f64),
                (0.108103018168070, 0.223381589678011),
            ] {
                let b = (1.0 - a) / 2.0;
                for i in 0..3 {
                    let mut l = [b; 3];
                    l[i] = a;
                    pts.push((l, w));
                }
            }
            pts
        }
        TriangleRule::Degree6 => {
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
            // six-point orbit
            let (a, b, w) = (0.636502499121399, 0.310352451033785, 0.082851075618374);
            let c = 1.0 - a - b;
            for perm in [
                [a, b, c],
                [a, c, b],
                [b, a, c],
                [b, c, a],
                [c, a, b],
                [c, b, a],
            ] {
                pts.push((perm, w));
            }
            pts
        }
    }
}

/// Barycentric coordinates of a reference point (u, v).
#[inline]
pub fn barycentric(u: f64, v: f64) -> [f64; 3] {
    [1.0 - u, u - v, v]
}

/// Reference point of barycentric coordinates.
#[inline]
pub fn from_barycentric(l: [f64; 3]) -> (f64, f64) {
    (1.0 - l[0], l[2])
}

/// Visit tensor quadrature points for a disjoint panel pair. The visitor
/// receives (weight, x_ref, y_ref); weights sum to 1/4 = |T|^2, so entries
/// scale by (2 Ax)(2 Ay).
pub fn visit_regular(rule: TriangleRule, visit: &mut dyn FnMut(f64, (f64, f64), (f64, f64))) {
    let pts = triangle_rule(rule);
    for (lx, wx) in &pts {
        let x = from_barycentric(*lx);
        for (ly, wy) in &pts {
            let y = from_barycentric(*ly);
            // barycentric weights integrate to 1 over the unit-area triangle;
            // here |T| = 1/2, hence the 1/4.
            visit(0.25 * wx * wy, x, y);
        }
    }
}

/// Identical panels. Three radial sectors in the relative coordinate
/// z = x - y; each point is visited in both orderings.
pub fn visit_coincident(order: usize, visit: &mut dyn FnMut(f64, (f64, f64), (f64, f64))) {
    let g = gauss_legendre_01(order);
    for &(w, ww) in &g {
        for &(eta, we) in &g {
            for &(s, ws) in &g {
                for &(t, wt) in &g {
                    let weight = ww * we * ws * wt * w * (1.0 - w) * (1.0 - w) * s;
                    // sector 1: z = (w, w eta)
                    let x1 = w + (1.0 - w) * s;
                    let x2 = w * eta + (1.0 - w) * s * t;
                    let p = (x1, x2);
                    let q = (x1 - w, x2 - w * eta);
                    visit(weight, p, q);
                    visit(weight, q, p);
                    // sector 2: z = (w eta, w)
                    let x1 = w + (1.0 - w) * s;
                    let x2 = w + (1.0 - w) * s * t;
                    let p = (x1, x2);
                    let q = (x1 - w * eta, x2 - w);
                    visit(weight, p, q);
                    visit(weight, q, p);
                    // sector 3: z = (-a, b), a = w(1-eta), b = w eta
                    let a = w * (1.0 - eta);
                    let b = w * eta;
                    let x1 = b + (1.0 - w) * s;
                    let x2 = b + (1.0 - w) * s * t;
                    let p = (x1, x2);
                    let q = (x1 + a, x2 - b);
                    visit(weight, p, q);
                    visit(weight, q, p);
                }
            }
        }
    }
}

/// Panels sharing the edge v = 0 (both charts must list the shared edge as
/// P1 -> P2 with the same orientation). Singular set: x = (mu, 0) = y.
pub fn visit_common_edge(order: usize, visit: &mut dyn FnMut(f64, (f64, f64), (f64, f64))) {
    let g = gauss_legendre_01(order);
    for &(mu, wm) in &g {
        for &(xi, wx) in &g {
            for &(w, ww) in &g {
                for &(eta, we) in &g {
                    let base = wm * wx * ww * we * mu * mu * mu * xi * xi;
                    // region A: p_hat >= q_hat + d_hat
                    {
                        let p_hat = xi;
                        let q_hat = xi * w * eta;
                        let d_hat = xi * w * (1.0 - eta);
                        let weight = base * w;
                        let x = (mu, mu * p_hat);
                        let y = (mu - mu * d_hat, mu * q_hat);
                        visit(weight, x, y);
                        visit(weight, y, x);
                    }
                    // region B: q_hat + d_hat >= p_hat
                    {
                        let p_hat = xi * w;
                        let q_hat = xi * eta;
                        let d_hat = xi * (1.0 - eta);
                        let weight = base;
                        let x = (mu, mu * p_hat);
                        let y = (mu - mu * d_hat, mu * q_hat);
                        visit(weight, x, y);
                        visit(weight, y, x);
                    }
                }
            }
        }
    }
}

/// Panels sharing the vertex (0, 0) (both charts must list the shared
/// vertex as P1).
pub fn visit_common_vertex(order: usize, visit: &mut dyn FnMut(f64, (f64, f64), (f64, f64))) {
    let g = gauss_legendre_01(order);
    for &(xi, wx) in &g {
        for &(eta, we) in &g {
            for &(s, ws) in &g {
                for &(t, wt) in &g {
                    let weight = wx * we * ws * wt * xi * xi * xi * eta;
                    let x = (xi, xi * s);
                    let y = (xi * eta, xi * eta * t);
                    visit(weight, x, y);
                    visit(weight, y, x);
                }
            }
        }
    }
}
