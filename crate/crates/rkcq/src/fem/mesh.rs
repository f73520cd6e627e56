//! Structured interior meshes: 1D intervals and 3D boxes split into
//! tetrahedra, with boundary extraction matching the surface mesh exactly.

use std::collections::HashMap;

use crate::bem::mesh::{cross, dot, sub, Point3, SurfaceMesh};
use crate::error::{Error, Result};

/// Uniform mesh of the interval (a, b) with n elements.
#[derive(Debug, Clone)]
pub struct IntervalMesh {
    pub a: f64,
    pub b: f64,
    pub n_elements: usize,
    pub vertices: Vec<f64>,
}

pub fn build_interval_mesh(a: f64, b: f64, n: usize) -> Result<IntervalMesh> {
    if n == 0 {
        return Err(Error::Mesh("interval mesh needs at least one element".into()));
    }
    if !(b > a) {
        return Err(Error::Mesh(format!("invalid interval ({a}, {b})")));
    }
    let h = (b - a) / n as f64;
    let vertices = (0..=n).map(|i| a + i as f64 * h).collect();
    Ok(IntervalMesh {
        a,
        b,
        n_elements: n,
        vertices,
    })
}

impl IntervalMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_elements as f64
    }

    /// Degrees of freedom carrying boundary traces: the two endpoints.
    pub fn boundary_dofs(&self) -> [usize; 2] {
        [0, self.n_elements]
    }
}

/// Tetrahedral mesh of a cube, six tets per structured cell, with the
/// extracted boundary surface and the volume-to-surface vertex map.
#[derive(Debug, Clone)]
pub struct TetMesh {
    pub vertices: Vec<Point3>,
    pub tets: Vec<[usize; 4]>,
    pub surface: SurfaceMesh,
    /// Surface vertex index -> volume vertex index.
    pub surface_to_volume: Vec<usize>,
    /// Mesh width (cell edge length).
    pub h: f64,
}

/// Cube of given side centered at `center`, `n` cells per direction, each
/// cell split into 6 tetrahedra sharing the main diagonal (conforming).
pub fn build_box_mesh(center: Point3, side: f64, n: usize) -> Result<TetMesh> {
    if n == 0 {
        return Err(Error::Mesh("box mesh needs at least one subdivision".into()));
    }
    if side <= 0.0 {
        return Err(Error::Mesh("box side must be positive".into()));
    }
    let np = n + 1;
    let h = side / n as f64;
    let origin = [
        center[0] - side / 2.0,
        center[1] - side / 2.0,
        center[2] - side / 2.0,
    ];
    let vid = |i: usize, j: usize, k: usize| (i * np + j) * np + k;
    let mut vertices = Vec::with_capacity(np * np * np);
    for i in 0..np {
        for j in 0..np {
            for k in 0..np {
                vertices.push([
                    origin[0] + i as f64 * h,
                    origin[1] + j as f64 * h,
                    origin[2] + k as f64 * h,
                ]);
            }
        }
    }

    // Kuhn split: walk from corner 0 to the opposite corner along each of
    // the six axis orderings; every tet contains the main diagonal, so
    // neighboring cells match.
    const ORDERS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let base = [i, j, k];
                for order in ORDERS {
                    let mut corner = base;
                    let mut path = [vid(base[0], base[1], base[2]), 0, 0, 0];
                    for (step, &axis) in order.iter().enumerate() {
                        corner[axis] += 1;
                        path[step + 1] = vid(corner[0], corner[1], corner[2]);
                    }
                    tets.push(orient_tet(&vertices, path));
                }
            }
        }
    }

    let (surface, surface_to_volume) = extract_surface(&vertices, &tets)?;
    Ok(TetMesh {
        vertices,
        tets,
        surface,
        surface_to_volume,
        h,
    })
}

fn orient_tet(vertices: &[Point3], t: [usize; 4]) -> [usize; 4] {
    if tet_volume(vertices, t) < 0.0 {
        [t[0], t[2], t[1], t[3]]
    } else {
        t
    }
}

pub fn tet_volume(vertices: &[Point3], t: [usize; 4]) -> f64 {
    let a = sub(vertices[t[1]], vertices[t[0]]);
    let b = sub(vertices[t[2]], vertices[t[0]]);
    let c = sub(vertices[t[3]], vertices[t[0]]);
    dot(cross(a, b), c) / 6.0
}

/// Boundary faces are those appearing in exactly one tet; they are oriented
/// so the normal points away from the opposite tet vertex (outward).
fn extract_surface(
    vertices: &[Point3],
    tets: &[[usize; 4]],
) -> Result<(SurfaceMesh, Vec<usize>)> {
    // Face i of a tet is the one opposite local vertex i; the listed order
    // gives outward orientation for positively oriented tets.
    const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
    let mut count: HashMap<[usize; 3], ([usize; 3], usize)> = HashMap::new();
    for t in tets {
        for f in FACES {
            let tri = [t[f[0]], t[f[1]], t[f[2]]];
            let mut key = tri;
            key.sort_unstable();
            let entry = count.entry(key).or_insert((tri, 0));
            entry.1 += 1;
        }
    }
    let mut volume_to_surface: HashMap<usize, usize> = HashMap::new();
    let mut surface_to_volume = Vec::new();
    let mut surf_vertices: Vec<Point3> = Vec::new();
    let mut surf_triangles = Vec::new();
    // Deterministic order: sort boundary faces by their sorted key.
    let mut boundary: Vec<[usize; 3]> = count
        .iter()
        .filter(|(_, (_, c))| *c == 1)
        .map(|(k, _)| *k)
        .collect();
    boundary.sort_unstable();
    for key in boundary {
        let tri = count[&key].0;
        let mut stri = [0usize; 3];
        for (slot, &v) in tri.iter().enumerate() {
            let si = *volume_to_surface.entry(v).or_insert_with(|| {
                surf_vertices.push(vertices[v]);
                surface_to_volume.push(v);
                surf_vertices.len() - 1
            });
            stri[slot] = si;
        }
        surf_triangles.push(stri);
    }
    let surface = SurfaceMesh::new(surf_vertices, surf_triangles)?;
    Ok((surface, surface_to_volume))
}

impl TetMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.tets
            .iter()
            .map(|&t| tet_volume(&self.vertices, t))
            .sum()
    }
}
