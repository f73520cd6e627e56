//! Triangulated closed surfaces and their validity checks.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

pub fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Point3, b: Point3) -> f64 {
    norm(sub(a, b))
}

/// Closed, consistently outward-oriented triangulated surface.
///
/// Dirichlet traces live on the vertices (continuous P1), Neumann traces on
/// the triangles (piecewise constant).
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    pub normals: Vec<Point3>,
    pub areas: Vec<f64>,
    pub centroids: Vec<Point3>,
    pub diameters: Vec<f64>,
}

/// How two panels touch; drives the singular quadrature choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelRelation {
    Identical,
    SharedEdge,
    SharedVertex,
    Disjoint,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("surface has no triangles".into()));
        }
        let mut bbox = 0.0f64;
        for v in &vertices {
            for w in &vertices[..1] {
                bbox = bbox.max(dist(*v, *w));
            }
        }
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (ti, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {ti} references missing vertex")));
            }
            let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let n = cross(sub(b, a), sub(c, a));
            let double_area = norm(n);
            if double_area <= 1e-14 * bbox * bbox {
                return Err(Error::Mesh(format!("triangle {ti} is degenerate")));
            }
            normals.push(scale(n, 1.0 / double_area));
            areas.push(0.5 * double_area);
            centroids.push(scale(add(add(a, b), c), 1.0 / 3.0));
            diameters.push(
                dist(a, b).max(dist(b, c)).max(dist(c, a)),
            );
        }
        let mesh = Self {
            vertices,
            triangles,
            normals,
            areas,
            centroids,
            diameters,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        // Closed orientable: each directed edge must appear exactly once,
        // and its reverse exactly once.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let edge = (t[e], t[(e + 1) % 3]);
                *edges.entry(edge).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count != 1 {
                return Err(Error::Mesh(format!(
                    "directed edge ({a},{b}) appears {count} times; surface not consistently oriented"
                )));
            }
            if !edges.contains_key(&(b, a)) {
                return Err(Error::Mesh(format!(
                    "edge ({a},{b}) has no partner; surface not closed"
                )));
            }
        }
        // Outward orientation: divergence-theorem volume must be positive.
        if self.enclosed_volume() <= 0.0 {
            return Err(Error::Mesh(
                "surface signed volume is not positive; orientation is inward".into(),
            ));
        }
        Ok(())
    }

    /// Volume via (1/3) sum of x . n dA over flat panels.
    pub fn enclosed_volume(&self) -> f64 {
        let mut vol = 0.0;
        for i in 0..self.triangles.len() {
            vol += dot(self.centroids[i], self.normals[i]) * self.areas[i] / 3.0;
        }
        vol
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Relation of two panels plus the shared vertex indices (positions in
    /// each triangle's corner list, ordered pairwise).
    pub fn relation(&self, tx: usize, ty: usize) -> (PanelRelation, Vec<(usize, usize)>) {
        if tx == ty {
            return (PanelRelation::Identical, vec![(0, 0), (1, 1), (2, 2)]);
        }
        let a = self.triangles[tx];
        let b = self.triangles[ty];
        let mut shared = Vec::new();
        for (i, &va) in a.iter().enumerate() {
            for (j, &vb) in b.iter().enumerate() {
                if va == vb {
                    shared.push((i, j));
                }
            }
        }
        let rel = match shared.len() {
            0 => PanelRelation::Disjoint,
            1 => PanelRelation::SharedVertex,
            2 => PanelRelation::SharedEdge,
            _ => PanelRelation::Identical,
        };
        (rel, shared)
    }

    /// Minimal ASCII interchange format: counts line, then coordinates,
    /// then 0-based index triples.
    pub fn write_ascii(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{} {}", self.n_vertices(), self.n_triangles())?;
        for v in &self.vertices {
            writeln!(f, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(f, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn read_ascii(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Mesh("empty mesh file".into()))??;
        let mut it = header.split_whitespace();
        let nv: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Mesh("bad vertex count".into()))?;
        let nt: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Mesh("bad triangle count".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines
                .next()
                .ok_or_else(|| Error::Mesh("unexpected end of vertex block".into()))??;
            let coords: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Mesh(format!("bad coordinate: {e}")))?;
            if coords.len() != 3 {
                return Err(Error::Mesh("expected 3 coordinates per vertex".into()));
            }
            vertices.push([coords[0], coords[1], coords[2]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = lines
                .next()
                .ok_or_else(|| Error::Mesh("unexpected end of triangle block".into()))??;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Mesh(format!("bad index: {e}")))?;
            if idx.len() != 3 {
                return Err(Error::Mesh("expected 3 indices per triangle".into()));
            }
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        Self::new(vertices, triangles)
    }
}

/// Icosphere of given radius: subdivided icosahedron with vertices projected
/// onto the sphere.
pub fn icosphere(radius: f64, subdivisions: usize) -> Result<SurfaceMesh> {
    if radius <= 0.0 {
        return Err(Error::Mesh("icosphere radius must be positive".into()));
    }
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for v in vertices.iter_mut() {
        *v = scale(*v, radius / norm(*v));
    }
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_tris = Vec::with_capacity(triangles.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let p = scale(add(vertices[a], vertices[b]), 0.5);
            let p = scale(p, radius / norm(p));
            vertices.push(p);
            let m = vertices.len() - 1;
            midpoint.insert(key, m);
            m
        };
        for t in &triangles {
            let ab = mid(t[0], t[1], &mut vertices);
            let bc = mid(t[1], t[2], &mut vertices);
            let ca = mid(t[2], t[0], &mut vertices);
            new_tris.push([t[0], ab, ca]);
            new_tris.push([t[1], bc, ab]);
            new_tris.push([t[2], ca, bc]);
            new_tris.push([ab, bc, ca]);
        }
        triangles = new_tris;
    }
    SurfaceMesh::new(vertices, triangles)
}

impl SurfaceMesh {
    /// Uniform refinement: every triangle split into four at the edge
    /// midpoints (flat split, no reprojection).
    pub fn refined(&self) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                vertices.push(scale(add(vertices[a], vertices[b]), 0.5));
                vertices.len() - 1
            })
        };
        for t in &self.triangles {
            let ab = mid(t[0], t[1], &mut vertices);
            let bc = mid(t[1], t[2], &mut vertices);
            let ca = mid(t[2], t[0], &mut vertices);
            triangles.push([t[0], ab, ca]);
            triangles.push([t[1], bc, ab]);
            triangles.push([t[2], ca, bc]);
            triangles.push([ab, bc, ca]);
        }
        Self::new(vertices, triangles)
    }
}
