//! Triangle meshes: validation, OFF/OBJ I/O and procedural generators.

mod io;
pub mod shapes;

pub use io::{parse_mesh, read_mesh, MeshFormat};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// A validated triangle surface.
///
/// Faces index into `vertices` (0-based). Construction through [`TriangleMesh::new`]
/// guarantees in-range, non-degenerate index triples and at least four vertices and faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    pub label: Option<String>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 4 || faces.len() < 4 {
            return Err(Error::InvalidMesh(format!(
                "need at least 4 vertices and 4 faces, got {} and {}",
                vertices.len(),
                faces.len()
            )));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} index {bad} out of range for {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        if let Some(p) = vertices.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {p:?}")));
        }
        Ok(TriangleMesh {
            vertices,
            faces,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * norm(cross(sub(q, p), sub(r, p)))
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.triangle_area(f)).sum()
    }

    /// Applies `f` to every vertex position, keeping connectivity.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            faces: self.faces.clone(),
            label: self.label.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> TriangleMesh {
        self.map_vertices(|p| [p[0] * s, p[1] * s, p[2] * s])
    }

    /// Number of connected components of the face graph (isolated vertices count too).
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for f in &self.faces {
            for k in 1..3 {
                let (ra, rb) = (find(&mut parent, f[0]), find(&mut parent, f[k]));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        (0..parent.len()).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// SHA-256 over the geometry and connectivity, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.vertices {
            for c in p {
                h.update(c.to_le_bytes());
            }
        }
        for f in &self.faces {
            for &i in f {
                h.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn to_off(&self) -> String {
        let mut s = format!("OFF\n{} {} 0\n", self.vertices.len(), self.faces.len());
        for p in &self.vertices {
            s.push_str(&format!("{:?} {:?} {:?}\n", p[0], p[1], p[2]));
        }
        for f in &self.faces {
            s.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        s
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for p in &self.vertices {
            s.push_str(&format!("v {:?} {:?} {:?}\n", p[0], p[1], p[2]));
        }
        for f in &self.faces {
            s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
        s
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_degenerate_faces() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut f = vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
        assert!(TriangleMesh::new(v.clone(), f.clone()).is_ok());
        f[3] = [1, 2, 9];
        assert!(TriangleMesh::new(v.clone(), f.clone()).is_err());
        f[3] = [1, 2, 2];
        assert!(TriangleMesh::new(v, f).is_err());
    }

    #[test]
    fn counts_components() {
        let a = shapes::tetrahedron();
        assert_eq!(a.connected_components(), 1);
        let mut v = a.vertices().to_vec();
        let mut f = a.faces().to_vec();
        v.extend(a.vertices().iter().map(|p| [p[0] + 5.0, p[1], p[2]]));
        f.extend(a.faces().iter().map(|t| [t[0] + 4, t[1] + 4, t[2] + 4]));
        assert_eq!(TriangleMesh::new(v, f).unwrap().connected_components(), 2);
    }

    #[test]
    fn hash_changes_with_geometry() {
        let a = shapes::tetrahedron();
        assert_eq!(a.content_hash(), a.clone().content_hash());
        assert_ne!(a.content_hash(), a.scaled(2.0).content_hash());
    }
}
