use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{cross, dot, norm, sub, TriangleMesh};

/// Cotangents are clamped to this magnitude before assembly.
pub const COT_CLAMP: f64 = 1e4;

/// Symmetric sparse matrix in CSR form with both triangles stored and columns sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparse {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricSparse {
    /// Assembles from upper-triangle entries `(i, j, v)` with `i < j` plus a diagonal.
    /// Each off-diagonal value is written to both `(i, j)` and `(j, i)`.
    pub fn from_upper(n: usize, upper: &BTreeMap<(usize, usize), f64>, diag: &[f64]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &v) in upper {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.push((i, diag[i]));
            r.sort_by_key(|e| e.0);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SymmetricSparse { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LaplacianOptions {
    pub allow_disconnected: bool,
}

/// Cotangent stiffness (positive semidefinite) and lumped vertex areas.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub stiffness: SymmetricSparse,
    pub mass: Vec<f64>,
}

impl Laplacian {
    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Builds `W` with `W_ij = -(cot α_ij + cot β_ij) / 2` on edges and `W_ii = -Σ_j W_ij`,
/// together with the barycentric (one third of incident area) mass diagonal.
///
/// Boundary edges get their single cotangent term.
pub fn build_laplacian(mesh: &TriangleMesh, opts: LaplacianOptions) -> Result<Laplacian> {
    let n = mesh.num_vertices();
    if !opts.allow_disconnected {
        let c = mesh.connected_components();
        if c > 1 {
            return Err(Error::Disconnected(c));
        }
    }
    let v = mesh.vertices();
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut incidence: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut mass = vec![0.0; n];

    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = [v[f[0]], v[f[1]], v[f[2]]];
        let double_area = norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        let longest = (0..3)
            .map(|k| {
                let e = sub(p[(k + 1) % 3], p[k]);
                dot(e, e)
            })
            .fold(0.0, f64::max);
        if !(double_area > f64::EPSILON * longest) {
            return Err(Error::DegenerateTriangle { face: fi });
        }
        for k in 0..3 {
            mass[f[k]] += double_area / 6.0;
            // angle at corner k is opposite edge (k+1, k+2)
            let (a, b) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let u = sub(p[(k + 1) % 3], p[k]);
            let w = sub(p[(k + 2) % 3], p[k]);
            let cot = (dot(u, w) / double_area).clamp(-COT_CLAMP, COT_CLAMP);
            let key = (a.min(b), a.max(b));
            *weights.entry(key).or_insert(0.0) += 0.5 * cot;
            let count = incidence.entry(key).or_insert(0);
            *count += 1;
            if *count > 2 {
                return Err(Error::NonManifoldEdge(key.0, key.1));
            }
        }
    }

    let mut offdiag = BTreeMap::new();
    for (&k, &w) in &weights {
        offdiag.insert(k, -w);
    }
    // diagonal = -(row sum of off-diagonals), accumulated in column order
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &w) in &offdiag {
        rows[i].push((j, w));
        rows[j].push((i, w));
    }
    let diag: Vec<f64> = rows
        .iter_mut()
        .map(|r| {
            r.sort_by_key(|e| e.0);
            -r.iter().map(|e| e.1).sum::<f64>()
        })
        .collect();
    Ok(Laplacian {
        stiffness: SymmetricSparse::from_upper(n, &offdiag, &diag),
        mass,
    })
}
