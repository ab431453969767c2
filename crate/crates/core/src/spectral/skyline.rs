//! Envelope (skyline) Cholesky factorization under a reverse Cuthill–McKee ordering.

use std::collections::VecDeque;

use super::laplacian::SymmetricSparse;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub(crate) fn reverse_cuthill_mckee(a: &SymmetricSparse) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nbrs = Vec::new();
    while order.len() < n {
        // start each component from a minimum-degree vertex, then push it to a
        // pseudo-peripheral one with a couple of BFS sweeps
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        let mut start = seed;
        for _ in 0..2 {
            start = farthest(a, start, &visited, &degree);
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            nbrs.clear();
            nbrs.extend(a.row(u).map(|e| e.0).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn farthest(a: &SymmetricSparse, start: usize, blocked: &[bool], degree: &[usize]) -> usize {
    let mut dist = vec![usize::MAX; a.dim()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = start;
    while let Some(u) = queue.pop_front() {
        if (dist[u], std::cmp::Reverse(degree[u])) > (dist[best], std::cmp::Reverse(degree[best])) {
            best = u;
        }
        for (j, _) in a.row(u) {
            if !blocked[j] && dist[j] == usize::MAX {
                dist[j] = dist[u] + 1;
                queue.push_back(j);
            }
        }
    }
    best
}

/// Cholesky factor `L` of `P A Pᵀ` stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub(crate) struct SkylineCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors `a + shift · diag(d)`.
    pub fn factor(a: &SymmetricSparse, shift: f64, d: &[f64]) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(perm[i]).map(|(j, _)| inv[j]).min().unwrap_or(i).min(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            for (j_old, v) in a.row(perm[i]) {
                let j = inv[j_old];
                if j <= i {
                    data[start[i] + j - first[i]] += v;
                }
            }
            data[start[i] + i - first[i]] += shift * d[perm[i]];
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (start[i] - fi, start[j] - fj);
                let mut s = data[ri + j];
                for k in lo..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if j < i {
                    data[ri + j] = s / data[rj + j];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!(
                            "shifted stiffness not positive definite at pivot {i}"
                        )));
                    }
                    data[ri + i] = s.sqrt();
                }
            }
        }
        Ok(SkylineCholesky { perm, first, start, data })
    }

    /// Solves `(P A Pᵀ) y = P b` and scatters back, i.e. returns `A⁻¹ b`.
    pub fn solve(&self, b: &[f64], out: &mut [f64], work: &mut Vec<f64>) {
        let n = self.perm.len();
        work.clear();
        work.extend(self.perm.iter().map(|&o| b[o]));
        for i in 0..n {
            let (fi, ri) = (self.first[i], self.start[i] - self.first[i]);
            let mut s = work[i];
            for k in fi..i {
                s -= self.data[ri + k] * work[k];
            }
            work[i] = s / self.data[ri + i];
        }
        for i in (0..n).rev() {
            let (fi, ri) = (self.first[i], self.start[i] - self.first[i]);
            work[i] /= self.data[ri + i];
            let xi = work[i];
            for k in fi..i {
                work[k] -= self.data[ri + k] * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = work[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::spectral::build_laplacian;
    use nalgebra::DVector;

    #[test]
    fn solves_shifted_laplacian() {
        let l = build_laplacian(&shapes::cylinder(1.0, 3.0, 6, 10, 2), Default::default()).unwrap();
        let chol = SkylineCholesky::factor(&l.stiffness, 0.3, &l.mass).unwrap();
        let n = l.mass.len();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        chol.solve(&b, &mut x, &mut Vec::new());

        let mut dense = l.stiffness.to_dense();
        for i in 0..n {
            dense[(i, i)] += 0.3 * l.mass[i];
        }
        let r = dense * DVector::from_vec(x) - DVector::from_vec(b);
        assert!(r.amax() < 1e-10);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let l = build_laplacian(&shapes::icosphere(2, 1.0), Default::default()).unwrap();
        let mut p = reverse_cuthill_mckee(&l.stiffness);
        p.sort_unstable();
        assert_eq!(p, (0..l.mass.len()).collect::<Vec<_>>());
    }
}
