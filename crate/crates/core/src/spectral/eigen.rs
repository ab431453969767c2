use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::laplacian::{Laplacian, SymmetricSparse};
use super::skyline::SkylineCholesky;
use crate::error::{Error, Result};

/// Truncated generalized eigendecomposition `W φ = λ M φ`.
///
/// Eigenvalues are ascending; eigenfunctions are the columns of an `n × k` matrix and
/// are orthonormal in the mass inner product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: DMatrix<f64>,
    pub mass: Vec<f64>,
}

impl SpectralBasis {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.mass.len()
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Keeps the first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> SpectralBasis {
        let k = k.min(self.k());
        SpectralBasis {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenfunctions: self.eigenfunctions.columns(0, k).into_owned(),
            mass: self.mass.clone(),
        }
    }

    /// `max |Φᵀ M Φ - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let phi = &self.eigenfunctions;
        let mut mphi = phi.clone();
        for (i, mut row) in mphi.row_iter_mut().enumerate() {
            row *= self.mass[i];
        }
        let g = phi.transpose() * mphi;
        (g - DMatrix::identity(self.k(), self.k())).amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSolver {
    /// Dense below `dense_threshold` vertices, shift-invert Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenOptions {
    pub k: usize,
    pub solver: EigenSolver,
    pub dense_threshold: usize,
    /// Relative residual at which a Ritz pair counts as converged.
    pub tol: f64,
    /// Lanczos steps allowed per restart pass.
    pub max_steps: usize,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(k: usize) -> Self {
        EigenOptions {
            k,
            solver: EigenSolver::Auto,
            dense_threshold: 400,
            tol: 1e-10,
            max_steps: 20 * k + 200,
            seed: 0x5eed,
        }
    }

    pub fn with_solver(mut self, solver: EigenSolver) -> Self {
        self.solver = solver;
        self
    }
}

/// Computes the `k` smallest generalized eigenpairs of the stiffness/mass pencil.
pub fn solve_eigs(stiffness: &SymmetricSparse, mass: &[f64], opts: &EigenOptions) -> Result<SpectralBasis> {
    let n = stiffness.dim();
    if mass.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mass.len(),
        });
    }
    if opts.k == 0 || opts.k >= n {
        return Err(Error::InvalidArgument(format!(
            "need 0 < k < n, got k = {} for n = {n}",
            opts.k
        )));
    }
    if mass.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidArgument("mass diagonal must be positive".into()));
    }
    let dense = match opts.solver {
        EigenSolver::Dense => true,
        EigenSolver::Lanczos => false,
        EigenSolver::Auto => n <= opts.dense_threshold,
    };
    let (vals, mut vecs) = if dense {
        dense_eigs(stiffness, mass, opts.k)
    } else {
        lanczos_eigs(stiffness, mass, opts)?
    };
    for mut c in vecs.column_iter_mut() {
        let imax = c.iamax();
        if c[imax] < 0.0 {
            c.neg_mut();
        }
    }
    Ok(SpectralBasis {
        eigenvalues: vals,
        eigenfunctions: vecs,
        mass: mass.to_vec(),
    })
}

impl Laplacian {
    pub fn eigs(&self, opts: &EigenOptions) -> Result<SpectralBasis> {
        solve_eigs(&self.stiffness, &self.mass, opts)
    }
}

fn dense_eigs(w: &SymmetricSparse, mass: &[f64], k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = w.dim();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in w.row(i) {
            c[(i, j)] = v * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, k);
    for (col, &i) in order[..k].iter().enumerate() {
        for r in 0..n {
            vecs[(r, col)] = eig.eigenvectors[(r, i)] * inv_sqrt[r];
        }
    }
    (vals, vecs)
}

fn m_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

fn m_orthogonalize(mass: &[f64], v: &mut [f64], basis: &[Vec<f64>]) {
    // two rounds of classical Gram–Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = m_dot(mass, v, q);
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

struct Ritz {
    lambda: f64,
    residual: f64,
    converged: bool,
    coeffs: DVector<f64>,
}

/// Shift-invert Lanczos on `(W + sM)⁻¹ M` with full M-reorthogonalization.
///
/// Single-vector Krylov spaces only see one direction per exactly repeated
/// eigenvalue, so converged pairs are locked and a fresh pass is started in their
/// M-orthogonal complement until a pass finds nothing below the current k-th value.
fn lanczos_eigs(w: &SymmetricSparse, mass: &[f64], opts: &EigenOptions) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = w.dim();
    let k = opts.k;
    let trace_ratio = w.diagonal().iter().sum::<f64>() / mass.iter().sum::<f64>();
    let shift = 1e-6 * trace_ratio.max(f64::MIN_POSITIVE);
    let chol = SkylineCholesky::factor(w, shift, mass)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work = Vec::with_capacity(n);
    let mut mx = vec![0.0; n];

    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    for _pass in 0..64 {
        let threshold = if locked.len() >= k { locked[k - 1].0 } else { f64::INFINITY };
        let want = k.saturating_sub(locked.len());
        let room = n - locked.len();
        if room == 0 {
            break;
        }
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|(_, v)| v.clone()).collect();

        let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        m_orthogonalize(mass, &mut q, &locked_vecs);
        let nq = m_dot(mass, &q, &q).sqrt();
        q.iter_mut().for_each(|x| *x /= nq);

        let mut basis: Vec<Vec<f64>> = vec![q];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let step_cap = opts.max_steps.min(room);
        let mut next_check = (want.max(1) + 10).min(step_cap);
        let mut accepted: Option<Vec<Ritz>> = None;
        let mut last_ritz: Vec<Ritz> = Vec::new();

        loop {
            let j = basis.len() - 1;
            let qj = &basis[j];
            for i in 0..n {
                mx[i] = mass[i] * qj[i];
            }
            let mut r = vec![0.0; n];
            chol.solve(&mx, &mut r, &mut work);
            // deflate before projecting so T stays the Rayleigh quotient of the
            // operator restricted to the complement of the locked vectors
            m_orthogonalize(mass, &mut r, &locked_vecs);
            let a = m_dot(mass, &r, qj);
            alpha.push(a);
            m_orthogonalize(mass, &mut r, &basis);
            let b = m_dot(mass, &r, &r).sqrt();
            let steps = alpha.len();
            let scale = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let breakdown = !(b > 1e-13 * scale) || steps >= step_cap;

            if steps >= next_check || breakdown {
                let ritz = ritz_pairs(&alpha, &beta, b, shift, opts.tol, breakdown && steps < step_cap);
                let need = if want > 0 {
                    want.min(ritz.len())
                } else {
                    (1 + ritz.iter().filter(|p| p.lambda < threshold).count()).min(ritz.len())
                };
                if ritz[..need].iter().all(|p| p.converged) {
                    accepted = Some(ritz.into_iter().take(need).collect());
                    break;
                }
                if breakdown {
                    last_ritz = ritz;
                    break;
                }
                next_check = (steps + (steps / 4).max(10)).min(step_cap);
            }
            beta.push(b);
            r.iter_mut().for_each(|x| *x /= b);
            basis.push(r);
        }

        let Some(found) = accepted else {
            let mut residuals: Vec<f64> = last_ritz.iter().filter(|p| !p.converged).map(|p| p.residual).collect();
            residuals.sort_by(|a, b| b.total_cmp(a));
            residuals.truncate(8);
            return Err(Error::EigenNonConvergence { residuals });
        };

        let mut added = 0;
        for p in found {
            if want == 0 && p.lambda >= threshold * (1.0 - 1e-9) {
                continue;
            }
            let mut y = vec![0.0; n];
            for (c, qv) in p.coeffs.iter().zip(&basis) {
                y.iter_mut().zip(qv).for_each(|(yi, qi)| *yi += c * qi);
            }
            let ny = m_dot(mass, &y, &y).sqrt();
            y.iter_mut().for_each(|x| *x /= ny);
            locked.push((p.lambda, y));
            added += 1;
        }
        locked.sort_by(|a, b| a.0.total_cmp(&b.0));
        if want == 0 && added == 0 {
            break;
        }
    }
    if locked.len() < k {
        return Err(Error::EigenNonConvergence { residuals: vec![] });
    }
    let mut vecs = DMatrix::zeros(n, k);
    let mut vals = Vec::with_capacity(k);
    for (c, (l, v)) in locked.iter().take(k).enumerate() {
        vals.push(*l);
        vecs.set_column(c, &DVector::from_column_slice(v));
    }
    Ok((vals, vecs))
}

/// Ritz pairs of the Lanczos tridiagonal, ordered by ascending `λ = 1/θ - shift`.
fn ritz_pairs(alpha: &[f64], beta: &[f64], last_beta: f64, shift: f64, tol: f64, exact: bool) -> Vec<Ritz> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<Ritz> = (0..m)
        .filter(|&i| eig.eigenvalues[i] > 0.0)
        .map(|i| {
            let theta = eig.eigenvalues[i];
            let coeffs = eig.eigenvectors.column(i).into_owned();
            let residual = (last_beta * coeffs[m - 1]).abs();
            Ritz {
                lambda: 1.0 / theta - shift,
                residual,
                converged: exact || residual <= tol * theta,
                coeffs,
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::spectral::build_laplacian;

    fn sphere_oracle(count: usize) -> Vec<f64> {
        (0..)
            .flat_map(|l: usize| std::iter::repeat_n((l * (l + 1)) as f64, 2 * l + 1))
            .take(count)
            .collect()
    }

    #[test]
    fn lanczos_matches_dense() {
        let lap = build_laplacian(&shapes::cylinder(1.0, 3.0, 10, 12, 2), Default::default()).unwrap();
        let d = lap.eigs(&EigenOptions::new(20).with_solver(EigenSolver::Dense)).unwrap();
        let l = lap.eigs(&EigenOptions::new(20).with_solver(EigenSolver::Lanczos)).unwrap();
        for (a, b) in d.eigenvalues.iter().zip(&l.eigenvalues) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
        }
        assert!(l.orthonormality_error() < 1e-6);
        assert!(d.orthonormality_error() < 1e-6);
    }

    #[test]
    fn icosphere_spectrum_and_multiplicities() {
        let lap = build_laplacian(&shapes::icosphere(3, 1.0), Default::default()).unwrap();
        let basis = lap.eigs(&EigenOptions::new(16)).unwrap();
        assert!(basis.eigenvalues[0].abs() < 1e-6 * basis.eigenvalues[1]);
        for (i, (got, want)) in basis.eigenvalues.iter().zip(sphere_oracle(16)).enumerate().skip(1) {
            assert!((got - want).abs() / want < 0.05, "eigenvalue {i}: {got} vs {want}");
        }
        assert!(basis.orthonormality_error() < 1e-6);
    }

    #[test]
    fn neumann_square() {
        let lap = build_laplacian(&shapes::grid(64, 64, 1.0, 1.0), Default::default()).unwrap();
        let basis = lap.eigs(&EigenOptions::new(4)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let want = [0.0, pi2, pi2, 2.0 * pi2];
        assert!(basis.eigenvalues[0].abs() < 1e-6 * basis.eigenvalues[1]);
        for i in 1..4 {
            assert!((basis.eigenvalues[i] - want[i]).abs() / want[i] < 0.05);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let lap = build_laplacian(&shapes::tetrahedron(), Default::default()).unwrap();
        assert!(lap.eigs(&EigenOptions::new(4)).is_err());
        assert!(lap.eigs(&EigenOptions::new(0)).is_err());
        assert!(lap.eigs(&EigenOptions::new(3)).is_ok());
    }

    #[test]
    fn non_convergence_reports_residuals() {
        let lap = build_laplacian(&shapes::icosphere(3, 1.0), Default::default()).unwrap();
        let mut opts = EigenOptions::new(30).with_solver(EigenSolver::Lanczos);
        opts.max_steps = 32;
        opts.tol = 1e-15;
        match lap.eigs(&opts) {
            Err(Error::EigenNonConvergence { residuals }) => assert!(!residuals.is_empty()),
            other => panic!("expected non-convergence, got {:?}", other.map(|b| b.eigenvalues)),
        }
    }
}
