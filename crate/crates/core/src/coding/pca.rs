use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::error::{Error, Result};

/// Mean-centred projection onto the top principal directions of a training channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Dimension of the vectors this projection accepts (before any zero padding).
    pub input_dim: usize,
    pub mean: DVector<f64>,
    /// `max(input_dim, out_dim) × out_dim`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Sample variance (denominator `N - 1`) along each column of `basis`.
    pub explained_variance: Vec<f64>,
    /// Set when the centred training data had rank below `out_dim`; the trailing
    /// columns are then an arbitrary orthonormal completion.
    pub rank_deficient: bool,
}

impl PcaProjection {
    pub fn out_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let mut padded = DVector::zeros(self.mean.len());
        padded.rows_mut(0, x.len()).copy_from_slice(x);
        Ok((self.basis.transpose() * (padded - &self.mean)).iter().copied().collect())
    }
}

fn padded(vectors: &DMatrix<f64>, width: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(vectors.nrows(), width);
    out.columns_mut(0, vectors.ncols()).copy_from(vectors);
    out
}

/// Fits a PCA on training rows only. Channels narrower than `out_dim` are zero-padded.
pub fn fit_pca(train: &FeatureSet, out_dim: usize) -> Result<PcaProjection> {
    let n = train.len();
    if n < 2 || out_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 rows and out_dim > 0, got {n} rows"
        )));
    }
    let width = train.dim().max(out_dim);
    let x = padded(&train.vectors, width);
    let mean = x.row_mean().transpose();
    let mut centred = x;
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centred.tr_mul(&centred) / (n - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > 1e-12 * top.max(f64::MIN_POSITIVE)).count();
    let mut basis = DMatrix::zeros(width, out_dim);
    let mut explained = Vec::with_capacity(out_dim);
    for (c, &i) in order.iter().take(out_dim).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // fix the sign: largest-magnitude entry positive
        if v[v.iamax()] < 0.0 {
            v.neg_mut();
        }
        basis.set_column(c, &v);
        explained.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaProjection {
        input_dim: train.dim(),
        mean,
        basis,
        explained_variance: explained,
        rank_deficient: rank < out_dim,
    })
}

/// Replaces every row by `basisᵀ (x - mean)`; ids and labels are kept.
pub fn apply_pca(proj: &PcaProjection, features: &FeatureSet) -> Result<FeatureSet> {
    if features.dim() != proj.input_dim && !features.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: proj.input_dim,
            found: features.dim(),
        });
    }
    let n = features.len();
    let mut out = DMatrix::zeros(n, proj.out_dim());
    if n > 0 {
        let mut x = padded(&features.vectors, proj.mean.len());
        for mut row in x.row_iter_mut() {
            row -= proj.mean.transpose();
        }
        out = x * &proj.basis;
    }
    FeatureSet::new(features.channel.clone(), out, features.labels.clone(), features.shape_ids.clone())
}
