use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{positive_modes, squared_eigenfunctions, PointSignatureMatrix, SignatureKind, SignatureParams};
use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WksParams {
    pub num_energies: usize,
    /// Kernel width in units of the energy-grid step.
    pub variance_factor: f64,
}

impl Default for WksParams {
    fn default() -> Self {
        WksParams {
            num_energies: 100,
            variance_factor: 6.0,
        }
    }
}

/// Log-energy grid and kernel width.
///
/// The grid spans `[log λ_1 + 2σ, log λ_max - 2σ]` with `σ = variance_factor · Δe`, which
/// fixes `Δe = (log λ_max - log λ_1) / (N - 1 + 4 · variance_factor)`.
pub fn wks_energies(basis: &SpectralBasis, params: &WksParams) -> Result<(Vec<f64>, f64)> {
    let pos = positive_modes(basis);
    if pos.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "WKS needs at least 2 positive eigenvalues, basis has {}",
            pos.len()
        )));
    }
    if params.num_energies == 0 || !(params.variance_factor > 0.0) {
        return Err(Error::InvalidArgument("WKS needs energies > 0 and variance > 0".into()));
    }
    let lo = basis.eigenvalues[pos[0]].ln();
    let hi = basis.eigenvalues[*pos.last().unwrap()].ln();
    let n = params.num_energies;
    let step = (hi - lo) / ((n - 1) as f64 + 4.0 * params.variance_factor);
    let sigma = params.variance_factor * step;
    let energies = (0..n).map(|j| lo + 2.0 * sigma + step * j as f64).collect();
    Ok((energies, sigma))
}

/// Normalized band-pass weights, `N × |positive modes|`; every row sums to one.
pub fn wks_kernel_weights(basis: &SpectralBasis, params: &WksParams) -> Result<DMatrix<f64>> {
    let (energies, sigma) = wks_energies(basis, params)?;
    let pos = positive_modes(basis);
    let logs: Vec<f64> = pos.iter().map(|&k| basis.eigenvalues[k].ln()).collect();
    let mut w = DMatrix::zeros(energies.len(), logs.len());
    for (j, e) in energies.iter().enumerate() {
        let expo: Vec<f64> = logs.iter().map(|l| -(e - l).powi(2) / (2.0 * sigma * sigma)).collect();
        let top = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = expo.iter().map(|x| (x - top).exp()).sum();
        for (k, x) in expo.iter().enumerate() {
            w[(j, k)] = (x - top).exp() / total;
        }
    }
    Ok(w)
}

/// Wave kernel signature.
///
/// Entry `(x, j)` is `Σ_k w_jk φ_k(x)²` over positive modes; each vertex row is then
/// scaled to unit Euclidean norm, which makes the values dimensionless and bounded by 1.
pub fn compute_wks(basis: &SpectralBasis, params: &WksParams) -> Result<PointSignatureMatrix> {
    let weights = wks_kernel_weights(basis, params)?;
    let pos = positive_modes(basis);
    let sq = squared_eigenfunctions(basis);
    let sq_pos = sq.select_columns(pos.iter());
    let mut values = sq_pos * weights.transpose();
    for mut row in values.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    Ok(PointSignatureMatrix {
        values,
        kind: SignatureKind::Wks,
        params: SignatureParams::Wks(*params),
    })
}
