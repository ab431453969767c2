use nalgebra::DMatrix;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{squared_eigenfunctions, PointSignatureMatrix, SignatureKind, SignatureParams};
use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// Heat kernel signature `Σ_k exp(-λ_k t) φ_k(x)²`, one column per time.
pub fn compute_hks(basis: &SpectralBasis, times: &[f64]) -> Result<PointSignatureMatrix> {
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("HKS times must be nonempty and positive".into()));
    }
    Ok(PointSignatureMatrix {
        values: heat_values(basis, times),
        kind: SignatureKind::Hks,
        params: SignatureParams::Hks { times: times.to_vec() },
    })
}

fn heat_values(basis: &SpectralBasis, times: &[f64]) -> DMatrix<f64> {
    let decay = DMatrix::from_fn(basis.k(), times.len(), |k, j| {
        (-basis.eigenvalues[k].max(0.0) * times[j]).exp()
    });
    squared_eigenfunctions(basis) * decay
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiHksParams {
    pub log_base: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    pub out_dim: usize,
}

impl Default for SiHksParams {
    fn default() -> Self {
        SiHksParams {
            log_base: 2.0,
            tau_min: 1.0,
            tau_max: 25.0,
            tau_step: 1.0 / 16.0,
            out_dim: 50,
        }
    }
}

impl SiHksParams {
    pub fn taus(&self) -> Vec<f64> {
        let count = ((self.tau_max - self.tau_min) / self.tau_step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.tau_min + self.tau_step * i as f64).collect()
    }
}

/// Scale-invariant transform of one log-HKS series sampled on a uniform log-time grid:
/// first difference, then the magnitudes of the first `out_dim` DFT coefficients.
pub fn scale_invariant_transform(log_hks: &[f64], out_dim: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(log_hks.len().saturating_sub(1));
    let mut buf = Vec::new();
    transform_row(log_hks, out_dim, fft.as_ref(), &mut buf)
}

fn transform_row(
    log_hks: &[f64],
    out_dim: usize,
    fft: &dyn rustfft::Fft<f64>,
    buf: &mut Vec<Complex<f64>>,
) -> Vec<f64> {
    buf.clear();
    buf.extend(log_hks.windows(2).map(|w| Complex::new(w[1] - w[0], 0.0)));
    fft.process(buf);
    buf.iter().take(out_dim).map(|c| c.norm()).collect()
}

/// Scale-invariant heat kernel signature.
///
/// HKS is sampled at `t = log_base^τ` over the τ grid, clamped to the smallest positive
/// normal before taking logs.
pub fn compute_sihks(basis: &SpectralBasis, params: &SiHksParams) -> Result<PointSignatureMatrix> {
    if !(params.log_base > 1.0) || !(params.tau_step > 0.0) || params.tau_max < params.tau_min {
        return Err(Error::InvalidArgument(format!("bad siHKS grid {params:?}")));
    }
    let times: Vec<f64> = params.taus().iter().map(|tau| params.log_base.powf(*tau)).collect();
    if times.len() < 2 || params.out_dim == 0 || params.out_dim > times.len() - 1 {
        return Err(Error::InvalidArgument(format!(
            "siHKS out_dim {} incompatible with {} time samples",
            params.out_dim,
            times.len()
        )));
    }
    let hks = heat_values(basis, &times);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(times.len() - 1);
    let mut buf = Vec::new();
    let mut log_row = vec![0.0; times.len()];
    let mut values = DMatrix::zeros(hks.nrows(), params.out_dim);
    for i in 0..hks.nrows() {
        for (j, l) in log_row.iter_mut().enumerate() {
            *l = hks[(i, j)].max(f64::MIN_POSITIVE).ln();
        }
        let row = transform_row(&log_row, params.out_dim, fft.as_ref(), &mut buf);
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(PointSignatureMatrix {
        values,
        kind: SignatureKind::SiHks,
        params: SignatureParams::SiHks(*params),
    })
}
