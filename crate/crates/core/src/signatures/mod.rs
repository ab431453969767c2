//! Spectral shape descriptors computed from a [`SpectralBasis`](crate::spectral::SpectralBasis).
//!
//! Point signatures (one row per vertex) depend only on the eigenvalues and the squared
//! eigenfunctions, so they are insensitive to eigenfunction sign flips.

mod heat;
mod shapedna;
mod wave;

pub use heat::{compute_hks, compute_sihks, scale_invariant_transform, SiHksParams};
pub use shapedna::{compute_shape_dna, ShapeDnaDescriptor, ShapeDnaNormalization, ShapeDnaParams};
pub use wave::{compute_wks, wks_energies, wks_kernel_weights, WksParams};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::spectral::SpectralBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignatureKind {
    Wks,
    SiHks,
    Hks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SignatureParams {
    Wks(WksParams),
    SiHks(SiHksParams),
    Hks { times: Vec<f64> },
}

/// Per-vertex signature values, `n × d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSignatureMatrix {
    pub values: DMatrix<f64>,
    pub kind: SignatureKind,
    pub params: SignatureParams,
}

impl PointSignatureMatrix {
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn num_points(&self) -> usize {
        self.values.nrows()
    }
}

/// Squared eigenfunctions `φ_k(x)²`, `n × k`.
fn squared_eigenfunctions(basis: &SpectralBasis) -> DMatrix<f64> {
    basis.eigenfunctions.map(|v| v * v)
}

/// Eigenvalues counted as positive: above `1e-9 · λ_max`. Index 0 of a closed
/// connected mesh never qualifies.
fn positive_modes(basis: &SpectralBasis) -> Vec<usize> {
    let top = basis.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    (0..basis.k()).filter(|&i| basis.eigenvalues[i] > 1e-9 * top).collect()
}
