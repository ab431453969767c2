use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ShapeDnaNormalization {
    /// Multiply by total surface area.
    Area,
    /// Divide by the first positive eigenvalue.
    FirstEigenvalue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeDnaParams {
    pub out_dim: usize,
    pub normalization: ShapeDnaNormalization,
}

impl Default for ShapeDnaParams {
    fn default() -> Self {
        ShapeDnaParams {
            out_dim: 40,
            normalization: ShapeDnaNormalization::Area,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDnaDescriptor {
    pub values: Vec<f64>,
}

/// Truncated, normalized eigenvalue sequence.
pub fn compute_shape_dna(basis: &SpectralBasis, params: &ShapeDnaParams) -> Result<ShapeDnaDescriptor> {
    if basis.k() < params.out_dim {
        return Err(Error::InvalidArgument(format!(
            "ShapeDNA needs {} eigenvalues, basis has {}",
            params.out_dim,
            basis.k()
        )));
    }
    let factor = match params.normalization {
        ShapeDnaNormalization::Area => basis.total_area(),
        ShapeDnaNormalization::FirstEigenvalue => {
            let l1 = basis.eigenvalues.get(1).copied().unwrap_or(0.0);
            if !(l1 > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "first eigenvalue {l1} is not positive"
                )));
            }
            1.0 / l1
        }
    };
    Ok(ShapeDnaDescriptor {
        values: basis.eigenvalues[..params.out_dim].iter().map(|l| l * factor).collect(),
    })
}
