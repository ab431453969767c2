use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coding::FeatureSet;
use crate::error::{Error, Result};
use crate::metric::MetricModel;

/// How per-channel distances are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// `Σ_v (a_v - b_v)ᵀ A* (a_v - b_v)`.
    #[default]
    Consensus,
    /// `Σ_v ‖L_v (a_v - b_v)‖²`: concatenation of the per-channel projections.
    PerChannel,
}

/// `Σ_v (a_v - b_v)ᵀ A (a_v - b_v)`.
pub fn combined_distance(a: &[&[f64]], b: &[&[f64]], metric: &DMatrix<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.len() != metric.ncols() || y.len() != metric.ncols() {
            return Err(Error::DimensionMismatch {
                expected: metric.ncols(),
                found: x.len().min(y.len()),
            });
        }
        let d = DVector::from_iterator(x.len(), x.iter().zip(y.iter()).map(|(p, q)| p - q));
        total += d.dot(&(metric * &d));
    }
    Ok(total)
}

/// Shapes mapped into a space where the combined distance is squared Euclidean.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub shape_ids: Vec<String>,
    pub labels: Vec<String>,
    /// One row per shape: the concatenated per-channel images.
    pub points: DMatrix<f64>,
}

impl Embedding {
    pub fn new(features: &[FeatureSet], model: &MetricModel, mode: DistanceMode) -> Result<Embedding> {
        let Some(first) = features.first() else {
            return Err(Error::InvalidArgument("no feature channels".into()));
        };
        if features.len() != model.num_channels() {
            return Err(Error::DimensionMismatch {
                expected: model.num_channels(),
                found: features.len(),
            });
        }
        let d = model.dim();
        let maps: Vec<DMatrix<f64>> = match mode {
            DistanceMode::Consensus => {
                let chol = crate::metric::cholesky_factor(&model.consensus)
                    .ok_or_else(|| Error::Singular("consensus metric is not positive definite".into()))?;
                vec![chol.transpose(); features.len()]
            }
            DistanceMode::PerChannel => model.projections.clone(),
        };
        let n = first.len();
        let mut points = DMatrix::zeros(n, d * features.len());
        for (v, f) in features.iter().enumerate() {
            if f.shape_ids != first.shape_ids || f.dim() != d {
                return Err(Error::Data(format!(
                    "channel {} is not aligned with {} or has dimension {} instead of {d}",
                    f.channel,
                    first.channel,
                    f.dim()
                )));
            }
            let image = (&f.vectors * model.channel_scales[v]) * maps[v].transpose();
            points.columns_mut(v * d, d).copy_from(&image);
        }
        Ok(Embedding {
            shape_ids: first.shape_ids.clone(),
            labels: first.labels.clone(),
            points,
        })
    }

    /// Euclidean embedding of raw features with no learned metric.
    pub fn euclidean(features: &[FeatureSet]) -> Result<Embedding> {
        let Some(first) = features.first() else {
            return Err(Error::InvalidArgument("no feature channels".into()));
        };
        let width: usize = features.iter().map(FeatureSet::dim).sum();
        let mut points = DMatrix::zeros(first.len(), width);
        let mut offset = 0;
        for f in features {
            if f.shape_ids != first.shape_ids {
                return Err(Error::Data(format!("channel {} is not aligned with {}", f.channel, first.channel)));
            }
            points.columns_mut(offset, f.dim()).copy_from(&f.vectors);
            offset += f.dim();
        }
        Ok(Embedding {
            shape_ids: first.shape_ids.clone(),
            labels: first.labels.clone(),
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.shape_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape_ids.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.points.row(i) - self.points.row(j)).norm_squared()
    }

    pub fn subset(&self, rows: &[usize]) -> Embedding {
        Embedding {
            shape_ids: rows.iter().map(|&r| self.shape_ids[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r].clone()).collect(),
            points: self.points.select_rows(rows),
        }
    }
}
