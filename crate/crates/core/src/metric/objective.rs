use nalgebra::DMatrix;

use super::hinge::{smoothed_hinge, smoothed_hinge_derivative};
use super::linalg::{cholesky, log_abs_det, pinv_transpose};
use super::model::{Hyperparams, MetricModel};
use super::pairs::PairConstraintSet;
use crate::error::{Error, Result};

/// The three weighted objective terms; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `Σ_v Σ_pairs ½ g(z)`.
    pub hinge: f64,
    /// `β Σ_v ½ D_ld(L_vᵀL_v, A*)`.
    pub logdet: f64,
    /// `Σ_v λ_v ‖L_v‖²_F`.
    pub frobenius: f64,
    pub total: f64,
}

/// Gradients of each weighted term with respect to one `L_v`, `A*` held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTerms {
    pub hinge: DMatrix<f64>,
    pub logdet: DMatrix<f64>,
    pub frobenius: DMatrix<f64>,
}

impl GradientTerms {
    pub fn total(&self) -> DMatrix<f64> {
        &self.hinge + &self.logdet + &self.frobenius
    }
}

/// Pair-difference matrices for one channel: row `p` is `x_i - x_j`.
pub(crate) struct ChannelPairs {
    pub diffs: DMatrix<f64>,
    pub delta: Vec<f64>,
}

impl ChannelPairs {
    pub fn new(x: &DMatrix<f64>, pairs: &PairConstraintSet) -> ChannelPairs {
        let d = x.ncols();
        let mut diffs = DMatrix::zeros(pairs.len(), d);
        for (p, pair) in pairs.pairs.iter().enumerate() {
            for c in 0..d {
                diffs[(p, c)] = x[(pair.i, c)] - x[(pair.j, c)];
            }
        }
        ChannelPairs {
            diffs,
            delta: pairs.pairs.iter().map(|p| p.delta as f64).collect(),
        }
    }

    /// Slack `z_p = 1 - δ_p(τ - d_p²)` under projection `l`.
    fn slacks(&self, l: &DMatrix<f64>, tau: f64) -> Vec<f64> {
        let y = &self.diffs * l.transpose();
        y.row_iter()
            .zip(&self.delta)
            .map(|(row, delta)| 1.0 - delta * (tau - row.norm_squared()))
            .collect()
    }

    pub fn hinge(&self, l: &DMatrix<f64>, tau: f64, rho: f64) -> f64 {
        let mut sum = 0.0;
        for z in self.slacks(l, tau) {
            sum += 0.5 * smoothed_hinge(z, rho);
        }
        sum
    }

    /// `L Σ_p δ_p σ(ρ z_p) d_p d_pᵀ`.
    pub fn hinge_gradient(&self, l: &DMatrix<f64>, tau: f64, rho: f64) -> DMatrix<f64> {
        let weights: Vec<f64> = self
            .slacks(l, tau)
            .into_iter()
            .zip(&self.delta)
            .map(|(z, delta)| delta * smoothed_hinge_derivative(z, rho))
            .collect();
        let mut weighted = self.diffs.clone();
        for (mut row, w) in weighted.row_iter_mut().zip(&weights) {
            row *= *w;
        }
        l * self.diffs.tr_mul(&weighted)
    }

    /// Index of the first pair whose hinge value is not finite.
    fn first_bad_pair(&self, l: &DMatrix<f64>, tau: f64, rho: f64) -> Option<usize> {
        self.slacks(l, tau).iter().position(|z| !smoothed_hinge(*z, rho).is_finite())
    }
}

/// Inverse and log-determinant of a consensus metric.
pub(crate) struct ConsensusFactor {
    pub inverse: DMatrix<f64>,
    pub logdet: f64,
}

impl ConsensusFactor {
    pub fn new(a: &DMatrix<f64>) -> Option<ConsensusFactor> {
        let chol = cholesky(a)?;
        let logdet = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Some(ConsensusFactor {
            inverse: chol.inverse(),
            logdet,
        })
    }

    /// `½ D_ld(LᵀL, A) = ½(tr(L A⁻¹ Lᵀ) - 2 log|det L| + log det A - n)`.
    pub fn half_divergence(&self, l: &DMatrix<f64>) -> f64 {
        let n = l.ncols() as f64;
        let trace = (l * &self.inverse).component_mul(l).sum();
        0.5 * (trace - 2.0 * log_abs_det(l) + self.logdet - n)
    }

    /// `L A⁻¹ - (Lᵀ)⁺`.
    pub fn half_divergence_gradient(&self, l: &DMatrix<f64>) -> DMatrix<f64> {
        l * &self.inverse - pinv_transpose(l)
    }
}

/// Precomputed training problem over standardized channels.
pub(crate) struct Problem<'a> {
    pub channels: Vec<ChannelPairs>,
    pub hyper: &'a Hyperparams,
}

/// Per-channel pieces of the objective; the logdet entries are unweighted.
#[derive(Debug, Clone)]
pub(crate) struct TermCache {
    pub hinge: Vec<f64>,
    pub logdet: Vec<f64>,
    pub frobenius: Vec<f64>,
}

impl TermCache {
    pub fn terms(&self, beta: f64) -> ObjectiveTerms {
        let mut hinge = 0.0;
        for h in &self.hinge {
            hinge += h;
        }
        let mut logdet = 0.0;
        if beta != 0.0 {
            for t in &self.logdet {
                logdet += t;
            }
            logdet *= beta;
        }
        let mut frobenius = 0.0;
        for f in &self.frobenius {
            frobenius += f;
        }
        let total = if beta != 0.0 { hinge + logdet + frobenius } else { hinge + frobenius };
        ObjectiveTerms {
            hinge,
            logdet,
            frobenius,
            total,
        }
    }
}

impl<'a> Problem<'a> {
    pub fn new(features: &[DMatrix<f64>], pairs: &PairConstraintSet, hyper: &'a Hyperparams) -> Result<Problem<'a>> {
        let Some(first) = features.first() else {
            return Err(Error::InvalidArgument("no feature channels".into()));
        };
        hyper.validate(features.len())?;
        for x in features {
            if x.nrows() != first.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: first.nrows(),
                    found: x.nrows(),
                });
            }
            if x.ncols() != first.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: first.ncols(),
                    found: x.ncols(),
                });
            }
        }
        if let Some(j) = pairs.max_index() {
            if j >= first.nrows() {
                return Err(Error::InvalidArgument(format!("pair index {j} exceeds {} samples", first.nrows())));
            }
        }
        Ok(Problem {
            channels: features.iter().map(|x| ChannelPairs::new(x, pairs)).collect(),
            hyper,
        })
    }

    pub fn dim(&self) -> usize {
        self.channels[0].diffs.ncols()
    }

    pub fn check_model(&self, model: &MetricModel) -> Result<()> {
        if model.num_channels() != self.channels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.channels.len(),
                found: model.num_channels(),
            });
        }
        let d = self.dim();
        if model.consensus.shape() != (d, d) || model.projections.iter().any(|l| l.shape() != (d, d)) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: model.consensus.nrows(),
            });
        }
        Ok(())
    }

    pub fn hinge(&self, v: usize, l: &DMatrix<f64>) -> f64 {
        self.channels[v].hinge(l, self.hyper.tau, self.hyper.rho)
    }

    pub fn frobenius(&self, v: usize, l: &DMatrix<f64>) -> f64 {
        self.hyper.lambda_for(v) * l.norm_squared()
    }

    /// Unweighted `½ D_ld` per channel; `+∞` when `A*` is not positive definite.
    pub fn logdets(&self, projections: &[DMatrix<f64>], consensus: &DMatrix<f64>) -> Vec<f64> {
        if self.hyper.beta == 0.0 {
            return vec![0.0; projections.len()];
        }
        match ConsensusFactor::new(consensus) {
            Some(f) => projections.iter().map(|l| f.half_divergence(l)).collect(),
            None => vec![f64::INFINITY; projections.len()],
        }
    }

    pub fn cache(&self, projections: &[DMatrix<f64>], consensus: &DMatrix<f64>) -> TermCache {
        TermCache {
            hinge: projections.iter().enumerate().map(|(v, l)| self.hinge(v, l)).collect(),
            logdet: self.logdets(projections, consensus),
            frobenius: projections.iter().enumerate().map(|(v, l)| self.frobenius(v, l)).collect(),
        }
    }

    pub fn gradient_terms(&self, v: usize, l: &DMatrix<f64>, consensus: &DMatrix<f64>) -> Result<GradientTerms> {
        let hinge = self.channels[v].hinge_gradient(l, self.hyper.tau, self.hyper.rho);
        let logdet = if self.hyper.beta != 0.0 {
            let f = ConsensusFactor::new(consensus)
                .ok_or_else(|| Error::Singular("consensus metric is not positive definite".into()))?;
            f.half_divergence_gradient(l) * self.hyper.beta
        } else {
            DMatrix::zeros(l.nrows(), l.ncols())
        };
        let frobenius = l * (2.0 * self.hyper.lambda_for(v));
        Ok(GradientTerms { hinge, logdet, frobenius })
    }

    /// Full gradient for channel `v`, summed in the same order whether or not `β` is zero.
    pub fn gradient(&self, v: usize, l: &DMatrix<f64>, consensus: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let terms = self.gradient_terms(v, l, consensus)?;
        let mut g = terms.hinge;
        if self.hyper.beta != 0.0 {
            g += terms.logdet;
        }
        g += terms.frobenius;
        Ok(g)
    }

    /// Objective terms, or an error naming the channel (and pair) that went non-finite.
    pub fn checked_terms(&self, model: &MetricModel) -> Result<ObjectiveTerms> {
        self.check_model(model)?;
        let cache = self.cache(&model.projections, &model.consensus);
        for v in 0..cache.hinge.len() {
            if !cache.hinge[v].is_finite() {
                let pair = self.channels[v].first_bad_pair(&model.projections[v], self.hyper.tau, self.hyper.rho);
                return Err(Error::NonFinite(format!("hinge term of channel {v} at pair {pair:?}")));
            }
            if !cache.logdet[v].is_finite() {
                return Err(Error::NonFinite(format!(
                    "LogDet term of channel {v}: projection or consensus is singular"
                )));
            }
            if !cache.frobenius[v].is_finite() {
                return Err(Error::NonFinite(format!("projection of channel {v} has non-finite entries")));
            }
        }
        Ok(cache.terms(self.hyper.beta))
    }
}

/// Objective of `model` with its consensus taken as given.
pub fn objective(features: &[DMatrix<f64>], pairs: &PairConstraintSet, model: &MetricModel) -> Result<f64> {
    Ok(objective_terms(features, pairs, model)?.total)
}

pub fn objective_terms(features: &[DMatrix<f64>], pairs: &PairConstraintSet, model: &MetricModel) -> Result<ObjectiveTerms> {
    Problem::new(features, pairs, &model.hyper)?.checked_terms(model)
}

/// Analytic gradient of the objective with respect to `L_v`, consensus held fixed.
pub fn gradient(features: &[DMatrix<f64>], pairs: &PairConstraintSet, model: &MetricModel, v: usize) -> Result<DMatrix<f64>> {
    let problem = Problem::new(features, pairs, &model.hyper)?;
    problem.check_model(model)?;
    check_channel(model, v)?;
    problem.gradient(v, &model.projections[v], &model.consensus)
}

pub fn gradient_terms(features: &[DMatrix<f64>], pairs: &PairConstraintSet, model: &MetricModel, v: usize) -> Result<GradientTerms> {
    let problem = Problem::new(features, pairs, &model.hyper)?;
    problem.check_model(model)?;
    check_channel(model, v)?;
    problem.gradient_terms(v, &model.projections[v], &model.consensus)
}

pub(crate) fn check_channel(model: &MetricModel, v: usize) -> Result<()> {
    if v >= model.num_channels() {
        return Err(Error::InvalidArgument(format!(
            "channel {v} out of range for {} channels",
            model.num_channels()
        )));
    }
    Ok(())
}
