use nalgebra::DMatrix;

use super::model::Hyperparams;
use super::objective::ChannelPairs;
use super::pairs::PairConstraintSet;
use crate::coding::FeatureSet;
use crate::error::{Error, Result};

/// A single Mahalanobis metric trained with the pair loss and Frobenius penalty only.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleMetricModel {
    pub projection: DMatrix<f64>,
    pub scale: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Gradient descent with halving line search on `Σ ½ g(z) + λ‖L‖²_F` for one channel.
///
/// Ignores `beta` and `epsilon`.
pub fn train_single_metric(features: &FeatureSet, pairs: &PairConstraintSet, hyper: &Hyperparams) -> Result<SingleMetricModel> {
    hyper.validate(1)?;
    PairConstraintSet::from_pairs(pairs.pairs.clone(), &features.labels)?;
    let scale = super::channel_scale(&features.vectors)?;
    let x = &features.vectors * scale;
    let channel = ChannelPairs::new(&x, pairs);
    let lambda = hyper.lambda_for(0);
    let value = |l: &DMatrix<f64>| {
        let hinge = channel.hinge(l, hyper.tau, hyper.rho);
        let mut frobenius = 0.0;
        frobenius += lambda * l.norm_squared();
        hinge + frobenius
    };
    let d = x.ncols();
    let mut l = DMatrix::identity(d, d);
    let mut current = value(&l);
    if !current.is_finite() {
        return Err(Error::NonFinite("initial single-metric objective".into()));
    }
    let mut trace = vec![current];
    let mut eta_start = hyper.learning_rate;
    let mut converged = false;
    let mut iterations = 0;
    for iteration in 0..hyper.max_iters {
        let mut grad = channel.hinge_gradient(&l, hyper.tau, hyper.rho);
        grad += &l * (2.0 * lambda);
        let mut eta = eta_start;
        let mut accepted = false;
        for halvings in 0..=hyper.max_halvings {
            let trial = &l - &grad * eta;
            let after = value(&trial);
            if after.is_finite() && after <= current {
                l = trial;
                current = after;
                accepted = true;
                break;
            }
            if halvings < hyper.max_halvings {
                eta *= 0.5;
            }
        }
        eta_start = if accepted { hyper.learning_rate.min(2.0 * eta) } else { hyper.learning_rate };
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(current);
        iterations = iteration + 1;
        let relative = (previous - current).abs() / previous.abs().max(f64::MIN_POSITIVE);
        if !accepted || relative < hyper.tol {
            converged = true;
            break;
        }
    }
    Ok(SingleMetricModel {
        projection: l,
        scale,
        trace,
        converged,
        iterations,
    })
}
