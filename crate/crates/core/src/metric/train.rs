use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::model::{consensus_of, Hyperparams, MetricModel};
use super::objective::{check_channel, Problem, TermCache};
use super::pairs::PairConstraintSet;
use crate::coding::FeatureSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Step size of the accepted update, or the last one tried.
    pub step_size: f64,
    pub halvings: usize,
    pub objective_before: f64,
    pub objective_after: f64,
}

/// `1 / sqrt(mean squared pairwise distance)` over the rows of `x`.
pub fn channel_scale(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Data(format!("cannot standardize a channel with {n} rows")));
    }
    let mean = x.row_mean();
    let mut spread = 0.0;
    for row in x.row_iter() {
        spread += (row - &mean).norm_squared();
    }
    // Σ_{i<j} ‖x_i - x_j‖² = N Σ_i ‖x_i - x̄‖², over N(N-1)/2 pairs.
    let msd = 2.0 * spread / (n - 1) as f64;
    if !(msd > 0.0 && msd.is_finite()) {
        return Err(Error::Data(format!("channel has mean squared pairwise distance {msd}")));
    }
    Ok(1.0 / msd.sqrt())
}

/// Recomputes the consensus metric from the model's projections.
pub fn update_consensus(model: &MetricModel) -> MetricModel {
    let mut out = model.clone();
    out.update_consensus();
    out
}

/// Halving line search on `L_v` along `-grad`.
///
/// A trial is scored with the consensus recomputed from the trial projections, so an
/// accepted step never increases the objective of a consistent model.
pub(crate) fn line_search(
    problem: &Problem,
    projections: &mut [DMatrix<f64>],
    consensus: &mut DMatrix<f64>,
    cache: &mut TermCache,
    v: usize,
    grad: &DMatrix<f64>,
    eta_start: f64,
) -> StepOutcome {
    let hyper = problem.hyper;
    let before = cache.terms(hyper.beta).total;
    let original = projections[v].clone();
    let mut eta = eta_start;
    let mut last = before;
    for halvings in 0..=hyper.max_halvings {
        let trial = &original - grad * eta;
        let mut trial_cache = cache.clone();
        trial_cache.hinge[v] = problem.hinge(v, &trial);
        trial_cache.frobenius[v] = problem.frobenius(v, &trial);
        projections[v] = trial;
        let trial_consensus = consensus_of(projections, hyper.epsilon);
        trial_cache.logdet = problem.logdets(projections, &trial_consensus);
        let after = trial_cache.terms(hyper.beta).total;
        if after.is_finite() && after <= before {
            *consensus = trial_consensus;
            *cache = trial_cache;
            return StepOutcome {
                accepted: true,
                step_size: eta,
                halvings,
                objective_before: before,
                objective_after: after,
            };
        }
        last = after;
        if halvings < hyper.max_halvings {
            eta *= 0.5;
        }
    }
    projections[v] = original;
    StepOutcome {
        accepted: false,
        step_size: eta,
        halvings: hyper.max_halvings,
        objective_before: before,
        objective_after: last,
    }
}

/// One line-searched gradient step on `L_v` starting from the configured learning rate.
///
/// The gradient holds the model's consensus fixed; the returned model carries the
/// consensus recomputed from its projections.
pub fn gradient_step(
    features: &[DMatrix<f64>],
    pairs: &PairConstraintSet,
    model: &MetricModel,
    v: usize,
) -> Result<(MetricModel, StepOutcome)> {
    let problem = Problem::new(features, pairs, &model.hyper)?;
    problem.check_model(model)?;
    check_channel(model, v)?;
    let grad = problem.gradient(v, &model.projections[v], &model.consensus)?;
    let mut out = model.clone();
    out.update_consensus();
    let mut cache = problem.cache(&out.projections, &out.consensus);
    let outcome = line_search(
        &problem,
        &mut out.projections,
        &mut out.consensus,
        &mut cache,
        v,
        &grad,
        model.hyper.learning_rate,
    );
    Ok((out, outcome))
}

/// Trains on feature sets after standardizing each channel; scales are kept in the model.
pub fn train(features: &[FeatureSet], pairs: &PairConstraintSet, hyper: &Hyperparams) -> Result<MetricModel> {
    let Some(first) = features.first() else {
        return Err(Error::InvalidArgument("no feature channels".into()));
    };
    for f in features {
        if f.labels != first.labels {
            return Err(Error::Data(format!(
                "channel {} rows are not aligned with channel {}",
                f.channel, first.channel
            )));
        }
    }
    let classes: BTreeSet<&str> = first.labels.iter().map(String::as_str).collect();
    if classes.len() < 2 {
        return Err(Error::Data(format!("training needs at least 2 classes, found {}", classes.len())));
    }
    PairConstraintSet::from_pairs(pairs.pairs.clone(), &first.labels)?;
    let scales = features
        .iter()
        .map(|f| channel_scale(&f.vectors).map_err(|e| Error::Data(format!("channel {}: {e}", f.channel))))
        .collect::<Result<Vec<f64>>>()?;
    let scaled: Vec<DMatrix<f64>> = features.iter().zip(&scales).map(|(f, s)| &f.vectors * *s).collect();
    let mut model = train_scaled(&scaled, pairs, hyper)?;
    model.channel_scales = scales;
    model.channel_names = features.iter().map(|f| f.channel.clone()).collect();
    Ok(model)
}

/// Block coordinate descent from identity projections on already standardized channels.
pub fn train_scaled(features: &[DMatrix<f64>], pairs: &PairConstraintSet, hyper: &Hyperparams) -> Result<MetricModel> {
    let problem = Problem::new(features, pairs, hyper)?;
    let m = features.len();
    let mut model = MetricModel::identity(m, problem.dim(), hyper.clone());
    let initial = problem.checked_terms(&model)?;
    let mut cache = problem.cache(&model.projections, &model.consensus);
    model.trace.push(initial.total);
    let mut etas = vec![hyper.learning_rate; m];
    let mut previous = initial.total;
    for iteration in 0..hyper.max_iters {
        let mut any_accepted = false;
        for v in 0..m {
            let grad = problem.gradient(v, &model.projections[v], &model.consensus)?;
            let outcome = line_search(
                &problem,
                &mut model.projections,
                &mut model.consensus,
                &mut cache,
                v,
                &grad,
                etas[v],
            );
            etas[v] = if outcome.accepted {
                any_accepted = true;
                hyper.learning_rate.min(2.0 * outcome.step_size)
            } else {
                hyper.learning_rate
            };
        }
        let current = cache.terms(hyper.beta).total;
        model.trace.push(current);
        model.iterations = iteration + 1;
        let relative = (previous - current).abs() / previous.abs().max(f64::MIN_POSITIVE);
        log::debug!("iteration {iteration}: objective {current:.6e} (relative change {relative:.3e})");
        if !any_accepted || relative < hyper.tol {
            model.converged = true;
            break;
        }
        previous = current;
    }
    Ok(model)
}
