//! Multi-feature metric learning with a LogDet consensus.
//!
//! Every feature channel `v` gets a square projection `L_v`; pairs of training shapes
//! are pushed inside (same class) or outside (different class) a margin around the
//! threshold `τ` through a smoothed hinge, and each channel metric `L_vᵀL_v` is pulled
//! towards the consensus `A* = εI + (1/m) Σ_v L_vᵀL_v` by a LogDet divergence. The
//! consensus is the single metric used at retrieval time.

mod hinge;
mod linalg;
mod model;
mod objective;
mod pairs;
mod single;
mod train;

pub use hinge::{smoothed_hinge, smoothed_hinge_derivative};
pub use linalg::{cholesky_factor, log_det_divergence, mahalanobis_sq, pinv_transpose, LogDet};
pub use model::{consensus_of, Hyperparams, MetricModel};
pub use objective::{gradient, gradient_terms, objective, objective_terms, GradientTerms, ObjectiveTerms};
pub use pairs::{sample_pairs, Pair, PairConstraintSet};
pub use single::{train_single_metric, SingleMetricModel};
pub use train::{channel_scale, gradient_step, train, train_scaled, update_consensus, StepOutcome};
