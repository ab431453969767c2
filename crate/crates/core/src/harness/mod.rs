//! End-to-end orchestration: manifests and splits, cached signature extraction,
//! encoding, training, evaluation and synthetic data.

mod config;
mod encode;
mod extract;
mod manifest;
mod run;
mod synth;

pub use config::{CodingConfig, EigenConfig, EvalConfig, EvalScope, PairConfig, RunConfig, SplitConfig};
pub use encode::{channel_order, fit_encoders, raw_channels, Encoders};
pub use extract::{compute_signatures, extract_all, ExtractionFailure, ExtractionStats, MeshSignatures, SignatureCache};
pub use manifest::{make_split, DatasetManifest, ManifestEntry, TEST_SPLIT, TRAIN_SPLIT};
pub use run::{
    align_channels, evaluate, fit_stage, nearest_neighbor_accuracy, run_pipeline, train_on, FittedStage, MeasureSummary,
    RunOutcome, RunSummary,
};
pub use synth::{gaussian_views, synthetic_shapes, write_synthetic_shapes, GaussianViewsParams, ShapesParams};

use sha2::{Digest, Sha256};

/// Child seed for a named stage, so every random choice flows from one run seed.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
