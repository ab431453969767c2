use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coding::KMeansOptions;
use crate::error::{Error, Result};
use crate::eval::DistanceMode;
use crate::metric::Hyperparams;
use crate::signatures::{ShapeDnaParams, SiHksParams, WksParams};
use crate::spectral::{EigenOptions, EigenSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub k: usize,
    pub solver: EigenSolver,
    pub dense_threshold: usize,
    pub tol: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        let o = EigenOptions::new(100);
        EigenConfig {
            k: o.k,
            solver: o.solver,
            dense_threshold: o.dense_threshold,
            tol: o.tol,
        }
    }
}

impl EigenConfig {
    pub fn options(&self) -> EigenOptions {
        let mut o = EigenOptions::new(self.k).with_solver(self.solver);
        o.dense_threshold = self.dense_threshold;
        o.tol = self.tol;
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodingConfig {
    pub vocab_size: usize,
    pub pca_dim: usize,
    /// Training rows used to fit each vocabulary; larger pools are subsampled.
    pub max_vocab_rows: usize,
    pub kmeans_max_iter: usize,
}

impl Default for CodingConfig {
    fn default() -> Self {
        CodingConfig {
            vocab_size: 64,
            pca_dim: 30,
            max_vocab_rows: 100_000,
            kmeans_max_iter: KMeansOptions::default().max_iter,
        }
    }
}

impl CodingConfig {
    pub fn kmeans(&self) -> KMeansOptions {
        KMeansOptions {
            max_iter: self.kmeans_max_iter,
            ..KMeansOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub per_class_cap: Option<usize>,
    pub neg_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.6 }
    }
}

/// Which shapes take part in evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalScope {
    /// Leave-one-out over every shape in the dataset.
    #[default]
    All,
    /// Leave-one-out within the test split only.
    TestOnly,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub mode: DistanceMode,
    pub scope: EvalScope,
}

/// Everything a run needs besides the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub eigen: EigenConfig,
    pub wks: WksParams,
    pub sihks: SiHksParams,
    pub shape_dna: ShapeDnaParams,
    pub coding: CodingConfig,
    pub pairs: PairConfig,
    pub metric: Hyperparams,
    pub split: SplitConfig,
    pub eval: EvalConfig,
    pub cache_dir: Option<PathBuf>,
    pub repeats: usize,
    /// Largest tolerated fraction of meshes that fail extraction.
    pub max_failure_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            eigen: EigenConfig::default(),
            wks: WksParams::default(),
            sihks: SiHksParams::default(),
            shape_dna: ShapeDnaParams::default(),
            coding: CodingConfig::default(),
            pairs: PairConfig::default(),
            metric: Hyperparams::default(),
            split: SplitConfig::default(),
            eval: EvalConfig::default(),
            cache_dir: None,
            repeats: 1,
            max_failure_fraction: 0.05,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    /// Reads JSON, or `key=value` lines with dotted keys (`#` starts a comment).
    /// Keys missing from the file keep their defaults.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let user: Value = serde_json::from_str(text).map_err(config_err)?;
            let mut base = serde_json::to_value(RunConfig::default()).map_err(config_err)?;
            merge(&mut base, user, "")?;
            let config: RunConfig = serde_json::from_value(base).map_err(config_err)?;
            return Ok(config);
        }
        let pairs: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        RunConfig::default().with_overrides(&pairs)
    }

    /// Applies `a.b.c=value` overrides. Values parse as JSON, falling back to a string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<RunConfig> {
        let mut value = serde_json::to_value(self).map_err(config_err)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            let parsed = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            set_path(&mut value, key.trim(), parsed)?;
        }
        serde_json::from_value(value).map_err(config_err)
    }

    /// Checks every module precondition that can be known before any work starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.eigen.k < 3 {
            return bad(format!("eigen.k = {} is too small", self.eigen.k));
        }
        if self.shape_dna.out_dim == 0 || self.shape_dna.out_dim > self.eigen.k {
            return bad(format!(
                "shape_dna.out_dim = {} must lie in 1..={}",
                self.shape_dna.out_dim, self.eigen.k
            ));
        }
        if self.wks.num_energies < 2 || !(self.wks.variance_factor > 0.0) {
            return bad("wks needs at least 2 energies and a positive variance factor".into());
        }
        let taus = self.sihks.taus().len();
        if !(self.sihks.tau_step > 0.0) || self.sihks.out_dim == 0 || self.sihks.out_dim >= taus {
            return bad(format!("sihks.out_dim must lie in 1..{} for the configured grid", taus));
        }
        if self.coding.vocab_size < 2 || self.coding.pca_dim == 0 || self.coding.max_vocab_rows < self.coding.vocab_size {
            return bad("coding needs vocab_size ≥ 2, pca_dim ≥ 1 and max_vocab_rows ≥ vocab_size".into());
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return bad(format!("split.train_fraction = {} must lie in (0, 1)", self.split.train_fraction));
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.max_failure_fraction) {
            return bad("max_failure_fraction must lie in [0, 1)".into());
        }
        if let Some(r) = self.pairs.neg_ratio {
            if !(r > 0.0) {
                return bad("pairs.neg_ratio must be positive".into());
            }
        }
        self.metric.validate(3)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn merge(base: &mut Value, user: Value, prefix: &str) -> Result<()> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &path)?,
                    None => return Err(Error::Config(format!("unknown config key {path:?}"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("config key {key:?}: {:?} is not a section", parts[..i].join("."))))?;
        let slot = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
        if i + 1 == parts.len() {
            *slot = value;
            return Ok(());
        }
        cur = slot;
    }
    Ok(())
}
