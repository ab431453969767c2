use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAIN_SPLIT: &str = "train";
pub const TEST_SPLIT: &str = "test";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub shape_id: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub splits: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl DatasetManifest {
    /// Reads and validates a manifest, including that every mesh file exists.
    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path)?;
        let mut m: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Data(format!("manifest {}: {e}", path.display())))?;
        m.base_dir = path.parent().map(Path::to_path_buf);
        m.validate(true)?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        match &self.base_dir {
            Some(base) if entry.path.is_relative() => base.join(&entry.path),
            _ => entry.path.clone(),
        }
    }

    pub fn validate(&self, check_paths: bool) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.shape_id.as_str()) {
                return Err(Error::Data(format!("duplicate shape id {:?}", e.shape_id)));
            }
            if e.shape_id.contains(',') || e.label.contains(',') {
                return Err(Error::Data(format!("shape id and label may not contain commas: {:?}", e.shape_id)));
            }
            if check_paths && !self.resolve(e).is_file() {
                return Err(Error::Data(format!(
                    "mesh file for {:?} not found: {}",
                    e.shape_id,
                    self.resolve(e).display()
                )));
            }
        }
        for (name, ids) in &self.splits {
            if let Some(bad) = ids.iter().find(|id| !seen.contains(id.as_str())) {
                return Err(Error::Data(format!("split {name:?} names unknown shape {bad:?}")));
            }
        }
        if let (Some(train), Some(test)) = (self.splits.get(TRAIN_SPLIT), self.splits.get(TEST_SPLIT)) {
            let train: HashSet<&String> = train.iter().collect();
            if let Some(both) = test.iter().find(|id| train.contains(id)) {
                return Err(Error::Data(format!("shape {both:?} is in both train and test")));
            }
        }
        Ok(())
    }

    pub fn labels_by_id(&self) -> HashMap<String, String> {
        self.entries.iter().map(|e| (e.shape_id.clone(), e.label.clone())).collect()
    }

    pub fn split(&self, name: &str) -> Option<&[String]> {
        self.splits.get(name).map(Vec::as_slice)
    }
}

/// Per-class stratified split: `round(fraction · |class|)` shapes of every class (at
/// least one) go to train, the rest to test. Both lists keep manifest order.
pub fn make_split(manifest: &DatasetManifest, fraction: f64, seed: u64) -> Result<DatasetManifest> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {fraction} must lie in (0, 1)")));
    }
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        classes.entry(e.label.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; manifest.entries.len()];
    for (label, mut members) in classes {
        if members.len() < 2 {
            return Err(Error::Data(format!("class {label:?} has fewer than 2 members")));
        }
        members.shuffle(&mut rng);
        let take = ((fraction * members.len() as f64).round() as usize).max(1);
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    let mut out = manifest.clone();
    let pick = |want: bool| -> Vec<String> {
        manifest
            .entries
            .iter()
            .zip(&in_train)
            .filter(|(_, t)| **t == want)
            .map(|(e, _)| e.shape_id.clone())
            .collect()
    };
    out.splits.insert(TRAIN_SPLIT.into(), pick(true));
    out.splits.insert(TEST_SPLIT.into(), pick(false));
    out.seed = seed;
    Ok(out)
}
