use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{EvalScope, RunConfig};
use super::derive_seed;
use super::encode::{fit_encoders, Encoders};
use super::extract::{extract_all, ExtractionStats, MeshSignatures};
use super::manifest::{make_split, DatasetManifest, TEST_SPLIT, TRAIN_SPLIT};
use crate::coding::FeatureSet;
use crate::error::{Error, Result};
use crate::eval::{compute_measures, pr_svg, rank_all, Embedding, RetrievalReport};
use crate::metric::{sample_pairs, train, MetricModel};

/// Encoders, encoded channels for every shape, and the metric trained on the train split.
#[derive(Debug, Clone)]
pub struct FittedStage {
    pub encoders: Encoders,
    pub features: Vec<FeatureSet>,
    pub model: MetricModel,
}

/// Mean and standard deviation of each measure over repeats, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub nn: (f64, f64),
    pub ft: (f64, f64),
    pub st: (f64, f64),
    pub e: (f64, f64),
    pub dcg: (f64, f64),
}

impl MeasureSummary {
    pub fn of(reports: &[&RetrievalReport]) -> MeasureSummary {
        let stat = |f: fn(&RetrievalReport) -> f64| {
            let n = reports.len() as f64;
            let mean = reports.iter().map(|r| f(r)).sum::<f64>() / n;
            let var = if reports.len() > 1 {
                reports.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (mean, var.sqrt())
        };
        MeasureSummary {
            nn: stat(|r| r.nn),
            ft: stat(|r| r.ft),
            st: stat(|r| r.st),
            e: stat(|r| r.e),
            dcg: stat(|r| r.dcg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub repeats: usize,
    pub seeds: Vec<u64>,
    pub learned: MeasureSummary,
    /// Euclidean distance on each single channel, same splits and scope.
    pub baselines: BTreeMap<String, MeasureSummary>,
    pub extraction: ExtractionStats,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    /// One report per repeat.
    pub reports: Vec<RetrievalReport>,
    pub summary: RunSummary,
    /// Model of the first repeat.
    pub model: MetricModel,
}

/// Reorders `features` to match `names`.
pub fn align_channels(features: &[FeatureSet], names: &[String]) -> Result<Vec<FeatureSet>> {
    names
        .iter()
        .map(|n| {
            features
                .iter()
                .find(|f| &f.channel == n)
                .cloned()
                .ok_or_else(|| Error::Data(format!("feature channel {n:?} is missing")))
        })
        .collect()
}

/// Trains the metric on the rows named by `train_ids`.
pub fn train_on(features: &[FeatureSet], train_ids: &[String], config: &RunConfig, seed: u64) -> Result<MetricModel> {
    let train_sets = features.iter().map(|f| f.subset(train_ids)).collect::<Result<Vec<_>>>()?;
    let labels = &train_sets
        .first()
        .ok_or_else(|| Error::Data("no feature channels".into()))?
        .labels;
    let pairs = sample_pairs(labels, config.pairs.per_class_cap, config.pairs.neg_ratio, derive_seed(seed, "pairs"))?;
    train(&train_sets, &pairs, &config.metric)
}

/// Fits encoders on the training shapes, encodes every shape and trains the metric.
/// Nothing here reads a non-training shape except to apply the fitted encoders.
pub fn fit_stage(sigs: &[MeshSignatures], train_ids: &[String], config: &RunConfig, seed: u64) -> Result<FittedStage> {
    let by_id: HashMap<&str, &MeshSignatures> = sigs.iter().map(|s| (s.shape_id.as_str(), s)).collect();
    let train_sigs = train_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Data(format!("training shape {id:?} has no signatures")))
        })
        .collect::<Result<Vec<_>>>()?;
    let encoders = fit_encoders(&train_sigs, config, seed).map_err(|e| e.at_stage("encode"))?;
    let all: Vec<&MeshSignatures> = sigs.iter().collect();
    let features = encoders.encode(&all, config).map_err(|e| e.at_stage("encode"))?;
    let model = train_on(&features, train_ids, config, seed).map_err(|e| e.at_stage("train"))?;
    Ok(FittedStage {
        encoders,
        features,
        model,
    })
}

fn scoped(embedding: Embedding, scope: EvalScope, test_ids: Option<&[String]>) -> Result<Embedding> {
    match (scope, test_ids) {
        (EvalScope::All, _) => Ok(embedding),
        (EvalScope::TestOnly, Some(ids)) => {
            let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
            let rows: Vec<usize> = (0..embedding.len())
                .filter(|&i| wanted.contains(embedding.shape_ids[i].as_str()))
                .collect();
            if rows.len() < 2 {
                return Err(Error::Data("test split has fewer than 2 shapes".into()));
            }
            Ok(embedding.subset(&rows))
        }
        (EvalScope::TestOnly, None) => Err(Error::Config("test-only evaluation needs a test split".into())),
    }
}

fn measure(embedding: &Embedding) -> Result<RetrievalReport> {
    let ranked = rank_all(embedding, None);
    let labels: HashMap<String, String> = embedding
        .shape_ids
        .iter()
        .cloned()
        .zip(embedding.labels.iter().cloned())
        .collect();
    compute_measures(&ranked, &labels)
}

/// Leave-one-out retrieval under the learned metric.
pub fn evaluate(features: &[FeatureSet], model: &MetricModel, config: &RunConfig, test_ids: Option<&[String]>) -> Result<RetrievalReport> {
    let aligned = align_channels(features, &model.channel_names)?;
    let embedding = Embedding::new(&aligned, model, config.eval.mode)?;
    measure(&scoped(embedding, config.eval.scope, test_ids)?)
}

fn evaluate_euclidean(channel: &FeatureSet, config: &RunConfig, test_ids: Option<&[String]>) -> Result<RetrievalReport> {
    let embedding = Embedding::euclidean(std::slice::from_ref(channel))?;
    measure(&scoped(embedding, config.eval.scope, test_ids)?)
}

/// Fraction of `queries` whose nearest `database` shape shares their label.
pub fn nearest_neighbor_accuracy(database: &Embedding, queries: &Embedding) -> f64 {
    if queries.is_empty() || database.is_empty() {
        return 0.0;
    }
    let mut correct = 0usize;
    for q in 0..queries.len() {
        let x = queries.points.row(q);
        let best = (0..database.len())
            .map(|j| ((database.points.row(j) - x).norm_squared(), j))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(database.shape_ids[a.1].cmp(&database.shape_ids[b.1])))
            .expect("database is not empty");
        if database.labels[best.1] == queries.labels[q] {
            correct += 1;
        }
    }
    correct as f64 / queries.len() as f64
}

fn new_run_dir(out_root: &Path, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(out_root)?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    for attempt in 0.. {
        let name = if attempt == 0 {
            format!("run-{secs}-seed{seed}")
        } else {
            format!("run-{secs}-seed{seed}-{attempt}")
        };
        let dir = out_root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("unbounded attempts")
}

/// Extract, split, fit encoders, train, evaluate, and write the run directory:
/// `config.json`, `model.json`, `trace.csv`, `report.json`, `pr.csv`, `pr.svg`,
/// `summary.json` and `encoders.json`.
pub fn run_pipeline(manifest: &DatasetManifest, config: &RunConfig, out_root: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let (sigs, stats) = extract_all(manifest, config).map_err(|e| e.at_stage("extract"))?;
    let extracted: HashSet<&str> = sigs.iter().map(|s| s.shape_id.as_str()).collect();
    let mut usable = manifest.clone();
    usable.entries.retain(|e| extracted.contains(e.shape_id.as_str()));
    for ids in usable.splits.values_mut() {
        ids.retain(|id| extracted.contains(id.as_str()));
    }

    let mut seeds = Vec::new();
    let mut reports = Vec::new();
    let mut baseline_reports: BTreeMap<String, Vec<RetrievalReport>> = BTreeMap::new();
    let mut first: Option<(FittedStage, Vec<String>)> = None;
    for r in 0..config.repeats {
        let seed = if r == 0 { config.seed } else { derive_seed(config.seed, &format!("repeat-{r}")) };
        seeds.push(seed);
        let split = if config.repeats == 1 && usable.split(TRAIN_SPLIT).is_some() {
            usable.clone()
        } else {
            make_split(&usable, config.split.train_fraction, seed).map_err(|e| e.at_stage("split"))?
        };
        let train_ids = split.split(TRAIN_SPLIT).unwrap_or_default().to_vec();
        let test_ids: Vec<String> = match split.split(TEST_SPLIT) {
            Some(t) => t.to_vec(),
            None => {
                let train: HashSet<&String> = train_ids.iter().collect();
                split.entries.iter().map(|e| e.shape_id.clone()).filter(|id| !train.contains(id)).collect()
            }
        };
        let fitted = fit_stage(&sigs, &train_ids, config, seed)?;
        let report = evaluate(&fitted.features, &fitted.model, config, Some(&test_ids)).map_err(|e| e.at_stage("eval"))?;
        log::info!("repeat {r}: {}", report.summary_line());
        for channel in &fitted.features {
            let b = evaluate_euclidean(channel, config, Some(&test_ids)).map_err(|e| e.at_stage("eval"))?;
            baseline_reports.entry(channel.channel.clone()).or_default().push(b);
        }
        reports.push(report);
        if first.is_none() {
            first = Some((fitted, train_ids));
        }
    }
    let (fitted, _) = first.expect("at least one repeat");
    let summary = RunSummary {
        repeats: config.repeats,
        seeds,
        learned: MeasureSummary::of(&reports.iter().collect::<Vec<_>>()),
        baselines: baseline_reports
            .iter()
            .map(|(k, v)| (k.clone(), MeasureSummary::of(&v.iter().collect::<Vec<_>>())))
            .collect(),
        extraction: stats,
    };

    let dir = new_run_dir(out_root, config.seed).map_err(|e| e.at_stage("persist"))?;
    let write = |name: &str, body: String| std::fs::write(dir.join(name), body).map_err(|e| Error::from(e).at_stage("persist"));
    write("config.json", config.to_json()?)?;
    write("model.json", fitted.model.to_json()?)?;
    write("trace.csv", fitted.model.trace_csv())?;
    write("report.json", reports[0].to_json()?)?;
    write("pr.csv", reports[0].pr_csv())?;
    write("summary.json", serde_json::to_string_pretty(&summary)?)?;
    write("encoders.json", serde_json::to_string(&fitted.encoders)?)?;
    let mut curves = vec![("MfML".to_string(), reports[0].pr_curve.clone())];
    for (name, b) in &baseline_reports {
        curves.push((format!("{name} (Euclidean)"), b[0].pr_curve.clone()));
    }
    write("pr.svg", pr_svg(&curves))?;
    Ok(RunOutcome {
        dir,
        reports,
        summary,
        model: fitted.model,
    })
}
