use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfml::coding::{load_all, FeatureSet};
use mfml::error::{Error, Result};
use mfml::eval::pr_svg;
use mfml::harness::{
    evaluate, extract_all, fit_encoders, gaussian_views, make_split, run_pipeline, train_on, write_synthetic_shapes,
    DatasetManifest, GaussianViewsParams, MeshSignatures, RunConfig, ShapesParams, TEST_SPLIT, TRAIN_SPLIT,
};
use mfml::metric::MetricModel;

#[derive(Parser)]
#[command(name = "mfml", version, about = "Multi-feature metric learning for non-rigid 3D shape retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON or key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set metric.beta=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let config = base.with_overrides(&self.overrides)?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum SynthKind {
    /// Multi-channel Gaussian feature sets, written as a features directory.
    Gaussian {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value_t = 2)]
        channels: usize,
        #[arg(long, default_value_t = 3.0)]
        separation: f64,
    },
    /// Sphere, box and bent-cylinder meshes with a manifest.
    Shapes {
        #[arg(long, default_value_t = 8)]
        per_class: usize,
        #[arg(long, default_value_t = 500.0)]
        scale: f64,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Compute signatures, fit encoders on the train split and write encoded channels.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output features directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Add a stratified train/test split to a manifest.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.6)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output manifest; defaults to overwriting the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the metric on a features directory.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Manifest whose train split selects the training rows; all rows otherwise.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output model JSON; the trace is written next to it as `trace.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-out retrieval measures for a trained model.
    Eval {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Manifest supplying the test split for `eval.scope=test_only`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output report JSON; the PR curve is written next to it as `pr.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline into a new run directory.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        repeats: Option<usize>,
        /// Parent directory of run directories.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Generate synthetic data.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
        #[arg(long, global = true, default_value = "synthetic")]
        out: PathBuf,
    },
    /// Plot PR curves from run directories or `pr.csv` files into one SVG.
    Plot {
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "pr.svg")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn train_ids(manifest: Option<&Path>, features: &FeatureSet) -> Result<Vec<String>> {
    match manifest {
        Some(p) => {
            let m = DatasetManifest::load(p)?;
            m.split(TRAIN_SPLIT)
                .map(<[String]>::to_vec)
                .ok_or_else(|| Error::Data(format!("{} has no train split", p.display())))
        }
        None => Ok(features.shape_ids.clone()),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Extract { manifest, config, out } => {
            let config = config.resolve()?;
            let manifest = DatasetManifest::load(&manifest)?;
            let (sigs, stats) = extract_all(&manifest, &config).map_err(|e| e.at_stage("extract"))?;
            let train: Vec<&MeshSignatures> = match manifest.split(TRAIN_SPLIT) {
                Some(ids) => sigs.iter().filter(|s| ids.contains(&s.shape_id)).collect(),
                None => {
                    log::warn!("manifest has no train split; fitting encoders on every shape");
                    sigs.iter().collect()
                }
            };
            let encoders = fit_encoders(&train, &config, config.seed).map_err(|e| e.at_stage("encode"))?;
            let all: Vec<&MeshSignatures> = sigs.iter().collect();
            let features = encoders.encode(&all, &config).map_err(|e| e.at_stage("encode"))?;
            for f in &features {
                f.save(&out, HashMap::new())?;
            }
            std::fs::write(out.join("encoders.json"), serde_json::to_string(&encoders)?)?;
            std::fs::write(out.join("extraction.json"), serde_json::to_string_pretty(&stats)?)?;
            println!(
                "{} shapes, {} eigensolves, {} cache hits, {} failures -> {}",
                sigs.len(),
                stats.eigensolves,
                stats.cache_hits,
                stats.failures.len(),
                out.display()
            );
        }
        Command::Split {
            manifest,
            fraction,
            seed,
            out,
        } => {
            let m = DatasetManifest::load(&manifest)?;
            let split = make_split(&m, fraction, seed)?;
            split.save(out.as_ref().unwrap_or(&manifest))?;
            println!(
                "train {} / test {}",
                split.splits[TRAIN_SPLIT].len(),
                split.splits[TEST_SPLIT].len()
            );
        }
        Command::Train {
            features,
            manifest,
            config,
            out,
        } => {
            let config = config.resolve()?;
            let sets = load_all(&features)?;
            let first = sets.first().ok_or_else(|| Error::Data("features directory is empty".into()))?;
            let ids = train_ids(manifest.as_deref(), first)?;
            let model = train_on(&sets, &ids, &config, config.seed).map_err(|e| e.at_stage("train"))?;
            std::fs::write(&out, model.to_json()?)?;
            std::fs::write(sibling(&out, "trace.csv"), model.trace_csv())?;
            println!(
                "{} iterations, objective {:.4} -> {:.4}, converged {}",
                model.iterations,
                model.trace[0],
                model.trace.last().copied().unwrap_or(f64::NAN),
                model.converged
            );
        }
        Command::Eval {
            features,
            model,
            manifest,
            config,
            out,
        } => {
            let config = config.resolve()?;
            let sets = load_all(&features)?;
            let model = MetricModel::from_json(&std::fs::read_to_string(&model)?)?;
            let test = match manifest {
                Some(p) => DatasetManifest::load(&p)?.split(TEST_SPLIT).map(<[String]>::to_vec),
                None => None,
            };
            let report = evaluate(&sets, &model, &config, test.as_deref()).map_err(|e| e.at_stage("eval"))?;
            std::fs::write(&out, report.to_json()?)?;
            std::fs::write(sibling(&out, "pr.csv"), report.pr_csv())?;
            println!("{}", report.summary_line());
        }
        Command::Run {
            manifest,
            config,
            repeats,
            out,
        } => {
            let mut config = config.resolve()?;
            if let Some(r) = repeats {
                config.repeats = r;
            }
            let manifest = DatasetManifest::load(&manifest)?;
            let outcome = run_pipeline(&manifest, &config, &out)?;
            let s = &outcome.summary.learned;
            println!(
                "NN {:.1}±{:.1}  FT {:.1}±{:.1}  ST {:.1}±{:.1}  E {:.1}±{:.1}  DCG {:.1}±{:.1}",
                100.0 * s.nn.0,
                100.0 * s.nn.1,
                100.0 * s.ft.0,
                100.0 * s.ft.1,
                100.0 * s.st.0,
                100.0 * s.st.1,
                100.0 * s.e.0,
                100.0 * s.e.1,
                100.0 * s.dcg.0,
                100.0 * s.dcg.1
            );
            println!("{}", outcome.dir.display());
        }
        Command::Synth { kind, seed, out } => match kind {
            SynthKind::Gaussian {
                classes,
                per_class,
                channels,
                separation,
            } => {
                let params = GaussianViewsParams {
                    classes,
                    per_class,
                    channels,
                    separation: vec![separation],
                    ..Default::default()
                };
                for f in gaussian_views(&params, seed)? {
                    f.save(&out, HashMap::new())?;
                }
                println!("{} channels -> {}", channels, out.display());
            }
            SynthKind::Shapes { per_class, scale } => {
                let m = write_synthetic_shapes(&ShapesParams { per_class, scale }, seed, &out)?;
                println!("{} meshes -> {}", m.entries.len(), out.join("manifest.json").display());
            }
        },
        Command::Plot { inputs, out } => {
            if inputs.is_empty() {
                return Err(Error::Config("plot needs at least one run directory or pr.csv".into()));
            }
            let mut curves = Vec::new();
            for input in &inputs {
                let csv = if input.is_dir() { input.join("pr.csv") } else { input.clone() };
                let name = if input.is_dir() { input } else { input.parent().unwrap_or(input) }
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| csv.display().to_string());
                curves.push((name, read_pr_csv(&csv)?));
            }
            std::fs::write(&out, pr_svg(&curves))?;
            println!("{} curves -> {}", curves.len(), out.display());
        }
    }
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join(name)
}

fn read_pr_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let parse = |s: Option<&str>| {
                s.and_then(|v| v.trim().parse::<f64>().ok()).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: format!("expected recall,precision in {}", path.display()),
                })
            };
            let mut cells = l.split(',');
            Ok((parse(cells.next())?, parse(cells.next())?))
        })
        .collect()
}
