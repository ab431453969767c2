//! The full pipeline on procedural spheres, boxes and bent cylinders, written to a run
//! directory under the system temp dir.

use mfml::harness::{run_pipeline, write_synthetic_shapes, RunConfig, ShapesParams};

fn main() -> mfml::Result<()> {
    let root = std::env::temp_dir().join("mfml-synthetic-example");
    let manifest = write_synthetic_shapes(&ShapesParams::default(), 1, &root.join("data"))?;
    let config = RunConfig {
        cache_dir: Some(root.join("cache")),
        ..RunConfig::default()
    };
    let outcome = run_pipeline(&manifest, &config, &root.join("runs"))?;
    println!("MfML: {}", outcome.reports[0].summary_line());
    for (channel, s) in &outcome.summary.baselines {
        println!("{channel} Euclidean: NN {:.1} FT {:.1}", 100.0 * s.nn.0, 100.0 * s.ft.0);
    }
    println!(
        "eigensolves {}, cache hits {}; artifacts in {}",
        outcome.summary.extraction.eigensolves,
        outcome.summary.extraction.cache_hits,
        outcome.dir.display()
    );
    Ok(())
}
