use std::path::Path;

use mfml::eval::{DistanceMode, Embedding};
use mfml::harness::{
    extract_all, fit_stage, gaussian_views, make_split, nearest_neighbor_accuracy, run_pipeline, write_synthetic_shapes,
    DatasetManifest, GaussianViewsParams, MeshSignatures, RunConfig, ShapesParams, TEST_SPLIT, TRAIN_SPLIT,
};
use mfml::metric::{train, Hyperparams, PairConstraintSet};
use tempfile::TempDir;

fn shapes(dir: &Path, per_class: usize) -> DatasetManifest {
    write_synthetic_shapes(&ShapesParams { per_class, ..Default::default() }, 4, dir).unwrap()
}

fn max_diff(a: &MeshSignatures, b: &MeshSignatures) -> f64 {
    let mut d = (&a.wks - &b.wks).amax().max((&a.sihks - &b.sihks).amax());
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).chain(a.shape_dna.iter().zip(&b.shape_dna)) {
        d = d.max((x - y).abs());
    }
    d
}

#[test]
fn second_extraction_is_served_from_the_cache() {
    let tmp = TempDir::new().unwrap();
    let manifest = shapes(&tmp.path().join("shapes"), 2);
    let config = RunConfig {
        cache_dir: Some(tmp.path().join("cache")),
        ..Default::default()
    };
    let (first, stats) = extract_all(&manifest, &config).unwrap();
    assert_eq!((stats.eigensolves, stats.cache_hits), (6, 0));
    let (second, stats) = extract_all(&manifest, &config).unwrap();
    assert_eq!((stats.eigensolves, stats.cache_hits), (0, 6));
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a.shape_id, b.shape_id);
        assert!(max_diff(a, b) <= 1e-12);
    }

    // A different spectral setting must not reuse the entries.
    let mut other = config.clone();
    other.eigen.k = 60;
    assert_eq!(extract_all(&manifest, &other).unwrap().1.eigensolves, 6);
}

#[test]
fn corrupt_meshes_are_named_and_the_rest_complete() {
    let tmp = TempDir::new().unwrap();
    let manifest = shapes(tmp.path(), 2);
    let broken = manifest.entries[3].shape_id.clone();
    std::fs::write(manifest.resolve(&manifest.entries[3]), "OFF\n3 1 0\n0 0 0\n1 0 0\n").unwrap();

    let lenient = RunConfig {
        max_failure_fraction: 0.5,
        ..Default::default()
    };
    let (sigs, stats) = extract_all(&manifest, &lenient).unwrap();
    assert_eq!(sigs.len(), 5);
    assert_eq!(stats.failures.len(), 1);
    assert_eq!(stats.failures[0].shape_id, broken);
    assert!(sigs.iter().all(|s| s.shape_id != broken));

    let err = extract_all(&manifest, &RunConfig::default()).unwrap_err();
    assert!(err.to_string().contains(&broken), "{err}");
}

#[test]
fn test_shapes_never_influence_encoders_or_model() {
    let tmp = TempDir::new().unwrap();
    let manifest = make_split(&shapes(tmp.path(), 3), 0.67, 9).unwrap();
    let config = RunConfig::default();
    let (mut sigs, _) = extract_all(&manifest, &config).unwrap();
    let train_ids = manifest.split(TRAIN_SPLIT).unwrap().to_vec();
    let test_ids = manifest.split(TEST_SPLIT).unwrap().to_vec();
    assert_eq!((train_ids.len(), test_ids.len()), (6, 3));

    let before = fit_stage(&sigs, &train_ids, &config, 1).unwrap();
    for s in sigs.iter_mut().filter(|s| test_ids.contains(&s.shape_id)) {
        s.wks.iter_mut().for_each(|x| *x = 1.0 - *x);
        s.sihks *= 3.0;
        s.shape_dna.iter_mut().for_each(|x| *x += 10.0);
    }
    let after = fit_stage(&sigs, &train_ids, &config, 1).unwrap();
    assert_eq!(before.encoders, after.encoders);
    assert_eq!(before.model.to_json().unwrap(), after.model.to_json().unwrap());
}

#[test]
fn runs_are_deterministic_and_write_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let manifest = make_split(&shapes(&tmp.path().join("shapes"), 3), 0.67, 2).unwrap();
    let config = RunConfig {
        cache_dir: Some(tmp.path().join("cache")),
        ..Default::default()
    };
    let a = run_pipeline(&manifest, &config, &tmp.path().join("runs")).unwrap();
    let b = run_pipeline(&manifest, &config, &tmp.path().join("runs")).unwrap();
    assert_ne!(a.dir, b.dir);
    assert_eq!(a.reports[0].to_json().unwrap(), b.reports[0].to_json().unwrap());
    assert_eq!(a.model.to_json().unwrap(), b.model.to_json().unwrap());
    assert_eq!(b.summary.extraction.eigensolves, 0);

    for file in ["config.json", "model.json", "trace.csv", "report.json", "pr.csv", "pr.svg", "summary.json", "encoders.json"] {
        let path = a.dir.join(file);
        assert!(path.is_file() && std::fs::metadata(&path).unwrap().len() > 0, "{file} missing");
    }
    let pr = std::fs::read_to_string(a.dir.join("pr.csv")).unwrap();
    assert_eq!(pr.lines().count(), 22);
    let saved = RunConfig::load(&a.dir.join("config.json")).unwrap();
    assert_eq!(saved.to_json().unwrap(), config.to_json().unwrap());
}

#[test]
fn inseparable_views_stay_at_chance() {
    let params = GaussianViewsParams {
        per_class: 60,
        separation: vec![0.0],
        dim: 10,
        ..Default::default()
    };
    let mut total = 0.0;
    let seeds = [1, 2, 3, 4];
    for seed in seeds {
        let views = gaussian_views(&params, seed).unwrap();
        let ids = &views[0].shape_ids;
        let train_ids: Vec<&String> = ids.iter().step_by(2).collect();
        let test_ids: Vec<&String> = ids.iter().skip(1).step_by(2).collect();
        let train_set: Vec<_> = views.iter().map(|f| f.subset(&train_ids).unwrap()).collect();
        let test_set: Vec<_> = views.iter().map(|f| f.subset(&test_ids).unwrap()).collect();
        let pairs = PairConstraintSet::all(&train_set[0].labels).unwrap();
        let model = train(&train_set, &pairs, &Hyperparams::default()).unwrap();
        let db = Embedding::new(&train_set, &model, DistanceMode::Consensus).unwrap();
        let q = Embedding::new(&test_set, &model, DistanceMode::Consensus).unwrap();
        total += nearest_neighbor_accuracy(&db, &q);
    }
    let mean = total / seeds.len() as f64;
    assert!((mean - 1.0 / 3.0).abs() < 0.1, "held-out 1-NN {mean}");
}
