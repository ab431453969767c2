use mfml::coding::FeatureSet;
use mfml::eval::{DistanceMode, Embedding};
use mfml::harness::{gaussian_views, nearest_neighbor_accuracy, GaussianViewsParams};
use mfml::metric::{
    consensus_of, gradient, gradient_step, gradient_terms, log_det_divergence, objective, objective_terms,
    sample_pairs, train, train_scaled, train_single_metric, Hyperparams, MetricModel, PairConstraintSet,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(seed: u64, n: usize, d: usize, m: usize) -> (Vec<DMatrix<f64>>, PairConstraintSet, MetricModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..n).map(|i| format!("c{}", i % 3)).collect();
    let features: Vec<DMatrix<f64>> = (0..m)
        .map(|_| DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let pairs = PairConstraintSet::all(&labels).unwrap();
    let hyper = Hyperparams {
        tau: rng.random_range(1.5..4.0),
        rho: rng.random_range(1.0..8.0),
        beta: rng.random_range(0.0..1.0),
        lambda: (0..m).map(|_| rng.random_range(0.0..0.1)).collect(),
        epsilon: rng.random_range(1e-4..1e-1),
        ..Default::default()
    };
    let mut model = MetricModel::identity(m, d, hyper);
    for l in &mut model.projections {
        *l += DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.3..0.3));
    }
    model.update_consensus();
    (features, pairs, model)
}

fn central_difference(
    features: &[DMatrix<f64>],
    pairs: &PairConstraintSet,
    model: &MetricModel,
    v: usize,
    term: fn(&mfml::metric::ObjectiveTerms) -> f64,
) -> DMatrix<f64> {
    let h = 1e-6;
    let l = &model.projections[v];
    DMatrix::from_fn(l.nrows(), l.ncols(), |r, c| {
        let mut plus = model.clone();
        plus.projections[v][(r, c)] += h;
        let mut minus = model.clone();
        minus.projections[v][(r, c)] -= h;
        let fp = term(&objective_terms(features, pairs, &plus).unwrap());
        let fm = term(&objective_terms(features, pairs, &minus).unwrap());
        (fp - fm) / (2.0 * h)
    })
}

#[test]
fn gradient_matches_finite_differences_per_term() {
    for seed in 0..4 {
        let (x, pairs, model) = random_instance(seed, 20, 5, 2);
        for v in 0..2 {
            let g = gradient_terms(&x, &pairs, &model, v).unwrap();
            let fd_h = central_difference(&x, &pairs, &model, v, |t| t.hinge);
            let fd_l = central_difference(&x, &pairs, &model, v, |t| t.logdet);
            let fd_f = central_difference(&x, &pairs, &model, v, |t| t.frobenius);
            assert!((&g.hinge - fd_h).amax() < 1e-4, "hinge term, seed {seed}");
            assert!((&g.logdet - fd_l).amax() < 1e-4, "logdet term, seed {seed}");
            assert!((&g.frobenius - fd_f).amax() < 1e-4, "frobenius term, seed {seed}");
            let fd = central_difference(&x, &pairs, &model, v, |t| t.total);
            assert!((gradient(&x, &pairs, &model, v).unwrap() - fd).amax() < 1e-4);
        }
    }
}

#[test]
fn separated_pairs_have_near_zero_objective() {
    // Two clusters 10 apart with unit-spaced members: same-class d² = 1 < τ - 1,
    // different-class d² ≥ 81 > τ + 1.
    let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 10.0, 0.0, 11.0, 0.0]);
    let labels = ["a", "a", "b", "b"];
    let pairs = PairConstraintSet::all(&labels).unwrap();
    let hyper = Hyperparams {
        tau: 3.0,
        rho: 10.0,
        beta: 0.0,
        lambda: vec![0.0],
        ..Default::default()
    };
    let model = MetricModel::identity(1, 2, hyper);
    let j = objective(&[x], &pairs, &model).unwrap();
    assert!(j >= 0.0 && j < 0.01 * pairs.len() as f64, "objective {j}");
}

#[test]
fn logdet_term_vanishes_when_metrics_equal_consensus() {
    let (x, pairs, mut model) = random_instance(11, 12, 4, 3);
    let l = model.projections[0].clone();
    model.projections = vec![l.clone(); 3];
    model.consensus = l.tr_mul(&l);
    let t = objective_terms(&x, &pairs, &model).unwrap();
    assert!(t.logdet.abs() < 1e-9, "logdet {}", t.logdet);
    let d = log_det_divergence(&l.tr_mul(&l), &model.consensus, 1e-3).unwrap();
    assert!(d.value.abs() < 1e-9);
}

#[test]
fn objective_is_nonnegative_and_logdet_matches_generic_divergence() {
    for seed in 0..10 {
        let (x, pairs, model) = random_instance(100 + seed, 15, 4, 2);
        let t = objective_terms(&x, &pairs, &model).unwrap();
        assert!(t.hinge >= 0.0 && t.logdet >= -1e-9 && t.frobenius >= 0.0 && t.total >= 0.0);
        let mut generic = 0.0;
        for l in &model.projections {
            generic += 0.5 * log_det_divergence(&l.tr_mul(l), &model.consensus, 1e-3).unwrap().value;
        }
        assert!((t.logdet - model.hyper.beta * generic).abs() < 1e-8 * (1.0 + t.logdet));
    }
}

#[test]
fn zero_pairs_without_consensus_is_pure_shrinkage() {
    let (x, _, mut model) = random_instance(5, 10, 4, 1);
    model.hyper.beta = 0.0;
    model.hyper.lambda = vec![0.05];
    let empty = PairConstraintSet::default();
    let (next, outcome) = gradient_step(&x, &empty, &model, 0).unwrap();
    assert!(outcome.accepted);
    let eta = outcome.step_size;
    let expect = &model.projections[0] * (1.0 - 2.0 * eta * 0.05);
    assert!((&next.projections[0] - expect).amax() < 1e-14);
}

#[test]
fn a_single_step_never_increases_the_objective() {
    for seed in 0..10 {
        let (x, pairs, model) = random_instance(200 + seed, 20, 5, 2);
        for v in 0..2 {
            let before = objective(&x, &pairs, &model).unwrap();
            let (next, outcome) = gradient_step(&x, &pairs, &model, v).unwrap();
            let after = objective(&x, &pairs, &next).unwrap();
            assert!(after <= before, "seed {seed} channel {v}: {before} -> {after}");
            assert_eq!(outcome.objective_after, after);
        }
    }
}

#[test]
fn failed_line_search_leaves_projection_unchanged() {
    let (x, pairs, mut model) = random_instance(3, 10, 3, 1);
    model.hyper.max_halvings = 0;
    model.hyper.learning_rate = 1e6;
    let (next, outcome) = gradient_step(&x, &pairs, &model, 0).unwrap();
    assert!(!outcome.accepted);
    assert_eq!(next.projections[0], model.projections[0]);
}

fn views(seed: u64, per_class: usize) -> Vec<FeatureSet> {
    gaussian_views(
        &GaussianViewsParams {
            per_class,
            ..Default::default()
        },
        seed,
    )
    .unwrap()
}

fn split_half(features: &[FeatureSet]) -> (Vec<FeatureSet>, Vec<FeatureSet>) {
    let ids = &features[0].shape_ids;
    let train: Vec<&String> = ids.iter().step_by(2).collect();
    let test: Vec<&String> = ids.iter().skip(1).step_by(2).collect();
    (
        features.iter().map(|f| f.subset(&train).unwrap()).collect(),
        features.iter().map(|f| f.subset(&test).unwrap()).collect(),
    )
}

#[test]
fn trained_model_keeps_consensus_consistent_and_descends() {
    let (train_set, _) = split_half(&views(1, 30));
    let pairs = PairConstraintSet::all(&train_set[0].labels).unwrap();
    let hyper = Hyperparams {
        max_iters: 60,
        ..Default::default()
    };
    let model = train(&train_set, &pairs, &hyper).unwrap();
    assert!(model.trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(model.trace.last().unwrap() < &model.trace[0]);
    let expect = consensus_of(&model.projections, hyper.epsilon);
    assert!((&model.consensus - expect).norm() <= 1e-12);
    let back = MetricModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
}

#[test]
fn complementary_channels_beat_single_channel_baselines() {
    let mut learned = 0.0;
    let mut best_single: f64 = 0.0;
    let seeds = 3;
    for seed in 0..seeds {
        let (train_set, test_set) = split_half(&views(seed, 100));
        let pairs = PairConstraintSet::all(&train_set[0].labels).unwrap();
        let model = train(&train_set, &pairs, &Hyperparams::default()).unwrap();
        let db = Embedding::new(&train_set, &model, DistanceMode::Consensus).unwrap();
        let queries = Embedding::new(&test_set, &model, DistanceMode::Consensus).unwrap();
        learned += nearest_neighbor_accuracy(&db, &queries) / seeds as f64;
        for v in 0..2 {
            let db = Embedding::euclidean(&train_set[v..=v]).unwrap();
            let q = Embedding::euclidean(&test_set[v..=v]).unwrap();
            best_single = best_single.max(nearest_neighbor_accuracy(&db, &q));
        }
    }
    assert!(learned >= 0.95, "learned 1-NN {learned}");
    assert!(best_single <= 0.80, "single-channel 1-NN {best_single}");
}

#[test]
fn single_metric_reduction_is_bit_identical() {
    for seed in 0..2 {
        let f = views(seed, 15).remove(0);
        let pairs = sample_pairs(&f.labels, None, Some(1.0), seed).unwrap();
        let hyper = Hyperparams {
            beta: 0.0,
            max_iters: 40,
            ..Default::default()
        };
        let multi = train(std::slice::from_ref(&f), &pairs, &hyper).unwrap();
        let single = train_single_metric(&f, &pairs, &hyper).unwrap();
        assert_eq!(multi.trace, single.trace);
        assert_eq!(multi.projections[0], single.projection);
        assert_eq!(multi.channel_scales[0], single.scale);
    }
}

#[test]
fn shuffled_labels_fall_to_chance() {
    let mut acc = 0.0;
    let seeds = 5;
    for seed in 0..seeds {
        let mut sets = views(seed, 30);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let mut labels = sets[0].labels.clone();
        use rand::seq::SliceRandom;
        labels.shuffle(&mut rng);
        for s in &mut sets {
            s.labels = labels.clone();
        }
        let (train_set, test_set) = split_half(&sets);
        let pairs = PairConstraintSet::all(&train_set[0].labels).unwrap();
        let hyper = Hyperparams {
            max_iters: 50,
            ..Default::default()
        };
        let model = train(&train_set, &pairs, &hyper).unwrap();
        let db = Embedding::new(&train_set, &model, DistanceMode::Consensus).unwrap();
        let q = Embedding::new(&test_set, &model, DistanceMode::Consensus).unwrap();
        acc += nearest_neighbor_accuracy(&db, &q) / seeds as f64;
    }
    assert!((acc - 1.0 / 3.0).abs() <= 0.1, "accuracy {acc}");
}

#[test]
fn training_rejects_single_class_and_nonfinite_start() {
    let f = views(0, 5).remove(0);
    let one = f.subset(&f.shape_ids[..5]).unwrap();
    let pairs = PairConstraintSet::all(&one.labels).unwrap();
    assert!(train(std::slice::from_ref(&one), &pairs, &Hyperparams::default()).is_err());
    let x = DMatrix::from_element(4, 2, f64::MAX);
    let mut x2 = x.clone();
    x2[(0, 0)] = -f64::MAX;
    let pairs = PairConstraintSet::all(&["a", "a", "b", "b"]).unwrap();
    assert!(train_scaled(&[x2], &pairs, &Hyperparams::default()).is_err());
}

#[test]
fn benchmark_shaped_labels_give_5700_positive_pairs() {
    let labels: Vec<String> = (0..600).map(|i| format!("c{}", i / 20)).collect();
    let set = sample_pairs(&labels, None, None, 0).unwrap();
    assert_eq!(set.num_positive(), 5700);
}
