use std::collections::HashMap;

use mfml::coding::FeatureSet;
use mfml::eval::{combined_distance, compute_measures, rank_all, DistanceMode, Embedding, RankedList};
use mfml::metric::{cholesky_factor, mahalanobis_sq, Hyperparams, MetricModel};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(pairs: &[(&str, &str)]) -> HashMap<String, String> {
    pairs.iter().map(|(id, l)| (id.to_string(), l.to_string())).collect()
}

fn list(query: &str, ids: &[&str]) -> RankedList {
    RankedList {
        query_id: query.into(),
        ordered_ids: ids.iter().map(|s| s.to_string()).collect(),
        distances: (1..=ids.len()).map(|i| i as f64).collect(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn combined_distance_oracles() {
    let a = [1.0, 2.0, -1.0];
    let b = [0.5, -1.0, 3.0];
    let eye = DMatrix::identity(3, 3);
    assert_eq!(combined_distance(&[&a], &[&a], &eye).unwrap(), 0.0);
    assert!(close(combined_distance(&[&a], &[&b], &eye).unwrap(), 0.25 + 9.0 + 16.0));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    let spd = &m * m.transpose() + DMatrix::identity(4, 4) * 0.1;
    let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let (left, right) = xs.split_at(3);
    let l: Vec<&[f64]> = left.iter().map(Vec::as_slice).collect();
    let r: Vec<&[f64]> = right.iter().map(Vec::as_slice).collect();
    let factor = cholesky_factor(&spd).unwrap().transpose();
    let oracle: f64 = l.iter().zip(&r).map(|(x, y)| mahalanobis_sq(x, y, &factor).unwrap()).sum();
    assert!((combined_distance(&l, &r, &spd).unwrap() - oracle).abs() < 1e-10);
    assert!(combined_distance(&l, &r[..2], &spd).is_err());
}

fn toy_embedding(rows: &[[f64; 2]]) -> Embedding {
    Embedding {
        shape_ids: (0..rows.len()).map(|i| format!("s{i}")).collect(),
        labels: vec!["x".into(); rows.len()],
        points: DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]),
    }
}

#[test]
fn ranking_matches_a_brute_force_table() {
    let rows = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0], [-1.0, -1.5]];
    let db = toy_embedding(&rows);
    // Squared distances from s0: s1 1, s2 4, s3 10, s4 3.25.
    let ranked = rank_all(&db, None);
    assert_eq!(ranked[0].ordered_ids, ["s1", "s4", "s2", "s3"]);
    assert_eq!(ranked[0].distances, [1.0, 3.25, 4.0, 10.0]);
    for (q, r) in ranked.iter().enumerate() {
        let mut brute: Vec<(f64, String)> = (0..rows.len())
            .filter(|&j| j != q)
            .map(|j| {
                let d = (rows[q][0] - rows[j][0]).powi(2) + (rows[q][1] - rows[j][1]).powi(2);
                (d, format!("s{j}"))
            })
            .collect();
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r.ordered_ids, brute.iter().map(|b| b.1.clone()).collect::<Vec<_>>());
    }
}

#[test]
fn duplicates_rank_first_and_ties_break_by_id() {
    let db = toy_embedding(&[[1.0, 1.0], [4.0, 0.0], [1.0, 1.0], [1.0, 3.0], [-1.0, 1.0]]);
    let ranked = rank_all(&db, Some(&[0]));
    assert_eq!(ranked.len(), 1);
    assert_eq!(ranked[0].ordered_ids[0], "s2");
    assert_eq!(ranked[0].distances[0], 0.0);
    assert_eq!(ranked[0].ordered_ids[1..3], ["s3", "s4"]);

    let pair = toy_embedding(&[[0.0, 0.0], [1.0, 1.0]]);
    assert_eq!(rank_all(&pair, Some(&[1]))[0].ordered_ids, ["s0"]);
}

#[test]
fn perfect_retrieval_scores_one() {
    let l = labels(&[("a1", "A"), ("a2", "A"), ("a3", "A"), ("b1", "B"), ("b2", "B"), ("b3", "B")]);
    let ranked = vec![
        list("a1", &["a2", "a3", "b1", "b2", "b3"]),
        list("a2", &["a3", "a1", "b3", "b1", "b2"]),
        list("a3", &["a1", "a2", "b2", "b3", "b1"]),
        list("b1", &["b3", "b2", "a1", "a2", "a3"]),
        list("b2", &["b1", "b3", "a2", "a1", "a3"]),
        list("b3", &["b2", "b1", "a3", "a2", "a1"]),
    ];
    let r = compute_measures(&ranked, &l).unwrap();
    for v in [r.nn, r.ft, r.st, r.dcg] {
        assert_eq!(v, 1.0);
    }
    // Top-5 window with two relevant shapes: P = 2/5, R = 1.
    assert!(close(r.e, 2.0 * 0.4 / 1.4));
    assert!(r.pr_curve.iter().all(|(_, p)| *p == 1.0));
}

#[test]
fn four_shape_toy_matches_hand_enumeration() {
    let l = labels(&[("a1", "A"), ("a2", "A"), ("b1", "B"), ("b2", "B")]);
    let ranked = vec![
        list("a1", &["b1", "a2", "b2"]),
        list("a2", &["a1", "b1", "b2"]),
        list("b1", &["a1", "a2", "b2"]),
        list("b2", &["b1", "a1", "a2"]),
    ];
    let r = compute_measures(&ranked, &l).unwrap();
    // Per query (NN, FT, ST): a1 (0,0,1), a2 (1,1,1), b1 (0,0,0), b2 (1,1,1).
    assert!(close(r.nn, 0.5));
    assert!(close(r.ft, 0.5));
    assert!(close(r.st, 0.75));
    // One relevant shape in a window of three: E = 2·(1/3)·1 / (4/3) for every query.
    assert!(close(r.e, 0.5));
    // DCG: b1 finds its match at rank 3, so its gain is 1/log2(3).
    assert!(close(r.dcg, (3.0 + 1.0 / 3f64.log2()) / 4.0));
    // Precision at full recall: 1/2, 1, 1/3, 1.
    let pr = (0.5 + 1.0 + 1.0 / 3.0 + 1.0) / 4.0;
    assert_eq!(r.pr_curve.len(), 21);
    assert!(r.pr_curve.iter().all(|(_, p)| close(*p, pr)));
    assert!(close(r.pr_curve[1].0, 0.05));
}

#[test]
fn six_shape_toy_with_a_singleton_class() {
    let l = labels(&[("a1", "A"), ("a2", "A"), ("a3", "A"), ("b1", "B"), ("b2", "B"), ("c1", "C")]);
    let ranked = vec![list("a1", &["a2", "b1", "a3", "c1", "b2"]), list("c1", &["a1", "a2", "a3", "b1", "b2"])];
    let r = compute_measures(&ranked, &l).unwrap();
    assert!(close(r.nn, 0.5));
    assert!(close(r.ft, 0.5));
    assert!(close(r.st, 1.0));
    assert!(close(r.e, 2.0 * 0.4 / 1.4));
    assert!(close(r.dcg, (1.0 + 1.0 / 3f64.log2()) / 2.0));
    assert!(r.per_query[1].ft.is_none());
    for (k, (level, p)) in r.pr_curve.iter().enumerate() {
        assert!(close(*level, 0.05 * k as f64));
        assert!(close(*p, if k <= 10 { 1.0 } else { 2.0 / 3.0 }));
    }
}

#[test]
fn random_rankings_sit_at_chance() {
    let ids: Vec<String> = (0..600).map(|i| format!("s{i:03}")).collect();
    let l: HashMap<String, String> = ids.iter().enumerate().map(|(i, id)| (id.clone(), format!("c{}", i / 20))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total = 0.0;
    for _ in 0..50 {
        let ranked: Vec<RankedList> = ids
            .iter()
            .map(|q| {
                let mut others: Vec<String> = ids.iter().filter(|id| *id != q).cloned().collect();
                others.shuffle(&mut rng);
                RankedList {
                    query_id: q.clone(),
                    distances: vec![0.0; others.len()],
                    ordered_ids: others,
                }
            })
            .collect();
        let r = compute_measures(&ranked, &l).unwrap();
        assert!(r.nn >= 0.0 && r.ft <= r.st);
        total += r.nn;
    }
    let mean = total / 50.0;
    assert!((mean - 19.0 / 599.0).abs() < 0.02, "mean NN {mean}");
}

#[test]
fn scaling_the_consensus_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 24;
    let ids: Vec<String> = (0..n).map(|i| format!("s{i:02}")).collect();
    let lab: Vec<String> = (0..n).map(|i| format!("c{}", i % 3)).collect();
    let features: Vec<FeatureSet> = (0..2)
        .map(|v| {
            let x = DMatrix::from_fn(n, 4, |_, _| rng.random_range(-1.0..1.0));
            FeatureSet::new(format!("view{v}"), x, lab.clone(), ids.clone()).unwrap()
        })
        .collect();
    let mut model = MetricModel::identity(2, 4, Hyperparams::default());
    let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    model.consensus = &m * m.transpose() + DMatrix::identity(4, 4) * 0.2;
    let mut scaled = model.clone();
    scaled.consensus *= 7.5;
    let l: HashMap<String, String> = ids.iter().cloned().zip(lab.iter().cloned()).collect();

    let a = rank_all(&Embedding::new(&features, &model, DistanceMode::Consensus).unwrap(), None);
    let b = rank_all(&Embedding::new(&features, &scaled, DistanceMode::Consensus).unwrap(), None);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.ordered_ids, y.ordered_ids);
    }
    let (ra, rb) = (compute_measures(&a, &l).unwrap(), compute_measures(&b, &l).unwrap());
    assert_eq!(ra.percentages(), rb.percentages());
    assert_eq!(ra.pr_curve, rb.pr_curve);
}
