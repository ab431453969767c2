//! Two feature channels that each separate only part of the classes, fused by the
//! learned consensus metric.

use mfml::eval::{DistanceMode, Embedding};
use mfml::harness::{gaussian_views, nearest_neighbor_accuracy, GaussianViewsParams};
use mfml::metric::{train, Hyperparams, PairConstraintSet};

fn main() -> mfml::Result<()> {
    let views = gaussian_views(&GaussianViewsParams { per_class: 100, ..Default::default() }, 3)?;
    let ids = &views[0].shape_ids;
    let train_ids: Vec<&String> = ids.iter().step_by(2).collect();
    let test_ids: Vec<&String> = ids.iter().skip(1).step_by(2).collect();
    let train_set: Vec<_> = views.iter().map(|f| f.subset(&train_ids)).collect::<mfml::Result<_>>()?;
    let test_set: Vec<_> = views.iter().map(|f| f.subset(&test_ids)).collect::<mfml::Result<_>>()?;

    let pairs = PairConstraintSet::all(&train_set[0].labels)?;
    let model = train(&train_set, &pairs, &Hyperparams::default())?;
    println!(
        "{} pairs, {} iterations, objective {:.1} -> {:.1}",
        pairs.len(),
        model.iterations,
        model.trace[0],
        model.trace.last().unwrap()
    );
    for v in 0..2 {
        let db = Embedding::euclidean(&train_set[v..=v])?;
        let q = Embedding::euclidean(&test_set[v..=v])?;
        println!("channel {v} alone, Euclidean: held-out 1-NN {:.3}", nearest_neighbor_accuracy(&db, &q));
    }
    let db = Embedding::new(&train_set, &model, DistanceMode::Consensus)?;
    let q = Embedding::new(&test_set, &model, DistanceMode::Consensus)?;
    println!("both channels, consensus metric: held-out 1-NN {:.3}", nearest_neighbor_accuracy(&db, &q));
    Ok(())
}
