//! Ranking and retrieval measures on a hand-made feature set.

use std::collections::HashMap;

use mfml::coding::FeatureSet;
use mfml::eval::{compute_measures, rank_all, Embedding};
use nalgebra::DMatrix;

fn main() -> mfml::Result<()> {
    let points = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 0.2, 0.1, 1.1, 0.0, 5.0, 5.0, 5.1, 4.8, 0.9, 0.2]);
    let labels: Vec<String> = ["a", "a", "a", "b", "b", "b"].map(String::from).to_vec();
    let ids: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
    let features = FeatureSet::new("toy", points, labels.clone(), ids.clone())?;
    let embedding = Embedding::euclidean(&[features])?;
    let ranked = rank_all(&embedding, None);
    for list in &ranked {
        println!("{} -> {}", list.query_id, list.ordered_ids.join(" "));
    }
    let by_id: HashMap<String, String> = ids.into_iter().zip(labels).collect();
    let report = compute_measures(&ranked, &by_id)?;
    println!("{}", report.summary_line());
    print!("{}", report.pr_csv());
    Ok(())
}
