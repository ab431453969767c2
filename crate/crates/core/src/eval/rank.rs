use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::Embedding;

/// Database shapes in ascending distance from a query, the query itself excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub ordered_ids: Vec<String>,
    pub distances: Vec<f64>,
}

/// Leave-one-out ranking for every shape in `queries` (all shapes when `None`).
/// Ties are broken by shape id.
pub fn rank_all(db: &Embedding, queries: Option<&[usize]>) -> Vec<RankedList> {
    let all: Vec<usize> = (0..db.len()).collect();
    let queries = queries.unwrap_or(&all);
    queries
        .par_iter()
        .map(|&q| {
            let mut hits: Vec<(f64, usize)> = (0..db.len())
                .filter(|&j| j != q)
                .map(|j| (db.distance(q, j), j))
                .collect();
            hits.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| db.shape_ids[a.1].cmp(&db.shape_ids[b.1])));
            RankedList {
                query_id: db.shape_ids[q].clone(),
                ordered_ids: hits.iter().map(|h| db.shape_ids[h.1].clone()).collect(),
                distances: hits.iter().map(|h| h.0).collect(),
            }
        })
        .collect()
}
