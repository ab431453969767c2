//! Ranking under the learned consensus metric and the standard retrieval measures.

mod distance;
mod measures;
mod plot;
mod rank;

pub use distance::{combined_distance, DistanceMode, Embedding};
pub use measures::{compute_measures, QueryMeasures, RetrievalReport, E_MEASURE_DEPTH, PR_RECALL_POINTS};
pub use plot::pr_svg;
pub use rank::{rank_all, RankedList};
