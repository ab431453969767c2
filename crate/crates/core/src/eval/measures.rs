use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::rank::RankedList;
use crate::error::{Error, Result};

/// Retrieval depth of the E-measure.
pub const E_MEASURE_DEPTH: usize = 32;

/// Recall points `0, 0.05, …, 1` of the interpolated precision-recall curve.
pub const PR_RECALL_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMeasures {
    pub query_id: String,
    pub nn: f64,
    /// `None` for a query whose class has no other member in the database.
    pub ft: Option<f64>,
    pub st: Option<f64>,
    pub e: Option<f64>,
    pub dcg: Option<f64>,
}

/// Macro-averaged measures in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub nn: f64,
    pub ft: f64,
    pub st: f64,
    pub e: f64,
    pub dcg: f64,
    /// `(recall, interpolated precision)` pairs.
    pub pr_curve: Vec<(f64, f64)>,
    pub per_query: Vec<QueryMeasures>,
}

impl RetrievalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn pr_csv(&self) -> String {
        let mut out = String::from("recall,precision\n");
        for (r, p) in &self.pr_curve {
            out.push_str(&format!("{r:?},{p:?}\n"));
        }
        out
    }

    /// Measures as percentages, in table order.
    pub fn percentages(&self) -> [f64; 5] {
        [self.nn, self.ft, self.st, self.e, self.dcg].map(|x| 100.0 * x)
    }

    pub fn summary_line(&self) -> String {
        let [nn, ft, st, e, dcg] = self.percentages();
        format!("NN {nn:.1}  FT {ft:.1}  ST {st:.1}  E {e:.1}  DCG {dcg:.1}")
    }
}

/// NN, first and second tier, E-measure over the top 32, normalized DCG, and the
/// interpolated precision-recall curve.
///
/// `labels` maps every shape id to its class; each list must cover the whole database
/// except its query. Queries without relevant shapes count towards NN only.
pub fn compute_measures(ranked: &[RankedList], labels: &HashMap<String, String>) -> Result<RetrievalReport> {
    if ranked.is_empty() {
        return Err(Error::InvalidArgument("no ranked lists".into()));
    }
    let label_of = |id: &str| {
        labels
            .get(id)
            .ok_or_else(|| Error::Data(format!("shape {id:?} has no label")))
    };
    let mut per_query = Vec::with_capacity(ranked.len());
    let mut pr_sum = [0.0; PR_RECALL_POINTS];
    let mut pr_count = 0usize;
    let mut skipped = 0usize;
    for list in ranked {
        let query_label = label_of(&list.query_id)?;
        let mut relevant = Vec::with_capacity(list.ordered_ids.len());
        for id in &list.ordered_ids {
            relevant.push(label_of(id)? == query_label);
        }
        let nn = if relevant.first().copied().unwrap_or(false) { 1.0 } else { 0.0 };
        let r = relevant.iter().filter(|x| **x).count();
        if r == 0 {
            skipped += 1;
            per_query.push(QueryMeasures {
                query_id: list.query_id.clone(),
                nn,
                ft: None,
                st: None,
                e: None,
                dcg: None,
            });
            continue;
        }
        let hits_within = |k: usize| relevant.iter().take(k).filter(|x| **x).count() as f64;
        let ft = hits_within(r) / r as f64;
        let st = hits_within(2 * r) / r as f64;
        let depth = E_MEASURE_DEPTH.min(relevant.len());
        let top = hits_within(depth);
        let precision = top / depth as f64;
        let recall = top / r as f64;
        let e = if top > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let mut dcg = 0.0;
        for (i, rel) in relevant.iter().enumerate() {
            if *rel {
                dcg += if i == 0 { 1.0 } else { 1.0 / ((i + 1) as f64).log2() };
            }
        }
        let mut ideal = 1.0;
        for i in 2..=r {
            ideal += 1.0 / (i as f64).log2();
        }
        let dcg = dcg / ideal;

        let mut points = Vec::with_capacity(r);
        let mut found = 0usize;
        for (i, rel) in relevant.iter().enumerate() {
            if *rel {
                found += 1;
                points.push((found as f64 / r as f64, found as f64 / (i + 1) as f64));
            }
        }
        for (k, slot) in pr_sum.iter_mut().enumerate() {
            let level = k as f64 / (PR_RECALL_POINTS - 1) as f64;
            *slot += points
                .iter()
                .filter(|(rec, _)| *rec >= level - 1e-12)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max);
        }
        pr_count += 1;
        per_query.push(QueryMeasures {
            query_id: list.query_id.clone(),
            nn,
            ft: Some(ft),
            st: Some(st),
            e: Some(e),
            dcg: Some(dcg),
        });
    }
    if skipped > 0 {
        log::warn!("{skipped} queries have no relevant shape and are excluded from FT, ST, E, DCG and PR");
    }
    let mean = |f: &dyn Fn(&QueryMeasures) -> Option<f64>| {
        let values: Vec<f64> = per_query.iter().filter_map(f).collect();
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    let pr_curve = pr_sum
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let level = k as f64 / (PR_RECALL_POINTS - 1) as f64;
            (level, if pr_count > 0 { s / pr_count as f64 } else { 0.0 })
        })
        .collect();
    Ok(RetrievalReport {
        nn: mean(&|q| Some(q.nn)),
        ft: mean(&|q| q.ft),
        st: mean(&|q| q.st),
        e: mean(&|q| q.e),
        dcg: mean(&|q| q.dcg),
        pr_curve,
        per_query,
    })
}
