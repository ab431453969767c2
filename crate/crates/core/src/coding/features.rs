use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOW_WKS: &str = "BoW-WKS";
pub const BOW_SIHKS: &str = "BoW-siHKS";
pub const SHAPE_DNA: &str = "ShapeDNA";

/// One feature channel for a set of shapes: row `i` belongs to `shape_ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub channel: String,
    pub vectors: DMatrix<f64>,
    pub labels: Vec<String>,
    pub shape_ids: Vec<String>,
}

/// JSON sidecar written next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub channel: String,
    pub rows: usize,
    pub dim: usize,
    #[serde(default)]
    pub notes: HashMap<String, serde_json::Value>,
}

impl FeatureSet {
    pub fn new(channel: impl Into<String>, vectors: DMatrix<f64>, labels: Vec<String>, shape_ids: Vec<String>) -> Result<Self> {
        let n = vectors.nrows();
        if labels.len() != n || shape_ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len().min(shape_ids.len()),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vectors contain NaN or infinity".into()));
        }
        Ok(FeatureSet {
            channel: channel.into(),
            vectors,
            labels,
            shape_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.vectors.row(i).iter().copied().collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.shape_ids.iter().position(|s| s == id)
    }

    /// Rows whose id is in `ids`, in the order of `ids`. Unknown ids are an error.
    pub fn subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<FeatureSet> {
        let lookup: HashMap<&str, usize> = self.shape_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let rows: Vec<usize> = ids
            .iter()
            .map(|id| {
                lookup
                    .get(id.as_ref())
                    .copied()
                    .ok_or_else(|| Error::Data(format!("shape id {:?} not in channel {}", id.as_ref(), self.channel)))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureSet {
            channel: self.channel.clone(),
            vectors: self.vectors.select_rows(rows.iter()),
            labels: rows.iter().map(|&i| self.labels[i].clone()).collect(),
            shape_ids: rows.iter().map(|&i| self.shape_ids[i].clone()).collect(),
        })
    }

    pub fn meta(&self) -> ChannelMeta {
        ChannelMeta {
            channel: self.channel.clone(),
            rows: self.len(),
            dim: self.dim(),
            notes: HashMap::new(),
        }
    }

    /// CSV body: `shapeId,label,v0,v1,…` with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("shapeId,label");
        for j in 0..self.dim() {
            s.push_str(&format!(",v{j}"));
        }
        s.push('\n');
        for i in 0..self.len() {
            s.push_str(&self.shape_ids[i]);
            s.push(',');
            s.push_str(&self.labels[i]);
            for v in self.vectors.row(i).iter() {
                s.push_str(&format!(",{v:?}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(channel: &str, text: &str) -> Result<FeatureSet> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty feature CSV".into(),
        })?;
        let dim = header.split(',').count().saturating_sub(2);
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != dim + 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} cells, found {}", dim + 2, cells.len()),
                });
            }
            ids.push(cells[0].to_string());
            labels.push(cells[1].to_string());
            for c in &cells[2..] {
                data.push(c.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("non-numeric value {c:?}"),
                })?);
            }
        }
        let n = ids.len();
        FeatureSet::new(channel, DMatrix::from_row_slice(n, dim, &data), labels, ids)
    }

    /// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
    pub fn save(&self, dir: &Path, notes: HashMap<String, serde_json::Value>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let stem = file_stem(&self.channel);
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        let mut meta = self.meta();
        meta.notes = notes;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path, channel: &str) -> Result<FeatureSet> {
        let stem = file_stem(channel);
        let text = std::fs::read_to_string(dir.join(format!("{stem}.csv")))?;
        FeatureSet::from_csv(channel, &text)
    }
}

/// Loads every channel listed by the JSON sidecars in `dir`, sorted by file name.
pub fn load_all(dir: &Path) -> Result<Vec<FeatureSet>> {
    let mut metas = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Ok(meta) = serde_json::from_str::<ChannelMeta>(&std::fs::read_to_string(&path)?) {
                metas.push((path, meta));
            }
        }
    }
    metas.sort_by(|a, b| a.0.cmp(&b.0));
    metas.iter().map(|(_, m)| FeatureSet::load(dir, &m.channel)).collect()
}

fn file_stem(channel: &str) -> String {
    channel
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_is_exact() {
        let v = DMatrix::from_row_slice(2, 3, &[0.1, -2.5e-17, 3.0, 1.0 / 3.0, 7.0, f64::MAX]);
        let f = FeatureSet::new("BoW-WKS", v, vec!["a".into(), "b".into()], vec!["s1".into(), "s2".into()]).unwrap();
        let back = FeatureSet::from_csv("BoW-WKS", &f.to_csv()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn subset_keeps_order_of_ids() {
        let v = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let f = FeatureSet::new("c", v, vec!["x".into(), "y".into(), "z".into()], vec!["0".into(), "1".into(), "2".into()]).unwrap();
        let s = f.subset(&["2", "0"]).unwrap();
        assert_eq!(s.shape_ids, vec!["2", "0"]);
        assert_eq!(s.vectors[(0, 0)], 2.0);
        assert!(f.subset(&["9"]).is_err());
    }
}
