use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A training pair `i < j` with `delta = +1` for same-class and `-1` for different-class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub delta: i8,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairConstraintSet {
    pub pairs: Vec<Pair>,
}

impl PairConstraintSet {
    /// Every unordered pair of `labels`.
    pub fn all<S: AsRef<str>>(labels: &[S]) -> Result<PairConstraintSet> {
        sample_pairs(labels, None, None, 0)
    }

    /// Validates pairs against `n` samples and their labels.
    pub fn from_pairs<S: AsRef<str>>(pairs: Vec<Pair>, labels: &[S]) -> Result<PairConstraintSet> {
        for p in &pairs {
            if p.i >= p.j || p.j >= labels.len() {
                return Err(Error::InvalidArgument(format!("pair ({}, {}) is not i < j < {}", p.i, p.j, labels.len())));
            }
            let same = labels[p.i].as_ref() == labels[p.j].as_ref();
            if (p.delta == 1) != same || !(p.delta == 1 || p.delta == -1) {
                return Err(Error::InvalidArgument(format!("pair ({}, {}) has delta {} inconsistent with labels", p.i, p.j, p.delta)));
            }
        }
        Ok(PairConstraintSet { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn num_positive(&self) -> usize {
        self.pairs.iter().filter(|p| p.delta == 1).count()
    }

    pub fn num_negative(&self) -> usize {
        self.pairs.len() - self.num_positive()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.pairs.iter().map(|p| p.j).max()
    }
}

/// Positive pairs (at most `per_class_cap` per class) plus negatives sampled at
/// `neg_ratio × positives`. `None` keeps every pair of that kind. Output is sorted by `(i, j)`.
pub fn sample_pairs<S: AsRef<str>>(
    labels: &[S],
    per_class_cap: Option<usize>,
    neg_ratio: Option<f64>,
    seed: u64,
) -> Result<PairConstraintSet> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples for pairs, got {n}")));
    }
    if let Some(r) = neg_ratio {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("negative ratio {r} must be a nonnegative number")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        classes.entry(l.as_ref()).or_default().push(i);
    }
    let mut positives = Vec::new();
    for (label, members) in &classes {
        if members.len() < 2 {
            log::warn!("class {label:?} has a single member and contributes no positive pairs");
            continue;
        }
        let mut class_pairs = Vec::new();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                class_pairs.push(Pair { i, j, delta: 1 });
            }
        }
        match per_class_cap {
            Some(cap) if cap < class_pairs.len() => {
                let mut keep: Vec<usize> = sample(&mut rng, class_pairs.len(), cap).into_vec();
                keep.sort_unstable();
                positives.extend(keep.into_iter().map(|k| class_pairs[k]));
            }
            _ => positives.extend(class_pairs),
        }
    }
    let mut negatives = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if labels[i].as_ref() != labels[j].as_ref() {
                negatives.push(Pair { i, j, delta: -1 });
            }
        }
    }
    if let Some(r) = neg_ratio {
        let want = ((r * positives.len() as f64).round() as usize).min(negatives.len());
        let mut keep: Vec<usize> = sample(&mut rng, negatives.len(), want).into_vec();
        keep.sort_unstable();
        negatives = keep.into_iter().map(|k| negatives[k]).collect();
    }
    let mut pairs = positives;
    pairs.extend(negatives);
    pairs.sort_unstable_by_key(|p| (p.i, p.j));
    Ok(PairConstraintSet { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_enumeration() {
        let set = PairConstraintSet::all(&["a", "a", "b", "b"]).unwrap();
        assert_eq!(set.num_positive(), 2);
        assert_eq!(set.num_negative(), 4);
        assert!(set.pairs.windows(2).all(|w| (w[0].i, w[0].j) < (w[1].i, w[1].j)));
    }

    #[test]
    fn negative_ratio_one_balances() {
        let labels: Vec<String> = (0..40).map(|i| format!("c{}", i % 4)).collect();
        let set = sample_pairs(&labels, None, Some(1.0), 3).unwrap();
        assert_eq!(set.num_positive(), set.num_negative());
        assert_eq!(set, sample_pairs(&labels, None, Some(1.0), 3).unwrap());
        assert!(PairConstraintSet::from_pairs(set.pairs.clone(), &labels).is_ok());
    }

    #[test]
    fn caps_and_singletons() {
        let labels = ["a", "a", "a", "a", "b"];
        let set = sample_pairs(&labels, Some(2), None, 1).unwrap();
        assert_eq!(set.num_positive(), 2);
        assert_eq!(set.num_negative(), 4);
        assert!(sample_pairs(&["a"], None, None, 0).is_err());
    }

    #[test]
    fn inconsistent_pairs_rejected() {
        let labels = ["a", "b"];
        assert!(PairConstraintSet::from_pairs(vec![Pair { i: 0, j: 1, delta: 1 }], &labels).is_err());
        assert!(PairConstraintSet::from_pairs(vec![Pair { i: 1, j: 0, delta: -1 }], &labels).is_err());
        assert!(PairConstraintSet::from_pairs(vec![Pair { i: 0, j: 1, delta: -1 }], &labels).is_ok());
    }
}
