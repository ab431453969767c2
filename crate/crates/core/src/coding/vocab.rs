use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signatures::SignatureKind;

/// A k-means codebook over point signatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub centers: DMatrix<f64>,
    pub kind: SignatureKind,
    pub iterations: usize,
    /// Inertia after every assignment step; nonincreasing.
    pub inertia: Vec<f64>,
}

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// Index of the nearest center; ties go to the lower index.
    pub fn nearest(&self, row: &[f64]) -> usize {
        nearest_center(&self.centers, row).0
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub reseed_attempts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 100,
            reseed_attempts: 5,
        }
    }
}

fn sq_dist(a: &[f64], b: impl Iterator<Item = f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(centers: &DMatrix<f64>, row: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.nrows() {
        let d = sq_dist(row, centers.row(c).iter().copied());
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations. Deterministic for a given seed.
pub fn fit_vocabulary(
    data: &DMatrix<f64>,
    size: usize,
    kind: SignatureKind,
    seed: u64,
    opts: KMeansOptions,
) -> Result<Vocabulary> {
    let (n, d) = data.shape();
    if size < 2 {
        return Err(Error::InvalidArgument(format!("vocabulary needs at least 2 words, got {size}")));
    }
    if n < size {
        return Err(Error::InvalidArgument(format!("{n} rows cannot seed {size} centers")));
    }
    let rows: Vec<Vec<f64>> = data.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp(&rows, size, &mut rng);

    let mut attempt = 0;
    while let Some(dup) = first_duplicate(&centers) {
        attempt += 1;
        if attempt > opts.reseed_attempts {
            return Err(Error::Data(format!(
                "could not find {size} distinct centers after {} re-seeding attempts",
                opts.reseed_attempts
            )));
        }
        let pick = rng.random_range(0..n);
        centers.set_row(dup, &nalgebra::RowDVector::from_row_slice(&rows[pick]));
    }

    let mut assign = vec![usize::MAX; n];
    let mut inertia = Vec::new();
    let mut iterations = 0;
    loop {
        let fresh: Vec<(usize, f64)> = rows.par_iter().map(|r| nearest_center(&centers, r)).collect();
        inertia.push(fresh.iter().map(|a| a.1).sum());
        let changed = fresh.iter().zip(&assign).any(|(a, &b)| a.0 != b);
        assign = fresh.into_iter().map(|a| a.0).collect();
        if !changed || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let mut sums = DMatrix::zeros(size, d);
        let mut counts = vec![0usize; size];
        for (r, &c) in rows.iter().zip(&assign) {
            counts[c] += 1;
            for (j, v) in r.iter().enumerate() {
                sums[(c, j)] += v;
            }
        }
        for c in 0..size {
            // an empty cluster keeps its center, which cannot raise the inertia
            if counts[c] > 0 {
                let mean = sums.row(c) / counts[c] as f64;
                centers.set_row(c, &mean);
            }
        }
    }
    Ok(Vocabulary {
        centers,
        kind,
        iterations,
        inertia,
    })
}

fn kmeans_pp(rows: &[Vec<f64>], size: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = rows[0].len();
    let mut centers = DMatrix::zeros(size, d);
    let first = rng.random_range(0..rows.len());
    centers.set_row(0, &nalgebra::RowDVector::from_row_slice(&rows[first]));
    let mut dist: Vec<f64> = rows.iter().map(|r| sq_dist(r, rows[first].iter().copied())).collect();
    for c in 1..size {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = rows.len() - 1;
            for (i, &w) in dist.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            while dist[chosen] == 0.0 && chosen > 0 {
                chosen -= 1;
            }
            chosen
        } else {
            rng.random_range(0..rows.len())
        };
        centers.set_row(c, &nalgebra::RowDVector::from_row_slice(&rows[pick]));
        for (i, r) in rows.iter().enumerate() {
            dist[i] = dist[i].min(sq_dist(r, rows[pick].iter().copied()));
        }
    }
    centers
}

fn first_duplicate(centers: &DMatrix<f64>) -> Option<usize> {
    (1..centers.nrows()).find(|&i| (0..i).any(|j| centers.row(i) == centers.row(j)))
}
