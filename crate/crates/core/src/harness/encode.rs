use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::derive_seed;
use super::extract::MeshSignatures;
use crate::coding::{
    apply_pca, encode_bow, fit_pca, fit_vocabulary, FeatureSet, PcaProjection, Vocabulary, BOW_SIHKS, BOW_WKS,
    SHAPE_DNA,
};
use crate::error::{Error, Result};
use crate::signatures::{PointSignatureMatrix, SignatureKind, SignatureParams};

/// Channel names in the order every stage uses them.
pub fn channel_order() -> [&'static str; 3] {
    [BOW_WKS, BOW_SIHKS, SHAPE_DNA]
}

/// Vocabularies and PCA projections fitted on training shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoders {
    pub wks_vocab: Vocabulary,
    pub sihks_vocab: Vocabulary,
    /// One projection per channel in [`channel_order`].
    pub pca: Vec<PcaProjection>,
}

/// Vertex rows of all given shapes, subsampled to at most `max_rows`.
fn pooled_rows(sigs: &[&MeshSignatures], pick: fn(&MeshSignatures) -> &DMatrix<f64>, max_rows: usize, seed: u64) -> DMatrix<f64> {
    let total: usize = sigs.iter().map(|s| pick(s).nrows()).sum();
    let dim = sigs.first().map_or(0, |s| pick(s).ncols());
    let mut keep: Vec<usize> = if total > max_rows {
        sample(&mut ChaCha8Rng::seed_from_u64(seed), total, max_rows).into_vec()
    } else {
        (0..total).collect()
    };
    keep.sort_unstable();
    let mut out = DMatrix::zeros(keep.len(), dim);
    let (mut shape, mut offset) = (0, 0);
    for (r, &global) in keep.iter().enumerate() {
        while global >= offset + pick(sigs[shape]).nrows() {
            offset += pick(sigs[shape]).nrows();
            shape += 1;
        }
        out.row_mut(r).copy_from(&pick(sigs[shape]).row(global - offset));
    }
    out
}

/// BoW-WKS, BoW-siHKS and ShapeDNA vectors before PCA.
pub fn raw_channels(sigs: &[&MeshSignatures], wks_vocab: &Vocabulary, sihks_vocab: &Vocabulary, config: &RunConfig) -> Result<Vec<FeatureSet>> {
    if sigs.is_empty() {
        return Err(Error::Data("no shapes to encode".into()));
    }
    let ids: Vec<String> = sigs.iter().map(|s| s.shape_id.clone()).collect();
    let labels: Vec<String> = sigs.iter().map(|s| s.label.clone()).collect();
    let bow = |vocab: &Vocabulary, kind: SignatureKind, params: SignatureParams, pick: fn(&MeshSignatures) -> &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(sigs.len(), vocab.size());
        for (i, s) in sigs.iter().enumerate() {
            let matrix = PointSignatureMatrix {
                values: pick(s).clone(),
                kind,
                params: params.clone(),
            };
            let hist = encode_bow(&matrix, vocab, &s.mass)
                .map_err(|e| Error::Data(format!("shape {}: {e}", s.shape_id)))?;
            out.row_mut(i).copy_from_slice(&hist);
        }
        Ok(out)
    };
    let wks = bow(wks_vocab, SignatureKind::Wks, SignatureParams::Wks(config.wks), |s| &s.wks)?;
    let sihks = bow(sihks_vocab, SignatureKind::SiHks, SignatureParams::SiHks(config.sihks), |s| &s.sihks)?;
    let dna_dim = sigs[0].shape_dna.len();
    let mut dna = DMatrix::zeros(sigs.len(), dna_dim);
    for (i, s) in sigs.iter().enumerate() {
        if s.shape_dna.len() != dna_dim {
            return Err(Error::DimensionMismatch {
                expected: dna_dim,
                found: s.shape_dna.len(),
            });
        }
        dna.row_mut(i).copy_from_slice(&s.shape_dna);
    }
    Ok(vec![
        FeatureSet::new(BOW_WKS, wks, labels.clone(), ids.clone())?,
        FeatureSet::new(BOW_SIHKS, sihks, labels.clone(), ids.clone())?,
        FeatureSet::new(SHAPE_DNA, dna, labels, ids)?,
    ])
}

/// Fits both vocabularies and the per-channel PCA on `train` only.
pub fn fit_encoders(train: &[&MeshSignatures], config: &RunConfig, seed: u64) -> Result<Encoders> {
    if train.len() < 2 {
        return Err(Error::Data(format!("need at least 2 training shapes, got {}", train.len())));
    }
    let c = &config.coding;
    let wks_rows = pooled_rows(train, |s| &s.wks, c.max_vocab_rows, derive_seed(seed, "rows-wks"));
    let sihks_rows = pooled_rows(train, |s| &s.sihks, c.max_vocab_rows, derive_seed(seed, "rows-sihks"));
    let wks_vocab = fit_vocabulary(&wks_rows, c.vocab_size, SignatureKind::Wks, derive_seed(seed, "vocab-wks"), c.kmeans())?;
    let sihks_vocab = fit_vocabulary(&sihks_rows, c.vocab_size, SignatureKind::SiHks, derive_seed(seed, "vocab-sihks"), c.kmeans())?;
    let raw = raw_channels(train, &wks_vocab, &sihks_vocab, config)?;
    let pca = raw
        .iter()
        .map(|f| {
            let p = fit_pca(f, c.pca_dim)?;
            if p.rank_deficient {
                log::warn!("channel {}: {} training rows cannot span {} PCA dimensions", f.channel, f.len(), c.pca_dim);
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Encoders {
        wks_vocab,
        sihks_vocab,
        pca,
    })
}

impl Encoders {
    /// PCA-projected channels for `sigs`, in [`channel_order`].
    pub fn encode(&self, sigs: &[&MeshSignatures], config: &RunConfig) -> Result<Vec<FeatureSet>> {
        let raw = raw_channels(sigs, &self.wks_vocab, &self.sihks_vocab, config)?;
        raw.iter().zip(&self.pca).map(|(f, p)| apply_pca(p, f)).collect()
    }
}
