//! Bag-of-words coding of point signatures and per-channel PCA.

mod bow;
mod features;
mod pca;
mod vocab;

pub use bow::encode_bow;
pub use features::{load_all, ChannelMeta, FeatureSet, BOW_SIHKS, BOW_WKS, SHAPE_DNA};
pub use pca::{apply_pca, fit_pca, PcaProjection};
pub use vocab::{fit_vocabulary, KMeansOptions, Vocabulary};
