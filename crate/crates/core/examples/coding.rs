//! Bag-of-words coding of WKS over a small shape collection, followed by PCA.

use mfml::coding::{apply_pca, encode_bow, fit_pca, fit_vocabulary, FeatureSet, KMeansOptions};
use mfml::harness::{synthetic_shapes, ShapesParams};
use mfml::signatures::{compute_wks, SignatureKind, WksParams};
use mfml::spectral::{build_laplacian, EigenOptions, LaplacianOptions};
use nalgebra::DMatrix;

fn main() -> mfml::Result<()> {
    let shapes = synthetic_shapes(&ShapesParams { per_class: 3, ..Default::default() }, 7)?;
    let mut signatures = Vec::new();
    for (id, label, mesh) in &shapes {
        let lap = build_laplacian(mesh, LaplacianOptions::default())?;
        let wks = compute_wks(&lap.eigs(&EigenOptions::new(60))?, &WksParams::default())?;
        signatures.push((id.clone(), label.clone(), wks, lap.mass));
    }
    let rows: usize = signatures.iter().map(|s| s.2.num_points()).sum();
    let mut pooled = DMatrix::zeros(rows, 100);
    let mut r = 0;
    for (_, _, wks, _) in &signatures {
        pooled.rows_mut(r, wks.num_points()).copy_from(&wks.values);
        r += wks.num_points();
    }
    let vocab = fit_vocabulary(&pooled, 16, SignatureKind::Wks, 1, KMeansOptions::default())?;
    println!("vocabulary: {} words after {} Lloyd iterations", vocab.size(), vocab.iterations);

    let mut hist = DMatrix::zeros(signatures.len(), vocab.size());
    for (i, (id, _, wks, mass)) in signatures.iter().enumerate() {
        let h = encode_bow(wks, &vocab, mass)?;
        println!("{id:>10}: {}", h.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" "));
        hist.row_mut(i).copy_from_slice(&h);
    }
    let features = FeatureSet::new(
        "BoW-WKS",
        hist,
        signatures.iter().map(|s| s.1.clone()).collect(),
        signatures.iter().map(|s| s.0.clone()).collect(),
    )?;
    let pca = fit_pca(&features, 4)?;
    let projected = apply_pca(&pca, &features)?;
    println!("PCA variances {:.4?}; projected shape {:?}", pca.explained_variance, projected.vectors.shape());
    Ok(())
}
