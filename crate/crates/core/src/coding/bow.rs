use crate::error::{Error, Result};
use crate::signatures::PointSignatureMatrix;

use super::Vocabulary;

/// Area-weighted hard-assignment histogram, L1-normalized.
pub fn encode_bow(signature: &PointSignatureMatrix, vocab: &Vocabulary, mass: &[f64]) -> Result<Vec<f64>> {
    if signature.dim() != vocab.dim() {
        return Err(Error::DimensionMismatch {
            expected: vocab.dim(),
            found: signature.dim(),
        });
    }
    if mass.len() != signature.num_points() {
        return Err(Error::DimensionMismatch {
            expected: signature.num_points(),
            found: mass.len(),
        });
    }
    let mut hist = vec![0.0; vocab.size()];
    let mut row = vec![0.0; signature.dim()];
    for (i, m) in mass.iter().enumerate() {
        row.iter_mut().zip(signature.values.row(i).iter()).for_each(|(r, v)| *r = *v);
        hist[vocab.nearest(&row)] += m;
    }
    let total: f64 = hist.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("vertex weights sum to zero".into()));
    }
    hist.iter_mut().for_each(|h| *h /= total);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signatures::{SignatureKind, SignatureParams, WksParams};
    use nalgebra::DMatrix;

    fn vocab() -> Vocabulary {
        Vocabulary {
            centers: DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 3.0, 3.0]),
            kind: SignatureKind::Wks,
            iterations: 0,
            inertia: vec![],
        }
    }

    fn sig(rows: &[[f64; 2]]) -> PointSignatureMatrix {
        PointSignatureMatrix {
            values: DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]),
            kind: SignatureKind::Wks,
            params: SignatureParams::Wks(WksParams::default()),
        }
    }

    #[test]
    fn one_hot_when_all_rows_share_a_word() {
        let s = sig(&[[2.9, 3.0], [3.2, 2.8], [3.0, 3.0]]);
        let h = encode_bow(&s, &vocab(), &[0.1, 0.5, 0.2]).unwrap();
        assert_eq!(h, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn area_weighted_simplex_point() {
        let s = sig(&[[0.1, 0.0], [0.9, 0.1], [0.0, 1.2], [0.0, 0.9]]);
        let h = encode_bow(&s, &vocab(), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((h[2] - 0.7).abs() < 1e-12);
        assert!(h.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = sig(&[[0.0, 0.0]]);
        s.values = DMatrix::zeros(1, 3);
        assert!(encode_bow(&s, &vocab(), &[1.0]).is_err());
    }
}
