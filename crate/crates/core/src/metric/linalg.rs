use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SVD};

use crate::error::{Error, Result};

/// `‖L(x - y)‖²`.
pub fn mahalanobis_sq(x: &[f64], y: &[f64], l: &DMatrix<f64>) -> Result<f64> {
    if x.len() != y.len() || l.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: l.ncols(),
            found: x.len().max(y.len()),
        });
    }
    let d = DVector::from_iterator(x.len(), x.iter().zip(y).map(|(a, b)| a - b));
    Ok((l * d).norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub value: f64,
    /// `A` was not positive definite and a ridge was added before evaluating.
    pub ridged: bool,
}

pub(crate) fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let sym = (m + m.transpose()) * 0.5;
    Cholesky::new(sym)
}

/// Burg / LogDet divergence `tr(AB⁻¹) - log det(AB⁻¹) - n`.
///
/// `B` must be positive definite. A merely semidefinite `A` is evaluated as
/// `A + ridge·I` and the result is flagged.
pub fn log_det_divergence(a: &DMatrix<f64>, b: &DMatrix<f64>, ridge: f64) -> Result<LogDet> {
    let n = b.nrows();
    if !a.is_square() || !b.is_square() || a.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let chol_b = cholesky(b).ok_or_else(|| Error::Singular("LogDet divergence needs B positive definite".into()))?;
    let lb = chol_b.l();
    let whiten = |a: &DMatrix<f64>| {
        // L_b⁻¹ A L_b⁻ᵀ
        let left = lb.solve_lower_triangular(a).expect("nonsingular factor");
        let both = lb.solve_lower_triangular(&left.transpose()).expect("nonsingular factor");
        (&both + both.transpose()) * 0.5
    };
    let eval = |m: &DMatrix<f64>| {
        cholesky(m).map(|c| {
            let logdet: f64 = c.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            m.trace() - logdet - n as f64
        })
    };
    let m = whiten(a);
    if let Some(value) = eval(&m) {
        if value.is_finite() {
            return Ok(LogDet { value, ridged: false });
        }
    }
    let ridged = a + DMatrix::identity(n, n) * ridge;
    let value = eval(&whiten(&ridged))
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Singular("A is not positive semidefinite".into()))?;
    Ok(LogDet { value, ridged: true })
}

/// Lower-triangular `C` with `A = CCᵀ`, or `None` if `A` is not positive definite.
pub fn cholesky_factor(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    cholesky(a).map(|c| c.l())
}

/// `(Lᵀ)⁺` via SVD, zeroing singular values below `1e-10 · σ_max`.
pub fn pinv_transpose(l: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = SVD::new(l.clone(), true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut scaled = u.clone();
    for (j, s) in svd.singular_values.iter().enumerate() {
        let inv = if *s > 1e-10 * smax { 1.0 / s } else { 0.0 };
        scaled.column_mut(j).scale_mut(inv);
    }
    scaled * vt
}

/// `log |det L|` from an LU factorization; `-∞` when singular.
pub(crate) fn log_abs_det(l: &DMatrix<f64>) -> f64 {
    let lu = l.clone().lu();
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}
