use nalgebra::DMatrix;

use super::SimplexAssignment;
use crate::error::{PciError, Result};

/// Rows with a 2-norm below this count as unused labels.
pub const ZERO_ROW_NORM: f64 = 1e-12;

/// Entropic mirror step: `x ← x ⊙ exp(−t·g)`, then each column is
/// renormalized. Evaluated in the log domain with the column maximum
/// subtracted, so the exponent is never positive.
pub fn md_step(x: &SimplexAssignment, gradient: &DMatrix<f64>, step: f64) -> Result<SimplexAssignment> {
    if gradient.shape() != x.matrix().shape() {
        return Err(PciError::Dimension(format!(
            "gradient is {:?}, assignment is {:?}",
            gradient.shape(),
            x.matrix().shape()
        )));
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(PciError::NonFiniteGradient);
    }
    let k = x.k();
    let xm = x.matrix();
    let mut out = DMatrix::zeros(k, x.n());
    let mut logits = vec![0.0; k];
    for j in 0..x.n() {
        let mut top = f64::NEG_INFINITY;
        for a in 0..k {
            let l = xm[(a, j)].ln() - step * gradient[(a, j)];
            logits[a] = l;
            top = top.max(l);
        }
        let mut sum = 0.0;
        for a in 0..k {
            let e = (logits[a] - top).exp();
            out[(a, j)] = e;
            sum += e;
        }
        for a in 0..k {
            out[(a, j)] /= sum;
        }
    }
    Ok(SimplexAssignment::from_matrix_unchecked(out))
}

/// `Σ a·ln(a/b)` over all entries, with `0·ln 0 = 0`.
pub fn kl_divergence(a: &SimplexAssignment, b: &SimplexAssignment) -> Result<f64> {
    if a.matrix().shape() != b.matrix().shape() {
        return Err(PciError::Dimension("KL operands differ in shape".into()));
    }
    Ok(a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(&p, &q)| if p > 0.0 { p * (p / q).ln() } else { 0.0 })
        .sum())
}

/// `½‖a − b‖_F²`, the Euclidean counterpart of [`kl_divergence`].
pub fn half_sq_distance(a: &SimplexAssignment, b: &SimplexAssignment) -> Result<f64> {
    if a.matrix().shape() != b.matrix().shape() {
        return Err(PciError::Dimension("operands differ in shape".into()));
    }
    Ok(0.5 * (a.matrix() - b.matrix()).norm_squared())
}

/// `‖QX(QX)ᵀ − I_k‖_F / k²`, `Q` scaling rows to unit 2-norm. A row whose
/// norm is below [`ZERO_ROW_NORM`] is an unused label: its diagonal Gram entry
/// is taken as 1 and its off-diagonal entries as 0.
pub fn orthogonality_criterion(x: &SimplexAssignment) -> f64 {
    let k = x.k();
    let xm = x.matrix();
    let gram = xm * xm.transpose();
    let norms: Vec<f64> = (0..k).map(|a| gram[(a, a)].sqrt()).collect();
    let mut sum_sq = 0.0;
    for a in 0..k {
        for b in 0..k {
            let used = norms[a] >= ZERO_ROW_NORM && norms[b] >= ZERO_ROW_NORM;
            let g = if a == b {
                1.0
            } else if used {
                gram[(a, b)] / (norms[a] * norms[b])
            } else {
                0.0
            };
            let target = if a == b { 1.0 } else { 0.0 };
            sum_sq += (g - target) * (g - target);
        }
    }
    sum_sq.sqrt() / (k * k) as f64
}
