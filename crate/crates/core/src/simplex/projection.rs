use nalgebra::DMatrix;

use super::SimplexAssignment;
use crate::error::{PciError, Result};

/// Euclidean projection of `v` onto the probability simplex, by sorting
/// and locating the threshold `τ` with `x = max(v − τ, 0)`.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (idx + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Projected gradient step applied column by column.
pub fn pgp_step(x: &SimplexAssignment, gradient: &DMatrix<f64>, step: f64) -> Result<SimplexAssignment> {
    if gradient.shape() != x.matrix().shape() {
        return Err(PciError::Dimension("gradient shape".into()));
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(PciError::NonFiniteGradient);
    }
    let moved = x.matrix() - gradient * step;
    let mut out = DMatrix::zeros(x.k(), x.n());
    for (j, column) in moved.column_iter().enumerate() {
        let projected = project_to_simplex(column.as_slice());
        out.column_mut(j).copy_from_slice(&projected);
    }
    Ok(SimplexAssignment::from_matrix_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Bisection on `τ` for `Σ max(v − τ, 0) = 1`: an independent route to
    /// the same KKT point.
    fn bisection_projection(v: &[f64]) -> Vec<f64> {
        let mass = |tau: f64| v.iter().map(|&x| (x - tau).max(0.0)).sum::<f64>();
        let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        v.iter().map(|&x| (x - tau).max(0.0)).collect()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_simplex(&[0.6, 0.6]), vec![0.5, 0.5]);
        let p = project_to_simplex(&[1.2, -0.1]);
        assert_relative_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.0);
        assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
    }

    proptest! {
        #[test]
        fn matches_bisection_oracle(v in prop::collection::vec(-5.0f64..5.0, 1..8)) {
            let fast = project_to_simplex(&v);
            let slow = bisection_projection(&v);
            let sum: f64 = fast.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!(*a >= 0.0);
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
