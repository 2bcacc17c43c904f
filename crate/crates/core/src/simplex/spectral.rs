use nalgebra::{DMatrix, DVector};

/// Result of a power-iteration estimate of `λ_max(W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SpectralEstimate {
    /// `max(2·λ_max, 0)`: above this penalty, `2W − ρI` is negative definite.
    pub fn threshold(&self) -> f64 {
        (2.0 * self.lambda_max).max(0.0)
    }
}

pub const POWER_ITERATION_CAP: usize = 100_000;

/// Largest eigenvalue of a symmetric matrix by power iteration on `W + sI`,
/// where `s` is the largest absolute row sum, so the shifted spectrum is
/// non-negative and the dominant eigenvalue is the one we want. Stops once the
/// residual `‖Av − λv‖` falls below `rel_tol·|λ|`.
pub fn largest_eigenvalue(w: &DMatrix<f64>, rel_tol: f64, cap: usize) -> SpectralEstimate {
    let n = w.nrows();
    if n == 0 {
        return SpectralEstimate { lambda_max: 0.0, iterations: 0, converged: true };
    }
    let shift = w
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if shift == 0.0 {
        return SpectralEstimate { lambda_max: 0.0, iterations: 0, converged: true };
    }
    let mut a = w.clone();
    for i in 0..n {
        a[(i, i)] += shift;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.754_877_666_2).fract());
    v.normalize_mut();
    let mut lambda = 0.0;
    for iter in 1..=cap {
        let av = &a * &v;
        lambda = v.dot(&av);
        let residual = (&av - &v * lambda).norm();
        if residual <= rel_tol * lambda.abs() {
            return SpectralEstimate { lambda_max: lambda - shift, iterations: iter, converged: true };
        }
        let norm = av.norm();
        if norm == 0.0 {
            break;
        }
        v = av / norm;
    }
    SpectralEstimate { lambda_max: lambda - shift, iterations: cap, converged: false }
}

/// `max(2·λ_max(W), 0)`, estimated to relative tolerance `1e-8`.
pub fn exactness_threshold(w: &DMatrix<f64>) -> f64 {
    let est = largest_eigenvalue(w, 1e-8, POWER_ITERATION_CAP);
    if !est.converged {
        log::warn!("power iteration stopped at the cap after {} iterations", est.iterations);
    }
    est.threshold()
}
