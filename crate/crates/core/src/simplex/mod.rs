//! Relaxation-free Min-k-Partition.
//!
//! Labels are relaxed to columns of a `k × n` column-stochastic matrix `X`
//! and the non-convex problem
//!
//! ```text
//! min  F(X;ρ) = Tr(X(W − ρ/2·I)Xᵀ) + nρ/2   over X ∈ Δ_k^n
//! ```
//!
//! is solved by entropic mirror descent while `ρ` is grown geometrically.
//! The penalty term `ρ/2·Σ(‖x‖₁² − ‖x‖₂²)` is zero exactly at one-hot columns,
//! so once `ρ` exceeds `2λ_max(W)` the continuous minimizers are vertices and
//! rounding loses nothing.

mod assignment;
mod mirror;
mod objective;
mod pmd;
mod projection;
mod spectral;
mod trace;

pub use assignment::SimplexAssignment;
pub use mirror::{half_sq_distance, kl_divergence, md_step, orthogonality_criterion, ZERO_ROW_NORM};
pub use objective::{gradient, penalized_objective, smoothness_constant, step_size, PenalizedProblem};
pub use pmd::{
    run_inner, run_inner_observed, solve_from, solve_min_k_partition, solve_observed, solve_partial, solve_pgp_variant,
    DescentMethod, InnerOutcome, InnerStep, SolveOutcome,
};
pub use projection::{pgp_step, project_to_simplex};
pub use spectral::{exactness_threshold, largest_eigenvalue, SpectralEstimate, POWER_ITERATION_CAP};
pub use trace::{OuterRecord, SolveTrace};

use crate::error::{PciError, Result};

/// Penalty continuation and termination parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Initial penalty `ρ₀`.
    pub rho0: f64,
    /// Penalty growth factor per outer iteration.
    pub gamma: f64,
    /// Inner-loop tolerance on the divergence between consecutive iterates.
    pub eps1: f64,
    /// Outer-loop tolerance on the row-orthogonality criterion.
    pub eps2: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho0: 1e-8,
            gamma: 1.1,
            eps1: 1e-5,
            eps2: 1e-10,
            max_inner: 100_000,
            max_outer: 300,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(PciError::Config(m.to_string()));
        if !(self.rho0 > 0.0) || !self.rho0.is_finite() {
            return fail("rho0 must be positive");
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return fail("gamma must exceed 1");
        }
        if !(self.eps1 > 0.0) {
            return fail("eps1 must be positive");
        }
        if !(self.eps2 >= 0.0) {
            return fail("eps2 must be non-negative");
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return fail("iteration caps must be at least 1");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
