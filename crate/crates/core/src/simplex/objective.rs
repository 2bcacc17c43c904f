//! The penalized objective `F(X;ρ) = Tr(X(W − ρ/2·I)Xᵀ) + nρ/2` and its
//! gradient `X(2W − ρI)`, with an optional linear term for partial solves.

use nalgebra::DMatrix;

use super::SimplexAssignment;
use crate::error::{PciError, Result};

/// Quadratic problem over `Δ_k^n`. `linear`, when present, adds `⟨C, X⟩`
/// to the objective and `C` to the gradient.
#[derive(Debug, Clone)]
pub struct PenalizedProblem<'a> {
    weights: &'a DMatrix<f64>,
    linear: Option<DMatrix<f64>>,
    frob_sq: f64,
    trace: f64,
}

impl<'a> PenalizedProblem<'a> {
    pub fn new(weights: &'a DMatrix<f64>) -> Self {
        Self {
            weights,
            linear: None,
            frob_sq: weights.norm_squared(),
            trace: weights.trace(),
        }
    }

    pub fn with_linear(weights: &'a DMatrix<f64>, linear: DMatrix<f64>) -> Result<Self> {
        if linear.ncols() != weights.nrows() {
            return Err(PciError::Dimension(format!(
                "linear term has {} columns, problem has {} cells",
                linear.ncols(),
                weights.nrows()
            )));
        }
        let mut p = Self::new(weights);
        p.linear = Some(linear);
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        self.weights
    }

    pub fn has_linear_term(&self) -> bool {
        self.linear.is_some()
    }

    fn check(&self, x: &SimplexAssignment) -> Result<()> {
        if x.n() != self.n() {
            return Err(PciError::Dimension(format!(
                "assignment has {} columns, problem has {} cells",
                x.n(),
                self.n()
            )));
        }
        if let Some(c) = &self.linear {
            if c.nrows() != x.k() {
                return Err(PciError::Dimension(format!(
                    "linear term has {} rows, assignment has k = {}",
                    c.nrows(),
                    x.k()
                )));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &SimplexAssignment, rho: f64) -> Result<f64> {
        self.check(x)?;
        let xm = x.matrix();
        let xw = xm * self.weights;
        // Penalty as ρ/2·(n − ‖X‖²) so it is exactly zero at vertices.
        let mut f = xw.dot(xm) + 0.5 * rho * (self.n() as f64 - xm.norm_squared());
        if let Some(c) = &self.linear {
            f += c.dot(xm);
        }
        Ok(f)
    }

    pub fn gradient(&self, x: &SimplexAssignment, rho: f64) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let xm = x.matrix();
        let mut g = xm * self.weights;
        g *= 2.0;
        g -= xm * rho;
        if let Some(c) = &self.linear {
            g += c;
        }
        Ok(g)
    }

    /// `L = ‖2W − ρI‖_F`, from `‖W‖_F`, `tr W` and `n` without forming the matrix.
    pub fn smoothness(&self, rho: f64) -> f64 {
        let n = self.n() as f64;
        (4.0 * self.frob_sq - 4.0 * rho * self.trace + n * rho * rho)
            .max(0.0)
            .sqrt()
    }
}

pub fn penalized_objective(weights: &DMatrix<f64>, x: &SimplexAssignment, rho: f64) -> Result<f64> {
    PenalizedProblem::new(weights).objective(x, rho)
}

pub fn gradient(weights: &DMatrix<f64>, x: &SimplexAssignment, rho: f64) -> Result<DMatrix<f64>> {
    PenalizedProblem::new(weights).gradient(x, rho)
}

/// `‖2W − ρI‖_F`.
pub fn smoothness_constant(weights: &DMatrix<f64>, rho: f64) -> f64 {
    PenalizedProblem::new(weights).smoothness(rho)
}

/// Diminishing step `1/(L + m + 1)`.
pub fn step_size(m: usize, smoothness: f64) -> f64 {
    1.0 / (smoothness + m as f64 + 1.0)
}
