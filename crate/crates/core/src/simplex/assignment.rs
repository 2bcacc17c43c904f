use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{PciError, Result};

const COLUMN_SUM_TOL: f64 = 1e-9;

/// Column-stochastic `k × n` matrix: column `j` is cell `j`'s soft label.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexAssignment {
    x: DMatrix<f64>,
}

impl SimplexAssignment {
    /// Validates that every column lies on the probability simplex.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        for (j, col) in x.column_iter().enumerate() {
            if col.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(PciError::Dimension(format!("column {j} has a negative or non-finite entry")));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(PciError::Dimension(format!("column {j} sums to {sum}")));
            }
        }
        Ok(Self { x })
    }

    pub(crate) fn from_matrix_unchecked(x: DMatrix<f64>) -> Self {
        Self { x }
    }

    /// Random interior point: each column is `z / ‖z‖₁` with `z` i.i.d.
    /// uniform on `(0, 1]`.
    pub fn random_interior<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Self {
        let mut x = DMatrix::zeros(k, n);
        for j in 0..n {
            let mut sum = 0.0;
            for a in 0..k {
                let z = 1.0 - rng.gen::<f64>();
                x[(a, j)] = z;
                sum += z;
            }
            for a in 0..k {
                x[(a, j)] /= sum;
            }
        }
        Self { x }
    }

    pub fn one_hot(labels: &[usize], k: usize) -> Result<Self> {
        let mut x = DMatrix::zeros(k, labels.len());
        for (j, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(PciError::LabelOutOfRange { label, k });
            }
            x[(label, j)] = 1.0;
        }
        Ok(Self { x })
    }

    pub fn k(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.x
    }

    /// Per-column argmax; the lowest label wins ties.
    pub fn round_labels(&self) -> Vec<usize> {
        self.x
            .column_iter()
            .map(|col| {
                let mut best = 0;
                for a in 1..col.len() {
                    if col[a] > col[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }

    /// Reorders rows: row `a` moves to row `perm[a]`.
    pub fn permute_labels(&self, perm: &[usize]) -> Self {
        let mut x = DMatrix::zeros(self.k(), self.n());
        for a in 0..self.k() {
            x.set_row(perm[a], &self.x.row(a));
        }
        Self { x }
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.x.iter().all(|&v| v > 0.0)
    }
}
