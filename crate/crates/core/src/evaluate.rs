//! Plan metrics and exhaustive oracles.
//!
//! Interference sums run over ordered pairs `i ≠ j`, so each unordered pair
//! contributes `2·W_ij`. Collisions and confusions count unordered pairs of
//! `E₁` and `E₂` respectively; a pair present in both sets is counted in both.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PciError, Result};
use crate::graph::{InterferenceGraph, PciPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mod3_interference: f64,
    pub mod30_interference: f64,
    pub collisions: usize,
    pub confusions: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "collisions,confusions,mod3,mod30";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.collisions, self.confusions, self.mod3_interference, self.mod30_interference
        )
    }
}

/// Collision and confusion counts for raw per-cell values (which may still
/// exceed the PCI range). With `touching`, only pairs with at least one
/// flagged cell are counted.
pub fn count_conflicts(graph: &InterferenceGraph, values: &[u32], touching: Option<&[bool]>) -> (usize, usize) {
    let keep = |i: usize, j: usize| touching.map_or(true, |t| t[i] || t[j]);
    let count = |pairs: &std::collections::BTreeSet<(usize, usize)>| {
        pairs
            .iter()
            .filter(|&&(i, j)| values[i] == values[j] && keep(i, j))
            .count()
    };
    (count(graph.neighbors()), count(graph.second_order()))
}

pub fn evaluate_plan(graph: &InterferenceGraph, plan: &PciPlan) -> Result<EvalReport> {
    let n = graph.n();
    if plan.len() != n {
        return Err(PciError::Dimension(format!("plan covers {} cells, graph has {}", plan.len(), n)));
    }
    let pci = plan.values();
    let w = graph.weights();
    let mut mod3 = 0.0;
    let mut mod30 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let wij = w[(i, j)] + w[(j, i)];
            if wij == 0.0 {
                continue;
            }
            if pci[i] % 3 == pci[j] % 3 {
                mod3 += wij;
                if pci[i] % 30 == pci[j] % 30 {
                    mod30 += wij;
                }
            }
        }
    }
    let (collisions, confusions) = count_conflicts(graph, pci, None);
    Ok(EvalReport {
        mod3_interference: mod3,
        mod30_interference: mod30,
        collisions,
        confusions,
    })
}

/// `Σ_{i≠j} W_ij·1{l_i = l_j}`.
pub fn objective_of_labels(weights: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    let n = labels.len();
    if weights.nrows() != n || weights.ncols() != n {
        return Err(PciError::Dimension(format!("{} labels for a {}x{} matrix", n, weights.nrows(), weights.ncols())));
    }
    let mut f = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && labels[i] == labels[j] {
                f += weights[(i, j)];
            }
        }
    }
    Ok(f)
}

/// Upper bound on `kⁿ` accepted by [`brute_force_min_k_partition`].
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Exhaustive Min-k-Partition. Returns the lexicographically smallest
/// optimal labeling and its objective.
pub fn brute_force_min_k_partition(weights: &DMatrix<f64>, k: usize) -> Result<(Vec<usize>, f64)> {
    let n = weights.nrows();
    if weights.ncols() != n {
        return Err(PciError::Dimension("weights must be square".into()));
    }
    if k == 0 {
        return Err(PciError::Config("k must be at least 1".into()));
    }
    let total = (k as u64).checked_pow(n as u32).filter(|&t| t <= BRUTE_FORCE_LIMIT);
    if total.is_none() {
        return Err(PciError::TooLarge { k, n });
    }
    let mut labels = vec![0usize; n];
    let mut best = labels.clone();
    let mut best_value = f64::INFINITY;
    loop {
        let value = objective_of_labels(weights, &labels)?;
        if value < best_value {
            best_value = value;
            best.copy_from_slice(&labels);
        }
        // Odometer with the last cell as the fastest digit: lexicographic order.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok((best, best_value));
            }
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
        }
    }
}
