//! Pairwise-swap refinement of a discrete labeling.
//!
//! Each sweep visits every pair `i < j` and jointly relabels the two cells to
//! whichever `(k₁, k₂)` minimizes `Σ_{i≠j} W_ij·1{l_i = l_j}` with every other
//! label held fixed. Sweeps repeat until one makes no change.

use nalgebra::DMatrix;

use crate::error::{PciError, Result};

/// Hard cap on full sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl LabelAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(PciError::LabelOutOfRange { label, k });
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefineOutcome {
    pub labels: LabelAssignment,
    pub sweeps: usize,
    pub moves: usize,
    /// The sweep cap stopped refinement before a fixed point.
    pub capped: bool,
}

/// Change in `Σ_{i≠j} W_ij·1{l_i = l_j}` when cells `i`, `j` take labels
/// `k1`, `k2`. Linear in `n`.
pub fn pair_move_delta(
    weights: &DMatrix<f64>,
    labels: &LabelAssignment,
    i: usize,
    j: usize,
    k1: usize,
    k2: usize,
) -> Result<f64> {
    let n = labels.len();
    for idx in [i, j] {
        if idx >= n {
            return Err(PciError::IndexOutOfRange { index: idx, n });
        }
    }
    for l in [k1, k2] {
        if l >= labels.k() {
            return Err(PciError::LabelOutOfRange { label: l, k: labels.k() });
        }
    }
    if i == j {
        return Err(PciError::Dimension("pair move needs two distinct cells".into()));
    }
    let l = labels.labels();
    let (li, lj) = (l[i], l[j]);
    let mut delta = 0.0;
    for m in 0..n {
        if m == i || m == j {
            continue;
        }
        let lm = l[m];
        let hit = |a: usize, b: usize| (a == lm) as i32 - (b == lm) as i32;
        delta += weights[(i, m)] * hit(k1, li) as f64 + weights[(j, m)] * hit(k2, lj) as f64;
    }
    let same = |a: usize, b: usize| (a == b) as i32 as f64;
    delta = 2.0 * delta + 2.0 * weights[(i, j)] * (same(k1, k2) - same(li, lj));
    Ok(delta)
}

/// Per-cell label loads `S[c][l] = Σ_m W_cm·1{l_m = l}`.
struct LabelLoads {
    k: usize,
    loads: Vec<f64>,
}

impl LabelLoads {
    fn new(weights: &DMatrix<f64>, labels: &[usize], k: usize) -> Self {
        let n = labels.len();
        let mut loads = vec![0.0; n * k];
        for c in 0..n {
            for m in 0..n {
                loads[c * k + labels[m]] += weights[(c, m)];
            }
        }
        Self { k, loads }
    }

    fn get(&self, cell: usize, label: usize) -> f64 {
        self.loads[cell * self.k + label]
    }

    fn relabel(&mut self, weights: &DMatrix<f64>, cell: usize, from: usize, to: usize) {
        if from == to {
            return;
        }
        let n = weights.nrows();
        for c in 0..n {
            let w = weights[(c, cell)];
            self.loads[c * self.k + from] -= w;
            self.loads[c * self.k + to] += w;
        }
    }
}

fn tolerance(weights: &DMatrix<f64>) -> f64 {
    let max_row = weights.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    1e-12 * (1.0 + max_row)
}

fn check(weights: &DMatrix<f64>, labels: &LabelAssignment, movable: Option<&[bool]>) -> Result<()> {
    let n = labels.len();
    if weights.nrows() != n || weights.ncols() != n {
        return Err(PciError::Dimension(format!("{} labels for a {}x{} matrix", n, weights.nrows(), weights.ncols())));
    }
    if movable.is_some_and(|m| m.len() != n) {
        return Err(PciError::Dimension("movable mask length".into()));
    }
    Ok(())
}

/// Pairwise refinement over all cells.
pub fn refine(weights: &DMatrix<f64>, labels: &LabelAssignment) -> Result<RefineOutcome> {
    refine_subset(weights, labels, None)
}

/// Pairwise refinement in which only cells with `movable[i]` may change.
/// Ties keep the current labels; among strictly better moves the
/// lexicographically smallest `(k₁, k₂)` wins.
pub fn refine_subset(
    weights: &DMatrix<f64>,
    labels: &LabelAssignment,
    movable: Option<&[bool]>,
) -> Result<RefineOutcome> {
    check(weights, labels, movable)?;
    let k = labels.k();
    let mut l = labels.labels().to_vec();
    let cells: Vec<usize> = (0..l.len()).filter(|&i| movable.map_or(true, |m| m[i])).collect();
    let tol = tolerance(weights);
    let mut moves = 0;
    for sweep in 1..=MAX_SWEEPS {
        // Rebuilt every sweep so rounding drift cannot accumulate.
        let mut loads = LabelLoads::new(weights, &l, k);
        let mut changed = false;
        for (a, &i) in cells.iter().enumerate() {
            for &j in &cells[a + 1..] {
                let wij = weights[(i, j)];
                let (li, lj) = (l[i], l[j]);
                let cost = |k1: usize, k2: usize| {
                    let own_i = loads.get(i, k1) - if lj == k1 { wij } else { 0.0 };
                    let own_j = loads.get(j, k2) - if li == k2 { wij } else { 0.0 };
                    2.0 * (own_i + own_j) + if k1 == k2 { 2.0 * wij } else { 0.0 }
                };
                let current = cost(li, lj);
                let mut best = (li, lj);
                let mut best_delta = -tol;
                for k1 in 0..k {
                    for k2 in 0..k {
                        let delta = cost(k1, k2) - current;
                        if delta < best_delta {
                            best_delta = delta;
                            best = (k1, k2);
                        }
                    }
                }
                if best != (li, lj) {
                    loads.relabel(weights, i, li, best.0);
                    l[i] = best.0;
                    loads.relabel(weights, j, lj, best.1);
                    l[j] = best.1;
                    moves += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(RefineOutcome { labels: LabelAssignment { labels: l, k }, sweeps: sweep, moves, capped: false });
        }
    }
    log::warn!("local search stopped at the {MAX_SWEEPS}-sweep cap");
    Ok(RefineOutcome { labels: LabelAssignment { labels: l, k }, sweeps: MAX_SWEEPS, moves, capped: true })
}

/// Best-improvement single-cell relabeling; only `movable` cells change.
pub fn refine_single(
    weights: &DMatrix<f64>,
    labels: &LabelAssignment,
    movable: Option<&[bool]>,
) -> Result<RefineOutcome> {
    check(weights, labels, movable)?;
    let k = labels.k();
    let mut l = labels.labels().to_vec();
    let tol = tolerance(weights);
    let mut moves = 0;
    for sweep in 1..=MAX_SWEEPS {
        let mut loads = LabelLoads::new(weights, &l, k);
        let mut changed = false;
        for i in 0..l.len() {
            if movable.is_some_and(|m| !m[i]) {
                continue;
            }
            let current = loads.get(i, l[i]);
            let mut best = l[i];
            let mut best_delta = -tol;
            for label in 0..k {
                let delta = 2.0 * (loads.get(i, label) - current);
                if delta < best_delta {
                    best_delta = delta;
                    best = label;
                }
            }
            if best != l[i] {
                loads.relabel(weights, i, l[i], best);
                l[i] = best;
                moves += 1;
                changed = true;
            }
        }
        if !changed {
            return Ok(RefineOutcome { labels: LabelAssignment { labels: l, k }, sweeps: sweep, moves, capped: false });
        }
    }
    Ok(RefineOutcome { labels: LabelAssignment { labels: l, k }, sweeps: MAX_SWEEPS, moves, capped: true })
}
