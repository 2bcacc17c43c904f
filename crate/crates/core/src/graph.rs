//! Network model: the interference matrix, neighbor relations and PCI plans.
//!
//! `W` is stored dense. At `n` cells that is `8·n²` bytes, so roughly 200 MB
//! at `n = 5000`, which is the intended upper end for this crate.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{PciError, Result};

/// Largest valid PCI value.
pub const MAX_PCI: u32 = 1007;

/// Number of distinct PCI values.
pub const PCI_COUNT: u32 = 1008;

/// Unordered cell pair stored as `(min, max)`.
pub type CellPair = (usize, usize);

fn normalize_pair(i: usize, j: usize) -> CellPair {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Symmetric non-negative interference matrix plus first- and second-order
/// neighbor relations over `n` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    weights: DMatrix<f64>,
    neighbors: BTreeSet<CellPair>,
    second_order: BTreeSet<CellPair>,
    frequencies: Option<Vec<i64>>,
}

impl InterferenceGraph {
    /// Builds a graph from a matrix and first-order pairs. The matrix must
    /// already be symmetric and non-negative; its diagonal is zeroed. When
    /// `second_order` is `None` it is derived from `neighbors`.
    pub fn new(
        mut weights: DMatrix<f64>,
        neighbors: impl IntoIterator<Item = CellPair>,
        second_order: Option<Vec<CellPair>>,
    ) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(PciError::Dimension(format!(
                "weight matrix is {}x{}",
                n,
                weights.ncols()
            )));
        }
        for i in 0..n {
            weights[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (weights[(i, j)], weights[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(PciError::NonFiniteWeight { i, j });
                }
                if a < 0.0 || b < 0.0 {
                    return Err(PciError::NegativeWeight { i, j, weight: a.min(b) });
                }
                if a != b {
                    return Err(PciError::ConflictingWeight { i, j });
                }
            }
        }
        let neighbors = validate_pairs(n, neighbors)?;
        let second_order = match second_order {
            Some(pairs) => validate_pairs(n, pairs)?,
            None => derive_second_order(&neighbors),
        };
        Ok(Self {
            weights,
            neighbors,
            second_order,
            frequencies: None,
        })
    }

    /// Graph with weights only and no neighbor relations.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        Self::new(weights, std::iter::empty(), Some(Vec::new()))
    }

    pub fn with_frequencies(mut self, frequencies: Option<Vec<i64>>) -> Result<Self> {
        if let Some(f) = &frequencies {
            if f.len() != self.n() {
                return Err(PciError::Dimension(format!(
                    "{} frequencies for {} cells",
                    f.len(),
                    self.n()
                )));
            }
        }
        self.frequencies = frequencies;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// First-order neighbor pairs `E₁`.
    pub fn neighbors(&self) -> &BTreeSet<CellPair> {
        &self.neighbors
    }

    /// Second-order neighbor pairs `E₂`.
    pub fn second_order(&self) -> &BTreeSet<CellPair> {
        &self.second_order
    }

    pub fn frequencies(&self) -> Option<&[i64]> {
        self.frequencies.as_deref()
    }

    /// Conflict pairs `E = E₁ ∪ E₂`.
    pub fn conflict_pairs(&self) -> BTreeSet<CellPair> {
        self.neighbors.union(&self.second_order).copied().collect()
    }

    /// Adjacency lists of the conflict graph `E₁ ∪ E₂`, each sorted ascending.
    pub fn conflict_adjacency(&self) -> Vec<Vec<usize>> {
        pairs_to_adjacency(self.n(), self.conflict_pairs().iter())
    }

    /// Adjacency lists of `E₁` only.
    pub fn neighbor_adjacency(&self) -> Vec<Vec<usize>> {
        pairs_to_adjacency(self.n(), self.neighbors.iter())
    }

    /// `W` restricted to the given cells, in the given order.
    pub fn induced_weights(&self, cells: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(cells.len(), cells.len(), |a, b| {
            self.weights[(cells[a], cells[b])]
        })
    }

    /// `W[rows, cols]` block.
    pub fn weight_block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
            self.weights[(rows[a], cols[b])]
        })
    }

    /// Sum of all entries of `W` (the `ℓ₁,₁` norm, since entries are non-negative).
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Relabels cells: cell `i` of `self` becomes cell `perm[i]` of the result.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(PciError::Dimension("permutation length".into()));
        }
        let mut inv = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || inv[p] != usize::MAX {
                return Err(PciError::Dimension("not a permutation".into()));
            }
            inv[p] = i;
        }
        let weights = DMatrix::from_fn(n, n, |a, b| self.weights[(inv[a], inv[b])]);
        let map = |s: &BTreeSet<CellPair>| -> Vec<CellPair> {
            s.iter().map(|&(i, j)| normalize_pair(perm[i], perm[j])).collect()
        };
        Self::new(weights, map(&self.neighbors), Some(map(&self.second_order)))
    }
}

fn validate_pairs(n: usize, pairs: impl IntoIterator<Item = CellPair>) -> Result<BTreeSet<CellPair>> {
    let mut out = BTreeSet::new();
    for (i, j) in pairs {
        for idx in [i, j] {
            if idx >= n {
                return Err(PciError::IndexOutOfRange { index: idx, n });
            }
        }
        if i == j {
            return Err(PciError::SelfLoop(i));
        }
        out.insert(normalize_pair(i, j));
    }
    Ok(out)
}

fn pairs_to_adjacency<'a>(n: usize, pairs: impl Iterator<Item = &'a CellPair>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// All pairs `(i, j)`, `i ≠ j`, that share some first-order neighbor `ℓ`.
pub fn derive_second_order<'a>(neighbors: impl IntoIterator<Item = &'a CellPair>) -> BTreeSet<CellPair> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(i, j) in neighbors {
        if i == j {
            continue;
        }
        adj.entry(i).or_default().insert(j);
        adj.entry(j).or_default().insert(i);
    }
    let mut out = BTreeSet::new();
    for around in adj.values() {
        let list: Vec<usize> = around.iter().copied().collect();
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Per-cell PCI values in `[0, 1007]`.
/// Serializes as `{"pci": [...]}`, the plan file layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PciPlan {
    pci: Vec<u32>,
}

impl PciPlan {
    pub fn new(pci: Vec<u32>) -> Result<Self> {
        if let Some((cell, &value)) = pci.iter().enumerate().find(|(_, &v)| v > MAX_PCI) {
            return Err(PciError::PciOutOfRange { cell, value: value as i64 });
        }
        Ok(Self { pci })
    }

    /// Validates signed input, as read from files.
    pub fn from_i64(values: &[i64]) -> Result<Self> {
        let mut pci = Vec::with_capacity(values.len());
        for (cell, &value) in values.iter().enumerate() {
            if !(0..=MAX_PCI as i64).contains(&value) {
                return Err(PciError::PciOutOfRange { cell, value });
            }
            pci.push(value as u32);
        }
        Ok(Self { pci })
    }

    /// Plan `30·q + r`; fails if any value leaves the PCI range.
    pub fn compose(q: &[u32], r30: &[u8]) -> Result<Self> {
        if q.len() != r30.len() {
            return Err(PciError::Dimension("quotient and residue lengths differ".into()));
        }
        let pci = q
            .iter()
            .zip(r30)
            .map(|(&q, &r)| 30 * q + r as u32)
            .collect();
        Self::new(pci)
    }

    pub fn len(&self) -> usize {
        self.pci.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pci.is_empty()
    }

    pub fn values(&self) -> &[u32] {
        &self.pci
    }

    pub fn get(&self, cell: usize) -> u32 {
        self.pci[cell]
    }

    pub fn decompose(&self) -> PciDecomposition {
        decompose_pci(self)
    }
}

/// Quotient/remainder view of a plan: `pci = 30·q + r`, `r3 = pci mod 3`,
/// `r10 = pci mod 10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PciDecomposition {
    pub q: Vec<u32>,
    pub r: Vec<u8>,
    pub r3: Vec<u8>,
    pub r10: Vec<u8>,
}

pub fn decompose_pci(plan: &PciPlan) -> PciDecomposition {
    let v = plan.values();
    PciDecomposition {
        q: v.iter().map(|&p| p / 30).collect(),
        r: v.iter().map(|&p| (p % 30) as u8).collect(),
        r3: v.iter().map(|&p| (p % 3) as u8).collect(),
        r10: v.iter().map(|&p| (p % 10) as u8).collect(),
    }
}

/// Cells whose PCI may change, plus the plan the remaining cells keep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeableSet {
    changeable: Vec<bool>,
    baseline: PciPlan,
}

impl ChangeableSet {
    pub fn new(changeable: &[usize], baseline: PciPlan) -> Result<Self> {
        let n = baseline.len();
        let mut mask = vec![false; n];
        for &c in changeable {
            if c >= n {
                return Err(PciError::IndexOutOfRange { index: c, n });
            }
            mask[c] = true;
        }
        Ok(Self {
            changeable: mask,
            baseline,
        })
    }

    pub fn n(&self) -> usize {
        self.changeable.len()
    }

    pub fn is_changeable(&self, cell: usize) -> bool {
        self.changeable[cell]
    }

    pub fn mask(&self) -> &[bool] {
        &self.changeable
    }

    pub fn baseline(&self) -> &PciPlan {
        &self.baseline
    }

    /// `𝒮`, ascending.
    pub fn changeable_cells(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.changeable[i]).collect()
    }

    /// `𝒰 = 𝒱 ∖ 𝒮`, ascending.
    pub fn fixed_cells(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.changeable[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_from_shared_neighbor() {
        let e1 = [(0, 1), (0, 2), (3, 4)];
        let e2 = derive_second_order(&e1);
        assert_eq!(e2.into_iter().collect::<Vec<_>>(), vec![(1, 2)]);
        assert!(derive_second_order(&[]).is_empty());
    }

    #[test]
    fn hexagon_topology_links_opposite_cells() {
        // Seven-cell layout, 1-based as drawn: centre 4, ring 1,2,3,5,6,7.
        let e1_one_based = [(4, 1), (4, 2), (4, 3), (4, 5), (4, 6), (4, 7), (1, 2), (2, 3)];
        let e1: Vec<CellPair> = e1_one_based
            .iter()
            .map(|&(a, b)| normalize_pair(a - 1, b - 1))
            .collect();
        let e2 = derive_second_order(&e1);
        assert!(e2.contains(&(0, 6)));
    }

    #[test]
    fn second_order_is_order_independent() {
        let a = [(0, 1), (1, 2), (2, 3), (1, 3)];
        let b = [(3, 1), (2, 3), (2, 1), (1, 0)];
        let b: Vec<_> = b.iter().map(|&(i, j)| normalize_pair(i, j)).collect();
        assert_eq!(derive_second_order(&a), derive_second_order(&b));
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_pci(&PciPlan::new(vec![0, 1007, 23]).unwrap());
        assert_eq!(d.q, vec![0, 33, 0]);
        assert_eq!(d.r, vec![0, 17, 23]);
        assert_eq!(d.r3, vec![0, 2, 2]);
        assert_eq!(d.r10, vec![0, 7, 3]);
    }

    #[test]
    fn decomposition_recomposes_for_every_pci() {
        let plan = PciPlan::new((0..PCI_COUNT).collect()).unwrap();
        let d = plan.decompose();
        for i in 0..plan.len() {
            assert_eq!(30 * d.q[i] + d.r[i] as u32, plan.get(i));
            assert_eq!(d.r3[i], d.r[i] % 3);
            assert_eq!(d.r10[i], d.r[i] % 10);
        }
    }

    #[test]
    fn plan_rejects_out_of_range() {
        assert!(PciPlan::new(vec![1008]).is_err());
        assert!(PciPlan::from_i64(&[-1]).is_err());
        assert!(PciPlan::compose(&[33], &[18]).is_err());
        assert_eq!(PciPlan::compose(&[33], &[17]).unwrap().values(), &[1007]);
    }

    #[test]
    fn constructor_validation() {
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 1)] = 1.0;
        assert!(matches!(
            InterferenceGraph::new(w.clone(), [(0, 1)], None),
            Err(PciError::ConflictingWeight { .. })
        ));
        w[(1, 0)] = 1.0;
        w[(0, 0)] = 5.0;
        let g = InterferenceGraph::new(w.clone(), [(0, 1)], None).unwrap();
        assert_eq!(g.weight(0, 0), 0.0);
        assert!(matches!(
            InterferenceGraph::new(w.clone(), [(1, 1)], None),
            Err(PciError::SelfLoop(1))
        ));
        assert!(matches!(
            InterferenceGraph::new(w.clone(), [(0, 2)], None),
            Err(PciError::IndexOutOfRange { index: 2, n: 2 })
        ));
        w[(0, 1)] = -1.0;
        w[(1, 0)] = -1.0;
        assert!(matches!(
            InterferenceGraph::new(w, [], None),
            Err(PciError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn changeable_partition() {
        let base = PciPlan::new(vec![1, 2, 3, 4]).unwrap();
        let c = ChangeableSet::new(&[3, 1], base).unwrap();
        assert_eq!(c.changeable_cells(), vec![1, 3]);
        assert_eq!(c.fixed_cells(), vec![0, 2]);
    }
}
