//! Quotient assignment by graph coloring.
//!
//! Two cells only collide or confuse when they share the full PCI, hence the
//! same mod-30 residue. Quotients are therefore chosen cluster by cluster:
//! within each residue class the conflict graph `E₁ ∪ E₂` is greedily colored
//! and color `c` becomes quotient `c`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::crt::Mod30Assignment;
use crate::error::{PciError, Result};
use crate::graph::{InterferenceGraph, MAX_PCI};

/// Simple undirected graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringGraph {
    adjacency: Vec<Vec<usize>>,
}

impl ColoringGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (i, j) in edges {
            for idx in [i, j] {
                if idx >= n {
                    return Err(PciError::IndexOutOfRange { index: idx, n });
                }
            }
            if i == j {
                return Err(PciError::SelfLoop(i));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Largest-first greedy coloring: vertices in descending degree order (ties
/// by ascending index) each take the smallest color unused by their already
/// colored neighbors.
pub fn greedy_color(g: &ColoringGraph) -> Vec<usize> {
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut color = vec![usize::MAX; n];
    let mut taken = vec![usize::MAX; g.max_degree() + 1];
    for v in order {
        for &u in g.neighbors(v) {
            let c = color[u];
            if c < taken.len() {
                taken[c] = v;
            }
        }
        color[v] = (0..taken.len()).find(|&c| taken[c] != v).unwrap_or(taken.len());
    }
    color
}

/// Quotients `q` with `PCI = 30·q + r`.
pub type QuotientAssignment = Vec<u32>;

fn clusters(r30: &[u8]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); 30];
    for (cell, &r) in r30.iter().enumerate() {
        out[r as usize].push(cell);
    }
    out
}

fn induced_coloring_graph(cells: &[usize], adjacency: &[Vec<usize>], local: &[usize]) -> ColoringGraph {
    let mut edges = Vec::new();
    for (a, &i) in cells.iter().enumerate() {
        for &j in &adjacency[i] {
            let b = local[j];
            if b != usize::MAX && a < b && cells[b] == j {
                edges.push((a, b));
            }
        }
    }
    ColoringGraph::new(cells.len(), edges).expect("induced edges are valid")
}

fn check_len(graph: &InterferenceGraph, len: usize, what: &str) -> Result<()> {
    if len != graph.n() {
        return Err(PciError::Dimension(format!("{what} covers {len} cells, graph has {}", graph.n())));
    }
    Ok(())
}

/// Greedy coloring of every mod-30 cluster's conflict graph, clusters
/// processed in parallel on the current rayon pool.
pub fn assign_quotients(graph: &InterferenceGraph, r30: &Mod30Assignment) -> Result<QuotientAssignment> {
    check_len(graph, r30.len(), "residue assignment")?;
    let adjacency = graph.conflict_adjacency();
    let groups = clusters(r30.values());
    let colored: Vec<Vec<usize>> = groups
        .par_iter()
        .map(|cells| {
            let mut local = vec![usize::MAX; graph.n()];
            for (a, &c) in cells.iter().enumerate() {
                local[c] = a;
            }
            greedy_color(&induced_coloring_graph(cells, &adjacency, &local))
        })
        .collect();
    let mut q = vec![0u32; graph.n()];
    for (cells, colors) in groups.iter().zip(&colored) {
        for (&cell, &c) in cells.iter().zip(colors) {
            q[cell] = c as u32;
        }
    }
    Ok(q)
}

/// Colors `changeable` cells so that they avoid each other and every fixed
/// cell they conflict with. Fixed colors are replaced by a clique of `A`
/// vertices (one per distinct fixed color), each changeable cell is joined
/// to the clique vertex of every color used by a conflicting fixed cell, and
/// the colored result is relabeled so clique vertex `a` carries its color.
pub fn color_with_fixed(
    changeable: &[usize],
    fixed: &[(usize, u32)],
    adjacency: &[Vec<usize>],
    n_cells: usize,
) -> Vec<u32> {
    let palette: Vec<u32> = fixed.iter().map(|&(_, c)| c).collect::<BTreeSet<_>>().into_iter().collect();
    let s = changeable.len();
    let mut local = vec![usize::MAX; n_cells];
    for (a, &c) in changeable.iter().enumerate() {
        local[c] = a;
    }
    let mut fixed_color = vec![None; n_cells];
    for &(cell, c) in fixed {
        fixed_color[cell] = Some(c);
    }
    let clique_vertex = |c: u32| s + palette.binary_search(&c).expect("palette color");
    let mut edges = Vec::new();
    for (a, &i) in changeable.iter().enumerate() {
        for &j in &adjacency[i] {
            if local[j] != usize::MAX {
                if a < local[j] {
                    edges.push((a, local[j]));
                }
            } else if let Some(c) = fixed_color[j] {
                edges.push((a, clique_vertex(c)));
            }
        }
    }
    for x in 0..palette.len() {
        for y in (x + 1)..palette.len() {
            edges.push((s + x, s + y));
        }
    }
    let h = ColoringGraph::new(s + palette.len(), edges).expect("augmented edges are valid");
    let colors = greedy_color(&h);

    // Bijective relabeling: clique colors to their fixed colors, all other
    // colors in ascending order onto the unused values.
    let mut relabel = std::collections::BTreeMap::new();
    for (x, &c) in palette.iter().enumerate() {
        relabel.insert(colors[s + x], c);
    }
    let reserved: BTreeSet<u32> = palette.iter().copied().collect();
    let mut free = (0u32..).filter(|v| !reserved.contains(v));
    let mut used: Vec<usize> = colors[..s].iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    used.retain(|c| !relabel.contains_key(c));
    for c in used {
        relabel.insert(c, free.next().expect("unbounded"));
    }
    colors[..s].iter().map(|c| relabel[c]).collect()
}

/// Partial-update quotient assignment. `r30` and `q` cover all cells; the
/// entries of fixed cells are their baseline values and are returned
/// unchanged, while changeable cells get fresh quotients that avoid every
/// changeable–changeable and changeable–fixed conflict in their cluster.
pub fn assign_quotients_partial(
    graph: &InterferenceGraph,
    r30: &Mod30Assignment,
    changeable: &[bool],
    q: &[u32],
) -> Result<QuotientAssignment> {
    check_len(graph, r30.len(), "residue assignment")?;
    check_len(graph, changeable.len(), "changeable mask")?;
    check_len(graph, q.len(), "quotients")?;
    let adjacency = graph.conflict_adjacency();
    let groups = clusters(r30.values());
    let colored: Vec<Vec<u32>> = groups
        .par_iter()
        .map(|cells| {
            let s: Vec<usize> = cells.iter().copied().filter(|&c| changeable[c]).collect();
            let fixed: Vec<(usize, u32)> = cells.iter().filter(|&&c| !changeable[c]).map(|&c| (c, q[c])).collect();
            color_with_fixed(&s, &fixed, &adjacency, graph.n())
        })
        .collect();
    let mut out = q.to_vec();
    for (cells, colors) in groups.iter().zip(&colored) {
        let s = cells.iter().filter(|&&c| changeable[c]);
        for (&cell, &c) in s.zip(colors) {
            out[cell] = c;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairOutcome {
    pub q: QuotientAssignment,
    /// Cells whose quotient was moved back into range.
    pub reassigned: usize,
    /// Same-PCI conflicts the re-assignments could not avoid.
    pub residual_conflicts: usize,
}

/// Largest quotient keeping `30·q + r ≤ 1007`.
pub fn max_quotient(r: u8) -> u32 {
    (MAX_PCI - r as u32) / 30
}

/// Moves quotients with `30·q + r > 1007` back into range. Per cluster,
/// violating cells are handled in descending order of their current
/// same-quotient conflict degree (ties by index); each takes the feasible
/// quotient with the fewest conflicts against in-range cells (ties to the
/// smallest quotient) and then counts as in range.
pub fn repair_range(graph: &InterferenceGraph, r30: &Mod30Assignment, q: &[u32]) -> Result<RepairOutcome> {
    check_len(graph, r30.len(), "residue assignment")?;
    check_len(graph, q.len(), "quotients")?;
    let r = r30.values();
    let violating = |i: usize| 30 * q[i] + r[i] as u32 > MAX_PCI;
    if !(0..graph.n()).any(violating) {
        return Ok(RepairOutcome { q: q.to_vec(), reassigned: 0, residual_conflicts: 0 });
    }
    let adjacency = graph.conflict_adjacency();
    let groups = clusters(r);
    let repaired: Vec<Vec<(usize, u32, usize)>> = groups
        .par_iter()
        .map(|cells| {
            let mut bad: Vec<usize> = cells.iter().copied().filter(|&i| violating(i)).collect();
            if bad.is_empty() {
                return Vec::new();
            }
            let degree = |i: usize| {
                adjacency[i].iter().filter(|&&j| r[j] == r[i] && q[j] == q[i]).count()
            };
            bad.sort_by_key(|&i| (std::cmp::Reverse(degree(i)), i));
            let mut current: Vec<Option<u32>> = vec![None; graph.n()];
            for &i in cells {
                if !violating(i) {
                    current[i] = Some(q[i]);
                }
            }
            let mut out = Vec::with_capacity(bad.len());
            for i in bad {
                let top = max_quotient(r[i]);
                let mut counts = vec![0usize; top as usize + 1];
                for &j in &adjacency[i] {
                    if r[j] != r[i] {
                        continue;
                    }
                    if let Some(qj) = current[j] {
                        if qj <= top {
                            counts[qj as usize] += 1;
                        }
                    }
                }
                let (best, &conflicts) = counts
                    .iter()
                    .enumerate()
                    .min_by_key(|&(qv, &c)| (c, qv))
                    .expect("at least quotient 0 is feasible");
                current[i] = Some(best as u32);
                out.push((i, best as u32, conflicts));
            }
            out
        })
        .collect();
    let mut fixed = q.to_vec();
    let mut reassigned = 0;
    let mut residual_conflicts = 0;
    for (i, qv, conflicts) in repaired.into_iter().flatten() {
        fixed[i] = qv;
        reassigned += 1;
        residual_conflicts += conflicts;
    }
    if residual_conflicts > 0 {
        log::warn!("range repair left {residual_conflicts} conflicts");
    }
    Ok(RepairOutcome { q: fixed, reassigned, residual_conflicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn assert_proper(g: &ColoringGraph, colors: &[usize]) {
        for v in 0..g.n() {
            for &u in g.neighbors(v) {
                assert_ne!(colors[u], colors[v]);
            }
        }
    }

    fn graph_with_e1(n: usize, e1: &[(usize, usize)]) -> InterferenceGraph {
        InterferenceGraph::new(DMatrix::zeros(n, n), e1.iter().copied(), None).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let empty = ColoringGraph::new(4, []).unwrap();
        assert_eq!(greedy_color(&empty), vec![0; 4]);
        let triangle = ColoringGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = greedy_color(&triangle);
        assert_proper(&triangle, &c);
        assert_eq!(c.iter().collect::<BTreeSet<_>>().len(), 3);
        let star = ColoringGraph::new(6, (1..6).map(|l| (0, l))).unwrap();
        assert_eq!(greedy_color(&star), vec![0, 1, 1, 1, 1, 1]);
        assert!(ColoringGraph::new(2, [(1, 1)]).is_err());
    }

    #[test]
    fn singleton_clusters_get_quotient_zero() {
        let g = graph_with_e1(3, &[(0, 1), (1, 2)]);
        let r30 = Mod30Assignment::new(vec![0, 1, 2]).unwrap();
        assert_eq!(assign_quotients(&g, &r30).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn shared_cluster_neighbors_differ() {
        let g = graph_with_e1(2, &[(0, 1)]);
        let r30 = Mod30Assignment::new(vec![4, 4]).unwrap();
        let q = assign_quotients(&g, &r30).unwrap();
        assert_ne!(q[0], q[1]);
    }

    #[test]
    fn one_changeable_cell_avoids_fixed_colors() {
        // Cell 0 changeable; cells 1, 2 fixed with quotients 0, 1.
        let g = graph_with_e1(3, &[(0, 1), (0, 2)]);
        let r30 = Mod30Assignment::new(vec![7, 7, 7]).unwrap();
        let q = assign_quotients_partial(&g, &r30, &[true, false, false], &[9, 0, 1]).unwrap();
        assert_eq!(q, vec![2, 0, 1]);
    }

    #[test]
    fn partial_without_fixed_cells_matches_full() {
        let g = graph_with_e1(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        let r30 = Mod30Assignment::new(vec![3; 5]).unwrap();
        let full = assign_quotients(&g, &r30).unwrap();
        let partial = assign_quotients_partial(&g, &r30, &[true; 5], &[0; 5]).unwrap();
        assert_eq!(full, partial);
    }

    #[test]
    fn repair_is_identity_without_violations() {
        let g = graph_with_e1(2, &[(0, 1)]);
        let r30 = Mod30Assignment::new(vec![5, 5]).unwrap();
        let out = repair_range(&g, &r30, &[0, 1]).unwrap();
        assert_eq!(out.q, vec![0, 1]);
        assert_eq!(out.reassigned, 0);
    }

    #[test]
    fn repair_picks_free_quotient() {
        let g = graph_with_e1(3, &[(0, 1), (0, 2)]);
        let r30 = Mod30Assignment::new(vec![5, 5, 5]).unwrap();
        let out = repair_range(&g, &r30, &[40, 0, 1]).unwrap();
        assert_eq!(out.q, vec![2, 0, 1]);
        assert_eq!((out.reassigned, out.residual_conflicts), (1, 0));
    }

    #[test]
    fn repair_on_oversized_clique_minimizes_conflicts() {
        // 35 mutually conflicting cells with r = 17: only quotients 0..=33 fit.
        let n = 35;
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let g = graph_with_e1(n, &edges);
        let r30 = Mod30Assignment::new(vec![17; n]).unwrap();
        let q0 = assign_quotients(&g, &r30).unwrap();
        assert_eq!(*q0.iter().max().unwrap(), 34);
        let out = repair_range(&g, &r30, &q0).unwrap();
        assert_eq!(out.reassigned, 1);
        // Every feasible quotient already holds exactly one clique member.
        let oracle = (0..=33u32)
            .map(|qv| (0..n).filter(|&j| q0[j] != 34 && q0[j] == qv).count())
            .min()
            .unwrap();
        assert_eq!(out.residual_conflicts, oracle);
        assert_eq!(oracle, 1);
        assert!(out.q.iter().all(|&qv| 30 * qv + 17 <= MAX_PCI));
    }
}
