//! Synthetic instances and structural graph statistics.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PciError, Result};
use crate::graph::{CellPair, InterferenceGraph};

/// Weight used when two points (nearly) coincide.
pub const MAX_RGG_WEIGHT: f64 = 1e12;
const COINCIDENT: f64 = 1e-12;

/// Time budget of the exact maximum-clique search.
pub const CLIQUE_TIME_LIMIT: Duration = Duration::from_secs(10);

/// Random geometric graph: `n` uniform points in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RggConfig {
    pub n: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Dense symmetric weights from i.i.d. uniform `[0, b]` entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWConfig {
    pub n: usize,
    pub b: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RggInstance {
    pub graph: InterferenceGraph,
    pub points: Vec<(f64, f64)>,
    /// Pairs whose weight hit [`MAX_RGG_WEIGHT`].
    pub clamped: usize,
}

/// Neighbors are pairs within `radius` (inclusive), weighted `1/distance`.
pub fn generate_rgg(cfg: &RggConfig) -> Result<RggInstance> {
    if cfg.n == 0 {
        return Err(PciError::Config("n must be at least 1".into()));
    }
    if !(cfg.radius > 0.0 && cfg.radius <= std::f64::consts::SQRT_2) {
        return Err(PciError::Config(format!("radius {} outside (0, √2]", cfg.radius)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<(f64, f64)> = (0..cfg.n).map(|_| (rng.gen(), rng.gen())).collect();
    rgg_from_points(points, cfg.radius)
}

/// The RGG construction for given coordinates.
pub fn rgg_from_points(points: Vec<(f64, f64)>, radius: f64) -> Result<RggInstance> {
    let n = points.len();
    let mut w = DMatrix::zeros(n, n);
    let mut e1 = Vec::new();
    let mut clamped = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(points[i], points[j]);
            if d <= radius {
                let weight = if d < COINCIDENT {
                    clamped += 1;
                    MAX_RGG_WEIGHT
                } else {
                    (1.0 / d).min(MAX_RGG_WEIGHT)
                };
                w[(i, j)] = weight;
                w[(j, i)] = weight;
                e1.push((i, j));
            }
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} coincident point pairs, weight clamped to {MAX_RGG_WEIGHT:e}");
    }
    let graph = InterferenceGraph::new(w, e1, None)?;
    Ok(RggInstance { graph, points, clamped })
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// `W = (W₀ + W₀ᵀ)/2` with `W₀` uniform on `[0, b]`, zero diagonal and no
/// neighbor relation.
pub fn generate_random_w(cfg: &SyntheticWConfig) -> Result<InterferenceGraph> {
    if !(cfg.b > 0.0 && cfg.b.is_finite()) {
        return Err(PciError::Config("b must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w0 = DMatrix::from_fn(cfg.n, cfg.n, |_, _| rng.gen::<f64>() * cfg.b);
    let mut w = (&w0 + w0.transpose()) * 0.5;
    w.fill_diagonal(0.0);
    InterferenceGraph::from_weights(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    /// `|E₁| / (n(n−1)/2)`.
    pub density: f64,
    /// Largest clique of `E₁`.
    pub max_clique: usize,
    /// False when the clique search ran out of time and `max_clique` is only
    /// a greedy lower bound.
    pub max_clique_exact: bool,
    /// `2|E₁| / n`.
    pub avg_degree: f64,
    /// Mean local clustering over `E₁`.
    pub clustering_coef: f64,
    /// `2|E₁ ∪ E₂| / n`: mean number of cells each cell must differ from.
    pub conflict_avg_degree: f64,
    /// Mean local clustering over `E₁ ∪ E₂`.
    pub conflict_clustering_coef: f64,
}

pub fn compute_stats(graph: &InterferenceGraph) -> GraphStats {
    compute_stats_with_limit(graph, CLIQUE_TIME_LIMIT)
}

pub fn compute_stats_with_limit(graph: &InterferenceGraph, clique_limit: Duration) -> GraphStats {
    let n = graph.n();
    let adj = graph.neighbor_adjacency();
    let conflict = graph.conflict_adjacency();
    let pairs = n * n.saturating_sub(1) / 2;
    let (max_clique, max_clique_exact) = max_clique(&adj, clique_limit);
    GraphStats {
        density: if pairs == 0 { 0.0 } else { graph.neighbors().len() as f64 / pairs as f64 },
        max_clique,
        max_clique_exact,
        avg_degree: mean_degree(&adj),
        clustering_coef: average_clustering(&adj),
        conflict_avg_degree: mean_degree(&conflict),
        conflict_clustering_coef: average_clustering(&conflict),
    }
}

fn mean_degree(adj: &[Vec<usize>]) -> f64 {
    if adj.is_empty() {
        return 0.0;
    }
    adj.iter().map(Vec::len).sum::<usize>() as f64 / adj.len() as f64
}

/// Mean over vertices of `triangles(v) / C(deg v, 2)`; vertices of degree
/// below 2 contribute 0. Adjacency lists must be sorted.
pub fn average_clustering(adj: &[Vec<usize>]) -> f64 {
    if adj.is_empty() {
        return 0.0;
    }
    let total: f64 = adj
        .iter()
        .map(|nb| {
            let d = nb.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (a, &u) in nb.iter().enumerate() {
                links += nb[a + 1..].iter().filter(|v| adj[u].binary_search(v).is_ok()).count();
            }
            links as f64 / (d * (d - 1) / 2) as f64
        })
        .sum();
    total / adj.len() as f64
}

/// Exact maximum clique by branch and bound (greedy-coloring bound) within
/// `limit`; on timeout returns the best clique found so far and `false`.
pub fn max_clique(adj: &[Vec<usize>], limit: Duration) -> (usize, bool) {
    let n = adj.len();
    if n == 0 {
        return (0, true);
    }
    let words = n.div_ceil(64);
    let rows: Vec<Vec<u64>> = adj
        .iter()
        .map(|nb| {
            let mut bits = vec![0u64; words];
            for &v in nb {
                bits[v / 64] |= 1 << (v % 64);
            }
            bits
        })
        .collect();
    let mut search = CliqueSearch {
        rows,
        best: greedy_clique(adj),
        deadline: Instant::now() + limit,
        timed_out: false,
    };
    // Order vertices by descending degree so large cliques are found early.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(adj[v].len()), v));
    search.expand(0, order);
    (search.best, !search.timed_out)
}

fn greedy_clique(adj: &[Vec<usize>]) -> usize {
    let mut best = 0;
    for start in 0..adj.len() {
        let mut clique = vec![start];
        let mut cands: Vec<usize> = adj[start].clone();
        cands.sort_by_key(|&v| (std::cmp::Reverse(adj[v].len()), v));
        for v in cands {
            if clique.iter().all(|&c| adj[v].binary_search(&c).is_ok()) {
                clique.push(v);
            }
        }
        best = best.max(clique.len());
    }
    best
}

struct CliqueSearch {
    rows: Vec<Vec<u64>>,
    best: usize,
    deadline: Instant,
    timed_out: bool,
}

impl CliqueSearch {
    fn adjacent(&self, u: usize, v: usize) -> bool {
        self.rows[u][v / 64] >> (v % 64) & 1 == 1
    }

    /// Greedy coloring of `cands` gives, per position, an upper bound on the
    /// clique size reachable using that vertex and the ones before it.
    fn color_bounds(&self, cands: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &v in cands {
            match classes.iter_mut().find(|c| c.iter().all(|&u| !self.adjacent(u, v))) {
                Some(class) => class.push(v),
                None => classes.push(vec![v]),
            }
        }
        let mut order = Vec::with_capacity(cands.len());
        let mut bounds = Vec::with_capacity(cands.len());
        for (c, class) in classes.iter().enumerate() {
            for &v in class {
                order.push(v);
                bounds.push(c + 1);
            }
        }
        (order, bounds)
    }

    fn expand(&mut self, size: usize, cands: Vec<usize>) {
        if Instant::now() > self.deadline {
            self.timed_out = true;
            return;
        }
        let (order, bounds) = self.color_bounds(&cands);
        let mut remaining = order.clone();
        for idx in (0..order.len()).rev() {
            if size + bounds[idx] <= self.best || self.timed_out {
                return;
            }
            let v = order[idx];
            remaining.pop();
            let next: Vec<usize> = remaining.iter().copied().filter(|&u| self.adjacent(v, u)).collect();
            if next.is_empty() {
                self.best = self.best.max(size + 1);
            } else {
                self.expand(size + 1, next);
            }
        }
    }
}

/// Pairs of `E₁` whose stored coordinates are within `radius`, for checking
/// the edge rule independently of the generator.
pub fn pairs_within(points: &[(f64, f64)], radius: f64) -> Vec<CellPair> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if distance(points[i], points[j]) <= radius {
                out.push((i, j));
            }
        }
    }
    out
}
