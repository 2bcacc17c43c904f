//! End-to-end PCI assignment.
//!
//! 1. Min-3-Partition of all cells gives `PCI mod 3`.
//! 2. Each mod-3 class is split by Min-10-Partition into `PCI mod 10`.
//! 3. The two residues merge into `PCI mod 30`.
//! 4. Quotients come from coloring each mod-30 cluster's conflict graph.
//! 5. Quotients that push the PCI past 1007 are repaired.
//!
//! Stages 2 and 4 run their independent parts on a rayon pool. Each part
//! draws its randomness from a seed derived from the master seed and the
//! part's identity, so the result does not depend on the thread count.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coloring::{assign_quotients, assign_quotients_partial, greedy_color, repair_range, ColoringGraph};
use crate::crt::{crt_merge, Mod30Assignment};
use crate::error::{PciError, Result};
use crate::evaluate::{count_conflicts, evaluate_plan, EvalReport};
use crate::graph::{ChangeableSet, InterferenceGraph, PciPlan};
use crate::local_search::{refine_single, refine_subset, LabelAssignment};
use crate::seed::derive_seed;
use crate::simplex::{
    solve_min_k_partition, solve_partial, solve_pgp_variant, DescentMethod, SolveTrace, SolverConfig,
};

const STAGE_MOD3: u64 = 1;
const STAGE_MOD10: u64 = 2;

/// How residues are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Penalized mirror descent followed by pairwise local search.
    GpPmd,
    /// Penalty continuation with projected-gradient inner steps, then local search.
    GpPgp,
    /// Random labels followed by local search.
    GpLs,
    /// Greedy coloring of the whole conflict graph; color `c` becomes PCI `c`.
    Ggc,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::GpPmd, Strategy::GpPgp, Strategy::GpLs, Strategy::Ggc];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::GpPmd => "gp-pmd",
            Strategy::GpPgp => "gp-pgp",
            Strategy::GpLs => "gp-ls",
            Strategy::Ggc => "ggc",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = PciError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PciError::Config(format!("unknown method {s:?} (expected gp-pmd, gp-pgp, gp-ls or ggc)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub strategy: Strategy,
    /// Worker count for the parallel stages; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { strategy: Strategy::GpPmd, threads: None }
    }
}

/// Solver trace of one partition problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTrace {
    /// 1 for the mod-3 split, 2 for the mod-10 splits.
    pub stage: u8,
    /// Mod-3 class being split (stage 2 only).
    pub partition: Option<u8>,
    pub trace: SolveTrace,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub mod3: f64,
    pub mod10: f64,
    pub crt: f64,
    pub quotients: f64,
    pub repair: f64,
    pub total: f64,
}

/// Intermediate per-cell values of every stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageData {
    pub r3: Vec<u8>,
    pub r10: Vec<u8>,
    pub r30: Vec<u8>,
    /// Quotients from coloring, before range repair.
    pub q_colored: Vec<u32>,
    pub q: Vec<u32>,
    pub repaired_cells: usize,
    pub residual_conflicts: usize,
    /// Collisions and confusions of `30·q_colored + r30`, restricted to pairs
    /// touching a changeable cell in partial mode.
    pub pre_repair_collisions: usize,
    pub pre_repair_confusions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineResult {
    pub method: Strategy,
    #[serde(flatten)]
    pub plan: PciPlan,
    pub report: EvalReport,
    #[serde(skip)]
    pub traces: Vec<StageTrace>,
    pub timings: StageTimings,
    pub stages: StageData,
    pub warnings: Vec<String>,
    /// Some solver or local search stopped at an iteration cap.
    pub capped: bool,
}

impl PipelineResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// All stage traces as one CSV with `stage,partition` leading columns.
    pub fn traces_csv(&self) -> String {
        let method = self.traces.first().map_or(DescentMethod::Mirror, |t| t.trace.method);
        let mut out = format!("stage,partition,{}\n", SolveTrace::new(method).csv_header());
        for t in &self.traces {
            let part = t.partition.map(|p| p.to_string()).unwrap_or_default();
            for row in t.trace.csv_rows() {
                let _ = writeln!(out, "{},{},{}", t.stage, part, row);
            }
        }
        out
    }
}

/// Labels of one partition problem plus its solver trace.
#[derive(Debug, Clone)]
pub struct PartitionOutcome {
    pub labels: Vec<usize>,
    pub trace: Option<SolveTrace>,
    pub capped: bool,
}

fn descent_method(strategy: Strategy) -> Result<DescentMethod> {
    match strategy {
        Strategy::GpPmd => Ok(DescentMethod::Mirror),
        Strategy::GpPgp => Ok(DescentMethod::Projected),
        _ => Err(PciError::Config(format!("{strategy} has no continuous solver"))),
    }
}

/// Min-k-Partition of `weights` with the given strategy's solver, refined
/// by pairwise local search.
pub fn partition_cells(
    weights: &DMatrix<f64>,
    k: usize,
    strategy: Strategy,
    config: &SolverConfig,
    seed: u64,
) -> Result<PartitionOutcome> {
    let n = weights.nrows();
    let config = config.with_seed(seed);
    let (labels, trace, solve_capped) = match strategy {
        Strategy::GpPmd => {
            let out = solve_min_k_partition(weights, k, &config)?;
            (out.labels, Some(out.trace), out.capped)
        }
        Strategy::GpPgp => {
            let out = solve_pgp_variant(weights, k, &config)?;
            (out.labels, Some(out.trace), out.capped)
        }
        Strategy::GpLs => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ((0..n).map(|_| rng.gen_range(0..k)).collect(), None, false)
        }
        Strategy::Ggc => return Err(PciError::Config("ggc does not partition".into())),
    };
    let refined = refine_subset(weights, &LabelAssignment::new(labels, k)?, None)?;
    Ok(PartitionOutcome {
        labels: refined.labels.into_labels(),
        trace,
        capped: solve_capped || refined.capped,
    })
}

/// Like [`partition_cells`] but only cells with `changeable[i]` move; the
/// others keep `labels[i]`. Returns labels for all cells.
pub fn partition_cells_partial(
    weights: &DMatrix<f64>,
    k: usize,
    changeable: &[bool],
    labels: &[usize],
    strategy: Strategy,
    config: &SolverConfig,
    seed: u64,
) -> Result<PartitionOutcome> {
    let s: Vec<usize> = (0..labels.len()).filter(|&i| changeable[i]).collect();
    let mut full = labels.to_vec();
    if s.is_empty() {
        return Ok(PartitionOutcome { labels: full, trace: None, capped: false });
    }
    let config = config.with_seed(seed);
    let (trace, solve_capped) = match strategy {
        Strategy::GpLs => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for &i in &s {
                full[i] = rng.gen_range(0..k);
            }
            (None, false)
        }
        _ => {
            let out = solve_partial(weights, k, changeable, labels, &config, descent_method(strategy)?)?;
            for (&i, &l) in s.iter().zip(&out.labels) {
                full[i] = l;
            }
            (Some(out.trace), out.capped)
        }
    };
    let start = LabelAssignment::new(full, k)?;
    // With a single movable cell there are no pairs to try.
    let refined = if s.len() >= 2 {
        refine_subset(weights, &start, Some(changeable))?
    } else {
        refine_single(weights, &start, Some(changeable))?
    };
    Ok(PartitionOutcome {
        labels: refined.labels.into_labels(),
        trace,
        capped: solve_capped || refined.capped,
    })
}

fn stage_seed(config: &SolverConfig, stage: u64, partition: u64) -> u64 {
    derive_seed(&[config.seed, stage, partition])
}

/// Stage 1: `PCI mod 3` for every cell.
pub fn stage_mod3(graph: &InterferenceGraph, strategy: Strategy, config: &SolverConfig) -> Result<PartitionOutcome> {
    partition_cells(graph.weights(), 3, strategy, config, stage_seed(config, STAGE_MOD3, 0))
}

/// Stage 2 output: `PCI mod 10` per cell and one trace per solved class.
#[derive(Debug, Clone)]
pub struct Mod10Outcome {
    pub r10: Vec<u8>,
    pub traces: Vec<StageTrace>,
    pub capped: bool,
}

/// Stage 2: splits each mod-3 class independently. Weights are read only
/// through `weight(i, j)` and only for `i`, `j` in the same class.
pub fn stage_mod10(
    r3: &[u8],
    weight: &(dyn Fn(usize, usize) -> f64 + Sync),
    strategy: Strategy,
    config: &SolverConfig,
) -> Result<Mod10Outcome> {
    stage_mod10_inner(r3, weight, None, strategy, config)
}

/// Partial stage 2: in each class only changeable cells move, the others
/// keep `baseline_r10`.
pub fn stage_mod10_partial(
    r3: &[u8],
    weight: &(dyn Fn(usize, usize) -> f64 + Sync),
    changeable: &[bool],
    baseline_r10: &[u8],
    strategy: Strategy,
    config: &SolverConfig,
) -> Result<Mod10Outcome> {
    stage_mod10_inner(r3, weight, Some((changeable, baseline_r10)), strategy, config)
}

fn stage_mod10_inner(
    r3: &[u8],
    weight: &(dyn Fn(usize, usize) -> f64 + Sync),
    partial: Option<(&[bool], &[u8])>,
    strategy: Strategy,
    config: &SolverConfig,
) -> Result<Mod10Outcome> {
    let n = r3.len();
    let solved: Vec<Option<(Vec<usize>, PartitionOutcome)>> = (0..3u8)
        .into_par_iter()
        .map(|class| {
            let cells: Vec<usize> = (0..n).filter(|&i| r3[i] == class).collect();
            if cells.is_empty() {
                return Ok(None);
            }
            let w = DMatrix::from_fn(cells.len(), cells.len(), |a, b| {
                if a == b {
                    0.0
                } else {
                    weight(cells[a], cells[b])
                }
            });
            let seed = stage_seed(config, STAGE_MOD10, class as u64);
            let out = match partial {
                None => partition_cells(&w, 10, strategy, config, seed)?,
                Some((mask, base)) => {
                    let local_mask: Vec<bool> = cells.iter().map(|&i| mask[i]).collect();
                    let local_labels: Vec<usize> =
                        cells.iter().map(|&i| if mask[i] { 0 } else { base[i] as usize }).collect();
                    partition_cells_partial(&w, 10, &local_mask, &local_labels, strategy, config, seed)?
                }
            };
            Ok(Some((cells, out)))
        })
        .collect::<Result<_>>()?;
    let mut r10 = vec![0u8; n];
    let mut traces = Vec::new();
    let mut capped = false;
    for (class, entry) in solved.into_iter().enumerate() {
        let Some((cells, out)) = entry else { continue };
        for (&cell, &l) in cells.iter().zip(&out.labels) {
            r10[cell] = l as u8;
        }
        capped |= out.capped;
        if let Some(trace) = out.trace {
            traces.push(StageTrace { stage: 2, partition: Some(class as u8), trace });
        }
    }
    Ok(Mod10Outcome { r10, traces, capped })
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => job(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| PciError::Config(format!("thread pool: {e}")))?
            .install(job),
    }
}

fn secs(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Full PCI assignment with the default strategy.
pub fn assign_pci(graph: &InterferenceGraph, config: &SolverConfig) -> Result<PipelineResult> {
    assign_pci_with(graph, config, &PipelineOptions::default())
}

pub fn assign_pci_with(
    graph: &InterferenceGraph,
    config: &SolverConfig,
    options: &PipelineOptions,
) -> Result<PipelineResult> {
    config.validate()?;
    with_pool(options.threads, || match options.strategy {
        Strategy::Ggc => run_ggc(graph),
        strategy => run_full(graph, config, strategy),
    })
}

fn run_full(graph: &InterferenceGraph, config: &SolverConfig, strategy: Strategy) -> Result<PipelineResult> {
    let t_all = Instant::now();
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();

    let t = Instant::now();
    let s1 = stage_mod3(graph, strategy, config)?;
    timings.mod3 = secs(t);
    let r3: Vec<u8> = s1.labels.iter().map(|&l| l as u8).collect();
    if s1.capped {
        warnings.push("mod-3 stage stopped at an iteration cap".to_string());
    }
    let mut traces: Vec<StageTrace> =
        s1.trace.into_iter().map(|trace| StageTrace { stage: 1, partition: None, trace }).collect();

    let t = Instant::now();
    let w = graph.weights();
    let s2 = stage_mod10(&r3, &|i, j| w[(i, j)], strategy, config)?;
    timings.mod10 = secs(t);
    if s2.capped {
        warnings.push("mod-10 stage stopped at an iteration cap".to_string());
    }
    traces.extend(s2.traces);

    let t = Instant::now();
    let r30 = crt_merge(&r3, &s2.r10)?;
    timings.crt = secs(t);

    let t = Instant::now();
    let q_colored = assign_quotients(graph, &r30)?;
    timings.quotients = secs(t);

    finish(graph, strategy, r3, s2.r10, r30, q_colored, None, traces, timings, t_all, warnings, s1.capped || s2.capped)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    graph: &InterferenceGraph,
    method: Strategy,
    r3: Vec<u8>,
    r10: Vec<u8>,
    r30: Mod30Assignment,
    q_colored: Vec<u32>,
    touching: Option<&[bool]>,
    traces: Vec<StageTrace>,
    mut timings: StageTimings,
    t_all: Instant,
    mut warnings: Vec<String>,
    capped: bool,
) -> Result<PipelineResult> {
    let raw: Vec<u32> = q_colored.iter().zip(r30.values()).map(|(&q, &r)| 30 * q + r as u32).collect();
    let (pre_repair_collisions, pre_repair_confusions) = count_conflicts(graph, &raw, touching);

    let t = Instant::now();
    let repair = repair_range(graph, &r30, &q_colored)?;
    timings.repair = secs(t);
    if repair.residual_conflicts > 0 {
        warnings.push(format!(
            "range repair re-assigned {} cells and left {} conflicts",
            repair.reassigned, repair.residual_conflicts
        ));
    }
    let plan = PciPlan::compose(&repair.q, r30.values())?;
    let report = evaluate_plan(graph, &plan)?;
    timings.total = secs(t_all);
    Ok(PipelineResult {
        method,
        plan,
        report,
        traces,
        timings,
        stages: StageData {
            r3,
            r10,
            r30: r30.into_values(),
            q_colored,
            q: repair.q,
            repaired_cells: repair.reassigned,
            residual_conflicts: repair.residual_conflicts,
            pre_repair_collisions,
            pre_repair_confusions,
        },
        warnings,
        capped,
    })
}

/// Coloring-only baseline: greedy coloring of the full conflict graph, color
/// `c` read as PCI `c` (then range-repaired).
fn run_ggc(graph: &InterferenceGraph) -> Result<PipelineResult> {
    let t_all = Instant::now();
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let g = ColoringGraph::new(graph.n(), graph.conflict_pairs())?;
    let colors = greedy_color(&g);
    timings.quotients = secs(t);
    let r30 = Mod30Assignment::new(colors.iter().map(|&c| (c % 30) as u8).collect())?;
    let q: Vec<u32> = colors.iter().map(|&c| (c / 30) as u32).collect();
    let r3 = r30.values().iter().map(|&r| r % 3).collect();
    let r10 = r30.values().iter().map(|&r| r % 10).collect();
    finish(graph, Strategy::Ggc, r3, r10, r30, q, None, Vec::new(), timings, t_all, Vec::new(), false)
}

/// Re-plans only the changeable cells; every other cell keeps its baseline
/// PCI exactly.
pub fn assign_pci_partial(
    graph: &InterferenceGraph,
    changeable: &ChangeableSet,
    config: &SolverConfig,
) -> Result<PipelineResult> {
    assign_pci_partial_with(graph, changeable, config, &PipelineOptions::default())
}

pub fn assign_pci_partial_with(
    graph: &InterferenceGraph,
    changeable: &ChangeableSet,
    config: &SolverConfig,
    options: &PipelineOptions,
) -> Result<PipelineResult> {
    config.validate()?;
    if changeable.n() != graph.n() {
        return Err(PciError::Dimension(format!(
            "changeable set covers {} cells, graph has {}",
            changeable.n(),
            graph.n()
        )));
    }
    let mask = changeable.mask();
    if mask.iter().all(|&c| c) {
        return assign_pci_with(graph, config, options);
    }
    if options.strategy == Strategy::Ggc {
        return Err(PciError::Config("ggc has no partial mode".into()));
    }
    with_pool(options.threads, || run_partial(graph, changeable, config, options.strategy))
}

fn run_partial(
    graph: &InterferenceGraph,
    changeable: &ChangeableSet,
    config: &SolverConfig,
    strategy: Strategy,
) -> Result<PipelineResult> {
    let t_all = Instant::now();
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();
    let mask = changeable.mask();
    let base = changeable.baseline().decompose();

    let t = Instant::now();
    let base_r3: Vec<usize> = base.r3.iter().map(|&r| r as usize).collect();
    let seed = stage_seed(config, STAGE_MOD3, 0);
    let s1 = partition_cells_partial(graph.weights(), 3, mask, &base_r3, strategy, config, seed)?;
    timings.mod3 = secs(t);
    let r3: Vec<u8> = s1.labels.iter().map(|&l| l as u8).collect();
    let mut traces: Vec<StageTrace> =
        s1.trace.into_iter().map(|trace| StageTrace { stage: 1, partition: None, trace }).collect();

    let t = Instant::now();
    let w = graph.weights();
    let s2 = stage_mod10_partial(&r3, &|i, j| w[(i, j)], mask, &base.r10, strategy, config)?;
    timings.mod10 = secs(t);
    traces.extend(s2.traces);
    for (stage, capped) in [("mod-3", s1.capped), ("mod-10", s2.capped)] {
        if capped {
            warnings.push(format!("{stage} stage stopped at an iteration cap"));
        }
    }

    let t = Instant::now();
    let r30 = crt_merge(&r3, &s2.r10)?;
    timings.crt = secs(t);

    let t = Instant::now();
    let q_colored = assign_quotients_partial(graph, &r30, mask, &base.q)?;
    timings.quotients = secs(t);

    let capped = s1.capped || s2.capped;
    finish(graph, strategy, r3, s2.r10, r30, q_colored, Some(mask), traces, timings, t_all, warnings, capped)
}
