use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    half_sq_distance, kl_divergence, md_step, orthogonality_criterion, pgp_step, step_size,
    OuterRecord, PenalizedProblem, SimplexAssignment, SolveTrace, SolverConfig,
};
use crate::error::{PciError, Result};

/// Inner-loop update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DescentMethod {
    /// Entropic mirror descent, stopped on `KL(X⁺, X) ≤ ε₁`.
    Mirror,
    /// Gradient step plus Euclidean projection, stopped on `½‖X⁺ − X‖² ≤ ε₁`.
    Projected,
}

/// View of one inner iteration `X → X⁺` handed to observers.
#[derive(Debug)]
pub struct InnerStep<'a> {
    pub outer_iter: usize,
    /// Inner index `m` of the iterate being updated.
    pub m: usize,
    pub rho: f64,
    pub step: f64,
    pub smoothness: f64,
    pub previous: &'a SimplexAssignment,
    pub next: &'a SimplexAssignment,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub x: SimplexAssignment,
    pub iterations: usize,
    pub gap: f64,
    pub capped: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// One label per column, in `0..k`.
    pub labels: Vec<usize>,
    /// Final continuous iterate before rounding.
    pub x: SimplexAssignment,
    pub trace: SolveTrace,
    /// Set when an inner or outer iteration cap stopped the solve.
    pub capped: bool,
}

/// Mirror-descent inner loop at fixed `ρ` with step `1/(L + m + 1)`.
pub fn run_inner(
    problem: &PenalizedProblem<'_>,
    x0: &SimplexAssignment,
    rho: f64,
    config: &SolverConfig,
) -> Result<InnerOutcome> {
    run_inner_observed(problem, x0.clone(), rho, config, DescentMethod::Mirror, 0, &mut |_| {})
}

pub fn run_inner_observed(
    problem: &PenalizedProblem<'_>,
    x0: SimplexAssignment,
    rho: f64,
    config: &SolverConfig,
    method: DescentMethod,
    outer_iter: usize,
    observer: &mut dyn FnMut(&InnerStep<'_>),
) -> Result<InnerOutcome> {
    let smoothness = problem.smoothness(rho);
    let mut x = x0;
    let mut gap = f64::INFINITY;
    for m in 0..config.max_inner {
        let grad = problem.gradient(&x, rho)?;
        let step = step_size(m, smoothness);
        let next = match method {
            DescentMethod::Mirror => md_step(&x, &grad, step)?,
            DescentMethod::Projected => pgp_step(&x, &grad, step)?,
        };
        gap = match method {
            DescentMethod::Mirror => kl_divergence(&next, &x)?,
            DescentMethod::Projected => half_sq_distance(&next, &x)?,
        };
        observer(&InnerStep {
            outer_iter,
            m,
            rho,
            step,
            smoothness,
            previous: &x,
            next: &next,
            gap,
        });
        x = next;
        if gap <= config.eps1 {
            return Ok(InnerOutcome { x, iterations: m + 1, gap, capped: false });
        }
    }
    Ok(InnerOutcome {
        x,
        iterations: config.max_inner,
        gap,
        capped: true,
    })
}

/// Penalty continuation from a given starting point: run the inner loop,
/// grow `ρ` by `γ`, and stop once the rows of `X` are orthogonal to within
/// `ε₂`. The result is rounded column-wise to the largest entry.
pub fn solve_from(
    problem: &PenalizedProblem<'_>,
    x0: SimplexAssignment,
    config: &SolverConfig,
    method: DescentMethod,
    observer: &mut dyn FnMut(&InnerStep<'_>),
) -> Result<SolveOutcome> {
    config.validate()?;
    if x0.n() != problem.n() {
        return Err(PciError::Dimension(format!(
            "start point has {} columns, problem has {} cells",
            x0.n(),
            problem.n()
        )));
    }
    let mut trace = SolveTrace::new(method);
    let mut rho = config.rho0;
    let mut x = x0;
    let mut capped = false;
    for outer_iter in 0..config.max_outer {
        let inner = run_inner_observed(problem, x, rho, config, method, outer_iter, observer)?;
        x = inner.x;
        capped |= inner.capped;
        let ortho = orthogonality_criterion(&x);
        trace.records.push(OuterRecord {
            outer_iter,
            rho,
            inner_iters: inner.iterations,
            objective: problem.objective(&x, rho)?,
            gap: inner.gap,
            ortho_criterion: ortho,
            inner_capped: inner.capped,
        });
        rho *= config.gamma;
        if ortho <= config.eps2 {
            return Ok(SolveOutcome { labels: x.round_labels(), x, trace, capped });
        }
    }
    log::warn!(
        "penalty continuation hit max_outer = {} before the orthogonality criterion was met",
        config.max_outer
    );
    Ok(SolveOutcome {
        labels: x.round_labels(),
        x,
        trace,
        capped: true,
    })
}

fn solve_seeded(
    problem: &PenalizedProblem<'_>,
    k: usize,
    config: &SolverConfig,
    method: DescentMethod,
) -> Result<SolveOutcome> {
    solve_observed(problem, k, config, method, &mut |_| {})
}

/// Seeded solve that reports every inner step to `observer`.
pub fn solve_observed(
    problem: &PenalizedProblem<'_>,
    k: usize,
    config: &SolverConfig,
    method: DescentMethod,
    observer: &mut dyn FnMut(&InnerStep<'_>),
) -> Result<SolveOutcome> {
    config.validate()?;
    let n = problem.n();
    if k == 0 {
        return Err(PciError::Config("k must be at least 1".into()));
    }
    // A single label, or a lone cell with nothing pulling on it, leaves
    // nothing to decide.
    if k == 1 || n == 0 || (n == 1 && !problem.has_linear_term()) {
        let x = SimplexAssignment::one_hot(&vec![0; n], k)?;
        let mut trace = SolveTrace::new(method);
        trace.records.push(OuterRecord {
            outer_iter: 0,
            rho: config.rho0,
            inner_iters: 0,
            objective: problem.objective(&x, config.rho0)?,
            gap: 0.0,
            ortho_criterion: orthogonality_criterion(&x),
            inner_capped: false,
        });
        return Ok(SolveOutcome { labels: vec![0; n], x, trace, capped: false });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x0 = SimplexAssignment::random_interior(k, n, &mut rng);
    solve_from(problem, x0, config, method, observer)
}

/// Min-k-Partition of the cells of `weights` by penalized mirror descent,
/// from a random interior start drawn with `config.seed`.
pub fn solve_min_k_partition(weights: &DMatrix<f64>, k: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    check_square(weights)?;
    solve_seeded(&PenalizedProblem::new(weights), k, config, DescentMethod::Mirror)
}

/// Same continuation, with projected gradient steps in the inner loop.
pub fn solve_pgp_variant(weights: &DMatrix<f64>, k: usize, config: &SolverConfig) -> Result<SolveOutcome> {
    check_square(weights)?;
    solve_seeded(&PenalizedProblem::new(weights), k, config, DescentMethod::Projected)
}

/// Min-k-Partition over the cells with `changeable[i] == true`, the other
/// cells keeping `labels[i]`. The objective is
/// `Tr(X_S(W_SS − ρ/2·I)X_Sᵀ) + 2·Tr(X_S W_SU X_Uᵀ) + |S|ρ/2`.
/// Returned labels are for the changeable cells in ascending index order.
pub fn solve_partial(
    weights: &DMatrix<f64>,
    k: usize,
    changeable: &[bool],
    labels: &[usize],
    config: &SolverConfig,
    method: DescentMethod,
) -> Result<SolveOutcome> {
    check_square(weights)?;
    let n = weights.nrows();
    if changeable.len() != n || labels.len() != n {
        return Err(PciError::Dimension("mask and labels must cover every cell".into()));
    }
    let s: Vec<usize> = (0..n).filter(|&i| changeable[i]).collect();
    let u: Vec<usize> = (0..n).filter(|&i| !changeable[i]).collect();
    let w_ss = DMatrix::from_fn(s.len(), s.len(), |a, b| weights[(s[a], s[b])]);
    if u.is_empty() {
        return solve_seeded(&PenalizedProblem::new(&w_ss), k, config, method);
    }
    let fixed: Vec<usize> = u.iter().map(|&i| labels[i]).collect();
    let x_u = SimplexAssignment::one_hot(&fixed, k)?;
    let w_us = DMatrix::from_fn(u.len(), s.len(), |a, b| weights[(u[a], s[b])]);
    let linear = x_u.matrix() * w_us * 2.0;
    let problem = PenalizedProblem::with_linear(&w_ss, linear)?;
    solve_seeded(&problem, k, config, method)
}

fn check_square(w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(PciError::Dimension(format!("weights are {}x{}", w.nrows(), w.ncols())));
    }
    Ok(())
}
