use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pci_core::bench::{bench_csv, run_bench};
use pci_core::evaluate::{objective_of_labels, EvalReport};
use pci_core::graph::InterferenceGraph;
use pci_core::instances::{compute_stats, generate_random_w, generate_rgg, GraphStats, RggConfig, SyntheticWConfig};
use pci_core::io::{load_changeable, load_instance, load_plan, store_instance, store_plan, write_json, CoordinatesFile};
use pci_core::local_search::{refine, LabelAssignment};
use pci_core::pipeline::{assign_pci_partial_with, assign_pci_with, PipelineOptions, Strategy};
use pci_core::seed::derive_seed;
use pci_core::simplex::{solve_observed, DescentMethod, PenalizedProblem, SolverConfig};
use pci_core::evaluate_plan;

/// PCI planning: instance generation, solving, evaluation and benchmarks.
#[derive(Parser)]
#[command(name = "pciplan", version)]
struct Cli {
    /// Print aligned text instead of JSON on stdout.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic instance files.
    #[command(subcommand)]
    Generate(Generate),
    /// Assign PCIs to every cell (or only the changeable ones).
    Solve(SolveArgs),
    /// Evaluate an existing plan.
    Evaluate(EvaluateArgs),
    /// Compare methods over a set of instances.
    Bench(BenchArgs),
    /// Solve a single Min-k-Partition of an instance's weights.
    Partition(PartitionArgs),
}

#[derive(Subcommand)]
enum Generate {
    /// Random geometric graph in the unit square.
    Rgg {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        radius: f64,
        #[command(flatten)]
        out: GenerateOut,
    },
    /// Dense symmetrized uniform weights with no neighbor relation.
    Randw {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[command(flatten)]
        out: GenerateOut,
    },
}

#[derive(Args)]
struct GenerateOut {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of instances; with more than one, `--out` names a directory.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    rho0: f64,
    #[arg(long, default_value_t = 1.1)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps1: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps2: f64,
    #[arg(long, default_value_t = 100_000)]
    max_inner: usize,
    #[arg(long, default_value_t = 300)]
    max_outer: usize,
    /// Worker threads for the parallel stages; 1 runs them sequentially.
    #[arg(long)]
    threads: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rho0: self.rho0,
            gamma: self.gamma,
            eps1: self.eps1,
            eps2: self.eps2,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "plan.json")]
    out: PathBuf,
    #[arg(long, default_value = "gp-pmd", value_parser = parse_strategy)]
    method: Strategy,
    /// Changeable-set file; only those cells are re-planned.
    #[arg(long)]
    partial: Option<PathBuf>,
    /// Report JSON (default: next to the plan, `.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Solver trace CSV (default: next to the plan, `.trace.csv`).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files; each row is labeled with the file stem.
    #[arg(long = "in", num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "gp-pmd,gp-pgp,gp-ls,ggc", value_parser = parse_strategy)]
    methods: Vec<Strategy>,
    /// CSV output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add the wall-time column (makes the table run-dependent).
    #[arg(long)]
    with_time: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionMethod {
    /// Entropic mirror descent.
    Pmd,
    /// Projected gradient.
    Pgp,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "pmd")]
    method: PartitionMethod,
    /// Apply pairwise local search to the rounded labels.
    #[arg(long)]
    refine: bool,
    #[arg(long, default_value = "labels.json")]
    out: PathBuf,
    /// Per-outer-iteration CSV (default: next to the labels, `.trace.csv`).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Per-inner-iteration CSV.
    #[arg(long)]
    inner_trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: pci_core::PciError| e.to_string())
}

/// `dir/stem.<suffix>` for a path `dir/stem.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Finished successfully, possibly with warnings worth a distinct exit code.
enum Status {
    Clean,
    Warnings,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PCI_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Warnings) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Generate(g) => generate(g, cli.human),
        Command::Solve(args) => solve(args, cli.human),
        Command::Evaluate(args) => evaluate(args, cli.human),
        Command::Bench(args) => bench(args),
        Command::Partition(args) => partition(args, cli.human),
    }
}

fn stats_line(path: &Path, stats: &GraphStats, human: bool) -> Result<String> {
    if human {
        Ok(format!(
            "{:<32} density {:.4}  max clique {}{}  avg degree {:.3} (conflict {:.3})  clustering {:.3} (conflict {:.3})",
            path.display(),
            stats.density,
            stats.max_clique,
            if stats.max_clique_exact { "" } else { "+" },
            stats.avg_degree,
            stats.conflict_avg_degree,
            stats.clustering_coef,
            stats.conflict_clustering_coef
        ))
    } else {
        Ok(serde_json::to_string(&serde_json::json!({ "file": path, "stats": stats }))?)
    }
}

fn generate(g: Generate, human: bool) -> Result<Status> {
    let (kind, out) = match &g {
        Generate::Rgg { out, .. } => ("rgg", out),
        Generate::Randw { out, .. } => ("randw", out),
    };
    if out.count == 0 {
        bail!("--count must be at least 1");
    }
    let targets: Vec<(PathBuf, u64)> = if out.count == 1 {
        vec![(out.out.clone().unwrap_or_else(|| PathBuf::from(format!("{kind}.json"))), out.seed)]
    } else {
        let dir = out.out.clone().unwrap_or_else(|| PathBuf::from("instances"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        (0..out.count)
            .map(|i| (dir.join(format!("{kind}-{i:03}.json")), derive_seed(&[out.seed, i as u64])))
            .collect()
    };
    for (path, seed) in targets {
        let graph = match &g {
            Generate::Rgg { n, radius, .. } => {
                let inst = generate_rgg(&RggConfig { n: *n, radius: *radius, seed })?;
                write_json(&sibling(&path, "coords.json"), &CoordinatesFile { points: inst.points })?;
                inst.graph
            }
            Generate::Randw { n, b, .. } => generate_random_w(&SyntheticWConfig { n: *n, b: *b, seed })?,
        };
        store_instance(&path, &graph)?;
        println!("{}", stats_line(&path, &compute_stats(&graph), human)?);
    }
    Ok(Status::Clean)
}

fn report_text(report: &EvalReport, human: bool) -> Result<String> {
    if human {
        Ok(format!(
            "collisions {}  confusions {}  mod-3 {:.6}  mod-30 {:.6}",
            report.collisions, report.confusions, report.mod3_interference, report.mod30_interference
        ))
    } else {
        Ok(serde_json::to_string(report)?)
    }
}

fn solve(args: SolveArgs, human: bool) -> Result<Status> {
    let graph = load_instance(&args.input)?;
    let config = args.solver.config();
    let options = PipelineOptions { strategy: args.method, threads: args.solver.threads };
    let result = match &args.partial {
        Some(path) => {
            let set = load_changeable(path)?;
            assign_pci_partial_with(&graph, &set, &config, &options)?
        }
        None => assign_pci_with(&graph, &config, &options)?,
    };
    store_plan(&args.out, &result.plan)?;
    let report_path = args.report.unwrap_or_else(|| sibling(&args.out, "report.json"));
    write_text(&report_path, &result.to_json()?)?;
    let trace_path = args.trace.unwrap_or_else(|| sibling(&args.out, "trace.csv"));
    write_text(&trace_path, &result.traces_csv())?;
    println!("{}", report_text(&result.report, human)?);
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if result.capped || !result.warnings.is_empty() { Status::Warnings } else { Status::Clean })
}

fn evaluate(args: EvaluateArgs, human: bool) -> Result<Status> {
    let graph = load_instance(&args.input)?;
    let plan = load_plan(&args.plan)?;
    println!("{}", report_text(&evaluate_plan(&graph, &plan)?, human)?);
    Ok(Status::Clean)
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn bench(args: BenchArgs) -> Result<Status> {
    let instances: Vec<(String, InterferenceGraph)> = args
        .inputs
        .iter()
        .map(|p| Ok((instance_name(p), load_instance(p)?)))
        .collect::<Result<_>>()?;
    let rows = run_bench(&instances, &args.methods, &args.solver.config(), args.solver.threads)?;
    let csv = bench_csv(&rows, args.with_time);
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(Status::Clean)
}

fn partition(args: PartitionArgs, human: bool) -> Result<Status> {
    if args.k == 0 {
        bail!("--k must be at least 1");
    }
    let graph = load_instance(&args.input)?;
    let w = graph.weights();
    let method = match args.method {
        PartitionMethod::Pmd => DescentMethod::Mirror,
        PartitionMethod::Pgp => DescentMethod::Projected,
    };
    let problem = PenalizedProblem::new(w);
    let mut inner = String::from("outer_iter,m,rho,step,F,gap\n");
    let mut inner_error = None;
    let mut observer = |s: &pci_core::simplex::InnerStep<'_>| {
        if args.inner_trace.is_none() || inner_error.is_some() {
            return;
        }
        match problem.objective(s.next, s.rho) {
            Ok(f) => {
                let _ = writeln!(inner, "{},{},{:e},{:e},{:e},{:e}", s.outer_iter, s.m, s.rho, s.step, f, s.gap);
            }
            Err(e) => inner_error = Some(e),
        }
    };
    let out = solve_observed(&problem, args.k, &args.solver.config(), method, &mut observer)?;
    if let Some(e) = inner_error {
        return Err(e.into());
    }
    let mut labels = out.labels;
    let mut capped = out.capped;
    if args.refine {
        let refined = refine(w, &LabelAssignment::new(labels, args.k)?)?;
        capped |= refined.capped;
        labels = refined.labels.into_labels();
    }
    let objective = objective_of_labels(w, &labels)?;
    write_json(
        &args.out,
        &serde_json::json!({ "k": args.k, "labels": labels, "objective": objective, "capped": capped }),
    )?;
    let trace_path = args.trace.unwrap_or_else(|| sibling(&args.out, "trace.csv"));
    write_text(&trace_path, &out.trace.to_csv())?;
    if let Some(path) = &args.inner_trace {
        write_text(path, &inner)?;
    }
    let outer = out.trace.records.len();
    let inner_total = out.trace.total_inner_iterations();
    if human {
        println!("objective {objective}  outer iterations {outer}  inner iterations {inner_total}");
    } else {
        println!(
            "{}",
            serde_json::json!({ "objective": objective, "outer_iterations": outer, "inner_iterations": inner_total })
        );
    }
    if capped {
        eprintln!("warning: an iteration cap was reached");
        return Ok(Status::Warnings);
    }
    Ok(Status::Clean)
}
