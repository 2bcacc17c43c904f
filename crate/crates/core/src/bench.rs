//! Method-by-instance comparison tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::graph::InterferenceGraph;
use crate::pipeline::{assign_pci_with, PipelineOptions, Strategy};
use crate::simplex::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: Strategy,
    pub instance: String,
    pub collisions: usize,
    pub confusions: usize,
    pub mod3: f64,
    pub mod30: f64,
    pub time_s: f64,
}

/// Runs every method on every instance, in that nesting order.
pub fn run_bench(
    instances: &[(String, InterferenceGraph)],
    methods: &[Strategy],
    config: &SolverConfig,
    threads: Option<usize>,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(instances.len() * methods.len());
    for (name, graph) in instances {
        for &strategy in methods {
            let out = assign_pci_with(graph, config, &PipelineOptions { strategy, threads })?;
            rows.push(BenchRow {
                method: strategy,
                instance: name.clone(),
                collisions: out.report.collisions,
                confusions: out.report.confusions,
                mod3: out.report.mod3_interference,
                mod30: out.report.mod30_interference,
                time_s: out.timings.total,
            });
        }
    }
    Ok(rows)
}

/// CSV table; without `with_time` the wall-time column is left out so
/// reruns with the same seeds are byte-identical.
pub fn bench_csv(rows: &[BenchRow], with_time: bool) -> String {
    let mut out = String::from("method,instance,collisions,confusions,mod3,mod30");
    out.push_str(if with_time { ",time_s\n" } else { "\n" });
    for r in rows {
        let _ = write!(out, "{},{},{},{},{},{}", r.method, r.instance, r.collisions, r.confusions, r.mod3, r.mod30);
        if with_time {
            let _ = write!(out, ",{:.6}", r.time_s);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn one_row_per_method_and_instance() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g = InterferenceGraph::new(w, [(0, 1)], None).unwrap();
        let rows = run_bench(
            &[("pair".into(), g)],
            &[Strategy::GpPmd, Strategy::Ggc],
            &SolverConfig::default(),
            Some(1),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let csv = bench_csv(&rows, false);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("method,instance,collisions,confusions,mod3,mod30\n"));
        assert!(csv.contains("\nggc,pair,0,0,"));
    }
}
