use std::fmt::Write as _;

use serde::Serialize;

use super::DescentMethod;

/// One outer (penalty) iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterRecord {
    pub outer_iter: usize,
    pub rho: f64,
    pub inner_iters: usize,
    /// `F(X;ρ)` at the end of the inner loop.
    pub objective: f64,
    /// Divergence between the last two inner iterates (KL or ½‖·‖²).
    pub gap: f64,
    pub ortho_criterion: f64,
    pub inner_capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace {
    pub method: DescentMethod,
    pub records: Vec<OuterRecord>,
}

impl SolveTrace {
    pub fn new(method: DescentMethod) -> Self {
        Self { method, records: Vec::new() }
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }

    pub fn gap_column(&self) -> &'static str {
        match self.method {
            DescentMethod::Mirror => "kl_gap",
            DescentMethod::Projected => "euclid_gap",
        }
    }

    pub fn csv_header(&self) -> String {
        format!("outer_iter,rho,inner_iters,F,{},ortho_criterion", self.gap_column())
    }

    /// Rows without the header, one per outer iteration.
    pub fn csv_rows(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                format!(
                    "{},{:e},{},{:e},{:e},{:e}",
                    r.outer_iter, r.rho, r.inner_iters, r.objective, r.gap, r.ortho_criterion
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for row in self.csv_rows() {
            let _ = writeln!(out, "{row}");
        }
        out
    }
}
