//! PCI planning for cellular networks.
//!
//! Residues `PCI mod 3` and `PCI mod 10` are chosen by solving weighted
//! Min-k-Partition problems over the interference matrix, merged into
//! `PCI mod 30`, and completed with per-residue graph coloring so that no
//! two neighboring or second-order neighboring cells share a PCI.

pub mod bench;
pub mod coloring;
pub mod crt;
pub mod error;
pub mod evaluate;
pub mod graph;
pub mod instances;
pub mod io;
pub mod local_search;
pub mod pipeline;
pub mod seed;
pub mod simplex;

pub use error::{PciError, Result};
pub use evaluate::{evaluate_plan, EvalReport};
pub use graph::{ChangeableSet, InterferenceGraph, PciPlan};
pub use pipeline::{assign_pci, assign_pci_partial, PipelineOptions, PipelineResult, Strategy};
pub use simplex::SolverConfig;
