//! JSON file formats.
//!
//! Instance file:
//!
//! ```json
//! { "n": 3,
//!   "weights": [[0, 1, 1.5], [1, 2, 0.25]],
//!   "e1": [[0, 1], [1, 2]],
//!   "e2": [[0, 2]],
//!   "frequencies": [3500, 3500, 3500],
//!   "asymmetric": false }
//! ```
//!
//! `e2`, `frequencies` and `asymmetric` are optional. Without `asymmetric`,
//! each triplet sets both `W[i][j]` and `W[j][i]`. With `"asymmetric": true`
//! the triplets describe a directed `W₀` and the stored matrix is
//! `(W₀ + W₀ᵀ)/2`. Indices are 0-based.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PciError, Result};
use crate::graph::{ChangeableSet, InterferenceGraph, PciPlan};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub weights: Vec<(usize, usize, f64)>,
    pub e1: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub asymmetric: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub pci: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChangeableFile {
    pub changeable: Vec<usize>,
    pub baseline_pci: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinatesFile {
    pub points: Vec<(f64, f64)>,
}

impl InstanceFile {
    pub fn into_graph(self) -> Result<InterferenceGraph> {
        let n = self.n;
        let check = |index: usize| {
            if index >= n {
                Err(PciError::IndexOutOfRange { index, n })
            } else {
                Ok(())
            }
        };
        let mut w = DMatrix::<f64>::zeros(n, n);
        let mut seen = DMatrix::<bool>::from_element(n, n, false);
        for &(i, j, value) in &self.weights {
            check(i)?;
            check(j)?;
            if !value.is_finite() {
                return Err(PciError::NonFiniteWeight { i, j });
            }
            if value < 0.0 {
                return Err(PciError::NegativeWeight { i, j, weight: value });
            }
            if self.asymmetric {
                w[(i, j)] = value;
            } else {
                if seen[(i, j)] && w[(i, j)] != value {
                    return Err(PciError::ConflictingWeight { i, j });
                }
                w[(i, j)] = value;
                w[(j, i)] = value;
                seen[(i, j)] = true;
                seen[(j, i)] = true;
            }
        }
        if self.asymmetric {
            w = (&w + w.transpose()) * 0.5;
        }
        for &(i, j) in self.e1.iter().chain(self.e2.iter().flatten()) {
            check(i)?;
            check(j)?;
        }
        InterferenceGraph::new(w, self.e1, self.e2)?.with_frequencies(self.frequencies)
    }

    /// Upper-triangle triplets of the non-zero weights, explicit `e2`.
    pub fn from_graph(graph: &InterferenceGraph) -> Self {
        let n = graph.n();
        let mut weights = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let value = graph.weight(i, j);
                if value != 0.0 {
                    weights.push((i, j, value));
                }
            }
        }
        Self {
            n,
            weights,
            e1: graph.neighbors().iter().copied().collect(),
            e2: Some(graph.second_order().iter().copied().collect()),
            frequencies: graph.frequencies().map(<[i64]>::to_vec),
            asymmetric: false,
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| PciError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|source| PciError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<InterferenceGraph> {
    read_json::<InstanceFile>(path.as_ref())?.into_graph()
}

pub fn parse_instance(text: &str) -> Result<InterferenceGraph> {
    serde_json::from_str::<InstanceFile>(text)?.into_graph()
}

pub fn store_instance(path: impl AsRef<Path>, graph: &InterferenceGraph) -> Result<()> {
    write_json(path.as_ref(), &InstanceFile::from_graph(graph))
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<PciPlan> {
    let file: PlanFile = read_json(path.as_ref())?;
    PciPlan::from_i64(&file.pci)
}

pub fn store_plan(path: impl AsRef<Path>, plan: &PciPlan) -> Result<()> {
    let file = PlanFile {
        pci: plan.values().iter().map(|&v| v as i64).collect(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_changeable(path: impl AsRef<Path>) -> Result<ChangeableSet> {
    let file: ChangeableFile = read_json(path.as_ref())?;
    ChangeableSet::new(&file.changeable, PciPlan::from_i64(&file.baseline_pci)?)
}

pub fn store_changeable(path: impl AsRef<Path>, set: &ChangeableSet) -> Result<()> {
    let file = ChangeableFile {
        changeable: set.changeable_cells(),
        baseline_pci: set.baseline().values().iter().map(|&v| v as i64).collect(),
    };
    write_json(path.as_ref(), &file)
}
