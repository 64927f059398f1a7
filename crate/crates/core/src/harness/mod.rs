//! Experiment orchestration: phase diagrams, finite-network versus tree
//! comparisons and percolation sweeps, with CSV, SVG and manifest output.

mod phase;
mod svg;
mod sweep;
mod table;
mod theorem;

pub use phase::{
    bound_curves, linear_boundary, run_phase_diagram, CellStatus, Engine, Family, GridCell,
    GridResult, Overlay, PhaseConfig,
};
pub use svg::{emit_heatmap, render_heatmap};
pub use sweep::{run_percolation_sweep, SweepConfig, SweepResult, SweepRow};
pub use table::{fmt_f64, fmt_opt, parse_f64, CsvTable};
pub use theorem::{run_theorem_check, TheoremConfig, TheoremReport};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::label;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A parameter axis: explicit values or `n` evenly spaced points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { min: f64, max: f64, n: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { min, max, n } => match n {
                0 => Vec::new(),
                1 => vec![*min],
                _ => (0..*n)
                    .map(|i| min + (max - min) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// Everything needed to rerun an experiment. `id()` hashes the
/// reproducible part (not the timestamp) and is stamped into every CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub tool_version: String,
    pub seed: u64,
    pub workers: usize,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new<C: Serialize>(kind: &str, seed: u64, workers: usize, config: &C) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| Error::json("<config>", e))?;
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Manifest {
            kind: kind.into(),
            tool_version: TOOL_VERSION.into(),
            seed,
            workers,
            config,
            created,
            outputs: Vec::new(),
        })
    }

    /// Hex digest of kind, version, seed and config.
    pub fn id(&self) -> String {
        let key = serde_json::json!([self.kind, self.tool_version, self.seed, self.config]);
        format!("{:016x}", label(&key.to_string()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
