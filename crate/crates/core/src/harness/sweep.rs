use serde::{Deserialize, Serialize};

use super::table::{fmt_f64, fmt_opt, CsvTable};
use crate::birth::TableConfig;
use crate::error::{Error, Result};
use crate::network::{components, generate, percolate, GenerateConfig, GenerationMode};
use crate::operator::{percolation_threshold, robustness, CriterionConfig};
use crate::parallel::map_indexed;
use crate::rule::AttachmentRule;
use crate::streams::{derive_seed, label};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub rule: AttachmentRule,
    #[serde(default = "default_n")]
    pub n_vertices: usize,
    pub p: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_mode")]
    pub mode: GenerationMode,
    /// Compute the predicted threshold numerically for non-linear rules.
    #[serde(default = "default_true")]
    pub predict: bool,
    #[serde(default)]
    pub table: TableConfig,
}

fn default_n() -> usize {
    100_000
}
fn default_seeds() -> usize {
    3
}
fn default_mode() -> GenerationMode {
    GenerationMode::DegreeClass
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub largest_mean: f64,
    pub largest_sd: f64,
    pub second_mean: f64,
    /// Per seed, in seed order.
    pub largest: Vec<f64>,
    pub predicted_giant: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rule: AttachmentRule,
    pub n_vertices: usize,
    pub robust: Option<bool>,
    pub predicted_threshold: Option<f64>,
    pub rows: Vec<SweepRow>,
}

const SCHEMA: &str = "percolation-sweep/1";
const COLUMNS: [&str; 9] = [
    "p", "largest_mean", "largest_sd", "second_mean", "predicted_threshold", "predicted_giant", "robust",
    "seeds", "n_vertices",
];

impl SweepResult {
    pub fn table(&self, manifest: &str) -> CsvTable {
        let mut t = CsvTable::new(SCHEMA, manifest, &COLUMNS);
        let b = |x: Option<bool>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            t.push(vec![
                fmt_f64(r.p),
                fmt_f64(r.largest_mean),
                fmt_f64(r.largest_sd),
                fmt_f64(r.second_mean),
                fmt_opt(self.predicted_threshold),
                b(r.predicted_giant),
                b(self.robust),
                r.largest.len().to_string(),
                self.n_vertices.to_string(),
            ]);
        }
        t
    }

    pub fn schema() -> (&'static str, &'static [&'static str]) {
        (SCHEMA, &COLUMNS)
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Largest-component fraction after percolation at each `p`. One graph per
/// seed, and one set of edge uniforms per seed shared by all `p`, so the
/// fraction must be nondecreasing in `p`; a violation is an error.
pub fn run_percolation_sweep(cfg: &SweepConfig, seed: u64, workers: usize) -> Result<SweepResult> {
    if cfg.p.is_empty() {
        return Err(Error::Empty("retention list"));
    }
    if let Some(&bad) = cfg.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: bad,
            bound: "0 <= p <= 1",
        });
    }
    let gen = GenerateConfig::new(cfg.n_vertices, cfg.mode);
    let per_seed: Vec<Result<Vec<(f64, f64)>>> = map_indexed(workers, cfg.seeds.max(1), |s| {
        let g = generate(&cfg.rule, derive_seed(seed, &[label("sweep-graph"), s as u64]), &gen)?;
        let perc_seed = derive_seed(seed, &[label("sweep-percolate"), s as u64]);
        cfg.p
            .iter()
            .map(|&p| {
                let st = components(&percolate(&g, p, perc_seed)?);
                Ok((st.largest_fraction(), st.second_fraction()))
            })
            .collect()
    });
    let per_seed: Vec<Vec<(f64, f64)>> = per_seed.into_iter().collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..cfg.p.len()).collect();
    order.sort_by(|&a, &b| cfg.p[a].total_cmp(&cfg.p[b]));
    for (s, v) in per_seed.iter().enumerate() {
        for w in order.windows(2) {
            if v[w[1]].0 < v[w[0]].0 {
                return Err(Error::Invariant(format!(
                    "seed {s}: largest fraction drops from {} at p={} to {} at p={}",
                    v[w[0]].0, cfg.p[w[0]], v[w[1]].0, cfg.p[w[1]]
                )));
            }
        }
    }
    let robust = robustness(&cfg.rule);
    let threshold = if robust == Some(true) || !(cfg.predict || cfg.rule.as_linear().is_some()) {
        None
    } else {
        let c = CriterionConfig {
            table: cfg.table.clone(),
            ..Default::default()
        };
        percolation_threshold(&cfg.rule, &c)?
    };
    let rows = cfg
        .p
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let largest: Vec<f64> = per_seed.iter().map(|v| v[k].0).collect();
            let second: Vec<f64> = per_seed.iter().map(|v| v[k].1).collect();
            let (largest_mean, largest_sd) = mean_sd(&largest);
            let predicted_giant = match (robust, threshold) {
                (Some(true), _) => Some(p > 0.0),
                (_, Some(t)) => Some(p > t),
                (Some(false), None) if cfg.rule.as_linear().is_some() => Some(false),
                _ => None,
            };
            SweepRow {
                p,
                largest_mean,
                largest_sd,
                second_mean: mean_sd(&second).0,
                largest,
                predicted_giant,
            }
        })
        .collect();
    Ok(SweepResult {
        rule: cfg.rule.clone(),
        n_vertices: cfg.n_vertices,
        robust,
        predicted_threshold: threshold,
        rows,
    })
}
