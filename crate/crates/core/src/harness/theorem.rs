use serde::{Deserialize, Serialize};

use super::table::{fmt_f64, CsvTable};
use crate::birth::{semigroup_for, TableConfig};
use crate::error::Result;
use crate::ibrw::{prob_isolated_root, run_replicas, IntConfig, SizeDistEstimate, SurvivalEstimate};
use crate::network::{components, generate, GenerateConfig, GenerationMode};
use crate::parallel::map_indexed;
use crate::rule::AttachmentRule;
use crate::streams::{derive_seed, label};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremConfig {
    pub rule: AttachmentRule,
    #[serde(default = "default_n")]
    pub n_vertices: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub int: IntConfig,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    #[serde(default = "default_mode")]
    pub mode: GenerationMode,
    #[serde(default)]
    pub table: TableConfig,
}

fn default_n() -> usize {
    100_000
}
fn default_seeds() -> usize {
    3
}
fn default_reps() -> usize {
    10_000
}
fn default_kmax() -> usize {
    5
}
fn default_mode() -> GenerationMode {
    GenerationMode::DegreeClass
}

/// Finite networks against the killed branching random walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub rule: AttachmentRule,
    pub n_vertices: usize,
    pub seeds: usize,
    pub largest: Vec<f64>,
    pub largest_mean: f64,
    pub largest_sd: f64,
    pub second_mean: f64,
    pub second_sd: f64,
    pub survival: SurvivalEstimate,
    /// `|largest/N - p_hat|`.
    pub giant_delta: f64,
    /// Index `k - 1`.
    pub size_network: Vec<f64>,
    pub size_int: Vec<f64>,
    pub size_deltas: Vec<f64>,
    pub max_size_delta: f64,
    /// Exact `P(#T = 1)`.
    pub isolated_oracle: f64,
    /// `N = 1`: the only vertex is the whole graph.
    pub degenerate: bool,
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

pub fn run_theorem_check(cfg: &TheoremConfig, seed: u64, workers: usize) -> Result<TheoremReport> {
    let gen = GenerateConfig::new(cfg.n_vertices, cfg.mode);
    let kmax = cfg.kmax.max(1);
    let graphs: Vec<Result<(f64, f64, Vec<f64>)>> = map_indexed(workers, cfg.seeds.max(1), |s| {
        let g = generate(&cfg.rule, derive_seed(seed, &[label("theorem-graph"), s as u64]), &gen)?;
        let st = components(&g);
        let dist = (1..=kmax)
            .map(|k| st.size_histogram.get(&k).copied().unwrap_or(0.0))
            .collect();
        Ok((st.largest_fraction(), st.second_fraction(), dist))
    });
    let graphs: Vec<_> = graphs.into_iter().collect::<Result<_>>()?;
    let largest: Vec<f64> = graphs.iter().map(|g| g.0).collect();
    let second: Vec<f64> = graphs.iter().map(|g| g.1).collect();
    let mut size_network = vec![0.0; kmax];
    for g in &graphs {
        for (acc, v) in size_network.iter_mut().zip(&g.2) {
            *acc += v / graphs.len() as f64;
        }
    }
    let sg = semigroup_for(&cfg.rule, &cfg.table)?;
    let int_seed = derive_seed(seed, &[label("theorem-int")]);
    let outcomes = run_replicas(sg.as_ref(), &cfg.int, cfg.reps.max(1), int_seed, workers)?;
    let survival = SurvivalEstimate::from_outcomes(&outcomes, int_seed);
    let sizes = SizeDistEstimate::from_outcomes(&outcomes, int_seed, kmax);
    let size_deltas: Vec<f64> = size_network.iter().zip(&sizes.probs).map(|(a, b)| (a - b).abs()).collect();
    let (largest_mean, largest_sd) = mean_sd(&largest);
    let (second_mean, second_sd) = mean_sd(&second);
    Ok(TheoremReport {
        rule: cfg.rule.clone(),
        n_vertices: cfg.n_vertices,
        seeds: graphs.len(),
        giant_delta: (largest_mean - survival.p_hat).abs(),
        largest,
        largest_mean,
        largest_sd,
        second_mean,
        second_sd,
        survival,
        max_size_delta: size_deltas.iter().cloned().fold(0.0, f64::max),
        size_network,
        size_int: sizes.probs,
        size_deltas,
        isolated_oracle: prob_isolated_root(&cfg.rule).est,
        degenerate: cfg.n_vertices == 1,
    })
}

const SCHEMA: &str = "theorem-check-sizes/1";
const COLUMNS: [&str; 4] = ["k", "network", "int", "delta"];

impl TheoremReport {
    pub fn size_table(&self, manifest: &str) -> CsvTable {
        let mut t = CsvTable::new(SCHEMA, manifest, &COLUMNS);
        for k in 0..self.size_network.len() {
            t.push(vec![
                (k + 1).to_string(),
                fmt_f64(self.size_network[k]),
                fmt_f64(self.size_int[k]),
                fmt_f64(self.size_deltas[k]),
            ]);
        }
        t
    }
}
