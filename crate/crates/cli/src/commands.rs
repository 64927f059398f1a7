use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pa_giant::birth::{semigroup_for, MeasureTables, SemigroupTable, TableConfig};
use pa_giant::harness::{
    emit_heatmap, fmt_f64, fmt_opt, run_percolation_sweep, run_phase_diagram, run_theorem_check, Axis,
    CsvTable, Family, Manifest, PhaseConfig, SweepConfig, TheoremConfig,
};
use pa_giant::ibrw::{run_replicas, IntConfig, SizeDistEstimate, SurvivalEstimate};
use pa_giant::network::{
    compare_mu, components as graph_components, generate as generate_graph, indegree_histogram,
    percolate as percolate_graph, read_graph, size_distribution, write_graph, GenerateConfig,
    GenerationMode, GraphMeta, PercolationMeta,
};
use pa_giant::operator::{giant_criterion, rho_linear, rho_rank2, CriterionConfig, Giant, SearchConfig};
use pa_giant::parallel::{map_indexed, resolve_workers};
use pa_giant::streams::{derive_seed, label};
use pa_giant::AttachmentRule;

use crate::{CheckFailed, Common};

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Output directory plus the manifest that every file in it refers to.
struct Run {
    dir: PathBuf,
    manifest: Manifest,
    workers: usize,
}

impl Run {
    fn start<C: Serialize>(kind: &str, c: &Common, cfg: &C) -> Result<Self> {
        std::fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
        let workers = resolve_workers(c.workers);
        Ok(Run {
            dir: c.out.clone(),
            manifest: Manifest::new(kind, c.seed, workers, cfg)?,
            workers,
        })
    }

    fn id(&self) -> String {
        self.manifest.id()
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.into());
        self.dir.join(name)
    }

    fn table(&mut self, name: &str, t: &CsvTable) -> Result<()> {
        let p = self.path(name);
        t.write(&p)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", p.display()))
    }

    fn finish(self) -> Result<()> {
        let p = self.manifest.write(&self.dir)?;
        eprintln!("wrote {} (manifest {})", p.display(), self.manifest.id());
        Ok(())
    }
}

/// Rules given explicitly, over a `(γ, β)` grid, or both.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct RuleSet {
    #[serde(default)]
    rules: Vec<AttachmentRule>,
    #[serde(default)]
    grid: Option<RuleGrid>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RuleGrid {
    family: Family,
    gamma: Axis,
    beta: Axis,
}

impl RuleSet {
    fn expand(&self) -> Vec<(String, Result<AttachmentRule, String>)> {
        let mut out: Vec<_> = self.rules.iter().map(|r| (r.to_string(), Ok(r.clone()))).collect();
        if let Some(g) = &self.grid {
            for gamma in g.gamma.values() {
                for beta in g.beta.values() {
                    let name = format!("{:?}(gamma={gamma}, beta={beta})", g.family).to_lowercase();
                    out.push((name, g.family.rule(gamma, beta).map_err(|e| e.to_string())));
                }
            }
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GenerateCfg {
    rule: AttachmentRule,
    n_vertices: usize,
    #[serde(default = "degree_class")]
    mode: GenerationMode,
    #[serde(default)]
    max_edges: Option<usize>,
    #[serde(default = "graph_name")]
    name: String,
}

fn degree_class() -> GenerationMode {
    GenerationMode::DegreeClass
}
fn graph_name() -> String {
    "graph.csv".into()
}

pub fn generate(c: &Common) -> Result<()> {
    let cfg: GenerateCfg = load(&c.config)?;
    let mut run = Run::start("generate", c, &cfg)?;
    let mut g = GenerateConfig::new(cfg.n_vertices, cfg.mode);
    if let Some(m) = cfg.max_edges {
        g.max_edges = m;
    }
    let graph = generate_graph(&cfg.rule, c.seed, &g)?;
    graph.check()?;
    let meta = GraphMeta {
        rule: cfg.rule.clone(),
        n_vertices: cfg.n_vertices,
        seed: c.seed,
        mode: cfg.mode,
        percolation: None,
    };
    let p = run.path(&cfg.name);
    write_graph(&p, &graph, &meta)?;
    println!("{} vertices, {} edges -> {}", graph.n_vertices(), graph.n_edges(), p.display());
    run.finish()
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphCfg {
    graph: PathBuf,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default = "kmax_default")]
    kmax: usize,
    #[serde(default)]
    max_tv: Option<f64>,
    #[serde(default = "percolated_name")]
    name: String,
}

fn kmax_default() -> usize {
    20
}
fn percolated_name() -> String {
    "percolated.csv".into()
}

pub fn components(c: &Common) -> Result<()> {
    let cfg: GraphCfg = load(&c.config)?;
    let mut run = Run::start("components", c, &cfg)?;
    let (graph, _) = read_graph(&cfg.graph)?;
    let st = graph_components(&graph);
    let mut t = CsvTable::new("components/1", &run.id(), &["size", "count", "vertex_fraction"]);
    let mut counts = std::collections::BTreeMap::new();
    for &s in &st.component_sizes {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    for (s, n) in counts.iter().rev() {
        t.push(vec![s.to_string(), n.to_string(), fmt_f64(st.size_histogram[s])]);
    }
    run.table("components.csv", &t)?;
    println!(
        "largest {} ({:.4} of N), second {} ({:.4} of N), {} components",
        st.largest,
        st.largest_fraction(),
        st.second_largest,
        st.second_fraction(),
        st.component_sizes.len()
    );
    run.finish()
}

pub fn percolate(c: &Common) -> Result<()> {
    let cfg: GraphCfg = load(&c.config)?;
    let Some(p) = cfg.p else { bail!("percolate needs \"p\" in the config") };
    let mut run = Run::start("percolate", c, &cfg)?;
    let (graph, meta) = read_graph(&cfg.graph)?;
    let kept = percolate_graph(&graph, p, c.seed)?;
    kept.check()?;
    let meta = GraphMeta {
        percolation: Some(PercolationMeta { p, seed: c.seed }),
        ..meta
    };
    let path = run.path(&cfg.name);
    write_graph(&path, &kept, &meta)?;
    println!("kept {} of {} edges -> {}", kept.n_edges(), graph.n_edges(), path.display());
    run.finish()
}

pub fn degree_dist(c: &Common) -> Result<()> {
    let cfg: GraphCfg = load(&c.config)?;
    let mut run = Run::start("degree-dist", c, &cfg)?;
    let (graph, meta) = read_graph(&cfg.graph)?;
    let rule = match &meta.percolation {
        Some(p) => meta.rule.scale(p.p)?,
        None => meta.rule.clone(),
    };
    let emp = indegree_histogram(&graph);
    let mu = rule.mu_vector(cfg.kmax as u64);
    let mut t = CsvTable::new("degree-dist/1", &run.id(), &["k", "empirical", "mu"]);
    for k in 0..=cfg.kmax {
        t.push(vec![k.to_string(), fmt_f64(emp.get(k).copied().unwrap_or(0.0)), fmt_f64(mu[k])]);
    }
    let emp_tail = 1.0 - emp.iter().take(cfg.kmax + 1).sum::<f64>();
    let mu_tail = 1.0 - mu.iter().sum::<f64>();
    t.push(vec!["tail".into(), fmt_f64(emp_tail.max(0.0)), fmt_f64(mu_tail.max(0.0))]);
    run.table("degree-dist.csv", &t)?;
    let tv = compare_mu(&graph, &rule, cfg.kmax as u64);
    println!("total variation to mu over k <= {} plus tail: {tv:.6}", cfg.kmax);
    run.json("degree-dist.json", &serde_json::json!({ "tv": tv, "kmax": cfg.kmax }))?;
    run.finish()?;
    if let Some(max) = cfg.max_tv {
        if !(tv <= max) {
            return Err(CheckFailed(format!("total variation {tv} exceeds {max}")).into());
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct SimCfg {
    #[serde(flatten)]
    rules: RuleSet,
    #[serde(default = "reps_default")]
    reps: usize,
    #[serde(default)]
    int: IntConfig,
    #[serde(default)]
    table: TableConfig,
    #[serde(default = "kmax_small")]
    kmax: usize,
    /// Network to compare the tree's size distribution with.
    #[serde(default)]
    graph: Option<PathBuf>,
}

fn reps_default() -> usize {
    1000
}
fn kmax_small() -> usize {
    10
}

fn rule_outcomes(
    rule: &AttachmentRule,
    cfg: &SimCfg,
    seed: u64,
    workers: usize,
) -> Result<Vec<pa_giant::ibrw::IntOutcome>> {
    let sg = semigroup_for(rule, &cfg.table)?;
    Ok(run_replicas(sg.as_ref(), &cfg.int, cfg.reps, seed, workers)?)
}

pub fn survival(c: &Common) -> Result<()> {
    let cfg: SimCfg = load(&c.config)?;
    let mut run = Run::start("survival", c, &cfg)?;
    let rules = cfg.rules.expand();
    if rules.is_empty() {
        bail!("no rules in the config");
    }
    let cols = ["index", "rule", "status", "p_hat", "ci_low", "ci_high", "ambiguous_fraction", "reps", "seed"];
    let mut t = CsvTable::new("survival/1", &run.id(), &cols);
    let mut failed = 0;
    for (i, (name, rule)) in rules.iter().enumerate() {
        let seed = derive_seed(c.seed, &[label("survival"), i as u64]);
        let res = rule
            .clone()
            .map_err(anyhow::Error::msg)
            .and_then(|r| rule_outcomes(&r, &cfg, seed, run.workers));
        match res {
            Ok(out) => {
                let e = SurvivalEstimate::from_outcomes(&out, seed);
                t.push(vec![
                    i.to_string(),
                    name.clone(),
                    "ok".into(),
                    fmt_f64(e.p_hat),
                    fmt_f64(e.ci_low),
                    fmt_f64(e.ci_high),
                    fmt_f64(e.ambiguous_fraction),
                    e.reps.to_string(),
                    seed.to_string(),
                ]);
                println!("{name}: p_hat {:.4} [{:.4}, {:.4}], ambiguous {:.4}", e.p_hat, e.ci_low, e.ci_high, e.ambiguous_fraction);
            }
            Err(e) => {
                failed += 1;
                t.push(vec![i.to_string(), name.clone(), format!("failed: {e}"), String::new(), String::new(), String::new(), String::new(), cfg.reps.to_string(), seed.to_string()]);
            }
        }
    }
    run.table("survival.csv", &t)?;
    run.finish()?;
    if failed > 0 {
        bail!("{failed} rule(s) failed");
    }
    Ok(())
}

pub fn size_dist(c: &Common) -> Result<()> {
    let cfg: SimCfg = load(&c.config)?;
    let mut run = Run::start("size-dist", c, &cfg)?;
    let rules = cfg.rules.expand();
    if rules.is_empty() {
        bail!("no rules in the config");
    }
    if cfg.kmax < 1 {
        bail!("kmax must be at least 1");
    }
    let network = match &cfg.graph {
        Some(p) => Some(size_distribution(&read_graph(p)?.0, cfg.kmax)),
        None => None,
    };
    let cols = ["index", "rule", "k", "probability", "network", "reps", "seed"];
    let mut t = CsvTable::new("size-dist/1", &run.id(), &cols);
    for (i, (name, rule)) in rules.iter().enumerate() {
        let rule = rule.clone().map_err(anyhow::Error::msg)?;
        let seed = derive_seed(c.seed, &[label("size-dist"), i as u64]);
        let d = SizeDistEstimate::from_outcomes(&rule_outcomes(&rule, &cfg, seed, run.workers)?, seed, cfg.kmax);
        for (k, p) in d.probs.iter().enumerate() {
            let net = network.as_ref().map(|n| fmt_f64(n[k])).unwrap_or_default();
            t.push(vec![i.to_string(), name.clone(), (k + 1).to_string(), fmt_f64(*p), net, d.reps.to_string(), seed.to_string()]);
        }
        t.push(vec![i.to_string(), name.clone(), "overflow".into(), fmt_f64(d.overflow), String::new(), d.reps.to_string(), seed.to_string()]);
        println!("{name}: P(#T=1) {:.4}, overflow {:.4}", d.probs[0], d.overflow);
    }
    run.table("size-dist.csv", &t)?;
    run.finish()
}

#[derive(Debug, Serialize, Deserialize)]
struct OperatorCfg {
    rule: AttachmentRule,
    alpha: Axis,
    #[serde(default)]
    table: TableConfig,
    /// Use the tables even when a closed form exists.
    #[serde(default)]
    numeric: bool,
}

pub fn operator(c: &Common) -> Result<()> {
    let cfg: OperatorCfg = load(&c.config)?;
    let mut run = Run::start("operator", c, &cfg)?;
    let alphas = cfg.alpha.values();
    if alphas.is_empty() {
        bail!("empty alpha list");
    }
    let linear = cfg.rule.as_linear().filter(|_| !cfg.numeric);
    let tables = match linear {
        Some(_) => None,
        None => Some(MeasureTables::build(SemigroupTable::build(&cfg.rule, &cfg.table)?, &[])?),
    };
    let reports: Vec<_> = map_indexed(run.workers, alphas.len(), |i| match (linear, &tables) {
        (Some((g, b)), _) => rho_linear(g, b, alphas[i]),
        (None, Some(t)) => rho_rank2(t, alphas[i]),
        (None, None) => unreachable!(),
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let cols = [
        "alpha", "a", "b", "c", "B", "B_low", "B_high", "rho", "rho_low", "rho_high", "tail_bound", "status",
    ];
    let mut t = CsvTable::new("operator/1", &run.id(), &cols);
    for r in &reports {
        t.push(vec![
            fmt_f64(r.alpha),
            fmt_f64(r.a.est),
            fmt_f64(r.b.est),
            fmt_f64(r.c.est),
            fmt_f64(r.big_b.est),
            fmt_f64(r.big_b.lo),
            fmt_f64(r.big_b.hi),
            fmt_f64(r.rho.est),
            fmt_f64(r.rho.lo),
            fmt_f64(r.rho.hi),
            fmt_f64(r.tail_bound),
            r.status.to_string(),
        ]);
    }
    run.table("operator.csv", &t)?;
    run.finish()
}

#[derive(Debug, Serialize, Deserialize)]
struct CriterionCfg {
    #[serde(flatten)]
    rules: RuleSet,
    #[serde(default)]
    table: TableConfig,
    #[serde(default)]
    search: SearchConfig,
    #[serde(default = "yes")]
    always_numeric: bool,
}

fn yes() -> bool {
    true
}

pub fn criterion(c: &Common) -> Result<()> {
    let cfg: CriterionCfg = load(&c.config)?;
    let mut run = Run::start("criterion", c, &cfg)?;
    let rules = cfg.rules.expand();
    if rules.is_empty() {
        bail!("no rules in the config");
    }
    let ccfg = CriterionConfig {
        table: cfg.table.clone(),
        search: cfg.search,
        always_numeric: cfg.always_numeric,
    };
    let verdicts = map_indexed(run.workers, rules.len(), |i| {
        rules[i]
            .1
            .clone()
            .map_err(anyhow::Error::msg)
            .and_then(|r| giant_criterion(&r, &ccfg).map_err(Into::into))
    });
    let cols = [
        "index", "rule", "giant", "margin", "robust", "percolation_threshold", "alpha_star", "rho_min",
        "rho_min_low", "rho_min_high", "a_half", "c_half", "evidence",
    ];
    let mut t = CsvTable::new("criterion/1", &run.id(), &cols);
    let mut json = Vec::new();
    let mut failed = 0;
    for (i, ((name, _), v)) in rules.iter().zip(&verdicts).enumerate() {
        match v {
            Ok(v) => {
                let (giant, margin) = match v.giant {
                    Giant::Yes => ("yes", None),
                    Giant::No => ("no", None),
                    Giant::Undetermined { margin } => ("undetermined", Some(margin)),
                };
                if v.robust && v.giant != Giant::Yes {
                    return Err(CheckFailed(format!("{name}: robust but giant = {}", v.giant)).into());
                }
                t.push(vec![
                    i.to_string(),
                    name.clone(),
                    giant.into(),
                    fmt_opt(margin),
                    v.robust.to_string(),
                    fmt_opt(v.percolation_threshold),
                    fmt_opt(v.alpha_star),
                    fmt_opt(v.rho_min.map(|r| r.est)),
                    fmt_opt(v.rho_min.map(|r| r.lo)),
                    fmt_opt(v.rho_min.map(|r| r.hi)),
                    fmt_f64(v.a_half.est),
                    fmt_f64(v.c_half.est),
                    serde_json::to_value(v.evidence)?.as_str().unwrap_or_default().into(),
                ]);
                println!("{name}: giant {}, robust {}, threshold {}", v.giant, v.robust, fmt_opt(v.percolation_threshold));
                json.push(serde_json::to_value(v)?);
            }
            Err(e) => {
                failed += 1;
                eprintln!("{name}: {e:#}");
                let mut row = vec![i.to_string(), name.clone(), "failed".into()];
                row.resize(cols.len(), String::new());
                t.push(row);
                json.push(serde_json::json!({ "rule": name, "error": e.to_string() }));
            }
        }
    }
    run.table("criterion.csv", &t)?;
    run.json("criterion.json", &json)?;
    run.finish()?;
    if failed > 0 {
        bail!("{failed} rule(s) failed");
    }
    Ok(())
}

pub fn phase_diagram(c: &Common) -> Result<()> {
    let cfg: PhaseConfig = load(&c.config)?;
    let mut run = Run::start("phase-diagram", c, &cfg)?;
    let result = run_phase_diagram(&cfg, c.seed, run.workers)?;
    let id = run.id();
    run.table("phase-diagram.csv", &result.cell_table(&id))?;
    run.table("overlays.csv", &result.overlay_table(&id))?;
    let svg = run.path("phase-diagram.svg");
    emit_heatmap(&result, &svg)?;
    run.finish()?;
    let bad: Vec<String> = result
        .failures()
        .map(|c| format!("(gamma={}, beta={}) {:?}: {}", c.gamma, c.beta, c.status, c.detail))
        .collect();
    if !bad.is_empty() {
        return Err(CheckFailed(format!("{} cell(s) failed:\n  {}", bad.len(), bad.join("\n  "))).into());
    }
    Ok(())
}

/// Optional pass/fail limits for `theorem-check`.
#[derive(Debug, Default, Serialize, Deserialize)]
struct Limits {
    max_giant_delta: Option<f64>,
    max_second: Option<f64>,
    max_size_delta: Option<f64>,
    max_ambiguous: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TheoremCfg {
    #[serde(flatten)]
    check: TheoremConfig,
    #[serde(default)]
    limits: Limits,
}

pub fn theorem_check(c: &Common) -> Result<()> {
    let cfg: TheoremCfg = load(&c.config)?;
    let mut run = Run::start("theorem-check", c, &cfg)?;
    let r = run_theorem_check(&cfg.check, c.seed, run.workers)?;
    let id = run.id();
    run.table("sizes.csv", &r.size_table(&id))?;
    run.json("report.json", &r)?;
    run.finish()?;
    println!(
        "largest/N {:.4} ± {:.4}, second/N {:.4}, p_hat {:.4} [{:.4}, {:.4}], ambiguous {:.4}, max size delta {:.4}{}",
        r.largest_mean,
        r.largest_sd,
        r.second_mean,
        r.survival.p_hat,
        r.survival.ci_low,
        r.survival.ci_high,
        r.survival.ambiguous_fraction,
        r.max_size_delta,
        if r.degenerate { " (degenerate)" } else { "" }
    );
    let l = &cfg.limits;
    let mut fails = Vec::new();
    let mut check = |name: &str, v: f64, max: Option<f64>| {
        if let Some(m) = max {
            if !(v <= m) {
                fails.push(format!("{name} = {v} > {m}"));
            }
        }
    };
    check("|largest/N - p_hat|", r.giant_delta, l.max_giant_delta);
    check("second/N", r.second_mean, l.max_second);
    check("max size delta", r.max_size_delta, l.max_size_delta);
    check("ambiguous fraction", r.survival.ambiguous_fraction, l.max_ambiguous);
    if !fails.is_empty() {
        return Err(CheckFailed(fails.join("; ")).into());
    }
    Ok(())
}

pub fn percolation_sweep(c: &Common) -> Result<()> {
    let cfg: SweepConfig = load(&c.config)?;
    let mut run = Run::start("percolation-sweep", c, &cfg)?;
    let r = run_percolation_sweep(&cfg, c.seed, run.workers)?;
    let id = run.id();
    run.table("sweep.csv", &r.table(&id))?;
    run.finish()?;
    for row in &r.rows {
        println!("p {:.4}: largest/N {:.4} ± {:.4}", row.p, row.largest_mean, row.largest_sd);
    }
    Ok(())
}
