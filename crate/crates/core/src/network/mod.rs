//! Finite preferential attachment networks `G_N`.
//!
//! Vertex `n + 1` arrives at step `n` and links to each old vertex `m` with
//! probability `f(indeg m) / n`, independently.

mod components;
mod io;

pub use components::{components, size_distribution, ComponentStats, UnionFind};
pub use io::{read_graph, write_graph, GraphMeta, PercolationMeta};

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::AttachmentRule;
use crate::streams::{label, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// One Bernoulli draw per old vertex per step.
    Naive,
    /// One Binomial draw per indegree class per step.
    DegreeClass,
}

impl std::str::FromStr for GenerationMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "naive" => Ok(GenerationMode::Naive),
            "degree_class" | "degree-class" => Ok(GenerationMode::DegreeClass),
            _ => Err(format!("unknown generation mode {s:?}")),
        }
    }
}

/// Edges `child -> parent` with `child > parent`, vertices labelled `1..=N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    children: Vec<u32>,
    parents: Vec<u32>,
    indegree: Vec<u32>,
}

impl Graph {
    pub fn empty(n_vertices: usize) -> Self {
        Graph {
            n_vertices,
            children: Vec::new(),
            parents: Vec::new(),
            indegree: vec![0; n_vertices],
        }
    }

    /// Builds a graph from `(child, parent)` pairs, checking the invariants.
    pub fn from_edges(n_vertices: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = Graph::empty(n_vertices);
        for &(c, p) in edges {
            g.push(c, p);
        }
        g.check()?;
        Ok(g)
    }

    fn push(&mut self, child: u32, parent: u32) {
        self.children.push(child);
        self.parents.push(parent);
        if let Some(d) = self.indegree.get_mut(parent as usize - 1) {
            *d += 1;
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.children.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.children.iter().copied().zip(self.parents.iter().copied())
    }

    /// Indegree of vertex `v` (1-based).
    pub fn indegree(&self, v: u32) -> u32 {
        self.indegree[v as usize - 1]
    }

    pub fn indegrees(&self) -> &[u32] {
        &self.indegree
    }

    /// Outdegree of every vertex, indexed from 0.
    pub fn outdegrees(&self) -> Vec<u32> {
        let mut out = vec![0; self.n_vertices];
        for &c in &self.children {
            out[c as usize - 1] += 1;
        }
        out
    }

    /// Labels in range, edges young to old, no duplicates, indegrees
    /// consistent with the edge list.
    pub fn check(&self) -> Result<()> {
        let n = self.n_vertices as u32;
        let mut seen = std::collections::HashSet::with_capacity(self.n_edges());
        let mut indeg = vec![0u32; self.n_vertices];
        for (c, p) in self.edges() {
            if p < 1 || c > n || c <= p {
                return Err(Error::Invariant(format!("edge {c} -> {p} in a graph on {n} vertices")));
            }
            if !seen.insert((c, p)) {
                return Err(Error::Invariant(format!("duplicate edge {c} -> {p}")));
            }
            indeg[p as usize - 1] += 1;
        }
        if indeg != self.indegree {
            return Err(Error::Invariant("indegrees disagree with the edge list".into()));
        }
        Ok(())
    }
}

/// Probability that vertex `n + 1` links to a given old vertex of indegree
/// `k` when `n` vertices exist. Shared by both modes.
#[inline]
fn link_probability(rule: &AttachmentRule, k: u32, n: usize) -> f64 {
    (rule.eval(k as u64) / n as f64).min(1.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub n_vertices: usize,
    pub mode: GenerationMode,
    /// Abort once the edge list would exceed this length.
    pub max_edges: usize,
}

impl GenerateConfig {
    pub fn new(n_vertices: usize, mode: GenerationMode) -> Self {
        GenerateConfig {
            n_vertices,
            mode,
            max_edges: 50 * n_vertices.max(1),
        }
    }
}

/// Step `n` (with `n` vertices present) draws from its own stream
/// `(seed, "generate", n)`. The two modes agree in law, not pathwise.
pub fn generate(rule: &AttachmentRule, seed: u64, cfg: &GenerateConfig) -> Result<Graph> {
    if cfg.n_vertices < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "n_vertices",
            value: cfg.n_vertices as f64,
            bound: ">= 1",
        });
    }
    if cfg.n_vertices > u32::MAX as usize {
        return Err(Error::ParameterOutOfRange {
            name: "n_vertices",
            value: cfg.n_vertices as f64,
            bound: "< 2^32",
        });
    }
    let g = match cfg.mode {
        GenerationMode::Naive => generate_naive(rule, seed, cfg)?,
        GenerationMode::DegreeClass => generate_classes(rule, seed, cfg)?,
    };
    debug_assert!(g.check().is_ok());
    Ok(g)
}

fn step_stream(seed: u64, n: usize) -> crate::streams::Rng {
    stream(seed, &[label("generate"), n as u64])
}

fn generate_naive(rule: &AttachmentRule, seed: u64, cfg: &GenerateConfig) -> Result<Graph> {
    let mut g = Graph::empty(cfg.n_vertices);
    for n in 1..cfg.n_vertices {
        let mut rng = step_stream(seed, n);
        let child = n as u32 + 1;
        let start = g.n_edges();
        for m in 1..=n as u32 {
            let p = link_probability(rule, g.indegree[m as usize - 1], n);
            if rng.gen::<f64>() < p {
                if g.n_edges() == cfg.max_edges {
                    return Err(Error::EdgeBudget { cap: cfg.max_edges, step: n });
                }
                g.children.push(child);
                g.parents.push(m);
            }
        }
        // indegrees seen at step n must be those of G_n
        for i in start..g.n_edges() {
            g.indegree[g.parents[i] as usize - 1] += 1;
        }
    }
    Ok(g)
}

/// Vertices bucketed by indegree with swap-remove bookkeeping.
struct Classes {
    members: Vec<Vec<u32>>,
    slot: Vec<u32>,
}

impl Classes {
    fn insert(&mut self, v: u32, k: usize) {
        if self.members.len() <= k {
            self.members.resize_with(k + 1, Vec::new);
        }
        self.slot[v as usize - 1] = self.members[k].len() as u32;
        self.members[k].push(v);
    }

    fn promote(&mut self, v: u32, k: usize) {
        let i = self.slot[v as usize - 1] as usize;
        let bucket = &mut self.members[k];
        bucket.swap_remove(i);
        if let Some(&moved) = bucket.get(i) {
            self.slot[moved as usize - 1] = i as u32;
        }
        self.insert(v, k + 1);
    }
}

fn generate_classes(rule: &AttachmentRule, seed: u64, cfg: &GenerateConfig) -> Result<Graph> {
    let mut g = Graph::empty(cfg.n_vertices);
    let mut classes = Classes {
        members: vec![vec![1]],
        slot: vec![0; cfg.n_vertices],
    };
    let mut chosen: Vec<u32> = Vec::new();
    for n in 1..cfg.n_vertices {
        let mut rng = step_stream(seed, n);
        chosen.clear();
        for (k, bucket) in classes.members.iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let p = link_probability(rule, k as u32, n);
            let m = if p >= 1.0 {
                bucket.len() as u64
            } else {
                Binomial::new(bucket.len() as u64, p)
                    .expect("probability in [0, 1]")
                    .sample(&mut rng)
            };
            if m > 0 {
                for i in index::sample(&mut rng, bucket.len(), m as usize) {
                    chosen.push(bucket[i]);
                }
            }
        }
        if g.n_edges() + chosen.len() > cfg.max_edges {
            return Err(Error::EdgeBudget { cap: cfg.max_edges, step: n });
        }
        chosen.sort_unstable();
        let child = n as u32 + 1;
        for &m in &chosen {
            let k = g.indegree[m as usize - 1] as usize;
            classes.promote(m, k);
            g.push(child, m);
        }
        classes.insert(child, 0);
    }
    Ok(g)
}

/// Keeps edge `e` iff its uniform `U_e < p`. The uniforms depend only on
/// `(seed, e)`, so for a fixed seed the kept set grows with `p`.
pub fn percolate(graph: &Graph, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            bound: "0 <= p <= 1",
        });
    }
    let mut rng = stream(seed, &[label("percolate")]);
    let mut out = Graph::empty(graph.n_vertices);
    for (c, q) in graph.edges() {
        if rng.gen::<f64>() < p {
            out.push(c, q);
        }
    }
    Ok(out)
}

/// Fraction of vertices with indegree `k`, for `k` up to the maximum.
pub fn indegree_histogram(graph: &Graph) -> Vec<f64> {
    let max = graph.indegree.iter().copied().max().unwrap_or(0) as usize;
    let mut h = vec![0.0; max + 1];
    for &d in &graph.indegree {
        h[d as usize] += 1.0;
    }
    let n = graph.n_vertices.max(1) as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// Total variation between the indegree histogram and the limit weights
/// `μ_k`, over `k <= kmax` plus one tail bucket.
pub fn compare_mu(graph: &Graph, rule: &AttachmentRule, kmax: u64) -> f64 {
    let emp = indegree_histogram(graph);
    let mu = rule.mu_vector(kmax);
    let mut tv = 0.0;
    let (mut emp_head, mut mu_head) = (0.0, 0.0);
    for k in 0..=kmax as usize {
        let e = emp.get(k).copied().unwrap_or(0.0);
        tv += (e - mu[k]).abs();
        emp_head += e;
        mu_head += mu[k];
    }
    let tail = ((1.0 - emp_head).max(0.0) - (1.0 - mu_head).max(0.0)).abs();
    (0.5 * (tv + tail)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(rule: &AttachmentRule, n: usize, seed: u64, mode: GenerationMode) -> Graph {
        generate(rule, seed, &GenerateConfig::new(n, mode)).unwrap()
    }

    #[test]
    fn tiny_graphs() {
        let rule = AttachmentRule::constant(0.7).unwrap();
        for mode in [GenerationMode::Naive, GenerationMode::DegreeClass] {
            let g = gen(&rule, 1, 1, mode);
            assert_eq!((g.n_vertices(), g.n_edges()), (1, 0));
            let reps = 20_000;
            let hits = (0..reps).filter(|&s| gen(&rule, 2, s, mode).n_edges() == 1).count();
            let p = hits as f64 / reps as f64;
            let sd = (0.7 * 0.3 / reps as f64).sqrt();
            assert!((p - 0.7).abs() < 4.0 * sd, "{mode:?}: {p}");
        }
    }

    #[test]
    fn invariants_hold() {
        let rule = AttachmentRule::linear(0.4, 0.9).unwrap();
        for mode in [GenerationMode::Naive, GenerationMode::DegreeClass] {
            for seed in 0..5 {
                let g = gen(&rule, 500, seed, mode);
                g.check().unwrap();
                assert!(g.edges().all(|(c, p)| c > p));
            }
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let rule = AttachmentRule::sqrt(0.5, 0.8).unwrap();
        for mode in [GenerationMode::Naive, GenerationMode::DegreeClass] {
            assert_eq!(gen(&rule, 800, 9, mode), gen(&rule, 800, 9, mode));
        }
    }

    #[test]
    fn constant_rule_outdegree_is_poisson_one() {
        let rule = AttachmentRule::constant(1.0).unwrap();
        let g = gen(&rule, 50_000, 3, GenerationMode::DegreeClass);
        let out = g.outdegrees();
        let tail = &out[out.len() / 2..];
        let mean = tail.iter().map(|&d| d as f64).sum::<f64>() / tail.len() as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
        let zero = tail.iter().filter(|&&d| d == 0).count() as f64 / tail.len() as f64;
        assert!((zero - (-1f64).exp()).abs() < 0.02, "{zero}");
    }

    #[test]
    fn percolation_edges() {
        let rule = AttachmentRule::constant(1.0).unwrap();
        let g = gen(&rule, 5000, 4, GenerationMode::DegreeClass);
        assert_eq!(percolate(&g, 1.0, 1).unwrap(), g);
        let none = percolate(&g, 0.0, 1).unwrap();
        assert_eq!(none.n_edges(), 0);
        assert!(none.indegrees().iter().all(|&d| d == 0));
        let half = percolate(&g, 0.3, 1).unwrap();
        half.check().unwrap();
        let m = g.n_edges() as f64;
        let sd = (m * 0.3 * 0.7).sqrt();
        assert!((half.n_edges() as f64 - 0.3 * m).abs() < 3.0 * sd);
        let more = percolate(&g, 0.6, 1).unwrap();
        let kept: std::collections::HashSet<_> = more.edges().collect();
        assert!(half.edges().all(|e| kept.contains(&e)));
        assert!(percolate(&g, 1.5, 1).is_err());
    }

    #[test]
    fn histogram_and_tv() {
        let rule = AttachmentRule::constant(1.0).unwrap();
        let g = Graph::empty(1);
        assert_eq!(indegree_histogram(&g), vec![1.0]);
        let tv = compare_mu(&g, &rule, 5);
        assert!((tv - 0.5).abs() < 1e-12, "{tv}");
        let big = gen(&rule, 20_000, 5, GenerationMode::DegreeClass);
        let tv = compare_mu(&big, &rule, 20);
        assert!((0.0..0.02).contains(&tv), "{tv}");
    }

    #[test]
    fn edge_budget() {
        let rule = AttachmentRule::constant(1.0).unwrap();
        let cfg = GenerateConfig { max_edges: 10, ..GenerateConfig::new(1000, GenerationMode::Naive) };
        assert!(matches!(generate(&rule, 1, &cfg), Err(Error::EdgeBudget { cap: 10, .. })));
    }
}
