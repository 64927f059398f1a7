use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Graph;

/// Disjoint sets with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        ra
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

fn undirected_sets(graph: &Graph) -> UnionFind {
    let mut uf = UnionFind::new(graph.n_vertices());
    for (c, p) in graph.edges() {
        uf.union(c - 1, p - 1);
    }
    uf
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub n_vertices: usize,
    /// Sizes in decreasing order.
    pub component_sizes: Vec<usize>,
    pub largest: usize,
    pub second_largest: usize,
    /// Size `s` to the fraction of vertices lying in components of size `s`.
    pub size_histogram: BTreeMap<usize, f64>,
}

impl ComponentStats {
    pub fn largest_fraction(&self) -> f64 {
        self.largest as f64 / self.n_vertices.max(1) as f64
    }

    pub fn second_fraction(&self) -> f64 {
        self.second_largest as f64 / self.n_vertices.max(1) as f64
    }
}

/// Connected components of the undirected graph.
pub fn components(graph: &Graph) -> ComponentStats {
    let n = graph.n_vertices();
    let mut uf = undirected_sets(graph);
    let mut sizes: Vec<usize> = Vec::new();
    for v in 0..n as u32 {
        if uf.find(v) == v {
            sizes.push(uf.size[v as usize] as usize);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut size_histogram = BTreeMap::new();
    for &s in &sizes {
        *size_histogram.entry(s).or_insert(0.0) += s as f64;
    }
    size_histogram.values_mut().for_each(|x| *x /= n.max(1) as f64);
    ComponentStats {
        n_vertices: n,
        largest: sizes.first().copied().unwrap_or(0),
        second_largest: sizes.get(1).copied().unwrap_or(0),
        component_sizes: sizes,
        size_histogram,
    }
}

/// `(1/N) #{v : |C(v)| = k}` for `k = 1..=kmax`, index `k - 1`.
pub fn size_distribution(graph: &Graph, kmax: usize) -> Vec<f64> {
    let stats = components(graph);
    (1..=kmax)
        .map(|k| stats.size_histogram.get(&k).copied().unwrap_or(0.0))
        .collect()
}
