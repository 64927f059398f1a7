use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GenerationMode, Graph};
use crate::error::{Error, Result};
use crate::rule::AttachmentRule;

const HEADER: [&str; 2] = ["child", "parent"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationMeta {
    pub p: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub rule: AttachmentRule,
    pub n_vertices: usize,
    pub seed: u64,
    pub mode: GenerationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percolation: Option<PercolationMeta>,
}

/// The JSON sidecar sits next to the CSV: `graph.csv` → `graph.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_graph(path: &Path, graph: &Graph, meta: &GraphMeta) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(HEADER).map_err(|e| Error::csv(path, e))?;
    for (c, p) in graph.edges() {
        w.serialize((c, p)).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let f = File::create(&side).map_err(|e| Error::io(&side, e))?;
    let mut f = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut f, meta).map_err(|e| Error::json(&side, e))?;
    f.write_all(b"\n").and_then(|_| f.flush()).map_err(|e| Error::io(&side, e))
}

pub fn read_graph(path: &Path) -> Result<(Graph, GraphMeta)> {
    let side = sidecar_path(path);
    let f = File::open(&side).map_err(|e| Error::io(&side, e))?;
    let meta: GraphMeta = serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::json(&side, e))?;
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let found: Vec<String> = r.headers().map_err(|e| Error::csv(path, e))?.iter().map(String::from).collect();
    if found != HEADER {
        return Err(Error::Schema {
            path: path.into(),
            expected: HEADER.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    let mut edges = Vec::new();
    for rec in r.deserialize() {
        let e: (u32, u32) = rec.map_err(|e| Error::csv(path, e))?;
        edges.push(e);
    }
    let graph = Graph::from_edges(meta.n_vertices, &edges).map_err(|e| Error::Malformed {
        path: path.into(),
        detail: e.to_string(),
    })?;
    Ok((graph, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, GenerateConfig};

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rule = AttachmentRule::linear(0.2, 0.6).unwrap();
        let g = generate(&rule, 11, &GenerateConfig::new(300, GenerationMode::DegreeClass)).unwrap();
        let meta = GraphMeta {
            rule,
            n_vertices: 300,
            seed: 11,
            mode: GenerationMode::DegreeClass,
            percolation: None,
        };
        let path = dir.path().join("g.csv");
        write_graph(&path, &g, &meta).unwrap();
        let (g2, meta2) = read_graph(&path).unwrap();
        assert_eq!(g, g2);
        assert_eq!(meta, meta2);
        std::fs::write(&path, "a,b\n2,1\n").unwrap();
        assert!(matches!(read_graph(&path), Err(Error::Schema { .. })));
        std::fs::write(&path, "child,parent\n1,2\n").unwrap();
        assert!(matches!(read_graph(&path), Err(Error::Malformed { .. })));
    }
}
