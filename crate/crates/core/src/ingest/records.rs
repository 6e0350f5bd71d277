//! Line-delimited JSON record streams.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CommitRecord, CweLabel, IngestError};
use crate::cfront::NodeKind;
use crate::cpg::Cpg;

fn io_at(path: &Path, e: std::io::Error) -> std::io::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), IngestError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_at(path, e))?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IngestError> {
    let reader = BufReader::new(File::open(path).map_err(|e| io_at(path, e))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| IngestError::Record {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// One JSON object per line with `project`, `sha`, `message`, `diff`.
pub fn read_commit_dump(path: &Path) -> Result<Vec<CommitRecord>, IngestError> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    pub kind: NodeKind,
    pub code: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: usize,
    pub dst: usize,
    /// Edge type code 0..9.
    #[serde(rename = "type")]
    pub ty: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub function_id: String,
    pub label: u8,
    pub cwe: CweLabel,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl GraphRecord {
    pub fn from_cpg(cpg: &Cpg, label: u8, cwe: CweLabel) -> Self {
        GraphRecord {
            function_id: cpg.function_id.clone(),
            label,
            cwe,
            nodes: cpg.nodes.iter().map(|n| GraphNode { id: n.id, kind: n.kind, code: n.code.clone() }).collect(),
            edges: cpg.edges.iter().map(|e| GraphEdge { src: e.src, dst: e.dst, ty: e.ty.code() }).collect(),
        }
    }
}
