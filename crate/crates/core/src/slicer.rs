//! Forward-then-backward dependence slicing from the changed statements of a
//! patch, plus the statement alignment that carries patched-side results
//! back onto the vulnerable function.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::{Ast, StmtId};
use crate::cpg::Pdg;
use crate::ingest::FunctionRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("statement {0} is not in the graph")]
    UnknownStatement(StmtId),
    #[error("patch changes no statement")]
    EmptyChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchTuple {
    pub f_v: FunctionRecord,
    pub f_p: FunctionRecord,
    pub s_del: BTreeSet<StmtId>,
    pub s_add: BTreeSet<StmtId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedSet {
    pub related_v: BTreeSet<StmtId>,
    pub related_p: BTreeSet<StmtId>,
}

/// Breadth-first closure from `start` (inclusive) along both data and
/// control edges.
pub fn traverse(start: StmtId, pdg: &Pdg, direction: Direction) -> Result<BTreeSet<StmtId>, SliceError> {
    if start >= pdg.stmts {
        return Err(SliceError::UnknownStatement(start));
    }
    let mut adj = vec![Vec::new(); pdg.stmts];
    for e in &pdg.edges {
        match direction {
            Direction::Forward => adj[e.src].push(e.dst),
            Direction::Backward => adj[e.dst].push(e.src),
        }
    }
    let mut visited = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if visited.insert(v) {
                queue.push_back(v);
            }
        }
    }
    Ok(visited)
}

fn slice_one(pdg: &Pdg, seeds: &BTreeSet<StmtId>) -> Result<BTreeSet<StmtId>, SliceError> {
    let mut related = BTreeSet::new();
    for &s in seeds {
        for t in traverse(s, pdg, Direction::Forward)? {
            if !related.contains(&t) {
                related.extend(traverse(t, pdg, Direction::Backward)?);
            }
        }
    }
    Ok(related)
}

/// Statements related to the change: everything that reaches (backward) a
/// statement reachable (forward) from a changed statement.
pub fn slice_related(pdg_v: &Pdg, pdg_p: &Pdg, s_del: &BTreeSet<StmtId>, s_add: &BTreeSet<StmtId>) -> Result<RelatedSet, SliceError> {
    if s_del.is_empty() && s_add.is_empty() {
        return Err(SliceError::EmptyChange);
    }
    Ok(RelatedSet { related_v: slice_one(pdg_v, s_del)?, related_p: slice_one(pdg_p, s_add)? })
}

/// Whitespace-normalized statement texts, one per statement id.
pub fn statement_keys(ast: &Ast) -> Vec<String> {
    (0..ast.statement_count()).map(|s| ast.statement_text(s)).collect()
}

/// Longest common subsequence over statement texts, as a map from patched
/// statement ids to vulnerable statement ids.
pub fn align_statements(f_v: &Ast, f_p: &Ast) -> BTreeMap<StmtId, StmtId> {
    lcs_alignment(&statement_keys(f_v), &statement_keys(f_p))
}

pub fn lcs_alignment(v: &[String], p: &[String]) -> BTreeMap<StmtId, StmtId> {
    let (n, m) = (v.len(), p.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if v[i] == p[j] { t[i + 1][j + 1] + 1 } else { t[i + 1][j].max(t[i][j + 1]) };
        }
    }
    let mut out = BTreeMap::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if v[i] == p[j] && t[i][j] == t[i + 1][j + 1] + 1 {
            out.insert(j, i);
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// The frozen set: related vulnerable statements plus the images of related
/// patched statements that have a counterpart in the vulnerable function.
pub fn related_in_vulnerable(rel: &RelatedSet, alignment: &BTreeMap<StmtId, StmtId>) -> BTreeSet<StmtId> {
    let mut out = rel.related_v.clone();
    out.extend(rel.related_p.iter().filter_map(|p| alignment.get(p).copied()));
    out
}

/// Parses, slices and aligns one patch; returns the frozen statements of f_v.
pub fn frozen_statements(patch: &PatchTuple) -> Result<(Ast, BTreeSet<StmtId>), crate::Error> {
    let ast_v = patch.f_v.parse()?;
    let ast_p = patch.f_p.parse()?;
    let rel = slice_related(&crate::cpg::pdg_of(&ast_v), &crate::cpg::pdg_of(&ast_p), &patch.s_del, &patch.s_add)?;
    let frozen = related_in_vulnerable(&rel, &align_statements(&ast_v, &ast_p));
    Ok((ast_v, frozen))
}
