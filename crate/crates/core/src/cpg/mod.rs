//! Code property graph: the AST backbone plus control-flow, data-dependence
//! and control-dependence edges, and its statement-level projection (PDG).

mod dataflow;
mod flow;

pub use dataflow::{reaching_definitions, DefUse, Definition, ReachingDefs};
pub use flow::{statement_cfg, statement_control_deps};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::{Ast, NodeId, NodeKind, StmtId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Ast,
    FlowTo,
    DefineUse,
    Reach,
    Control,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 5] = [EdgeKind::Ast, EdgeKind::FlowTo, EdgeKind::DefineUse, EdgeKind::Reach, EdgeKind::Control];
}

/// Number of distinct edge type codes (five kinds, each forward or reverse).
pub const EDGE_TYPE_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeType {
    pub kind: EdgeKind,
    pub reverse: bool,
}

impl EdgeType {
    pub const fn forward(kind: EdgeKind) -> Self {
        EdgeType { kind, reverse: false }
    }

    pub fn reversed(self) -> Self {
        EdgeType { kind: self.kind, reverse: !self.reverse }
    }

    /// Codes 0..4 are forward kinds in declaration order, 5..9 their reverses.
    pub fn code(self) -> u8 {
        self.kind as u8 + if self.reverse { 5 } else { 0 }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        let kind = *EdgeKind::ALL.get(usize::from(code % 5))?;
        (code < 10).then_some(EdgeType { kind, reverse: code >= 5 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CpgEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub ty: EdgeType,
}

impl CpgEdge {
    fn new(src: NodeId, dst: NodeId, kind: EdgeKind) -> Self {
        CpgEdge { src, dst, ty: EdgeType::forward(kind) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpgNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub code: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cpg {
    pub function_id: String,
    pub nodes: Vec<CpgNode>,
    /// Sorted, without duplicate (src, dst, type) triples.
    pub edges: Vec<CpgEdge>,
    pub stmt_of: BTreeMap<NodeId, StmtId>,
}

impl Cpg {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges_of(&self, kind: EdgeKind, reverse: bool) -> impl Iterator<Item = &CpgEdge> {
        self.edges.iter().filter(move |e| e.ty.kind == kind && e.ty.reverse == reverse)
    }

    pub fn statement_count(&self) -> usize {
        self.stmt_of.values().copied().max().map_or(0, |m| m + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependence {
    Data,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PdgEdge {
    pub src: StmtId,
    pub dst: StmtId,
    pub kind: Dependence,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pdg {
    /// Statements are `0..stmts`.
    pub stmts: usize,
    pub edges: Vec<PdgEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdgError {
    #[error("edge {src}->{dst} references a statement outside 0..{stmts}")]
    DanglingEdge { src: StmtId, dst: StmtId, stmts: usize },
}

impl Pdg {
    pub fn new(stmts: usize, edges: impl IntoIterator<Item = PdgEdge>) -> Result<Self, PdgError> {
        let mut edges: Vec<PdgEdge> = edges.into_iter().collect();
        for e in &edges {
            if e.src >= stmts || e.dst >= stmts {
                return Err(PdgError::DanglingEdge { src: e.src, dst: e.dst, stmts });
            }
        }
        edges.sort();
        edges.dedup();
        Ok(Pdg { stmts, edges })
    }

    pub fn successors(&self, s: StmtId) -> impl Iterator<Item = StmtId> + '_ {
        self.edges.iter().filter(move |e| e.src == s).map(|e| e.dst)
    }

    pub fn predecessors(&self, s: StmtId) -> impl Iterator<Item = StmtId> + '_ {
        self.edges.iter().filter(move |e| e.dst == s).map(|e| e.src)
    }

    pub fn data_edges(&self) -> impl Iterator<Item = (StmtId, StmtId)> + '_ {
        self.edges.iter().filter(|e| e.kind == Dependence::Data).map(|e| (e.src, e.dst))
    }
}

/// Flow-to edges between statement nodes.
pub fn build_cfg(ast: &Ast) -> Vec<CpgEdge> {
    statement_cfg(ast)
        .into_iter()
        .map(|(a, b)| CpgEdge::new(ast.statements[a], ast.statements[b], EdgeKind::FlowTo))
        .collect()
}

/// Define/use edges between identifier nodes and reach edges between the
/// corresponding statement (or parameter) nodes.
pub fn build_dataflow(ast: &Ast, cfg: &[CpgEdge]) -> Vec<CpgEdge> {
    let stmt_of_node: BTreeMap<NodeId, StmtId> =
        ast.statements.iter().enumerate().map(|(s, &n)| (n, s)).collect();
    let flow: BTreeSet<(StmtId, StmtId)> = cfg
        .iter()
        .filter(|e| e.ty == EdgeType::forward(EdgeKind::FlowTo))
        .filter_map(|e| Some((*stmt_of_node.get(&e.src)?, *stmt_of_node.get(&e.dst)?)))
        .collect();
    let rd = reaching_definitions(ast, &flow);
    let mut out = BTreeSet::new();
    for p in &rd.pairs {
        let def = &rd.defs[p.def];
        out.insert(CpgEdge::new(def.node, p.use_node, EdgeKind::DefineUse));
        let def_site = match def.stmt {
            Some(s) => ast.statements[s],
            None => def.node,
        };
        out.insert(CpgEdge::new(def_site, ast.statements[p.use_stmt], EdgeKind::Reach));
    }
    out.into_iter().collect()
}

/// Control edges from governing conditions to the statements they guard.
pub fn build_control_dep(ast: &Ast) -> Vec<CpgEdge> {
    statement_control_deps(ast)
        .into_iter()
        .map(|(a, b)| CpgEdge::new(ast.statements[a], ast.statements[b], EdgeKind::Control))
        .collect()
}

pub fn build_cpg(ast: &Ast, function_id: &str) -> Cpg {
    let mut edges = BTreeSet::new();
    for n in &ast.nodes {
        for &c in &n.children {
            edges.insert(CpgEdge::new(n.id, c, EdgeKind::Ast));
        }
    }
    let cfg = build_cfg(ast);
    let semantic: Vec<CpgEdge> =
        cfg.iter().copied().chain(build_dataflow(ast, &cfg)).chain(build_control_dep(ast)).collect();
    for e in semantic {
        edges.insert(e);
        edges.insert(CpgEdge { src: e.dst, dst: e.src, ty: e.ty.reversed() });
    }

    let mut stmt_of = BTreeMap::new();
    let nodes = ast
        .nodes
        .iter()
        .map(|n| {
            if let Some(s) = ast.enclosing_statement(n.id) {
                stmt_of.insert(n.id, s);
            }
            let code = if n.kind.is_statement() || n.kind == NodeKind::Ident {
                ast.span_tokens(n.id).iter().map(|t| t.text.clone()).collect()
            } else {
                n.tokens.iter().map(|t| t.text.clone()).collect()
            };
            CpgNode { id: n.id, kind: n.kind, code }
        })
        .collect();
    Cpg { function_id: function_id.to_string(), nodes, edges: edges.into_iter().collect(), stmt_of }
}

/// Statement-granular dependence graph: data edges from define/use and reach,
/// control edges from control; reverse mirrors are dropped.
pub fn project_pdg(cpg: &Cpg) -> Pdg {
    let mut edges = BTreeSet::new();
    for e in cpg.edges.iter().filter(|e| !e.ty.reverse) {
        let kind = match e.ty.kind {
            EdgeKind::DefineUse | EdgeKind::Reach => Dependence::Data,
            EdgeKind::Control => Dependence::Control,
            _ => continue,
        };
        if let (Some(&src), Some(&dst)) = (cpg.stmt_of.get(&e.src), cpg.stmt_of.get(&e.dst)) {
            edges.insert(PdgEdge { src, dst, kind });
        }
    }
    Pdg { stmts: cpg.statement_count(), edges: edges.into_iter().collect() }
}

/// Parses `ast` into a CPG and projects it in one step.
pub fn pdg_of(ast: &Ast) -> Pdg {
    let mut pdg = project_pdg(&build_cpg(ast, &ast.name));
    pdg.stmts = ast.statement_count();
    pdg
}
