//! Reaching definitions over the statement CFG, solved with a worklist.

use std::collections::{BTreeSet, VecDeque};

use crate::cfront::{Ast, NodeId, NodeKind, StmtId};

/// One definition site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub var: String,
    /// Defining statement; `None` for parameters (defined on entry).
    pub stmt: Option<StmtId>,
    /// Ident or param node holding the name.
    pub node: NodeId,
    pub strong: bool,
}

/// A resolved def-use pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DefUse {
    pub def: usize,
    /// Ident node of the use.
    pub use_node: NodeId,
    pub use_stmt: StmtId,
}

pub struct ReachingDefs {
    pub defs: Vec<Definition>,
    /// Definitions reaching the entry of each statement.
    pub reach_in: Vec<BTreeSet<usize>>,
    pub pairs: Vec<DefUse>,
}

pub fn reaching_definitions(ast: &Ast, cfg: &BTreeSet<(StmtId, StmtId)>) -> ReachingDefs {
    let n = ast.statement_count();
    let mut defs = Vec::new();
    for node in &ast.nodes {
        if node.kind == NodeKind::Param {
            for d in &node.access.defs {
                defs.push(Definition { var: d.var.clone(), stmt: None, node: d.node, strong: true });
            }
        }
    }
    let entry_defs: BTreeSet<usize> = (0..defs.len()).collect();
    let mut gen = vec![BTreeSet::new(); n];
    for s in 0..n {
        for d in &ast.statement(s).access.defs {
            gen[s].insert(defs.len());
            defs.push(Definition { var: d.var.clone(), stmt: Some(s), node: d.node, strong: d.strong });
        }
    }
    let kill: Vec<BTreeSet<usize>> = (0..n)
        .map(|s| {
            let strong_vars: BTreeSet<&str> =
                gen[s].iter().filter(|&&d| defs[d].strong).map(|&d| defs[d].var.as_str()).collect();
            (0..defs.len()).filter(|d| !gen[s].contains(d) && strong_vars.contains(defs[*d].var.as_str())).collect()
        })
        .collect();

    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    for &(a, b) in cfg {
        preds[b].push(a);
        succs[a].push(b);
    }

    let mut reach_in = vec![BTreeSet::new(); n];
    let mut reach_out: Vec<BTreeSet<usize>> = gen.clone();
    let mut queue: VecDeque<StmtId> = (0..n).collect();
    let mut queued = vec![true; n];
    while let Some(s) = queue.pop_front() {
        queued[s] = false;
        let mut input: BTreeSet<usize> = if s == 0 { entry_defs.clone() } else { BTreeSet::new() };
        for &p in &preds[s] {
            input.extend(reach_out[p].iter().copied());
        }
        let mut output = gen[s].clone();
        output.extend(input.iter().filter(|d| !kill[s].contains(d)).copied());
        reach_in[s] = input;
        if output != reach_out[s] {
            reach_out[s] = output;
            for &t in &succs[s] {
                if !queued[t] {
                    queued[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }

    let mut pairs = Vec::new();
    for s in 0..n {
        for u in &ast.statement(s).access.uses {
            for &d in &reach_in[s] {
                if defs[d].var == u.var {
                    pairs.push(DefUse { def: d, use_node: u.node, use_stmt: s });
                }
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    ReachingDefs { defs, reach_in, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfront::parse_source;
    use crate::cpg::flow::statement_cfg;

    fn stmt_pairs(body: &str) -> Vec<(StmtId, StmtId)> {
        let ast = parse_source(&format!("void f() {{ {body} }}")).unwrap();
        let rd = reaching_definitions(&ast, &statement_cfg(&ast));
        let mut v: Vec<_> = rd.pairs.iter().filter_map(|p| Some((rd.defs[p.def].stmt?, p.use_stmt))).collect();
        v.dedup();
        v
    }

    #[test]
    fn single_def_use() {
        assert_eq!(stmt_pairs("int a = 1; b = a;"), [(0, 1)]);
    }

    #[test]
    fn redefinition_kills() {
        assert_eq!(stmt_pairs("a = 1; a = 2; b = a;"), [(1, 2)]);
    }

    #[test]
    fn both_branches_reach_join() {
        assert_eq!(stmt_pairs("a = 1; if (c) { a = 2; } b = a;"), [(0, 3), (2, 3)]);
    }

    #[test]
    fn loop_carried_dependence() {
        // i=0 ; cond i<n ; body i = i + 1
        let mut p = stmt_pairs("i = 0; while (i < n) { i = i + 1; }");
        p.sort();
        assert_eq!(p, [(0, 1), (0, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn weak_update_does_not_kill() {
        assert_eq!(stmt_pairs("p = a; *p = 1; q = p;"), [(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn parameters_reach_uses() {
        let ast = parse_source("int f(int n) { n = n + 1; return n; }").unwrap();
        let rd = reaching_definitions(&ast, &statement_cfg(&ast));
        let from_param: Vec<_> = rd.pairs.iter().filter(|p| rd.defs[p.def].stmt.is_none()).map(|p| p.use_stmt).collect();
        assert_eq!(from_param, [0]);
    }
}
