//! Statement-level control flow and syntactic control dependence.

use std::collections::BTreeSet;

use crate::cfront::{Ast, NodeId, NodeKind, Role, StmtId};

struct LoopCtx {
    continue_to: Option<StmtId>,
    breaks: Vec<StmtId>,
}

struct FlowBuilder<'a> {
    ast: &'a Ast,
    edges: BTreeSet<(StmtId, StmtId)>,
    loops: Vec<LoopCtx>,
}

/// Lowest statement id inside a subtree, which is also the first statement
/// executed when control enters it.
pub(crate) fn first_statement(ast: &Ast, node: NodeId) -> Option<StmtId> {
    let n = ast.node(node);
    if let Some(s) = n.stmt_id {
        return Some(s);
    }
    n.children.iter().filter_map(|&c| first_statement(ast, c)).min()
}

fn child_with_role(ast: &Ast, node: NodeId, role: Role) -> Option<NodeId> {
    ast.node(node).children.iter().copied().find(|&c| ast.node(c).role == role)
}

fn condition_child(ast: &Ast, node: NodeId) -> Option<NodeId> {
    ast.node(node).children.iter().copied().find(|&c| ast.node(c).kind == NodeKind::Condition)
}

fn leading_word(ast: &Ast, node: NodeId) -> &str {
    ast.span_tokens(node).first().map(|t| t.text.as_str()).unwrap_or("")
}

impl FlowBuilder<'_> {
    fn link(&mut self, preds: &[StmtId], to: StmtId) {
        for &p in preds {
            self.edges.insert((p, to));
        }
    }

    /// Wires `node` after `preds` and returns the statements control leaves from.
    fn flow(&mut self, node: NodeId, preds: Vec<StmtId>) -> Vec<StmtId> {
        let ast = self.ast;
        let n = ast.node(node);
        match n.kind {
            NodeKind::Function => match n.children.iter().find(|&&c| ast.node(c).kind == NodeKind::Block) {
                Some(&body) => self.flow(body, preds),
                None => preds,
            },
            NodeKind::Block => {
                let mut cur = preds;
                for &c in &n.children {
                    cur = self.flow(c, cur);
                }
                cur
            }
            NodeKind::If => {
                let cond = condition_child(ast, node).expect("if without condition");
                let c = self.flow(cond, preds);
                let mut exits = match child_with_role(ast, node, Role::Then) {
                    Some(t) => self.flow(t, c.clone()),
                    None => c.clone(),
                };
                match child_with_role(ast, node, Role::Else) {
                    Some(e) => exits.extend(self.flow(e, c)),
                    None => exits.extend(c),
                }
                dedup(exits)
            }
            NodeKind::While => {
                let cond = condition_child(ast, node).expect("while without condition");
                let c = ast.node(cond).stmt_id.unwrap();
                self.link(&preds, c);
                self.loops.push(LoopCtx { continue_to: Some(c), breaks: Vec::new() });
                let body_exits = match child_with_role(ast, node, Role::LoopBody) {
                    Some(b) => self.flow(b, vec![c]),
                    None => vec![c],
                };
                self.link(&body_exits, c);
                let ctx = self.loops.pop().unwrap();
                let mut exits = vec![c];
                exits.extend(ctx.breaks);
                dedup(exits)
            }
            NodeKind::For => {
                let init = child_with_role(ast, node, Role::ForInit);
                let cond = child_with_role(ast, node, Role::ForCond);
                let step = child_with_role(ast, node, Role::ForStep);
                let body = child_with_role(ast, node, Role::LoopBody);
                let mut cur = match init {
                    Some(i) => self.flow(i, preds),
                    None => preds,
                };
                let cond_stmt = cond.and_then(|c| ast.node(c).stmt_id);
                let step_stmt = step.and_then(|s| ast.node(s).stmt_id);
                let body_first = body.and_then(|b| first_statement(ast, b));
                let head = cond_stmt.or(body_first).or(step_stmt);
                if let Some(c) = cond_stmt {
                    self.link(&cur, c);
                    cur = vec![c];
                }
                self.loops.push(LoopCtx { continue_to: step_stmt.or(head), breaks: Vec::new() });
                let mut tail = match body {
                    Some(b) => self.flow(b, cur.clone()),
                    None => cur.clone(),
                };
                if let Some(s) = step_stmt {
                    self.link(&tail, s);
                    tail = vec![s];
                }
                if let Some(h) = head {
                    self.link(&tail, h);
                }
                let ctx = self.loops.pop().unwrap();
                let mut exits: Vec<StmtId> = cond_stmt.into_iter().collect();
                exits.extend(ctx.breaks);
                dedup(exits)
            }
            _ => {
                let Some(s) = n.stmt_id else { return preds };
                self.link(&preds, s);
                if n.kind == NodeKind::Return {
                    return Vec::new();
                }
                if n.kind == NodeKind::Expr && !n.opaque {
                    match leading_word(ast, node) {
                        "break" => {
                            if let Some(l) = self.loops.last_mut() {
                                l.breaks.push(s);
                                return Vec::new();
                            }
                        }
                        "continue" => {
                            if let Some(l) = self.loops.last() {
                                if let Some(t) = l.continue_to {
                                    self.edges.insert((s, t));
                                }
                                return Vec::new();
                            }
                        }
                        _ => {}
                    }
                }
                vec![s]
            }
        }
    }
}

fn dedup(mut v: Vec<StmtId>) -> Vec<StmtId> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Intra-procedural control flow between statements.
pub fn statement_cfg(ast: &Ast) -> BTreeSet<(StmtId, StmtId)> {
    let mut b = FlowBuilder { ast, edges: BTreeSet::new(), loops: Vec::new() };
    b.flow(0, Vec::new());
    b.edges
}

/// Control dependences from the nearest syntactically governing condition.
pub fn statement_control_deps(ast: &Ast) -> BTreeSet<(StmtId, StmtId)> {
    let mut out = BTreeSet::new();
    walk_control(ast, 0, None, &mut out);
    out
}

fn walk_control(ast: &Ast, node: NodeId, governor: Option<StmtId>, out: &mut BTreeSet<(StmtId, StmtId)>) {
    let n = ast.node(node);
    if let (Some(s), Some(g)) = (n.stmt_id, governor) {
        out.insert((g, s));
    }
    match n.kind {
        NodeKind::If | NodeKind::While | NodeKind::For => {
            let cond = condition_child(ast, node).and_then(|c| ast.node(c).stmt_id);
            for &c in &n.children {
                let child = ast.node(c);
                let inner = match child.role {
                    Role::Then | Role::Else | Role::LoopBody | Role::ForStep => cond.or(governor),
                    _ => governor,
                };
                walk_control(ast, c, inner, out);
            }
        }
        _ if n.stmt_id.is_some() => {}
        _ => {
            for &c in &n.children {
                walk_control(ast, c, governor, out);
            }
        }
    }
}
