//! Mutation operators that rewrite only statements outside the frozen
//! (patch-related) set: identifier renaming, always-true guards, deletion,
//! renamed duplication and reordering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::{is_keyword, parse_source, render_tokens, Ast, FrontError, NodeKind, Role, StmtId, Token, TokenKind};
use crate::cpg::pdg_of;
use crate::ingest::{CweLabel, FunctionRecord, FunctionRole};
use crate::slicer::{frozen_statements, PatchTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    Rn,
    Ai,
    Del,
    Add,
    Ro,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [MutationKind::Rn, MutationKind::Ai, MutationKind::Del, MutationKind::Add, MutationKind::Ro];

    pub fn as_str(self) -> &'static str {
        match self {
            MutationKind::Rn => "rn",
            MutationKind::Ai => "ai",
            MutationKind::Del => "del",
            MutationKind::Add => "add",
            MutationKind::Ro => "ro",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MutationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown mutation `{s}` (expected rn, ai, del, add or ro)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MutationOp {
    pub kind: MutationKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutatedFunction {
    pub code: String,
    pub parent_id: String,
    pub op: MutationOp,
    pub label: u8,
    pub cwe: CweLabel,
    /// Original name -> fresh name, for `rn`.
    pub renames: BTreeMap<String, String>,
}

impl MutatedFunction {
    pub fn id(&self) -> String {
        format!("{}~{}{}", self.parent_id, self.op.kind, self.op.seed)
    }

    pub fn to_record(&self, parent: &FunctionRecord) -> FunctionRecord {
        let mut r = FunctionRecord::new(&parent.project, &parent.sha, self.cwe, FunctionRole::Mutated, self.code.clone());
        r.id = self.id();
        r.parent_id = Some(self.parent_id.clone());
        r.mutation = Some(self.op);
        r
    }
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("no candidate statement for `{0}`")]
    NoCandidates(MutationKind),
    #[error("cannot parse the input function: {0}")]
    Parse(#[from] FrontError),
    #[error("`{op}` produced an invalid mutant: {reason}")]
    Invalid { op: MutationKind, reason: String },
}

fn synth(text: &str) -> Token {
    let kind = if text.chars().all(|c| c.is_ascii_digit()) {
        TokenKind::Number
    } else if is_keyword(text) {
        TokenKind::Keyword
    } else if text.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
        TokenKind::Identifier
    } else {
        TokenKind::Punctuation
    };
    Token { text: text.to_string(), kind, line: 1, col: 1 }
}

/// `v0, v1, ...` skipping anything already used as an identifier or keyword.
pub struct FreshNames {
    taken: BTreeSet<String>,
    next: usize,
}

impl FreshNames {
    pub fn new(ast: &Ast) -> Self {
        FreshNames { taken: ast.identifier_names(), next: 0 }
    }

    pub fn next_name(&mut self) -> String {
        loop {
            let cand = format!("v{}", self.next);
            self.next += 1;
            if !is_keyword(&cand) && self.taken.insert(cand.clone()) {
                return cand;
            }
        }
    }
}

/// Token indices holding variable names: every identifier node plus the
/// declared name of each parameter.
fn variable_positions(ast: &Ast) -> BTreeMap<usize, String> {
    let mut out = BTreeMap::new();
    for n in &ast.nodes {
        match n.kind {
            NodeKind::Ident => {
                out.insert(n.span.0, ast.tokens[n.span.0].text.clone());
            }
            NodeKind::Param => {
                for d in &n.access.defs {
                    if let Some(i) = (n.span.0..n.span.1).rev().find(|&i| ast.tokens[i].text == d.var) {
                        out.insert(i, d.var.clone());
                    }
                }
            }
            _ => {}
        }
    }
    out
}

fn is_assignment_like(ast: &Ast, s: StmtId) -> bool {
    let n = ast.statement(s);
    match n.kind {
        NodeKind::Assign => true,
        NodeKind::Decl => ast.span_tokens(n.id).iter().any(|t| t.is("=")),
        _ => false,
    }
}

/// Directly inside a `{ }` block (so it can be removed, duplicated or moved).
fn in_block(ast: &Ast, s: StmtId) -> bool {
    ast.in_block(s) && !ast.statement(s).opaque
}

fn is_jump(ast: &Ast, s: StmtId) -> bool {
    let n = ast.statement(s);
    n.kind == NodeKind::Return || ast.span_tokens(n.id).first().is_some_and(|t| t.is("break") || t.is("continue") || t.is("goto"))
}

struct Edit {
    tokens: Vec<Token>,
    renames: BTreeMap<String, String>,
}

fn pick<T: Copy>(cands: &[T], rng: &mut ChaCha8Rng, op: MutationKind) -> Result<T, AugmentError> {
    cands.choose(rng).copied().ok_or(AugmentError::NoCandidates(op))
}

fn mutate_rn_tokens(ast: &Ast, rng: &mut ChaCha8Rng) -> Result<Edit, AugmentError> {
    let locals: Vec<String> = ast.local_variables().into_iter().collect();
    if locals.is_empty() {
        return Err(AugmentError::NoCandidates(MutationKind::Rn));
    }
    let k = rng.random_range(1..=locals.len());
    let mut chosen: Vec<String> = locals.choose_multiple(rng, k).cloned().collect();
    chosen.sort();
    let mut fresh = FreshNames::new(ast);
    let renames: BTreeMap<String, String> = chosen.into_iter().map(|v| (v, fresh.next_name())).collect();
    let mut tokens = ast.tokens.clone();
    for (i, var) in variable_positions(ast) {
        if let Some(new) = renames.get(&var) {
            tokens[i].text = new.clone();
        }
    }
    Ok(Edit { tokens, renames })
}

fn mutate_ai_tokens(ast: &Ast, frozen: &BTreeSet<StmtId>, rng: &mut ChaCha8Rng) -> Result<Edit, AugmentError> {
    let cands: Vec<StmtId> = (0..ast.statement_count())
        .filter(|s| !frozen.contains(s) && is_assignment_like(ast, *s))
        .filter(|&s| matches!(ast.statement(s).role, Role::Plain | Role::Then | Role::Else | Role::LoopBody))
        .collect();
    let s = pick(&cands, rng, MutationKind::Ai)?;
    let (a, b) = ast.statement(s).span;
    let mut tokens = ast.tokens[..a].to_vec();
    tokens.extend(["if", "(", "1", ")", "{"].map(synth));
    tokens.extend_from_slice(&ast.tokens[a..b]);
    tokens.push(synth("}"));
    tokens.extend_from_slice(&ast.tokens[b..]);
    Ok(Edit { tokens, renames: BTreeMap::new() })
}

/// Statements that may be removed without orphaning a use: outside the
/// frozen set, directly in a block, not a jump, defining nothing that any
/// other statement reads, and (for declarations) naming a variable that
/// appears nowhere else.
pub fn deletable_statements(ast: &Ast, frozen: &BTreeSet<StmtId>) -> Vec<StmtId> {
    let pdg = pdg_of(ast);
    let has_dependents: BTreeSet<StmtId> = pdg.data_edges().filter(|(a, b)| a != b).map(|(a, _)| a).collect();
    let positions = variable_positions(ast);
    (0..ast.statement_count())
        .filter(|s| !frozen.contains(s) && in_block(ast, *s) && !is_jump(ast, *s) && !has_dependents.contains(s))
        .filter(|&s| {
            let n = ast.statement(s);
            if n.kind != NodeKind::Decl {
                return true;
            }
            let names = n.access.def_vars();
            let (a, b) = n.span;
            !positions.iter().any(|(&i, v)| (i < a || i >= b) && names.contains(v.as_str()))
        })
        .collect()
}

fn mutate_del_tokens(ast: &Ast, frozen: &BTreeSet<StmtId>, rng: &mut ChaCha8Rng) -> Result<Edit, AugmentError> {
    let cands = deletable_statements(ast, frozen);
    if cands.is_empty() {
        return Err(AugmentError::NoCandidates(MutationKind::Del));
    }
    let k = rng.random_range(1..=cands.len());
    let doomed: Vec<(usize, usize)> = cands.choose_multiple(rng, k).map(|&s| ast.statement(s).span).collect();
    let tokens = ast
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| !doomed.iter().any(|&(a, b)| a <= *i && *i < b))
        .map(|(_, t)| t.clone())
        .collect();
    Ok(Edit { tokens, renames: BTreeMap::new() })
}

fn mutate_add_tokens(ast: &Ast, frozen: &BTreeSet<StmtId>, rng: &mut ChaCha8Rng) -> Result<Edit, AugmentError> {
    let cands: Vec<StmtId> =
        (0..ast.statement_count()).filter(|s| !frozen.contains(s) && is_assignment_like(ast, *s) && in_block(ast, *s)).collect();
    let s = pick(&cands, rng, MutationKind::Add)?;
    let (a, b) = ast.statement(s).span;
    let positions = variable_positions(ast);
    let mut fresh = FreshNames::new(ast);
    let mut local: BTreeMap<String, String> = BTreeMap::new();
    let copy: Vec<Token> = (a..b)
        .map(|i| match positions.get(&i) {
            Some(v) => {
                let name = local.entry(v.clone()).or_insert_with(|| fresh.next_name()).clone();
                Token { text: name, ..ast.tokens[i].clone() }
            }
            None => ast.tokens[i].clone(),
        })
        .collect();
    let mut tokens = ast.tokens[..b].to_vec();
    tokens.extend(copy);
    tokens.extend_from_slice(&ast.tokens[b..]);
    Ok(Edit { tokens, renames: BTreeMap::new() })
}

/// Adjacent statement pairs in the same block, both movable assignments,
/// with no def/use overlap in either direction.
pub fn reorderable_pairs(ast: &Ast, frozen: &BTreeSet<StmtId>) -> Vec<(StmtId, StmtId)> {
    let mut out = Vec::new();
    for n in ast.nodes.iter().filter(|n| n.kind == NodeKind::Block) {
        for w in n.children.windows(2) {
            let (x, y) = (ast.node(w[0]), ast.node(w[1]));
            let (Some(s1), Some(s2)) = (x.stmt_id, y.stmt_id) else { continue };
            let movable = |s: StmtId| !frozen.contains(&s) && is_assignment_like(ast, s) && in_block(ast, s);
            if !movable(s1) || !movable(s2) {
                continue;
            }
            let (d1, u1) = (x.access.def_vars(), x.access.use_vars());
            let (d2, u2) = (y.access.def_vars(), y.access.use_vars());
            let clash = d1.iter().any(|v| u2.contains(v) || d2.contains(v)) || d2.iter().any(|v| u1.contains(v));
            if !clash {
                out.push((s1, s2));
            }
        }
    }
    out.sort_unstable();
    out
}

fn mutate_ro_tokens(ast: &Ast, frozen: &BTreeSet<StmtId>, rng: &mut ChaCha8Rng) -> Result<Edit, AugmentError> {
    let (s1, s2) = pick(&reorderable_pairs(ast, frozen), rng, MutationKind::Ro)?;
    let ((a1, b1), (a2, b2)) = (ast.statement(s1).span, ast.statement(s2).span);
    let mut tokens = ast.tokens[..a1].to_vec();
    tokens.extend_from_slice(&ast.tokens[a2..b2]);
    tokens.extend_from_slice(&ast.tokens[b1..a2]);
    tokens.extend_from_slice(&ast.tokens[a1..b1]);
    tokens.extend_from_slice(&ast.tokens[b2..]);
    Ok(Edit { tokens, renames: BTreeMap::new() })
}

fn opaque_count(ast: &Ast) -> usize {
    ast.nodes.iter().filter(|n| n.opaque).count()
}

fn multiset(items: impl IntoIterator<Item = String>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i).or_default() += 1;
    }
    m
}

/// Maps fresh names in `text` tokens back to the originals.
pub fn undo_renames(text: &str, renames: &BTreeMap<String, String>) -> String {
    let back: BTreeMap<&str, &str> = renames.iter().map(|(k, v)| (v.as_str(), k.as_str())).collect();
    text.split(' ').map(|t| back.get(t).copied().unwrap_or(t)).collect::<Vec<_>>().join(" ")
}

/// Frozen statements missing from the mutant (after undoing renames).
pub fn missing_frozen(original: &Ast, frozen: &BTreeSet<StmtId>, mutant: &Ast, renames: &BTreeMap<String, String>) -> Vec<String> {
    let mut have = multiset((0..mutant.statement_count()).map(|s| undo_renames(&mutant.statement_text(s), renames)));
    let mut missing = Vec::new();
    for &s in frozen {
        let text = original.statement_text(s);
        match have.get_mut(&text) {
            Some(c) if *c > 0 => *c -= 1,
            _ => missing.push(text),
        }
    }
    missing
}

/// Applies one operator to a parsed function. The result is re-parsed and
/// checked: no new opaque statements and every frozen statement intact.
pub fn mutate_ast(ast: &Ast, frozen: &BTreeSet<StmtId>, op: MutationOp) -> Result<(String, BTreeMap<String, String>), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(op.seed);
    let edit = match op.kind {
        MutationKind::Rn => mutate_rn_tokens(ast, &mut rng)?,
        MutationKind::Ai => mutate_ai_tokens(ast, frozen, &mut rng)?,
        MutationKind::Del => mutate_del_tokens(ast, frozen, &mut rng)?,
        MutationKind::Add => mutate_add_tokens(ast, frozen, &mut rng)?,
        MutationKind::Ro => mutate_ro_tokens(ast, frozen, &mut rng)?,
    };
    let code = render_tokens(&edit.tokens);
    let invalid = |reason: String| AugmentError::Invalid { op: op.kind, reason };
    let mutant = parse_source(&code).map_err(|e| invalid(e.to_string()))?;
    if opaque_count(&mutant) > opaque_count(ast) {
        return Err(invalid("introduced an unparsable statement".into()));
    }
    let missing = missing_frozen(ast, frozen, &mutant, &edit.renames);
    if !missing.is_empty() {
        return Err(invalid(format!("lost frozen statement `{}`", missing[0])));
    }
    Ok((code, edit.renames))
}

fn mutate_record(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, op: MutationOp) -> Result<MutatedFunction, AugmentError> {
    let ast = parse_source(&f_v.code)?;
    let (code, renames) = mutate_ast(&ast, frozen, op)?;
    Ok(MutatedFunction { code, parent_id: f_v.id.clone(), op, label: 1, cwe: f_v.cwe, renames })
}

pub fn mutate_rn(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, seed: u64) -> Result<MutatedFunction, AugmentError> {
    mutate_record(f_v, frozen, MutationOp { kind: MutationKind::Rn, seed })
}

pub fn mutate_ai(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, seed: u64) -> Result<MutatedFunction, AugmentError> {
    mutate_record(f_v, frozen, MutationOp { kind: MutationKind::Ai, seed })
}

pub fn mutate_del(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, seed: u64) -> Result<MutatedFunction, AugmentError> {
    mutate_record(f_v, frozen, MutationOp { kind: MutationKind::Del, seed })
}

pub fn mutate_add(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, seed: u64) -> Result<MutatedFunction, AugmentError> {
    mutate_record(f_v, frozen, MutationOp { kind: MutationKind::Add, seed })
}

pub fn mutate_ro(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, seed: u64) -> Result<MutatedFunction, AugmentError> {
    mutate_record(f_v, frozen, MutationOp { kind: MutationKind::Ro, seed })
}

pub fn mutate(f_v: &FunctionRecord, frozen: &BTreeSet<StmtId>, op: MutationOp) -> Result<MutatedFunction, AugmentError> {
    mutate_record(f_v, frozen, op)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub generated: BTreeMap<MutationKind, usize>,
    pub no_candidates: BTreeMap<MutationKind, usize>,
    pub invalid: BTreeMap<MutationKind, usize>,
    pub unsliceable: usize,
}

/// Up to `per_op_target` mutants per operator (default: one per pair),
/// drawing per-attempt seeds from `seed` in pair order.
pub fn augment_dataset(
    pairs: &[PatchTuple],
    ops: &[MutationKind],
    per_op_target: Option<usize>,
    seed: u64,
) -> (Vec<MutatedFunction>, AugmentReport) {
    let mut report = AugmentReport::default();
    let frozen: Vec<Option<BTreeSet<StmtId>>> = pairs
        .par_iter()
        .map(|p| match frozen_statements(p) {
            Ok((_, f)) => Some(f),
            Err(e) => {
                log::debug!("skipping {}: {e}", p.f_v.id);
                None
            }
        })
        .collect();
    report.unsliceable = frozen.iter().filter(|f| f.is_none()).count();
    let target = per_op_target.unwrap_or(pairs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &kind in ops {
        let seeds: Vec<u64> = pairs.iter().map(|_| rng.random()).collect();
        let results: Vec<Option<Result<MutatedFunction, AugmentError>>> = pairs
            .par_iter()
            .zip(&frozen)
            .zip(&seeds)
            .map(|((p, f), &s)| f.as_ref().map(|f| mutate(&p.f_v, f, MutationOp { kind, seed: s })))
            .collect();
        let mut made = 0;
        for r in results.into_iter().flatten() {
            if made == target {
                break;
            }
            match r {
                Ok(m) => {
                    made += 1;
                    out.push(m);
                }
                Err(AugmentError::NoCandidates(_)) => *report.no_candidates.entry(kind).or_default() += 1,
                Err(e) => {
                    log::warn!("{e}");
                    *report.invalid.entry(kind).or_default() += 1;
                }
            }
        }
        report.generated.insert(kind, made);
    }
    (out, report)
}

/// Shuffles ops for callers that want a random operator order.
pub fn shuffled_ops(seed: u64) -> Vec<MutationKind> {
    let mut ops = MutationKind::ALL.to_vec();
    ops.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::{build_cpg, EdgeKind};

    fn record(code: &str) -> FunctionRecord {
        FunctionRecord::new("p", "s", CweLabel::Cwe120, FunctionRole::Vulnerable, code.to_string())
    }

    fn none() -> BTreeSet<StmtId> {
        BTreeSet::new()
    }

    fn body(code: &str) -> String {
        let ast = parse_source(code).unwrap();
        (0..ast.statement_count()).map(|s| ast.statement_text(s)).collect::<Vec<_>>().join(" | ")
    }

    #[test]
    fn rn_single_variable() {
        let m = mutate_rn(&record("void f() { int a = 1; return a; }"), &none(), 0).unwrap();
        assert_eq!(body(&m.code), "int v0 = 1 ; | return v0 ;");
        assert_eq!(m.renames, BTreeMap::from([("a".to_string(), "v0".to_string())]));
    }

    #[test]
    fn rn_skips_taken_names() {
        let m = mutate_rn(&record("void f() { int a = 1; a = v0(a); }"), &none(), 0).unwrap();
        assert_eq!(m.renames["a"], "v1");
    }

    #[test]
    fn rn_needs_locals() {
        assert!(matches!(mutate_rn(&record("void f() { g(); }"), &none(), 0), Err(AugmentError::NoCandidates(MutationKind::Rn))));
    }

    #[test]
    fn rn_keeps_graph_shape() {
        let f = record(crate::fixtures::HANDLER_VULNERABLE);
        let all: BTreeSet<_> = (0..4).collect();
        for seed in 0..10 {
            let m = mutate_rn(&f, &all, seed).unwrap();
            let a = build_cpg(&parse_source(&f.code).unwrap(), "a");
            let b = build_cpg(&parse_source(&m.code).unwrap(), "a");
            assert_eq!(a.edges, b.edges);
            assert_eq!(a.nodes.len(), b.nodes.len());
            for (x, y) in a.nodes.iter().zip(&b.nodes) {
                assert_eq!(x.kind, y.kind);
                for (tx, ty) in x.code.iter().zip(&y.code) {
                    assert!(tx == ty || m.renames.get(tx) == Some(ty), "{tx} vs {ty}");
                }
            }
        }
    }

    #[test]
    fn ai_wraps_assignment() {
        let m = mutate_ai(&record("void f(int b) { int a = b; }"), &none(), 3).unwrap();
        assert_eq!(m.code, "void f ( int b ) {\n    if ( 1 ) {\n        int a = b ;\n    }\n}\n");
        let ast = parse_source(&m.code).unwrap();
        let cpg = build_cpg(&ast, "f");
        let control: Vec<_> = cpg.edges_of(EdgeKind::Control, false).map(|e| (cpg.stmt_of[&e.src], cpg.stmt_of[&e.dst])).collect();
        assert_eq!(control, [(0, 1)]);
    }

    #[test]
    fn ai_needs_unfrozen_assignment() {
        let f = record("void f(int b) { int a = b; g(a); }");
        assert!(matches!(mutate_ai(&f, &BTreeSet::from([0]), 0), Err(AugmentError::NoCandidates(_))));
    }

    #[test]
    fn del_examples() {
        let m = mutate_del(&record("void f() { a(); b(); c(); }"), &BTreeSet::from([0, 2]), 9).unwrap();
        assert_eq!(body(&m.code), "a ( ) ; | c ( ) ;");
        for seed in 0..20 {
            let m = mutate_del(&record("void f() { a = 1; b = a; }"), &none(), seed).unwrap();
            assert_eq!(body(&m.code), "a = 1 ;");
        }
        let all: BTreeSet<_> = (0..3).collect();
        assert!(matches!(mutate_del(&record("void f() { a(); b(); c(); }"), &all, 0), Err(AugmentError::NoCandidates(_))));
    }

    #[test]
    fn add_duplicates_with_fresh_names() {
        let m = mutate_add(&record("void f(int b) { int a = b; }"), &none(), 0).unwrap();
        assert_eq!(body(&m.code), "int a = b ; | int v0 = v1 ;");
        let ast = parse_source(&m.code).unwrap();
        let pdg = pdg_of(&ast);
        assert!(pdg.data_edges().all(|(x, y)| x != 1 && y != 1));
        let f = record("void f(int b) { int a = b; }");
        assert!(matches!(mutate_add(&f, &BTreeSet::from([0]), 0), Err(AugmentError::NoCandidates(_))));
    }

    #[test]
    fn ro_examples() {
        let m = mutate_ro(&record("void f() { a = 1; b = 2; }"), &none(), 0).unwrap();
        assert_eq!(body(&m.code), "b = 2 ; | a = 1 ;");
        assert!(matches!(mutate_ro(&record("void f() { a = 1; b = a; }"), &none(), 0), Err(AugmentError::NoCandidates(_))));
        let f = record("void f() { a = 1; b = a; c = 2; d = c; }");
        let ast = parse_source(&f.code).unwrap();
        assert_eq!(reorderable_pairs(&ast, &none()), [(1, 2)]);
        let m = mutate_ro(&f, &none(), 5).unwrap();
        assert_eq!(body(&m.code), "a = 1 ; | c = 2 ; | b = a ; | d = c ;");
    }

    #[test]
    fn deterministic() {
        let f = record(crate::fixtures::corpus()[0].vulnerable);
        for kind in MutationKind::ALL {
            let op = MutationOp { kind, seed: 42 };
            let a = mutate(&f, &none(), op).ok();
            let b = mutate(&f, &none(), op).ok();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_dataset() {
        let (m, _) = augment_dataset(&[], &MutationKind::ALL, None, 0);
        assert!(m.is_empty());
    }

    #[test]
    fn mutant_ids() {
        let m = mutate_rn(&record("void f() { int a = 1; }"), &none(), 7).unwrap();
        assert_eq!(m.id(), "p@s#v~rn7");
        let r = m.to_record(&record(""));
        assert_eq!((r.role, r.label, r.parent_id.as_deref()), (FunctionRole::Mutated, 1, Some("p@s#v")));
    }
}
