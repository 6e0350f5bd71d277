//! Recursive-descent parser for a single C function definition.
//!
//! Statements are the unit of interest: every declaration, assignment, call,
//! return, loop/branch condition and fallback expression gets a dense
//! statement id in source order. Variable occurrences inside statements become
//! `Ident` children so that data dependences can be attached to them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexer::{Token, TokenKind};
use super::FrontError;

pub type NodeId = usize;
pub type StmtId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Function,
    Param,
    Block,
    Decl,
    Assign,
    Call,
    If,
    While,
    For,
    Return,
    Expr,
    Condition,
    Ident,
}

impl NodeKind {
    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::Decl | NodeKind::Assign | NodeKind::Call | NodeKind::Return | NodeKind::Expr | NodeKind::Condition
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Function => "function",
            NodeKind::Param => "param",
            NodeKind::Block => "block",
            NodeKind::Decl => "decl",
            NodeKind::Assign => "assign",
            NodeKind::Call => "call",
            NodeKind::If => "if",
            NodeKind::While => "while",
            NodeKind::For => "for",
            NodeKind::Return => "return",
            NodeKind::Expr => "expr",
            NodeKind::Condition => "condition",
            NodeKind::Ident => "ident",
        }
    }
}

/// Position of a node inside its parent construct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    #[default]
    Plain,
    Then,
    Else,
    LoopBody,
    ForInit,
    ForCond,
    ForStep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Def {
    pub var: String,
    /// Ident node (or param node) carrying the defined name.
    pub node: NodeId,
    /// Strong definitions kill earlier definitions of the same variable.
    pub strong: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Use {
    pub var: String,
    pub node: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub defs: Vec<Def>,
    pub uses: Vec<Use>,
}

impl Access {
    pub fn def_vars(&self) -> BTreeSet<&str> {
        self.defs.iter().map(|d| d.var.as_str()).collect()
    }

    pub fn use_vars(&self) -> BTreeSet<&str> {
        self.uses.iter().map(|u| u.var.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub role: Role,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Tokens owned directly by this node (not by any child).
    pub tokens: Vec<Token>,
    /// Half-open token index range covered by the whole subtree.
    pub span: (usize, usize),
    pub stmt_id: Option<StmtId>,
    /// Statement kept verbatim because it is outside the supported subset.
    pub opaque: bool,
    pub access: Access,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    pub name: String,
    pub tokens: Vec<Token>,
    pub nodes: Vec<AstNode>,
    /// Statement id -> node id.
    pub statements: Vec<NodeId>,
}

impl Ast {
    pub fn root(&self) -> &AstNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn statement(&self, stmt: StmtId) -> &AstNode {
        &self.nodes[self.statements[stmt]]
    }

    pub fn statement_count(&self) -> usize {
        self.statements.len()
    }

    /// Every token of the subtree rooted at `id`, in source order.
    pub fn span_tokens(&self, id: NodeId) -> &[Token] {
        let (a, b) = self.nodes[id].span;
        &self.tokens[a..b]
    }

    /// Whitespace-joined token texts of a statement, used for alignment and
    /// preservation checks.
    pub fn statement_text(&self, stmt: StmtId) -> String {
        join_texts(self.span_tokens(self.statements[stmt]))
    }

    /// Re-serializes the tree by collecting every node's own tokens.
    pub fn reserialize(&self) -> Vec<Token> {
        let mut all: Vec<(usize, Token)> = Vec::with_capacity(self.tokens.len());
        for node in &self.nodes {
            let (a, b) = node.span;
            let child_ranges: Vec<(usize, usize)> = node.children.iter().map(|&c| self.nodes[c].span).collect();
            for i in a..b {
                if !child_ranges.iter().any(|&(ca, cb)| ca <= i && i < cb) {
                    all.push((i, self.tokens[i].clone()));
                }
            }
        }
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, t)| t).collect()
    }

    /// Nearest enclosing statement of a node (the node itself if it is one).
    pub fn enclosing_statement(&self, mut id: NodeId) -> Option<StmtId> {
        loop {
            let n = &self.nodes[id];
            if let Some(s) = n.stmt_id {
                return Some(s);
            }
            id = n.parent?;
        }
    }

    /// Statement nodes that are direct members of a block, as opposed to
    /// for-headers or unbraced branch bodies.
    pub fn in_block(&self, stmt: StmtId) -> bool {
        let node = self.statement(stmt);
        node.kind != NodeKind::Condition
            && node.role == Role::Plain
            && node.parent.is_some_and(|p| self.nodes[p].kind == NodeKind::Block)
    }

    /// All identifier token texts in the function (variables, fields, callees, types).
    pub fn identifier_names(&self) -> BTreeSet<String> {
        self.tokens.iter().filter(|t| t.is_ident() || t.kind == TokenKind::Keyword).map(|t| t.text.clone()).collect()
    }

    /// Names declared by parameters and local declarations.
    pub fn local_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            if matches!(n.kind, NodeKind::Param | NodeKind::Decl) {
                for d in &n.access.defs {
                    out.insert(d.var.clone());
                }
            }
        }
        out
    }
}

pub fn join_texts(tokens: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&t.text);
    }
    s
}

const TYPE_WORDS: &[&str] = &[
    "int", "char", "short", "long", "unsigned", "signed", "float", "double", "void", "_Bool", "const",
    "volatile", "static", "register", "extern", "auto", "struct", "union", "enum", "inline", "restrict",
    "typedef",
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-="];
const COMPOUND_PREFIX: &[&str] = &["*", "/", "%", "&", "|", "^", "<", ">"];

struct Builder {
    tokens: Vec<Token>,
    nodes: Vec<AstNode>,
    statements: Vec<NodeId>,
}

impl Builder {
    fn tok(&self, i: usize) -> Option<&Token> {
        self.tokens.get(i)
    }

    fn text(&self, i: usize) -> &str {
        self.tokens.get(i).map(|t| t.text.as_str()).unwrap_or("")
    }

    fn new_node(&mut self, kind: NodeKind, role: Role, parent: Option<NodeId>, span: (usize, usize)) -> NodeId {
        let id = self.nodes.len();
        let stmt_id = if kind.is_statement() {
            self.statements.push(id);
            Some(self.statements.len() - 1)
        } else {
            None
        };
        self.nodes.push(AstNode {
            id,
            kind,
            role,
            parent,
            children: Vec::new(),
            tokens: Vec::new(),
            span,
            stmt_id,
            opaque: false,
            access: Access::default(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    /// Index of the token matching the opener at `open` (which must be `(`, `[` or `{`).
    fn matching(&self, open: usize, end: usize) -> Option<usize> {
        let (o, c) = match self.text(open) {
            "(" => ("(", ")"),
            "[" => ("[", "]"),
            "{" => ("{", "}"),
            _ => return None,
        };
        let mut depth = 0i32;
        for i in open..end {
            let t = self.text(i);
            if t == o {
                depth += 1;
            } else if t == c {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
        }
        None
    }

    fn parse_function(&mut self) -> Result<String, FrontError> {
        let n = self.tokens.len();
        let mut depth = 0i32;
        let mut brace = None;
        for i in 0..n {
            match self.text(i) {
                "(" | "[" => depth += 1,
                ")" | "]" => depth -= 1,
                ";" | "=" if depth == 0 => return Err(FrontError::NotAFunction),
                "{" if depth == 0 => {
                    brace = Some(i);
                    break;
                }
                "}" if depth == 0 => return Err(FrontError::UnbalancedBraces),
                _ => {}
            }
        }
        let brace = brace.ok_or(FrontError::NotAFunction)?;
        if brace < 3 || self.text(brace - 1) != ")" {
            return Err(FrontError::NotAFunction);
        }
        // locate the opening paren of the parameter list
        let mut depth = 0i32;
        let mut open = None;
        for i in (0..brace).rev() {
            match self.text(i) {
                ")" => depth += 1,
                "(" => {
                    depth -= 1;
                    if depth == 0 {
                        open = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let open = open.ok_or(FrontError::NotAFunction)?;
        if open == 0 || !self.tok(open - 1).is_some_and(Token::is_ident) {
            return Err(FrontError::NotAFunction);
        }
        let name = self.text(open - 1).to_string();
        let close_body = self.matching(brace, n).ok_or(FrontError::UnbalancedBraces)?;
        if close_body + 1 != n {
            return if self.tokens[close_body + 1..].iter().any(|t| t.is("}") || t.is("{")) {
                Err(FrontError::UnbalancedBraces)
            } else {
                Err(FrontError::TrailingTokens)
            };
        }

        let root = self.new_node(NodeKind::Function, Role::Plain, None, (0, n));
        self.parse_params(root, open + 1, brace - 1);
        self.parse_block(root, Role::Plain, brace, close_body);
        Ok(name)
    }

    fn parse_params(&mut self, root: NodeId, start: usize, end: usize) {
        for (a, b) in self.split_top_level(start, end, ",") {
            if a == b {
                continue;
            }
            let only_void = b - a == 1 && self.text(a) == "void";
            if only_void {
                continue;
            }
            let id = self.new_node(NodeKind::Param, Role::Plain, Some(root), (a, b));
            let name_idx = (a..b)
                .rev()
                .find(|&i| self.tokens[i].is_ident() && self.bracket_depth(a, i) == 0)
                .or_else(|| (a..b).rev().find(|&i| self.tokens[i].is_ident()));
            if let Some(i) = name_idx {
                let var = self.text(i).to_string();
                self.nodes[id].access.defs.push(Def { var, node: id, strong: true });
            }
        }
    }

    /// Depth of `[`/`(` nesting at index `i` counted from `from`.
    fn bracket_depth(&self, from: usize, i: usize) -> i32 {
        let mut depth = 0;
        for k in from..i {
            match self.text(k) {
                "(" | "[" => depth += 1,
                ")" | "]" => depth -= 1,
                _ => {}
            }
        }
        depth
    }

    /// Splits `[start, end)` on `sep` at nesting depth zero.
    fn split_top_level(&self, start: usize, end: usize, sep: &str) -> Vec<(usize, usize)> {
        let mut parts = Vec::new();
        let mut depth = 0i32;
        let mut a = start;
        for i in start..end {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                t if t == sep && depth == 0 => {
                    parts.push((a, i));
                    a = i + 1;
                }
                _ => {}
            }
        }
        parts.push((a, end));
        parts
    }

    /// Parses `{ ... }` where `open`/`close` index the braces.
    fn parse_block(&mut self, parent: NodeId, role: Role, open: usize, close: usize) -> NodeId {
        let block = self.new_node(NodeKind::Block, role, Some(parent), (open, close + 1));
        let mut i = open + 1;
        while i < close {
            i = self.parse_statement(block, Role::Plain, i, close);
        }
        block
    }

    /// Parses one statement starting at `i`, not reaching past `limit`.
    /// Returns the index just past the statement.
    fn parse_statement(&mut self, parent: NodeId, role: Role, i: usize, limit: usize) -> usize {
        match self.text(i) {
            "{" => {
                if let Some(close) = self.matching(i, limit) {
                    self.parse_block(parent, role, i, close);
                    return close + 1;
                }
                self.opaque(parent, role, i, limit)
            }
            "if" => self.parse_if(parent, role, i, limit).unwrap_or_else(|| self.opaque(parent, role, i, limit)),
            "while" => self.parse_while(parent, role, i, limit).unwrap_or_else(|| self.opaque(parent, role, i, limit)),
            "for" => self.parse_for(parent, role, i, limit).unwrap_or_else(|| self.opaque(parent, role, i, limit)),
            "do" | "switch" | "case" | "default" | "else" | "asm" | "__asm__" | "typedef" => {
                self.opaque(parent, role, i, limit)
            }
            _ if self.tok(i).is_some_and(Token::is_ident) && self.text(i + 1) == ":" => {
                self.opaque(parent, role, i, limit)
            }
            _ => {
                let Some(semi) = self.find_semicolon(i, limit) else {
                    return self.opaque(parent, role, i, limit);
                };
                self.simple_statement(parent, role, i, semi + 1);
                semi + 1
            }
        }
    }

    /// `;` at depth zero before `limit`, failing on an unmatched closer.
    fn find_semicolon(&self, start: usize, limit: usize) -> Option<usize> {
        let mut depth = 0i32;
        for i in start..limit {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth < 0 {
                        return None;
                    }
                }
                ";" if depth == 0 => return Some(i),
                _ => {}
            }
        }
        None
    }

    fn opaque(&mut self, parent: NodeId, role: Role, start: usize, limit: usize) -> usize {
        let mut depth = 0i32;
        let mut end = limit;
        let mut i = start;
        while i < limit {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" => depth -= 1,
                "}" => {
                    if depth == 0 {
                        end = i;
                        break;
                    }
                    depth -= 1;
                    if depth == 0 && !matches!(self.text(i + 1), "while" | "else") {
                        end = i + 1;
                        break;
                    }
                }
                ";" if depth == 0 => {
                    end = i + 1;
                    break;
                }
                _ => {}
            }
            i += 1;
        }
        if end == start {
            // a stray closer; swallow it so parsing makes progress
            end = start + 1;
        }
        let id = self.new_node(NodeKind::Expr, role, Some(parent), (start, end));
        self.nodes[id].opaque = true;
        self.attach_access(id, start, end, None);
        end
    }

    fn paren_group(&self, open: usize, limit: usize) -> Option<usize> {
        (self.text(open) == "(").then(|| self.matching(open, limit)).flatten()
    }

    fn parse_if(&mut self, parent: NodeId, role: Role, i: usize, limit: usize) -> Option<usize> {
        let close = self.paren_group(i + 1, limit)?;
        if close + 1 >= limit || close == i + 2 {
            return None;
        }
        let id = self.new_node(NodeKind::If, role, Some(parent), (i, i));
        self.condition(id, Role::Plain, i + 2, close);
        let mut end = self.parse_statement(id, Role::Then, close + 1, limit);
        if self.text(end) == "else" && end + 1 < limit {
            end = self.parse_statement(id, Role::Else, end + 1, limit);
        }
        self.nodes[id].span = (i, end);
        Some(end)
    }

    fn parse_while(&mut self, parent: NodeId, role: Role, i: usize, limit: usize) -> Option<usize> {
        let close = self.paren_group(i + 1, limit)?;
        if close + 1 >= limit || close == i + 2 {
            return None;
        }
        let id = self.new_node(NodeKind::While, role, Some(parent), (i, i));
        self.condition(id, Role::Plain, i + 2, close);
        let end = self.parse_statement(id, Role::LoopBody, close + 1, limit);
        self.nodes[id].span = (i, end);
        Some(end)
    }

    fn parse_for(&mut self, parent: NodeId, role: Role, i: usize, limit: usize) -> Option<usize> {
        let close = self.paren_group(i + 1, limit)?;
        if close + 1 >= limit {
            return None;
        }
        let parts = self.split_top_level(i + 2, close, ";");
        if parts.len() != 3 {
            return None;
        }
        let id = self.new_node(NodeKind::For, role, Some(parent), (i, i));
        let (ia, ib) = parts[0];
        if ia < ib {
            // the init statement owns its terminating semicolon
            self.simple_statement(id, Role::ForInit, ia, ib + 1);
        }
        let (ca, cb) = parts[1];
        if ca < cb {
            self.condition(id, Role::ForCond, ca, cb);
        }
        let (sa, sb) = parts[2];
        if sa < sb {
            self.simple_statement(id, Role::ForStep, sa, sb);
        }
        let end = self.parse_statement(id, Role::LoopBody, close + 1, limit);
        self.nodes[id].span = (i, end);
        Some(end)
    }

    fn condition(&mut self, parent: NodeId, role: Role, a: usize, b: usize) {
        let id = self.new_node(NodeKind::Condition, role, Some(parent), (a, b));
        self.attach_access(id, a, b, None);
    }

    /// Declaration, assignment, call, return or plain expression in `[a, b)`.
    fn simple_statement(&mut self, parent: NodeId, role: Role, a: usize, b: usize) {
        let body_end = if self.text(b - 1) == ";" { b - 1 } else { b };
        let first = self.text(a);
        if first == "return" {
            let id = self.new_node(NodeKind::Return, role, Some(parent), (a, b));
            self.attach_access(id, a + 1, body_end, None);
            return;
        }
        if let Some(decl) = self.declaration_shape(a, body_end) {
            let id = self.new_node(NodeKind::Decl, role, Some(parent), (a, b));
            self.attach_access(id, a, body_end, Some(decl));
            return;
        }
        let kind = if self.top_level_assignment(a, body_end).is_some() {
            NodeKind::Assign
        } else if self.tok(a).is_some_and(Token::is_ident)
            && self.text(a + 1) == "("
            && self.matching(a + 1, body_end).is_some_and(|c| c + 1 == body_end)
        {
            NodeKind::Call
        } else {
            NodeKind::Expr
        };
        let id = self.new_node(kind, role, Some(parent), (a, b));
        self.attach_access(id, a, body_end, None);
    }

    /// Assignment operator at depth zero: returns (lhs_end, op_index).
    fn top_level_assignment(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let mut depth = 0i32;
        for i in a..b {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                t if depth == 0 && ASSIGN_OPS.contains(&t) => return Some((self.lvalue_end(a, i), i)),
                _ => {}
            }
        }
        None
    }

    /// End of the lvalue preceding the assignment operator at `op`, dropping
    /// the first character of a split compound operator such as `*=`.
    fn lvalue_end(&self, a: usize, op: usize) -> usize {
        if self.text(op) == "=" && op > a + 1 && COMPOUND_PREFIX.contains(&self.text(op - 1)) {
            let (p, q) = (&self.tokens[op - 1], &self.tokens[op]);
            if p.line == q.line && p.col + 1 == q.col {
                return op - 1;
            }
        }
        op
    }

    fn is_compound(&self, a: usize, op: usize) -> bool {
        self.text(op) != "=" || self.lvalue_end(a, op) != op
    }

    /// Detects a declaration and returns the index where the type prefix ends
    /// (the declared name of the first declarator).
    fn declaration_shape(&self, a: usize, b: usize) -> Option<usize> {
        let is_type_start = TYPE_WORDS.contains(&self.text(a));
        let typedef_start = self.tok(a).is_some_and(Token::is_ident) && {
            let mut j = a + 1;
            while self.text(j) == "*" {
                j += 1;
            }
            let pointer = j > a + 1;
            self.tok(j).is_some_and(Token::is_ident)
                && j < b
                && (!pointer || j + 1 == b || matches!(self.text(j + 1), "=" | "," | "["))
        };
        if !is_type_start && !typedef_start {
            return None;
        }
        // first declarator: up to top-level ',' or '=' or end
        let mut depth = 0i32;
        let mut first_end = b;
        for i in a..b {
            match self.text(i) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                "," | "=" if depth == 0 => {
                    first_end = i;
                    break;
                }
                _ => {}
            }
        }
        let name = (a..first_end).rev().find(|&i| self.tokens[i].is_ident() && self.bracket_depth(a, i) == 0)?;
        // `struct foo;` or a bare type has no declarator
        if name > a && matches!(self.text(name - 1), "struct" | "union" | "enum") {
            return None;
        }
        Some(name)
    }

    /// Creates Ident children for variable occurrences in `[a, b)` and fills
    /// in the statement's defs and uses.
    fn attach_access(&mut self, id: NodeId, a: usize, b: usize, decl_name: Option<usize>) {
        let occurrences = self.variable_occurrences(a, b, decl_name);
        let mut ident_of = std::collections::BTreeMap::new();
        for &i in &occurrences {
            let child = self.new_node(NodeKind::Ident, Role::Plain, Some(id), (i, i + 1));
            ident_of.insert(i, child);
        }
        let mut access = Access::default();
        let mut not_used = BTreeSet::new();

        if let Some(first_name) = decl_name {
            let end = b;
            let mut first = true;
            let parts = self.split_top_level(a, end, ",");
            for (pa, pb) in parts {
                let name_idx = if first {
                    Some(first_name)
                } else {
                    (pa..pb).find(|&i| ident_of.contains_key(&i) && self.bracket_depth(pa, i) == 0)
                };
                first = false;
                if let Some(ni) = name_idx {
                    if let Some(&node) = ident_of.get(&ni) {
                        access.defs.push(Def { var: self.text(ni).to_string(), node, strong: true });
                        not_used.insert(ni);
                    }
                }
            }
        } else {
            for op in a..b {
                let t = self.text(op);
                if !ASSIGN_OPS.contains(&t) {
                    continue;
                }
                let lv_end = self.lvalue_end(a, op);
                let compound = self.is_compound(a, op);
                let lv_start = self.lvalue_start(a, lv_end);
                let vars: Vec<usize> = (lv_start..lv_end).filter(|i| ident_of.contains_key(i)).collect();
                let Some(&base) = vars.first() else { continue };
                let bare = lv_end == lv_start + 1;
                access.defs.push(Def { var: self.text(base).to_string(), node: ident_of[&base], strong: bare });
                if bare && !compound {
                    not_used.insert(base);
                }
            }
            for &i in &occurrences {
                let inc = |k: Option<usize>| k.is_some_and(|k| matches!(self.text(k), "++" | "--"));
                if inc(Some(i + 1)) || (i > 0 && inc(Some(i - 1))) {
                    access.defs.push(Def { var: self.text(i).to_string(), node: ident_of[&i], strong: true });
                }
            }
        }
        for &i in &occurrences {
            if !not_used.contains(&i) {
                access.uses.push(Use { var: self.text(i).to_string(), node: ident_of[&i] });
            }
        }
        self.nodes[id].access = access;
    }

    /// Start of the lvalue ending at `end`: scans back to the nearest opener,
    /// separator or assignment at the same depth.
    fn lvalue_start(&self, a: usize, end: usize) -> usize {
        let mut depth = 0i32;
        let mut i = end;
        while i > a {
            let t = self.text(i - 1);
            match t {
                ")" | "]" => depth += 1,
                "(" | "[" => {
                    if depth == 0 {
                        return i;
                    }
                    depth -= 1;
                }
                "," | ";" | "&&" | "||" | "?" | ":" if depth == 0 => return i,
                _ if depth == 0 && ASSIGN_OPS.contains(&t) => return i,
                _ => {}
            }
            i -= 1;
        }
        a
    }

    /// Token indices in `[a, b)` that name variables: identifiers that are not
    /// field names, callees, type names, casts or labels.
    fn variable_occurrences(&self, a: usize, b: usize, decl_name: Option<usize>) -> Vec<usize> {
        let mut out = Vec::new();
        for i in a..b {
            if !self.tokens[i].is_ident() {
                continue;
            }
            if let Some(n) = decl_name {
                if i < n {
                    continue;
                }
            }
            let prev = if i > a { self.text(i - 1) } else { "" };
            let next = if i + 1 < b { self.text(i + 1) } else { "" };
            if matches!(prev, "->" | "." | "struct" | "union" | "enum" | "goto") {
                continue;
            }
            if next == "(" {
                continue;
            }
            if prev == "(" && self.is_cast(i, b) {
                continue;
            }
            out.push(i);
        }
        out
    }

    /// `( T )` or `( T * )` followed by an operand.
    fn is_cast(&self, i: usize, b: usize) -> bool {
        let mut j = i + 1;
        while j < b && self.text(j) == "*" {
            j += 1;
        }
        if j >= b || self.text(j) != ")" {
            return false;
        }
        let pointer = j > i + 1;
        let after = self.tok(j + 1);
        pointer
            || after.is_some_and(|t| {
                matches!(t.kind, TokenKind::Identifier | TokenKind::Number | TokenKind::StringLiteral) || t.is("(")
            }) && j + 1 < b
    }
}

/// Parses one function definition.
pub fn parse_function(tokens: Vec<Token>) -> Result<Ast, FrontError> {
    let mut b = Builder { tokens, nodes: Vec::new(), statements: Vec::new() };
    let name = b.parse_function()?;
    let Builder { tokens, mut nodes, statements } = b;
    // own tokens: span minus children spans
    for id in 0..nodes.len() {
        let (a, e) = nodes[id].span;
        let child_spans: Vec<(usize, usize)> = nodes[id].children.iter().map(|&c| nodes[c].span).collect();
        nodes[id].tokens = (a..e)
            .filter(|&i| !child_spans.iter().any(|&(ca, cb)| ca <= i && i < cb))
            .map(|i| tokens[i].clone())
            .collect();
    }
    Ok(Ast { name, tokens, nodes, statements })
}
