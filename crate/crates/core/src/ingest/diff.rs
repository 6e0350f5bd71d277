//! Unified diff parsing and location of the C functions a diff touches.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffLine {
    Context(String),
    Del(String),
    Add(String),
}

impl DiffLine {
    pub fn text(&self) -> &str {
        match self {
            DiffLine::Context(s) | DiffLine::Del(s) | DiffLine::Add(s) => s,
        }
    }

    pub fn is_change(&self) -> bool {
        !matches!(self, DiffLine::Context(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    /// Text after the closing `@@`, usually the enclosing function signature.
    pub section: String,
    pub lines: Vec<DiffLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub old_path: String,
    pub new_path: String,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    pub fn path(&self) -> &str {
        if self.new_path == "/dev/null" {
            &self.old_path
        } else {
            &self.new_path
        }
    }

    pub fn is_c_source(&self) -> bool {
        let p = self.path();
        p.ends_with(".c") || p.ends_with(".h")
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedDiff { line, reason: reason.into() }
}

fn strip_prefix_path(p: &str) -> String {
    let p = p.split('\t').next().unwrap_or(p).trim_end();
    p.strip_prefix("a/").or_else(|| p.strip_prefix("b/")).unwrap_or(p).to_string()
}

fn parse_range(s: &str, line: usize) -> Result<(usize, usize), IngestError> {
    let (start, len) = match s.split_once(',') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let start = start.parse().map_err(|_| malformed(line, format!("bad range `{s}`")))?;
    let len = match len {
        Some(l) => l.parse().map_err(|_| malformed(line, format!("bad range `{s}`")))?,
        None => 1,
    };
    Ok((start, len))
}

fn parse_hunk_header(text: &str, line: usize) -> Result<Hunk, IngestError> {
    let rest = text.strip_prefix("@@ ").ok_or_else(|| malformed(line, "bad hunk header"))?;
    let (ranges, section) = rest.split_once(" @@").ok_or_else(|| malformed(line, "unterminated hunk header"))?;
    let mut parts = ranges.split_whitespace();
    let old = parts.next().and_then(|p| p.strip_prefix('-')).ok_or_else(|| malformed(line, "missing old range"))?;
    let new = parts.next().and_then(|p| p.strip_prefix('+')).ok_or_else(|| malformed(line, "missing new range"))?;
    let (old_start, old_len) = parse_range(old, line)?;
    let (new_start, new_len) = parse_range(new, line)?;
    Ok(Hunk { old_start, old_len, new_start, new_len, section: section.trim().to_string(), lines: Vec::new() })
}

/// Parses a (possibly multi-file) unified diff. Hunk bodies must match the
/// line counts in their headers.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FileDiff>, IngestError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files: Vec<FileDiff> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let l = lines[i];
        if let Some(old) = l.strip_prefix("--- ") {
            let new = lines
                .get(i + 1)
                .and_then(|n| n.strip_prefix("+++ "))
                .ok_or_else(|| malformed(i + 2, "`---` not followed by `+++`"))?;
            files.push(FileDiff { old_path: strip_prefix_path(old), new_path: strip_prefix_path(new), hunks: Vec::new() });
            i += 2;
            continue;
        }
        if l.starts_with("@@") {
            let file = files.last_mut().ok_or_else(|| malformed(i + 1, "hunk before file header"))?;
            let mut hunk = parse_hunk_header(l, i + 1)?;
            let (mut old_left, mut new_left) = (hunk.old_len, hunk.new_len);
            i += 1;
            while old_left > 0 || new_left > 0 {
                let Some(&body) = lines.get(i) else {
                    return Err(malformed(i + 1, "hunk shorter than its header"));
                };
                let (tag, rest) = if body.is_empty() { (' ', "") } else { (body.chars().next().unwrap(), &body[1..]) };
                match tag {
                    ' ' if old_left > 0 && new_left > 0 => {
                        old_left -= 1;
                        new_left -= 1;
                        hunk.lines.push(DiffLine::Context(rest.to_string()));
                    }
                    '-' if old_left > 0 => {
                        old_left -= 1;
                        hunk.lines.push(DiffLine::Del(rest.to_string()));
                    }
                    '+' if new_left > 0 => {
                        new_left -= 1;
                        hunk.lines.push(DiffLine::Add(rest.to_string()));
                    }
                    '\\' => {}
                    _ => return Err(malformed(i + 1, "hunk body does not match header counts")),
                }
                i += 1;
            }
            while lines.get(i).is_some_and(|l| l.starts_with('\\')) {
                i += 1;
            }
            file.hunks.push(hunk);
            continue;
        }
        i += 1;
    }
    Ok(files)
}

const CONTROL_WORDS: &[&str] = &["if", "while", "for", "switch", "return", "else", "do", "sizeof"];

/// Name of the function whose definition starts on this line, if the line
/// looks like an unindented C function signature.
pub fn signature_name(line: &str) -> Option<String> {
    let first = line.chars().next()?;
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    let t = line.trim_end();
    if t.ends_with(';') || t.starts_with("typedef") {
        return None;
    }
    let open = t.find('(')?;
    let before = t[..open].trim_end();
    let name_start = before.rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).map_or(0, |p| p + 1);
    let name = &before[name_start..];
    if name.is_empty() || CONTROL_WORDS.contains(&name) || name.chars().next().unwrap().is_ascii_digit() {
        return None;
    }
    Some(name.to_string())
}

fn is_closing_brace(line: &str) -> bool {
    line.trim_end() == "}"
}

/// A complete function definition found inside a hunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpan {
    pub name: String,
    /// Index of the signature line within `hunk.lines`.
    pub start: usize,
    /// Index of the closing brace line (inclusive).
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Touched {
    /// Every changed line lies inside one of these complete functions.
    Functions(Vec<(usize, usize, FunctionSpan)>),
    /// A changed line lies outside any complete function in its hunk.
    Ambiguous,
}

fn function_spans(hunk: &Hunk) -> Vec<FunctionSpan> {
    let mut out = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (idx, l) in hunk.lines.iter().enumerate() {
        let text = l.text();
        if let Some(name) = signature_name(text) {
            // a rewritten signature shows up as a -/+ pair of the same name
            if open.as_ref().is_none_or(|(n, _)| *n != name) {
                open = Some((name, idx));
            }
        } else if is_closing_brace(text) {
            if let Some((name, start)) = open.take() {
                out.push(FunctionSpan { name, start, end: idx });
            }
        }
    }
    out
}

/// Functions touched by changed lines in C files, keyed by (file, hunk).
pub fn touched_functions(files: &[FileDiff]) -> Touched {
    let mut found = Vec::new();
    for (fi, file) in files.iter().enumerate() {
        if !file.is_c_source() {
            continue;
        }
        for (hi, hunk) in file.hunks.iter().enumerate() {
            let spans = function_spans(hunk);
            let mut used = BTreeSet::new();
            for (idx, l) in hunk.lines.iter().enumerate() {
                if !l.is_change() {
                    continue;
                }
                match spans.iter().position(|s| s.start <= idx && idx <= s.end) {
                    Some(p) => {
                        used.insert(p);
                    }
                    None => return Touched::Ambiguous,
                }
            }
            found.extend(used.into_iter().map(|p| (fi, hi, spans[p].clone())));
        }
    }
    Touched::Functions(found)
}

/// Both sides of one function plus the 1-based lines (relative to each
/// side's text) that the diff deleted or added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSides {
    pub name: String,
    pub old: String,
    pub new: String,
    pub deleted_lines: BTreeSet<usize>,
    pub added_lines: BTreeSet<usize>,
}

pub fn function_sides(hunk: &Hunk, span: &FunctionSpan) -> FunctionSides {
    let mut sides = FunctionSides {
        name: span.name.clone(),
        old: String::new(),
        new: String::new(),
        deleted_lines: BTreeSet::new(),
        added_lines: BTreeSet::new(),
    };
    let (mut old_no, mut new_no) = (0, 0);
    for l in &hunk.lines[span.start..=span.end] {
        match l {
            DiffLine::Context(t) => {
                old_no += 1;
                new_no += 1;
                sides.old.push_str(t);
                sides.old.push('\n');
                sides.new.push_str(t);
                sides.new.push('\n');
            }
            DiffLine::Del(t) => {
                old_no += 1;
                sides.deleted_lines.insert(old_no);
                sides.old.push_str(t);
                sides.old.push('\n');
            }
            DiffLine::Add(t) => {
                new_no += 1;
                sides.added_lines.insert(new_no);
                sides.new.push_str(t);
                sides.new.push('\n');
            }
        }
    }
    sides
}
