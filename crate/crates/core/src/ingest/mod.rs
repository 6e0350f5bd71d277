//! Commit mining: keyword labelling, commit filtering, function-pair
//! extraction, size filtering and the pair-level dataset split.

pub mod diff;
mod git;
mod records;

pub use diff::{parse_unified_diff, DiffLine, FileDiff, Hunk};
pub use git::commits_from_git;
pub use records::{read_commit_dump, read_jsonl, write_jsonl, GraphEdge, GraphNode, GraphRecord};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::MutationOp;
use crate::cfront::{parse_source, Ast, FrontError, StmtId};
use crate::cpg::build_cpg;
use crate::slicer::{align_statements, PatchTuple};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed diff at line {line}: {reason}")]
    MalformedDiff { line: usize, reason: String },
    #[error("commit does not change exactly one function")]
    NotSingleFunction,
    #[error("cannot parse {id}: {source}")]
    ParseFailure { id: String, source: FrontError },
    #[error("{cwe}: {pairs} pairs cannot fill every split")]
    TooFewPairs { cwe: CweLabel, pairs: usize },
    #[error("mutant {id} has a parent outside the training split")]
    Leakage { id: String },
    #[error("{path}:{line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("git: {0}")]
    Git(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CweLabel {
    #[serde(rename = "CWE-404")]
    Cwe404,
    #[serde(rename = "CWE-835")]
    Cwe835,
    #[serde(rename = "CWE-120")]
    Cwe120,
    #[serde(rename = "CWE-672")]
    Cwe672,
    #[serde(rename = "CWE-362")]
    Cwe362,
}

impl CweLabel {
    /// Canonical order used for model slots and report rows.
    pub const ALL: [CweLabel; 5] = [CweLabel::Cwe404, CweLabel::Cwe835, CweLabel::Cwe120, CweLabel::Cwe672, CweLabel::Cwe362];

    pub fn as_str(self) -> &'static str {
        match self {
            CweLabel::Cwe404 => "CWE-404",
            CweLabel::Cwe835 => "CWE-835",
            CweLabel::Cwe120 => "CWE-120",
            CweLabel::Cwe672 => "CWE-672",
            CweLabel::Cwe362 => "CWE-362",
        }
    }

    pub fn index(self) -> usize {
        CweLabel::ALL.iter().position(|&c| c == self).unwrap()
    }

    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            CweLabel::Cwe404 => &[
                "memory leak",
                "information leak",
                "info leak",
                "leak info",
                "memory disclosure",
                "leak memory",
                "leak information",
            ],
            CweLabel::Cwe835 => &["infinite loop", "endless loop", "long loop", "infinite recursion", "deep recursion"],
            CweLabel::Cwe120 => &["buffer overflow"],
            CweLabel::Cwe672 => &["double free", "double-free", "DF", "use after free", "use-after-free", "UAF"],
            CweLabel::Cwe362 => &["race conditions"],
        }
    }

    /// Message-passing hops used when no override is given.
    pub fn default_hops(self) -> usize {
        match self {
            CweLabel::Cwe404 => 4,
            CweLabel::Cwe835 => 1,
            CweLabel::Cwe120 => 5,
            CweLabel::Cwe672 => 4,
            CweLabel::Cwe362 => 2,
        }
    }
}

impl fmt::Display for CweLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CweLabel {
    type Err = String;

    /// Accepts `CWE-404`, `cwe404` or `404`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        CweLabel::ALL
            .into_iter()
            .find(|c| c.as_str()[4..] == digits)
            .ok_or_else(|| format!("unknown weakness type `{s}` (expected one of 404, 835, 120, 672, 362)"))
    }
}

fn normalize_message(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn contains_word(haystack: &str, word: &str) -> bool {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    haystack.match_indices(word).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + word.len()..].chars().next();
        !before.is_some_and(is_word) && !after.is_some_and(is_word)
    })
}

/// Labels whose keywords occur in the message. Matching is case-insensitive
/// and whitespace-collapsed; keywords of three characters or fewer must
/// match as whole words.
pub fn match_keywords(message: &str) -> BTreeSet<CweLabel> {
    let m = normalize_message(message);
    CweLabel::ALL
        .into_iter()
        .filter(|cwe| {
            cwe.keywords().iter().any(|k| {
                let k = k.to_lowercase();
                if k.chars().count() <= 3 {
                    contains_word(&m, &k)
                } else {
                    m.contains(&k)
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub project: String,
    pub sha: String,
    pub message: String,
    pub diff: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exclusion {
    NoKeyword,
    AmbiguousType,
    MalformedDiff,
    NoFunction,
    MultiFunction,
    AmbiguousContext,
}

impl Exclusion {
    pub const ALL: [Exclusion; 6] = [
        Exclusion::NoKeyword,
        Exclusion::AmbiguousType,
        Exclusion::MalformedDiff,
        Exclusion::NoFunction,
        Exclusion::MultiFunction,
        Exclusion::AmbiguousContext,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub input: usize,
    pub emitted: usize,
    pub excluded: BTreeMap<Exclusion, usize>,
}

impl FilterCounts {
    pub fn excluded_total(&self) -> usize {
        self.excluded.values().sum()
    }
}

/// Streaming commit filter; call [`CommitFilter::accept`] per commit and read
/// the counters afterwards.
#[derive(Debug, Default)]
pub struct CommitFilter {
    pub counts: FilterCounts,
}

impl CommitFilter {
    pub fn classify(commit: &CommitRecord) -> Result<CweLabel, Exclusion> {
        let labels = match_keywords(&commit.message);
        let label = match labels.len() {
            0 => return Err(Exclusion::NoKeyword),
            1 => *labels.iter().next().unwrap(),
            _ => return Err(Exclusion::AmbiguousType),
        };
        let files = parse_unified_diff(&commit.diff).map_err(|_| Exclusion::MalformedDiff)?;
        match diff::touched_functions(&files) {
            diff::Touched::Ambiguous => Err(Exclusion::AmbiguousContext),
            diff::Touched::Functions(fns) => {
                let names: BTreeSet<(usize, &str)> = fns.iter().map(|(f, _, s)| (*f, s.name.as_str())).collect();
                match (names.len(), fns.len()) {
                    (0, _) => Err(Exclusion::NoFunction),
                    (1, 1) => Ok(label),
                    // one function split over several hunks cannot be reassembled
                    (1, _) => Err(Exclusion::AmbiguousContext),
                    _ => Err(Exclusion::MultiFunction),
                }
            }
        }
    }

    pub fn accept(&mut self, commit: &CommitRecord) -> Option<CweLabel> {
        self.counts.input += 1;
        match Self::classify(commit) {
            Ok(label) => {
                self.counts.emitted += 1;
                Some(label)
            }
            Err(reason) => {
                log::debug!("commit {} excluded: {reason:?}", commit.sha);
                *self.counts.excluded.entry(reason).or_default() += 1;
                None
            }
        }
    }
}

/// Keeps single-label commits that change exactly one function.
pub fn filter_commits(commits: impl IntoIterator<Item = CommitRecord>) -> (Vec<(CommitRecord, CweLabel)>, FilterCounts) {
    let mut f = CommitFilter::default();
    let kept = commits.into_iter().filter_map(|c| f.accept(&c).map(|l| (c, l))).collect();
    (kept, f.counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionRole {
    Vulnerable,
    Patched,
    Mutated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub id: String,
    pub project: String,
    pub sha: String,
    pub cwe: CweLabel,
    pub role: FunctionRole,
    pub label: u8,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<MutationOp>,
}

impl FunctionRecord {
    pub fn new(project: &str, sha: &str, cwe: CweLabel, role: FunctionRole, code: String) -> Self {
        let (suffix, label) = match role {
            FunctionRole::Vulnerable => ("v", 1),
            FunctionRole::Patched => ("p", 0),
            FunctionRole::Mutated => ("m", 1),
        };
        FunctionRecord {
            id: format!("{project}@{sha}#{suffix}"),
            project: project.to_string(),
            sha: sha.to_string(),
            cwe,
            role,
            label,
            code,
            parent_id: None,
            mutation: None,
        }
    }

    pub fn pair_key(&self) -> (&str, &str) {
        (&self.project, &self.sha)
    }

    pub fn parse(&self) -> Result<Ast, IngestError> {
        parse_source(&self.code).map_err(|source| IngestError::ParseFailure { id: self.id.clone(), source })
    }
}

fn statements_on_lines(ast: &Ast, lines: &BTreeSet<usize>) -> BTreeSet<StmtId> {
    (0..ast.statement_count())
        .filter(|&s| ast.span_tokens(ast.statements[s]).iter().any(|t| lines.contains(&(t.line as usize))))
        .collect()
}

/// Statements on changed lines that have no identical counterpart under the
/// statement alignment of the two versions.
pub fn changed_statements(
    ast_v: &Ast,
    ast_p: &Ast,
    deleted_lines: &BTreeSet<usize>,
    added_lines: &BTreeSet<usize>,
) -> (BTreeSet<StmtId>, BTreeSet<StmtId>) {
    let align = align_statements(ast_v, ast_p);
    let image: BTreeSet<StmtId> = align.values().copied().collect();
    let s_del = statements_on_lines(ast_v, deleted_lines).into_iter().filter(|s| !image.contains(s)).collect();
    let s_add = statements_on_lines(ast_p, added_lines).into_iter().filter(|s| !align.contains_key(s)).collect();
    (s_del, s_add)
}

/// Splits a filtered commit into the vulnerable/patched function pair.
pub fn extract_pair(commit: &CommitRecord, label: CweLabel) -> Result<PatchTuple, IngestError> {
    let files = parse_unified_diff(&commit.diff)?;
    let diff::Touched::Functions(fns) = diff::touched_functions(&files) else {
        return Err(IngestError::NotSingleFunction);
    };
    let [(fi, hi, span)] = fns.as_slice() else {
        return Err(IngestError::NotSingleFunction);
    };
    let sides = diff::function_sides(&files[*fi].hunks[*hi], span);
    let f_v = FunctionRecord::new(&commit.project, &commit.sha, label, FunctionRole::Vulnerable, sides.old);
    let f_p = FunctionRecord::new(&commit.project, &commit.sha, label, FunctionRole::Patched, sides.new);
    let ast_v = f_v.parse()?;
    let ast_p = f_p.parse()?;
    let (s_del, s_add) = changed_statements(&ast_v, &ast_p, &sides.deleted_lines, &sides.added_lines);
    Ok(PatchTuple { f_v, f_p, s_del, s_add })
}

/// Drops every record whose graph exceeds `max_nodes` (or fails to parse),
/// along with all other records of the same commit. Returns the survivors
/// and the number of commits dropped.
pub fn preprocess_filter(records: Vec<FunctionRecord>, max_nodes: usize) -> (Vec<FunctionRecord>, usize) {
    preprocess_filter_by(records, max_nodes, |r| r.parse().ok().map(|ast| build_cpg(&ast, &r.id).node_count()))
}

pub fn preprocess_filter_by(
    records: Vec<FunctionRecord>,
    max_nodes: usize,
    node_count: impl Fn(&FunctionRecord) -> Option<usize> + Sync,
) -> (Vec<FunctionRecord>, usize) {
    let oversized: Vec<bool> = records.par_iter().map(|r| node_count(r).is_none_or(|n| n > max_nodes)).collect();
    let dropped: BTreeSet<(String, String)> = records
        .iter()
        .zip(&oversized)
        .filter(|(_, &big)| big)
        .map(|(r, _)| (r.project.clone(), r.sha.clone()))
        .collect();
    let kept = records
        .into_iter()
        .filter(|r| !dropped.contains(&(r.project.clone(), r.sha.clone())))
        .collect();
    (kept, dropped.len())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn is_train(&self, id: &str) -> bool {
        self.train.iter().any(|t| t == id)
    }
}

/// Parses `6:2:2`-style ratios.
pub fn parse_ratios(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<u32> = s.split(':').map(|p| p.trim().parse::<u32>()).collect::<Result<_, _>>().map_err(|e| format!("bad split `{s}`: {e}"))?;
    match parts.as_slice() {
        [a, b, c] if a + b + c > 0 => Ok([*a, *b, *c]),
        _ => Err(format!("bad split `{s}`: expected three non-negative integers such as 6:2:2")),
    }
}

/// Pair counts (train, validation, test) for `n` pairs: validation and test
/// take the floor of their share and train takes the remainder.
pub fn split_sizes(n: usize, ratios: [u32; 3]) -> (usize, usize, usize) {
    let sum = ratios.iter().map(|&r| r as usize).sum::<usize>().max(1);
    let val = n * ratios[1] as usize / sum;
    let test = n * ratios[2] as usize / sum;
    (n - val - test, val, test)
}

/// Shuffled pair-level split, done independently per weakness type.
/// Mutants are ignored here; see [`attach_mutants`].
pub fn split_dataset(records: &[FunctionRecord], ratios: [u32; 3], seed: u64) -> Result<DatasetSplit, IngestError> {
    let mut pairs: BTreeMap<CweLabel, BTreeMap<(String, String), Vec<String>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.role != FunctionRole::Mutated) {
        pairs.entry(r.cwe).or_default().entry((r.project.clone(), r.sha.clone())).or_default().push(r.id.clone());
    }
    if pairs.is_empty() {
        return Err(IngestError::TooFewPairs { cwe: CweLabel::Cwe404, pairs: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DatasetSplit::default();
    for (cwe, by_key) in pairs {
        let mut groups: Vec<Vec<String>> = by_key.into_values().collect();
        groups.shuffle(&mut rng);
        let (train, val, test) = split_sizes(groups.len(), ratios);
        if [train, val, test].iter().zip(ratios).any(|(&n, r)| n == 0 && r > 0) {
            return Err(IngestError::TooFewPairs { cwe, pairs: groups.len() });
        }
        for (i, g) in groups.into_iter().enumerate() {
            let dest = if i < val {
                &mut split.validation
            } else if i < val + test {
                &mut split.test
            } else {
                &mut split.train
            };
            dest.extend(g);
        }
    }
    split.train.sort();
    split.validation.sort();
    split.test.sort();
    Ok(split)
}

/// Adds mutant ids to the training split; every mutant's parent must
/// already be a training function.
pub fn attach_mutants(split: &mut DatasetSplit, mutants: &[FunctionRecord]) -> Result<(), IngestError> {
    let train: BTreeSet<String> = split.train.iter().cloned().collect();
    for m in mutants {
        if !m.parent_id.as_ref().is_some_and(|p| train.contains(p)) {
            return Err(IngestError::Leakage { id: m.id.clone() });
        }
    }
    split.train.extend(mutants.iter().map(|m| m.id.clone()));
    split.train.sort();
    Ok(())
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub cwe: Option<CweLabel>,
    pub max_nodes: usize,
    pub ratios: [u32; 3],
    pub seed: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions { cwe: None, max_nodes: 800, ratios: [6, 2, 2], seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub filter: FilterCounts,
    pub duplicates: usize,
    pub other_cwe: usize,
    pub parse_failures: usize,
    pub empty_changes: usize,
    pub oversized_pairs: usize,
    pub pairs: BTreeMap<CweLabel, usize>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub functions: Vec<FunctionRecord>,
    pub patches: Vec<PatchTuple>,
    pub split: DatasetSplit,
    pub stats: IngestStats,
}

/// Commit stream to split dataset: filter, extract, drop empty and
/// oversized pairs, split.
pub fn ingest(commits: impl IntoIterator<Item = CommitRecord>, opts: &IngestOptions) -> Result<Dataset, IngestError> {
    let mut stats = IngestStats::default();
    let (kept, counts) = filter_commits(commits);
    stats.filter = counts;
    let mut seen = BTreeSet::new();
    let mut todo = Vec::new();
    for (c, label) in kept {
        if opts.cwe.is_some_and(|w| w != label) {
            stats.other_cwe += 1;
        } else if !seen.insert((c.project.clone(), c.sha.clone())) {
            stats.duplicates += 1;
        } else {
            todo.push((c, label));
        }
    }
    let extracted: Vec<Result<PatchTuple, IngestError>> = todo.par_iter().map(|(c, l)| extract_pair(c, *l)).collect();
    let mut patches = Vec::new();
    for r in extracted {
        match r {
            Ok(p) if p.s_del.is_empty() && p.s_add.is_empty() => stats.empty_changes += 1,
            Ok(p) => patches.push(p),
            Err(e) => {
                log::debug!("dropping commit: {e}");
                stats.parse_failures += 1;
            }
        }
    }
    let functions: Vec<FunctionRecord> = patches.iter().flat_map(|p| [p.f_v.clone(), p.f_p.clone()]).collect();
    let (functions, oversized) = preprocess_filter(functions, opts.max_nodes);
    stats.oversized_pairs = oversized;
    let kept_ids: BTreeSet<&str> = functions.iter().map(|f| f.id.as_str()).collect();
    patches.retain(|p| kept_ids.contains(p.f_v.id.as_str()));
    for p in &patches {
        *stats.pairs.entry(p.f_v.cwe).or_default() += 1;
    }
    let split = split_dataset(&functions, opts.ratios, opts.seed)?;
    Ok(Dataset { functions, patches, split, stats })
}
