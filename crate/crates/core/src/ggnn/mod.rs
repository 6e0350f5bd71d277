//! Edge-aware gated graph network over code property graphs, with plain GGNN
//! and GCN message functions for comparison.

mod model;
mod train;

pub use model::{bce_loss, check_gradients, forward, gru_param_names, init_nodes, loss_and_grads, predict, step, zero_grads, Bound, GraphGrads};
pub use train::{predict_all, train, train_records, Adam, EpochStats, TrainOutcome, Trainer};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Checkpoint, TensorError, Tensor};
use crate::cpg::EDGE_TYPE_COUNT;
use crate::ingest::{CweLabel, GraphRecord};

#[derive(Debug, Error)]
pub enum GgnnError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("graph {id}: {reason}")]
    InvalidGraph { id: String, reason: String },
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("config key {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("no training graphs")]
    EmptyDataset,
}

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const MIN_TOKEN_FREQ: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Tokens seen at least `min_freq` times, most frequent first, ties in
    /// lexicographic order, truncated to `cap` entries besides PAD and UNK.
    pub fn build<'a>(graphs: impl IntoIterator<Item = &'a GraphRecord>, min_freq: usize, cap: Option<usize>) -> Self {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for g in graphs {
            for n in &g.nodes {
                for t in &n.code {
                    *freq.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut kept: Vec<(&str, usize)> = freq.into_iter().filter(|&(t, c)| c >= min_freq && t != PAD_TOKEN && t != UNK_TOKEN).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        if let Some(cap) = cap {
            kept.truncate(cap);
        }
        let tokens = [PAD_TOKEN, UNK_TOKEN].into_iter().chain(kept.into_iter().map(|(t, _)| t)).map(String::from).collect();
        Vocabulary::from_tokens(tokens).expect("specials are in place")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, GgnnError> {
        if tokens.first().map(String::as_str) != Some(PAD_TOKEN) || tokens.get(1).map(String::as_str) != Some(UNK_TOKEN) {
            return Err(GgnnError::Checkpoint("vocabulary must start with <pad>, <unk>".into()));
        }
        let index: HashMap<String, usize> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != tokens.len() {
            return Err(GgnnError::Checkpoint("duplicate vocabulary entry".into()));
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, g: &GraphRecord) -> Result<EncodedGraph, GgnnError> {
        let m = g.nodes.len();
        let bad = |reason: String| GgnnError::InvalidGraph { id: g.function_id.clone(), reason };
        if m == 0 {
            return Err(bad("no nodes".into()));
        }
        for e in &g.edges {
            if e.src >= m || e.dst >= m {
                return Err(bad(format!("edge {}->{} outside {m} nodes", e.src, e.dst)));
            }
            if usize::from(e.ty) >= EDGE_TYPE_COUNT {
                return Err(bad(format!("edge type {}", e.ty)));
            }
        }
        Ok(EncodedGraph {
            id: g.function_id.clone(),
            label: g.label,
            tokens: g.nodes.iter().map(|n| n.code.iter().map(|t| self.index_of(t)).collect()).collect(),
            edges: g.edges.iter().map(|e| (e.src, e.dst, e.ty)).collect(),
        })
    }
}

/// A graph with token indices resolved against a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedGraph {
    pub id: String,
    pub label: u8,
    pub tokens: Vec<Vec<usize>>,
    /// (src, dst, edge type code); messages flow src -> dst.
    pub edges: Vec<(usize, usize, u8)>,
}

impl EncodedGraph {
    pub fn node_count(&self) -> usize {
        self.tokens.len()
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> EncodedGraph {
        let mut tokens = vec![Vec::new(); self.tokens.len()];
        for (i, t) in self.tokens.iter().enumerate() {
            tokens[perm[i]] = t.clone();
        }
        EncodedGraph {
            id: self.id.clone(),
            label: self.label,
            tokens,
            edges: self.edges.iter().map(|&(s, d, t)| (perm[s], perm[d], t)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    EdgeAware,
    Ggnn,
    Gcn,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::EdgeAware => "edge-aware",
            Variant::Ggnn => "ggnn",
            Variant::Gcn => "gcn",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "edge-aware" => Ok(Variant::EdgeAware),
            "ggnn" => Ok(Variant::Ggnn),
            "gcn" => Ok(Variant::Gcn),
            _ => Err(format!("unknown variant {s:?} (edge-aware, ggnn, gcn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub d: usize,
    pub d_edge: usize,
    pub hops: usize,
    pub dropout: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub variant: Variant,
    /// GGNN only: one matrix shared by every edge type.
    pub tied: bool,
    pub cwe: Option<CweLabel>,
    pub min_freq: usize,
    pub max_vocab: Option<usize>,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            d: 128,
            d_edge: 128,
            hops: 4,
            dropout: 0.3,
            lr: 0.001,
            batch: 64,
            epochs: 20,
            seed: 0,
            variant: Variant::EdgeAware,
            tied: false,
            cwe: None,
            min_freq: MIN_TOKEN_FREQ,
            max_vocab: None,
        }
    }
}

impl Hyper {
    pub fn for_cwe(cwe: CweLabel) -> Self {
        Hyper { hops: cwe.default_hops(), cwe: Some(cwe), ..Hyper::default() }
    }

    pub const KEYS: [&'static str; 13] =
        ["batch", "cwe", "d", "d_edge", "dropout", "epochs", "hops", "lr", "max_vocab", "min_freq", "seed", "tied", "variant"];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), GgnnError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, GgnnError> {
            v.parse().map_err(|_| GgnnError::Config { key: key.into(), reason: format!("cannot parse {v:?}") })
        }
        let err = |reason: String| GgnnError::Config { key: key.into(), reason };
        match key {
            "d" => self.d = num(key, value)?,
            "d_edge" => self.d_edge = num(key, value)?,
            "hops" => self.hops = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "min_freq" => self.min_freq = num(key, value)?,
            "tied" => self.tied = num(key, value)?,
            "variant" => self.variant = value.parse().map_err(err)?,
            "cwe" => self.cwe = if value == "none" { None } else { Some(value.parse().map_err(err)?) },
            "max_vocab" => self.max_vocab = if value == "none" { None } else { Some(num(key, value)?) },
            _ => return Err(err("unknown key".into())),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), GgnnError> {
        let err = |key: &str, reason: &str| Err(GgnnError::Config { key: key.into(), reason: reason.into() });
        if self.d == 0 {
            return err("d", "must be positive");
        }
        if self.d_edge == 0 {
            return err("d_edge", "must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err("dropout", "must be in [0, 1)");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return err("lr", "must be a finite non-negative number");
        }
        if self.batch == 0 {
            return err("batch", "must be positive");
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_config(&mut self, text: &str) -> Result<(), GgnnError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GgnnError::Config { key: format!("line {}", n + 1), reason: "expected key = value".into() })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("batch", self.batch.to_string());
        put("cwe", self.cwe.map_or("none".into(), |c| c.to_string()));
        put("d", self.d.to_string());
        put("d_edge", self.d_edge.to_string());
        put("dropout", self.dropout.to_string());
        put("epochs", self.epochs.to_string());
        put("hops", self.hops.to_string());
        put("lr", self.lr.to_string());
        put("max_vocab", self.max_vocab.map_or("none".into(), |v| v.to_string()));
        put("min_freq", self.min_freq.to_string());
        put("seed", self.seed.to_string());
        put("tied", self.tied.to_string());
        put("variant", self.variant.to_string());
        m
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, GgnnError> {
        let mut h = Hyper::default();
        for (k, v) in pairs {
            h.set(k, v)?;
        }
        Ok(h)
    }
}

/// Parameters of one classifier plus the vocabulary it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub hyper: Hyper,
    pub vocab: Vocabulary,
    pub params: BTreeMap<String, Tensor>,
}

pub const GRU_MATRICES: [&str; 6] = ["W_z", "U_z", "W_r", "U_r", "W_h", "U_h"];
pub const GRU_BIASES: [&str; 3] = ["b_z", "b_r", "b_h"];

pub fn ggnn_edge_matrix(ty: usize, tied: bool) -> String {
    if tied {
        "E_k".to_string()
    } else {
        format!("E_k{ty}")
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::from_vec(rows, cols, data).expect("sized")
}

fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sd: f64) -> Tensor {
    let dist = Normal::new(0.0, sd).expect("positive sd");
    let data = (0..rows * cols).map(|_| dist.sample(rng)).collect();
    Tensor::from_vec(rows, cols, data).expect("sized")
}

impl ModelState {
    /// Fresh parameters: matrices uniform in ±1/sqrt(d), biases zero,
    /// embeddings normal with sd 0.1. Drawn in name order from `hyper.seed`.
    pub fn init(hyper: Hyper, vocab: Vocabulary) -> Result<Self, GgnnError> {
        hyper.validate()?;
        let (d, de) = (hyper.d, hyper.d_edge);
        let mut shapes: BTreeMap<String, ([usize; 2], char)> = BTreeMap::new();
        shapes.insert("E_seqtoken".into(), ([vocab.len(), d], 'n'));
        shapes.insert("W_out".into(), ([d, 1], 'u'));
        let gru = |shapes: &mut BTreeMap<String, ([usize; 2], char)>| {
            for m in GRU_MATRICES {
                shapes.insert(m.into(), ([d, d], 'u'));
            }
            for b in GRU_BIASES {
                shapes.insert(b.into(), ([1, d], '0'));
            }
        };
        match hyper.variant {
            Variant::EdgeAware => {
                shapes.insert("E_edgetype".into(), ([EDGE_TYPE_COUNT, de], 'n'));
                shapes.insert("W".into(), ([d + de, d], 'u'));
                gru(&mut shapes);
            }
            Variant::Ggnn => {
                if hyper.tied {
                    shapes.insert(ggnn_edge_matrix(0, true), ([d, d], 'u'));
                } else {
                    for k in 0..EDGE_TYPE_COUNT {
                        shapes.insert(ggnn_edge_matrix(k, false), ([d, d], 'u'));
                    }
                }
                gru(&mut shapes);
            }
            Variant::Gcn => {
                shapes.insert("E_t".into(), ([d, d], 'u'));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let bound = 1.0 / (d as f64).sqrt();
        let params = shapes
            .into_iter()
            .map(|(name, ([r, c], how))| {
                let t = match how {
                    'n' => normal(&mut rng, r, c, 0.1),
                    'u' => uniform(&mut rng, r, c, bound),
                    _ => Tensor::zeros(r, c),
                };
                (name, t)
            })
            .collect();
        Ok(ModelState { hyper, vocab, params })
    }

    pub fn param(&self, name: &str) -> &Tensor {
        &self.params[name]
    }

    pub fn param_mut(&mut self, name: &str) -> &mut Tensor {
        self.params.get_mut(name).expect("known parameter")
    }

    pub fn is_finite(&self) -> bool {
        self.params.values().all(Tensor::is_finite)
    }

    pub fn encode(&self, g: &GraphRecord) -> Result<EncodedGraph, GgnnError> {
        self.vocab.encode(g)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint { hyperparams: self.hyper.to_pairs(), vocab: self.vocab.tokens.clone(), tensors: self.params.clone() }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, GgnnError> {
        let hyper = Hyper::from_pairs(&ck.hyperparams)?;
        let vocab = Vocabulary::from_tokens(ck.vocab)?;
        let expected = ModelState::init(hyper.clone(), vocab.clone())?;
        for (name, t) in &expected.params {
            match ck.tensors.get(name) {
                Some(got) if got.shape() == t.shape() => {}
                Some(got) => {
                    return Err(GgnnError::Checkpoint(format!("{name}: shape {:?}, expected {:?}", got.shape(), t.shape())));
                }
                None => return Err(GgnnError::Checkpoint(format!("missing tensor {name}"))),
            }
        }
        if let Some(extra) = ck.tensors.keys().find(|k| !expected.params.contains_key(*k)) {
            return Err(GgnnError::Checkpoint(format!("unexpected tensor {extra}")));
        }
        Ok(ModelState { hyper, vocab, params: ck.tensors })
    }
}
