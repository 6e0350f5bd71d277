//! Thresholding and majority vote over the five per-CWE classifiers, and the
//! precision/recall/F1 metrics used to score them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfront::{parse_source, FrontError};
use crate::cpg::build_cpg;
use crate::ggnn::{predict, GgnnError, ModelState};
use crate::ingest::{CweLabel, GraphRecord};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("expected 5 classifier outputs, got {0}")]
    WrongArity(usize),
    #[error("{preds} predictions vs {labels} labels")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("function has {nodes} graph nodes, limit is {max}")]
    SizeExceeded { nodes: usize, max: usize },
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Model(#[from] GgnnError),
}

pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Classifier outputs in CWE-404, 835, 120, 672, 362 order.
    pub per_cwe_logits: [f64; 5],
    pub per_cwe_labels: [u8; 5],
    #[serde(rename = "final")]
    pub final_label: u8,
    pub attributed_cwe: Option<CweLabel>,
}

/// Strict threshold at 0.5, then majority of five. A positive verdict is
/// attributed to the positive classifier with the highest output (earliest
/// on ties).
pub fn vote(logits: &[f64]) -> Result<Verdict, EnsembleError> {
    let per_cwe_logits: [f64; 5] = logits.try_into().map_err(|_| EnsembleError::WrongArity(logits.len()))?;
    let per_cwe_labels = per_cwe_logits.map(|p| u8::from(p > THRESHOLD));
    let positives = per_cwe_labels.iter().filter(|&&b| b == 1).count();
    let final_label = u8::from(positives >= 3);
    let attributed_cwe = (final_label == 1).then(|| {
        let mut best = None::<usize>;
        for i in (0..5).filter(|&i| per_cwe_labels[i] == 1) {
            if best.is_none_or(|b| per_cwe_logits[i] > per_cwe_logits[b]) {
                best = Some(i);
            }
        }
        CweLabel::ALL[best.expect("at least three positives")]
    });
    Ok(Verdict { per_cwe_logits, per_cwe_labels, final_label, attributed_cwe })
}

/// Anything that scores a function graph with a probability.
pub trait Classifier: Sync {
    fn classify(&self, graph: &GraphRecord) -> Result<f64, GgnnError>;
}

impl Classifier for ModelState {
    fn classify(&self, graph: &GraphRecord) -> Result<f64, GgnnError> {
        predict(self, &self.encode(graph)?)
    }
}

/// Parses `code`, builds its graph once and runs the five classifiers
/// (given in CWE-404, 835, 120, 672, 362 order).
pub fn predict_function(code: &str, models: &[&dyn Classifier], max_nodes: usize) -> Result<Verdict, EnsembleError> {
    if models.len() != 5 {
        return Err(EnsembleError::WrongArity(models.len()));
    }
    let ast = parse_source(code)?;
    let cpg = build_cpg(&ast, "input");
    if cpg.node_count() > max_nodes {
        return Err(EnsembleError::SizeExceeded { nodes: cpg.node_count(), max: max_nodes });
    }
    let graph = GraphRecord::from_cpg(&cpg, 0, CweLabel::ALL[0]);
    let logits = models.iter().map(|m| m.classify(&graph)).collect::<Result<Vec<_>, _>>()?;
    vote(&logits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Set when the corresponding denominator was zero and 0 was reported.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

pub fn metrics(preds: &[u8], labels: &[u8]) -> Result<Metrics, EnsembleError> {
    if preds.len() != labels.len() {
        return Err(EnsembleError::LengthMismatch { preds: preds.len(), labels: labels.len() });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p != 0, l != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let (precision, precision_undefined) = ratio(tp, tp + fp);
    let (recall, recall_undefined) = ratio(tp, tp + fn_);
    let (f1, f1_undefined) = if precision + recall == 0.0 { (0.0, true) } else { (2.0 * precision * recall / (precision + recall), false) };
    Ok(Metrics { precision, recall, f1, tp, fp, fn_, tn, precision_undefined, recall_undefined, f1_undefined })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub samples: usize,
    pub metrics: Metrics,
}

/// Fixed-width table of P/R/F1 in percent.
pub fn render_report(rows: &[ReportRow]) -> String {
    let mut out = format!("{:<10} {:>7} {:>7} {:>7} {:>7}\n", "model", "n", "P", "R", "F1");
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{:<10} {:>7} {:>7.2} {:>7.2} {:>7.2}\n",
            r.name,
            r.samples,
            100.0 * m.precision,
            100.0 * m.recall,
            100.0 * m.f1
        ));
    }
    out
}
