//! Mini-batch Adam training with best-validation-F1 model selection.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{loss_and_grads, predict, zero_grads, GraphGrads};
use super::{EncodedGraph, GgnnError, Hyper, ModelState, Vocabulary};
use crate::autodiff::Tensor;
use crate::ensemble::{metrics, Metrics};
use crate::ingest::GraphRecord;

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl Adam {
    pub fn new(model: &ModelState, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zero_grads(model), v: zero_grads(model) }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn update(&mut self, params: &mut BTreeMap<String, Tensor>, grads: &BTreeMap<String, Tensor>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (name, p) in params.iter_mut() {
            let g = &grads[name];
            let m = self.m.get_mut(name).expect("moment");
            let v = self.v.get_mut(name).expect("moment");
            for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                *pv -= self.lr * (*mv / c1) / ((*vv / c2).sqrt() + self.eps);
            }
        }
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Trainer {
    pub model: ModelState,
    adam: Adam,
}

impl Trainer {
    pub fn new(model: ModelState) -> Self {
        let adam = Adam::new(&model, model.hyper.lr);
        Trainer { model, adam }
    }

    pub fn steps(&self) -> i32 {
        self.adam.steps()
    }

    /// One optimizer step on the mean loss of `batch`; returns that loss as
    /// measured before the update. Graphs run in parallel, gradients are
    /// summed in graph id order.
    pub fn step(&mut self, batch: &[&EncodedGraph], epoch: usize, batch_id: usize) -> Result<f64, GgnnError> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let step = self.adam.steps() as u64;
        let seed = self.model.hyper.seed;
        let model = &self.model;
        let per: Vec<GraphGrads> = batch
            .par_iter()
            .enumerate()
            .map(|(i, g)| loss_and_grads(model, g, true, mix(seed, step, i as u64)))
            .collect::<Result<_, _>>()?;
        let scale = 1.0 / batch.len() as f64;
        let mut order: Vec<usize> = (0..batch.len()).collect();
        order.sort_by(|&a, &b| batch[a].id.cmp(&batch[b].id).then(a.cmp(&b)));
        let mut total = zero_grads(model);
        let mut loss = 0.0;
        for g in order.iter().map(|&i| &per[i]) {
            loss += g.loss;
            g.accumulate_into(&mut total, scale);
        }
        loss *= scale;
        if !loss.is_finite() || !total.values().all(Tensor::is_finite) {
            return Err(GgnnError::Diverged { epoch, batch: batch_id });
        }
        self.adam.update(&mut self.model.params, &total);
        if !self.model.is_finite() {
            return Err(GgnnError::Diverged { epoch, batch: batch_id });
        }
        Ok(loss)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val: Metrics,
}

pub struct TrainOutcome {
    pub model: ModelState,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Probabilities for each graph, in order.
pub fn predict_all(model: &ModelState, graphs: &[EncodedGraph]) -> Result<Vec<f64>, GgnnError> {
    graphs.par_iter().map(|g| predict(model, g)).collect()
}

fn validate(model: &ModelState, val: &[EncodedGraph]) -> Result<(f64, f64, Metrics), GgnnError> {
    let probs = predict_all(model, val)?;
    let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p > 0.5)).collect();
    let labels: Vec<u8> = val.iter().map(|g| g.label).collect();
    let loss = probs.iter().zip(&labels).map(|(&p, &y)| super::bce_loss(p, y)).sum::<f64>() / val.len().max(1) as f64;
    let correct = preds.iter().zip(&labels).filter(|(a, b)| a == b).count();
    let m = metrics(&preds, &labels).expect("equal lengths");
    Ok((loss, correct as f64 / val.len().max(1) as f64, m))
}

/// Trains `model` for `hyper.epochs` epochs. The returned model is the one
/// with the best validation F1 (lower validation loss breaks ties, then the
/// earlier epoch); with no validation graphs the last epoch wins.
pub fn train(model: ModelState, train: &[EncodedGraph], val: &[EncodedGraph]) -> Result<TrainOutcome, GgnnError> {
    if train.is_empty() {
        return Err(GgnnError::EmptyDataset);
    }
    let hyper = model.hyper.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trainer = Trainer::new(model);
    let mut history = Vec::new();
    let mut best: Option<(f64, f64, usize, ModelState)> = None;
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_id, chunk) in order.chunks(hyper.batch).enumerate() {
            let batch: Vec<&EncodedGraph> = chunk.iter().map(|&i| &train[i]).collect();
            loss_sum += trainer.step(&batch, epoch, batch_id)? * batch.len() as f64;
        }
        let (val_loss, val_accuracy, m) = validate(&trainer.model, val)?;
        log::info!("epoch {epoch}: train loss {:.6}, val f1 {:.4}, val acc {:.4}", loss_sum / train.len() as f64, m.f1, val_accuracy);
        let better = match &best {
            None => true,
            Some(_) if val.is_empty() => true,
            Some((f1, vl, _, _)) => m.f1 > *f1 || (m.f1 == *f1 && val_loss < *vl),
        };
        if better {
            best = Some((m.f1, val_loss, epoch, trainer.model.clone()));
        }
        history.push(EpochStats { epoch, train_loss: loss_sum / train.len() as f64, val_loss, val_accuracy, val: m });
    }
    let (best_epoch, model) = match best {
        Some((_, _, e, m)) => (e, m),
        None => (0, trainer.model),
    };
    Ok(TrainOutcome { model, history, best_epoch })
}

/// Builds the vocabulary from `train_set`, initializes a model and trains it.
pub fn train_records(hyper: Hyper, train_set: &[GraphRecord], val_set: &[GraphRecord]) -> Result<TrainOutcome, GgnnError> {
    let vocab = Vocabulary::build(train_set, hyper.min_freq, hyper.max_vocab);
    let model = ModelState::init(hyper, vocab)?;
    let enc = |rs: &[GraphRecord]| rs.iter().map(|r| model.encode(r)).collect::<Result<Vec<_>, _>>();
    let (t, v) = (enc(train_set)?, enc(val_set)?);
    train(model, &t, &v)
}
