//! Forward pass on a tape.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ggnn_edge_matrix, EncodedGraph, GgnnError, ModelState, Variant, GRU_BIASES, GRU_MATRICES};
use crate::autodiff::{self, Tape, Tensor, Var};
use crate::cpg::EDGE_TYPE_COUNT;

/// Model parameters recorded as tape leaves for one graph. Only the token
/// embedding rows the graph uses are placed on the tape.
pub struct Bound {
    pub vars: BTreeMap<String, Var>,
    pub seq: Var,
    /// Global vocabulary row of each local embedding row.
    pub seq_rows: Vec<usize>,
    local: BTreeMap<usize, usize>,
}

impl Bound {
    pub fn bind(tape: &mut Tape, model: &ModelState, g: &EncodedGraph) -> Bound {
        let table = model.param("E_seqtoken");
        let mut local = BTreeMap::new();
        for &t in g.tokens.iter().flatten() {
            local.entry(t).or_insert(0);
        }
        let seq_rows: Vec<usize> = local.keys().copied().collect();
        for (i, t) in seq_rows.iter().enumerate() {
            local.insert(*t, i);
        }
        let mut data = Vec::with_capacity(seq_rows.len() * table.cols());
        for &t in &seq_rows {
            data.extend_from_slice(table.row(t));
        }
        let seq = tape.leaf(Tensor::from_vec(seq_rows.len(), table.cols(), data).expect("sized"));
        let vars = model.params.iter().filter(|(n, _)| n.as_str() != "E_seqtoken").map(|(n, t)| (n.clone(), tape.leaf(t.clone()))).collect();
        Bound { vars, seq, seq_rows, local }
    }

    fn var(&self, name: &str) -> Var {
        self.vars[name]
    }
}

/// Edge endpoint lists in graph order.
struct EdgeLists {
    src: Vec<usize>,
    dst: Vec<usize>,
    ty: Vec<usize>,
}

fn edge_lists(g: &EncodedGraph) -> EdgeLists {
    EdgeLists {
        src: g.edges.iter().map(|e| e.0).collect(),
        dst: g.edges.iter().map(|e| e.1).collect(),
        ty: g.edges.iter().map(|e| usize::from(e.2)).collect(),
    }
}

/// Node states as sums of their token embeddings; token-less nodes start at zero.
fn tape_init(tape: &mut Tape, b: &Bound, g: &EncodedGraph) -> Result<Var, GgnnError> {
    let mut flat = Vec::new();
    let mut owner = Vec::new();
    for (node, toks) in g.tokens.iter().enumerate() {
        for t in toks {
            flat.push(b.local[t]);
            owner.push(node);
        }
    }
    let rows = tape.gather_rows(b.seq, &flat)?;
    Ok(tape.scatter_add_rows(rows, &owner, g.node_count())?)
}

fn gru(tape: &mut Tape, b: &Bound, a: Var, h: Var) -> Result<Var, GgnnError> {
    let gate = |tape: &mut Tape, w: &str, u: &str, bias: &str, hin: Var| -> Result<Var, GgnnError> {
        let wa = tape.matmul(a, b.var(w))?;
        let uh = tape.matmul(hin, b.var(u))?;
        let s = tape.add(wa, uh)?;
        Ok(tape.add_bias(s, b.var(bias))?)
    };
    let zs = gate(tape, "W_z", "U_z", "b_z", h)?;
    let z = tape.sigmoid(zs);
    let rs = gate(tape, "W_r", "U_r", "b_r", h)?;
    let r = tape.sigmoid(rs);
    let rh = tape.hadamard(r, h)?;
    let hs = gate(tape, "W_h", "U_h", "b_h", rh)?;
    let cand = tape.tanh(hs);
    let keep = tape.affine(z, -1.0, 1.0);
    let old = tape.hadamard(keep, h)?;
    let new = tape.hadamard(z, cand)?;
    Ok(tape.add(old, new)?)
}

fn edge_aware(tape: &mut Tape, b: &Bound, e: &EdgeLists, h: Var, m: usize) -> Result<Var, GgnnError> {
    let hu = tape.gather_rows(h, &e.src)?;
    let ev = tape.gather_rows(b.var("E_edgetype"), &e.ty)?;
    let x = tape.concat(hu, ev)?;
    let pre = tape.matmul(x, b.var("W"))?;
    let msg = tape.relu(pre);
    let a = tape.scatter_add_rows(msg, &e.dst, m)?;
    gru(tape, b, a, h)
}

fn ggnn(tape: &mut Tape, b: &Bound, e: &EdgeLists, h: Var, m: usize, tied: bool) -> Result<Var, GgnnError> {
    let d = tape.value(h).cols();
    let mut a = tape.leaf(Tensor::zeros(m, d));
    let groups: Vec<Vec<usize>> = if tied {
        vec![(0..e.src.len()).collect()]
    } else {
        (0..EDGE_TYPE_COUNT).map(|k| (0..e.src.len()).filter(|&i| e.ty[i] == k).collect()).collect()
    };
    for (k, idx) in groups.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let src: Vec<usize> = idx.iter().map(|&i| e.src[i]).collect();
        let dst: Vec<usize> = idx.iter().map(|&i| e.dst[i]).collect();
        let hu = tape.gather_rows(h, &src)?;
        let msg = tape.matmul(hu, b.var(&ggnn_edge_matrix(k, tied)))?;
        let part = tape.scatter_add_rows(msg, &dst, m)?;
        a = tape.add(a, part)?;
    }
    gru(tape, b, a, h)
}

fn gcn(tape: &mut Tape, b: &Bound, e: &EdgeLists, h: Var, m: usize) -> Result<Var, GgnnError> {
    let hu = tape.gather_rows(h, &e.src)?;
    let nb = tape.scatter_add_rows(hu, &e.dst, m)?;
    let s = tape.add(h, nb)?;
    let pre = tape.matmul(s, b.var("E_t"))?;
    Ok(tape.relu(pre))
}

fn tape_step(tape: &mut Tape, model: &ModelState, b: &Bound, e: &EdgeLists, h: Var, m: usize) -> Result<Var, GgnnError> {
    match model.hyper.variant {
        Variant::EdgeAware => edge_aware(tape, b, e, h, m),
        Variant::Ggnn => ggnn(tape, b, e, h, m, model.hyper.tied),
        Variant::Gcn => gcn(tape, b, e, h, m),
    }
}

/// Records the full model on `tape` and returns the output probability.
pub fn forward(tape: &mut Tape, model: &ModelState, g: &EncodedGraph, train: bool, rng: &mut impl Rng) -> Result<(Var, Bound), GgnnError> {
    let m = g.node_count();
    if m == 0 {
        return Err(GgnnError::InvalidGraph { id: g.id.clone(), reason: "no nodes".into() });
    }
    let b = Bound::bind(tape, model, g);
    let e = edge_lists(g);
    let h0 = tape_init(tape, &b, g)?;
    let mut h = tape.dropout(h0, model.hyper.dropout, train, rng);
    for _ in 0..model.hyper.hops {
        h = tape_step(tape, model, &b, &e, h, m)?;
    }
    let hg = tape.max_rows(h)?;
    let logit = tape.matmul(hg, b.var("W_out"))?;
    Ok((tape.sigmoid(logit), b))
}

/// Initial node states (eval mode).
pub fn init_nodes(model: &ModelState, g: &EncodedGraph) -> Result<Tensor, GgnnError> {
    let mut tape = Tape::new();
    let b = Bound::bind(&mut tape, model, g);
    let h = tape_init(&mut tape, &b, g)?;
    Ok(tape.value(h).clone())
}

/// One message-passing step of the model's variant applied to `h`.
pub fn step(model: &ModelState, g: &EncodedGraph, h: &Tensor) -> Result<Tensor, GgnnError> {
    let mut tape = Tape::new();
    let b = Bound::bind(&mut tape, model, g);
    let hv = tape.leaf(h.clone());
    let out = tape_step(&mut tape, model, &b, &edge_lists(g), hv, g.node_count())?;
    Ok(tape.value(out).clone())
}

/// Probability that `g` is vulnerable, dropout disabled.
pub fn predict(model: &ModelState, g: &EncodedGraph) -> Result<f64, GgnnError> {
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (y, _) = forward(&mut tape, model, g, false, &mut rng)?;
    Ok(tape.value(y).item()?)
}

pub fn bce_loss(p: f64, y: u8) -> f64 {
    autodiff::bce(p, f64::from(y))
}

/// Gradients of one graph's loss. Token embedding gradients are kept as
/// (vocabulary row, values) pairs.
#[derive(Debug, Clone)]
pub struct GraphGrads {
    pub loss: f64,
    pub prob: f64,
    pub dense: BTreeMap<String, Tensor>,
    pub seq_rows: Vec<(usize, Vec<f64>)>,
}

impl GraphGrads {
    /// Adds `scale` times these gradients into a full-size gradient map.
    pub fn accumulate_into(&self, total: &mut BTreeMap<String, Tensor>, scale: f64) {
        for (name, g) in &self.dense {
            let t = total.get_mut(name).expect("same parameter set");
            for (a, b) in t.data_mut().iter_mut().zip(g.data()) {
                *a += scale * b;
            }
        }
        let table = total.get_mut("E_seqtoken").expect("token table");
        let d = table.cols();
        for (row, vals) in &self.seq_rows {
            for (a, b) in table.data_mut()[row * d..(row + 1) * d].iter_mut().zip(vals) {
                *a += scale * b;
            }
        }
    }
}

pub fn zero_grads(model: &ModelState) -> BTreeMap<String, Tensor> {
    model.params.iter().map(|(n, t)| (n.clone(), Tensor::zeros(t.rows(), t.cols()))).collect()
}

/// Loss and gradients for one graph. In train mode the dropout mask is drawn
/// from `dropout_seed`, so repeated calls see the same mask.
pub fn loss_and_grads(model: &ModelState, g: &EncodedGraph, train: bool, dropout_seed: u64) -> Result<GraphGrads, GgnnError> {
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (y, b) = forward(&mut tape, model, g, train, &mut rng)?;
    let loss = tape.bce(y, f64::from(g.label))?;
    let mut grads = tape.backward(loss)?;
    let dense = b.vars.iter().map(|(n, v)| (n.clone(), grads.take(*v))).collect();
    let seq = grads.take(b.seq);
    let seq_rows = b.seq_rows.iter().enumerate().map(|(i, &row)| (row, seq.row(i).to_vec())).collect();
    Ok(GraphGrads { loss: tape.value(loss).item()?, prob: tape.value(y).item()?, dense, seq_rows })
}

/// Names of the GRU parameters, for callers that zero or inspect them.
pub fn gru_param_names() -> impl Iterator<Item = &'static str> {
    GRU_MATRICES.into_iter().chain(GRU_BIASES)
}

/// Largest relative error between analytic and central-difference gradients
/// of the training loss on `g`, over `samples` random parameter coordinates.
/// Dropout stays on with a mask fixed by `dropout_seed`.
pub fn check_gradients(model: &ModelState, g: &EncodedGraph, samples: usize, seed: u64, dropout_seed: u64) -> Result<f64, GgnnError> {
    let names: Vec<String> = model.params.keys().cloned().collect();
    let params: Vec<Tensor> = model.params.values().cloned().collect();
    let mut work = model.clone();
    let err = autodiff::grad_check(&params, samples, seed, |p| {
        for (n, t) in names.iter().zip(p) {
            *work.param_mut(n) = t.clone();
        }
        let gg = loss_and_grads(&work, g, true, dropout_seed).map_err(|e| autodiff::TensorError::Unreachable(e.to_string()))?;
        let mut dense = zero_grads(&work);
        gg.accumulate_into(&mut dense, 1.0);
        Ok((gg.loss, dense.into_values().collect()))
    })?;
    Ok(err)
}
