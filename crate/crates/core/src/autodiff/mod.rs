//! Dense 2-D tensors with a recording tape and reverse-mode gradients for the
//! handful of primitives the graph model needs.

mod check;
mod checkpoint;

pub use check::{grad_check, relative_error, GRAD_CHECK_STEP};
pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: [usize; 2], right: [usize; 2] },
    #[error("{op}: index {index} out of range for {len} rows")]
    IndexOutOfRange { op: &'static str, index: usize, len: usize },
    #[error("{op}: empty input")]
    Empty { op: &'static str },
    #[error("expected a scalar, got {0:?}")]
    NotScalar([usize; 2]),
    #[error("malformed tape: {0}")]
    Unreachable(String),
}

/// Row-major matrix of f64. Vectors are 1-row matrices, scalars 1x1.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Tensor { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Tensor { rows: 1, cols: data.len(), data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::ShapeMismatch { op: "from_vec", left: [rows, cols], right: [data.len(), 1] });
        }
        Ok(Tensor { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Tensor::from_vec(rows.len(), cols, data)
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn item(&self) -> Result<f64, TensorError> {
        if self.shape() == [1, 1] {
            Ok(self.data[0])
        } else {
            Err(TensorError::NotScalar(self.shape()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn zip(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    fn matmul_unchecked(&self, other: &Tensor) -> Tensor {
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[p * m..(p + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Tensor { rows: n, cols: m, data: out }
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.cols != other.rows {
            return Err(TensorError::ShapeMismatch { op: "matmul", left: self.shape(), right: other.shape() });
        }
        Ok(self.matmul_unchecked(other))
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddBias(Var, Var),
    Hadamard(Var, Var),
    Affine(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Var, Var),
    Gather(Var, Vec<usize>),
    ScatterAdd(Var, Vec<usize>),
    SumAll(Var),
    SumRows(Var),
    MaxRows(Var, Vec<usize>),
    Dropout(Var, Vec<f64>),
    Bce(Var, f64),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Lower and upper clamp applied to probabilities inside [`Tape::bce`].
pub const BCE_EPS: f64 = 1e-7;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross entropy of a probability against a 0/1 target.
pub fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Records primitive applications in execution order.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn check_same(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch { op, left: a.shape(), right: b.shape() });
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        check_same("add", self.value(a), self.value(b))?;
        let out = self.value(a).zip(self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        check_same("sub", self.value(a), self.value(b))?;
        let out = self.value(a).zip(self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Adds a 1xN row to every row of an MxN matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var, TensorError> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows != 1 || b.cols != x.cols {
            return Err(TensorError::ShapeMismatch { op: "add_bias", left: x.shape(), right: b.shape() });
        }
        let mut out = x.clone();
        for r in 0..out.rows {
            for (o, &bv) in out.data[r * out.cols..(r + 1) * out.cols].iter_mut().zip(&b.data) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddBias(a, bias)))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        check_same("hadamard", self.value(a), self.value(b))?;
        let out = self.value(a).zip(self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Hadamard(a, b)))
    }

    /// `scale * a + shift`, elementwise.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let out = self.value(a).map(|x| scale * x + shift);
        self.push(out, Op::Affine(a, scale))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(out, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    /// Places `b`'s columns after `a`'s, row by row.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.rows != y.rows {
            return Err(TensorError::ShapeMismatch { op: "concat", left: x.shape(), right: y.shape() });
        }
        let cols = x.cols + y.cols;
        let mut data = Vec::with_capacity(x.rows * cols);
        for r in 0..x.rows {
            data.extend_from_slice(x.row(r));
            data.extend_from_slice(y.row(r));
        }
        let out = Tensor { rows: x.rows, cols, data };
        Ok(self.push(out, Op::Concat(a, b)))
    }

    /// Row lookup; also serves as the embedding lookup.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let x = self.value(a);
        let mut data = Vec::with_capacity(idx.len() * x.cols);
        for &i in idx {
            if i >= x.rows {
                return Err(TensorError::IndexOutOfRange { op: "gather_rows", index: i, len: x.rows });
            }
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor { rows: idx.len(), cols: x.cols, data };
        Ok(self.push(out, Op::Gather(a, idx.to_vec())))
    }

    /// Sums row `i` of `a` into output row `idx[i]` of an `n`-row result.
    pub fn scatter_add_rows(&mut self, a: Var, idx: &[usize], n: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        if idx.len() != x.rows {
            return Err(TensorError::ShapeMismatch { op: "scatter_add_rows", left: x.shape(), right: [idx.len(), 1] });
        }
        let mut out = Tensor::zeros(n, x.cols);
        for (r, &i) in idx.iter().enumerate() {
            if i >= n {
                return Err(TensorError::IndexOutOfRange { op: "scatter_add_rows", index: i, len: n });
            }
            for (o, &v) in out.data[i * x.cols..(i + 1) * x.cols].iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        Ok(self.push(out, Op::ScatterAdd(a, idx.to_vec())))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).data.iter().sum());
        self.push(out, Op::SumAll(a))
    }

    /// Column sums as a 1xN row.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Tensor::zeros(1, x.cols);
        for r in 0..x.rows {
            for (o, &v) in out.data.iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        self.push(out, Op::SumRows(a))
    }

    /// Column maxima as a 1xN row; ties go to the lowest row index.
    pub fn max_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let x = self.value(a);
        if x.rows == 0 {
            return Err(TensorError::Empty { op: "max_rows" });
        }
        let mut arg = vec![0usize; x.cols];
        let mut out = Tensor::from_vec(1, x.cols, x.row(0).to_vec())?;
        for r in 1..x.rows {
            for (c, &v) in x.row(r).iter().enumerate() {
                if v > out.data[c] {
                    out.data[c] = v;
                    arg[c] = r;
                }
            }
        }
        Ok(self.push(out, Op::MaxRows(a, arg)))
    }

    /// Inverted dropout. With `train` false (or p = 0) this is the identity
    /// and records nothing.
    pub fn dropout(&mut self, a: Var, p: f64, train: bool, rng: &mut impl Rng) -> Var {
        if !train || p <= 0.0 {
            return a;
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(a).len()).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
        let x = self.value(a);
        let out = Tensor { rows: x.rows, cols: x.cols, data: x.data.iter().zip(&mask).map(|(v, m)| v * m).collect() };
        self.push(out, Op::Dropout(a, mask))
    }

    /// Binary cross entropy of a 1x1 probability against target `y`.
    pub fn bce(&mut self, p: Var, y: f64) -> Result<Var, TensorError> {
        let pv = self.value(p).item()?;
        let out = Tensor::scalar(bce(pv, y));
        Ok(self.push(out, Op::Bce(p, y)))
    }

    /// Reverse pass from a scalar. Every recorded value gets a gradient slot;
    /// values the loss does not depend on read back as zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        if loss.0 >= self.nodes.len() {
            return Err(TensorError::Unreachable(format!("loss {} not on tape of {}", loss.0, self.nodes.len())));
        }
        self.value(loss).item()?;
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let mut acc = |v: Var, t: Tensor| match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&t),
                slot @ None => *slot = Some(t),
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(*a, g.matmul_unchecked(&bv.transpose()));
                    acc(*b, av.transpose().matmul_unchecked(&g));
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.map(|x| -x));
                }
                Op::AddBias(a, b) => {
                    let mut gb = Tensor::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (o, &v) in gb.data.iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    acc(*a, g.clone());
                    acc(*b, gb);
                }
                Op::Hadamard(a, b) => {
                    acc(*a, g.zip(self.value(*b), |x, y| x * y));
                    acc(*b, g.zip(self.value(*a), |x, y| x * y));
                }
                Op::Affine(a, s) => acc(*a, g.map(|x| x * s)),
                Op::Relu(a) => acc(*a, g.zip(self.value(*a), |x, v| if v > 0.0 { x } else { 0.0 })),
                Op::Sigmoid(a) => acc(*a, g.zip(&node.value, |x, y| x * y * (1.0 - y))),
                Op::Tanh(a) => acc(*a, g.zip(&node.value, |x, y| x * (1.0 - y * y))),
                Op::Concat(a, b) => {
                    let (ca, cb) = (self.value(*a).cols, self.value(*b).cols);
                    let mut ga = Tensor::zeros(g.rows, ca);
                    let mut gb = Tensor::zeros(g.rows, cb);
                    for r in 0..g.rows {
                        ga.data[r * ca..(r + 1) * ca].copy_from_slice(&g.row(r)[..ca]);
                        gb.data[r * cb..(r + 1) * cb].copy_from_slice(&g.row(r)[ca..]);
                    }
                    acc(*a, ga);
                    acc(*b, gb);
                }
                Op::Gather(a, idx) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows, x.cols);
                    for (r, &i) in idx.iter().enumerate() {
                        for (o, &v) in ga.data[i * x.cols..(i + 1) * x.cols].iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    acc(*a, ga);
                }
                Op::ScatterAdd(a, idx) => {
                    let mut data = Vec::with_capacity(idx.len() * g.cols);
                    for &i in idx {
                        data.extend_from_slice(g.row(i));
                    }
                    acc(*a, Tensor { rows: idx.len(), cols: g.cols, data });
                }
                Op::SumAll(a) => {
                    let x = self.value(*a);
                    acc(*a, Tensor::filled(x.rows, x.cols, g.data[0]));
                }
                Op::SumRows(a) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows, x.cols);
                    for r in 0..x.rows {
                        ga.data[r * x.cols..(r + 1) * x.cols].copy_from_slice(&g.data);
                    }
                    acc(*a, ga);
                }
                Op::MaxRows(a, arg) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows, x.cols);
                    for (c, &r) in arg.iter().enumerate() {
                        ga.data[r * x.cols + c] += g.data[c];
                    }
                    acc(*a, ga);
                }
                Op::Dropout(a, mask) => {
                    acc(*a, Tensor { rows: g.rows, cols: g.cols, data: g.data.iter().zip(mask).map(|(x, m)| x * m).collect() })
                }
                Op::Bce(p, y) => {
                    let pv = self.value(*p).data[0];
                    let d = if !(BCE_EPS..=1.0 - BCE_EPS).contains(&pv) { 0.0 } else { -y / pv + (1.0 - y) / (1.0 - pv) };
                    acc(*p, Tensor::scalar(g.data[0] * d));
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads, shapes: self.nodes.iter().map(|n| n.value.shape()).collect() })
    }
}

pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<[usize; 2]>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v` (zeros if unrelated).
    pub fn get(&self, v: Var) -> Tensor {
        match &self.grads[v.0] {
            Some(t) => t.clone(),
            None => {
                let [r, c] = self.shapes[v.0];
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, v: Var) -> Tensor {
        match self.grads[v.0].take() {
            Some(t) => t,
            None => {
                let [r, c] = self.shapes[v.0];
                Tensor::zeros(r, c)
            }
        }
    }
}
