use cpgvul::autodiff::{grad_check, Tape, Tensor, TensorError, Var};
use cpgvul::fixtures::{graph_record, random_graph};
use cpgvul::cpg::EdgeKind;
use cpgvul::ggnn::{check_gradients, Hyper, ModelState, Variant, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Away from zero so relu kinks are not straddled by the finite difference.
fn kink_free(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    loop {
        let t = rand_tensor(rng, rows, cols, -2.0, 2.0);
        if t.data().iter().all(|v| v.abs() >= 1e-4) {
            return t;
        }
    }
}

/// Columns whose top two entries are well separated.
fn tie_free(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    loop {
        let t = kink_free(rng, rows, cols);
        let ok = (0..cols).all(|c| {
            let mut col: Vec<f64> = (0..rows).map(|r| t.get(r, c)).collect();
            col.sort_by(f64::total_cmp);
            rows < 2 || col[rows - 1] - col[rows - 2] >= 1e-4
        });
        if ok {
            return t;
        }
    }
}

/// Max relative gradient error over every coordinate of `params` for
/// loss = sum(f(params) * R) with a fixed random R.
fn check(params: Vec<Tensor>, seed: u64, f: impl Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>) -> f64 {
    let shape = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
        let out = f(&mut tape, &vars).unwrap();
        tape.value(out).shape()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let r = rand_tensor(&mut rng, shape[0], shape[1], 0.5, 1.5);
    grad_check(&params, usize::MAX, seed, |p| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = p.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let rv = tape.leaf(r.clone());
        let weighted = tape.hadamard(out, rv)?;
        let loss = tape.sum_all(weighted);
        let g = tape.backward(loss)?;
        Ok((tape.value(loss).item()?, vars.iter().map(|&v| g.get(v)).collect()))
    })
    .unwrap()
}

const TOL: f64 = 1e-7;

#[test]
fn primitives_match_central_differences() {
    let mut worst: Vec<(&str, f64)> = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_tensor(&mut rng, 3, 4, -2.0, 2.0);
        let b = rand_tensor(&mut rng, 3, 4, -2.0, 2.0);
        let w = rand_tensor(&mut rng, 4, 2, -2.0, 2.0);
        let bias = rand_tensor(&mut rng, 1, 4, -2.0, 2.0);
        let k = kink_free(&mut rng, 3, 4);
        let m = tie_free(&mut rng, 5, 3);
        let p = rand_tensor(&mut rng, 1, 1, 0.05, 0.95);
        let c = rand_tensor(&mut rng, 3, 2, -2.0, 2.0);
        worst.push(("matmul", check(vec![a.clone(), w.clone()], seed, |t, v| t.matmul(v[0], v[1]))));
        worst.push(("add", check(vec![a.clone(), b.clone()], seed, |t, v| t.add(v[0], v[1]))));
        worst.push(("sub", check(vec![a.clone(), b.clone()], seed, |t, v| t.sub(v[0], v[1]))));
        worst.push(("add_bias", check(vec![a.clone(), bias.clone()], seed, |t, v| t.add_bias(v[0], v[1]))));
        worst.push(("hadamard", check(vec![a.clone(), b.clone()], seed, |t, v| t.hadamard(v[0], v[1]))));
        worst.push(("affine", check(vec![a.clone()], seed, |t, v| Ok(t.affine(v[0], -1.0, 1.0)))));
        worst.push(("relu", check(vec![k.clone()], seed, |t, v| Ok(t.relu(v[0])))));
        worst.push(("sigmoid", check(vec![a.clone()], seed, |t, v| Ok(t.sigmoid(v[0])))));
        worst.push(("tanh", check(vec![a.clone()], seed, |t, v| Ok(t.tanh(v[0])))));
        worst.push(("concat", check(vec![a.clone(), c.clone()], seed, |t, v| t.concat(v[0], v[1]))));
        worst.push(("gather_rows", check(vec![a.clone()], seed, |t, v| t.gather_rows(v[0], &[2, 0, 2, 1]))));
        worst.push(("scatter_add_rows", check(vec![a.clone()], seed, |t, v| t.scatter_add_rows(v[0], &[1, 1, 0], 3))));
        worst.push(("sum_all", check(vec![a.clone()], seed, |t, v| Ok(t.sum_all(v[0])))));
        worst.push(("sum_rows", check(vec![a.clone()], seed, |t, v| Ok(t.sum_rows(v[0])))));
        worst.push(("max_rows", check(vec![m.clone()], seed, |t, v| t.max_rows(v[0]))));
        worst.push((
            "dropout",
            check(vec![a.clone()], seed, |t, v| {
                let mut rng = ChaCha8Rng::seed_from_u64(99);
                Ok(t.dropout(v[0], 0.3, true, &mut rng))
            }),
        ));
        worst.push(("bce", check(vec![p.clone()], seed, |t, v| t.bce(v[0], 1.0))));
        worst.push(("bce0", check(vec![p.clone()], seed, |t, v| t.bce(v[0], 0.0))));
    }
    for (name, err) in &worst {
        assert!(*err <= TOL, "{name}: relative error {err:e}");
    }
}

#[test]
fn composite_network_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = rand_tensor(&mut rng, 4, 3, -1.0, 1.0);
    let params = vec![
        rand_tensor(&mut rng, 3, 5, -1.0, 1.0),
        rand_tensor(&mut rng, 1, 5, -0.5, 0.5),
        rand_tensor(&mut rng, 5, 4, -1.0, 1.0),
        rand_tensor(&mut rng, 4, 1, -1.0, 1.0),
    ];
    let f = |p: &[Tensor]| -> Result<(f64, Vec<Tensor>), TensorError> {
        let mut t = Tape::new();
        let vs: Vec<Var> = p.iter().map(|x| t.leaf(x.clone())).collect();
        let xv = t.leaf(x.clone());
        let h1 = t.matmul(xv, vs[0])?;
        let h1 = t.add_bias(h1, vs[1])?;
        let h1 = t.relu(h1);
        let h2 = t.matmul(h1, vs[2])?;
        let h2 = t.tanh(h2);
        let pooled = t.max_rows(h2)?;
        let logit = t.matmul(pooled, vs[3])?;
        let y = t.sigmoid(logit);
        let loss = t.bce(y, 1.0)?;
        let g = t.backward(loss)?;
        Ok((t.value(loss).item()?, vs.iter().map(|&v| g.get(v)).collect()))
    };
    let err = grad_check(&params, usize::MAX, 0, f).unwrap();
    assert!(err <= 1e-6, "{err:e}");
}

fn six_node_model(variant: Variant, tied: bool) -> (ModelState, cpgvul::ggnn::EncodedGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let kinds = [EdgeKind::Ast, EdgeKind::FlowTo, EdgeKind::DefineUse, EdgeKind::Reach, EdgeKind::Control];
    let (tokens, edges) = random_graph(&mut rng, 6, &kinds);
    let g = graph_record("six", 1, &tokens, &edges);
    let vocab = Vocabulary::build([&g], 1, None);
    let hyper = Hyper { d: 6, d_edge: 4, hops: 3, dropout: 0.3, variant, tied, seed: 3, ..Hyper::default() };
    let mut model = ModelState::init(hyper, vocab).unwrap();
    // steeper output so the loss surface is not nearly flat
    for v in model.param_mut("W_out").data_mut() {
        *v *= 3.0;
    }
    let enc = model.encode(&g).unwrap();
    (model, enc)
}

fn model_grad_error(variant: Variant, tied: bool) -> f64 {
    let (model, g) = six_node_model(variant, tied);
    check_gradients(&model, &g, 150, 21, 77).unwrap()
}

#[test]
fn full_model_loss_matches_central_differences() {
    let start = std::time::Instant::now();
    for (variant, tied) in [(Variant::EdgeAware, false), (Variant::Ggnn, false), (Variant::Ggnn, true), (Variant::Gcn, false)] {
        let err = model_grad_error(variant, tied);
        assert!(err <= 1e-4, "{variant} tied={tied}: {err:e}");
    }
    assert!(start.elapsed().as_secs() < 30);
}
