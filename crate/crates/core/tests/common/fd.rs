//! Central finite-difference gradient checks.

use rand::Rng as _;
use sslr::error::TensorError;
use sslr::model::SignClassifier;
use sslr::rng::{rng_for, Rng};
use sslr::tensor::{Tape, Tensor, Var};

pub const EPS: f64 = 1e-5;

type Build = dyn Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − n‖ / max(‖a‖, ‖n‖)`, with a floor so two zero vectors agree.
pub fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-12)
}

fn eval(inputs: &[Tensor], build: &Build) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.input(t.clone())).collect();
    let out = build(&mut tape, &vars).expect("forward");
    tape.value(out).item()
}

/// Worst relative error over all inputs of the scalar function `build`.
pub fn check(inputs: &[Tensor], build: &Build) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.input(t.clone())).collect();
    let out = build(&mut tape, &vars).expect("forward");
    let grads = tape.backward(out).expect("backward");
    let mut worst: f64 = 0.0;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = grads.wrt(vars[i]).data().to_vec();
        let numeric: Vec<f64> = (0..t.numel())
            .map(|k| {
                let shifted = |d: f64| {
                    let mut ins = inputs.to_vec();
                    ins[i].data_mut()[k] += d;
                    eval(&ins, build)
                };
                (shifted(EPS) - shifted(-EPS)) / (2.0 * EPS)
            })
            .collect();
        worst = worst.max(rel_error(&analytic, &numeric));
    }
    worst
}

pub fn random(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Values bounded away from zero, for kinked ops.
pub fn random_off_zero(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Reduces `out` to a scalar through a fixed random weighting, so every
/// output element contributes a distinct amount.
pub fn weighted_sum(tape: &mut Tape, out: Var, seed: u64) -> Result<Var, TensorError> {
    let mut rng = rng_for(seed, "weights");
    let w = random(&mut rng, tape.value(out).shape());
    let w = tape.constant(w);
    let p = tape.mul(out, w)?;
    tape.sum(p)
}

pub struct OpCase {
    pub name: &'static str,
    pub inputs: Vec<Tensor>,
    pub build: Box<Build>,
}

/// Every differentiable op with inputs drawn from `seed`.
pub fn op_cases(seed: u64) -> Vec<OpCase> {
    let mut rng = rng_for(seed, "gradcheck");
    let r = &mut rng;
    let mut cases: Vec<OpCase> = Vec::new();
    macro_rules! case {
        ($name:expr, [$($input:expr),*], $build:expr) => {
            cases.push(OpCase { name: $name, inputs: vec![$($input),*], build: Box::new($build) });
        };
    }
    case!("matmul", [random(r, &[4, 5]), random(r, &[5, 3])], move |t, v| {
        let o = t.matmul(v[0], v[1])?;
        weighted_sum(t, o, seed)
    });
    case!("matmul_vector", [random(r, &[4, 5]), random(r, &[5])], move |t, v| {
        let o = t.matmul(v[0], v[1])?;
        weighted_sum(t, o, seed)
    });
    case!("matmul_nt", [random(r, &[4, 5]), random(r, &[3, 5])], move |t, v| {
        let o = t.matmul_nt(v[0], v[1])?;
        weighted_sum(t, o, seed)
    });
    case!("add", [random(r, &[3, 4]), random(r, &[3, 4])], move |t, v| {
        let o = t.add(v[0], v[1])?;
        weighted_sum(t, o, seed)
    });
    case!("mul", [random(r, &[3, 4]), random(r, &[3, 4])], move |t, v| {
        let o = t.mul(v[0], v[1])?;
        weighted_sum(t, o, seed)
    });
    case!("add_row", [random(r, &[3, 4]), random(r, &[4])], move |t, v| {
        let o = t.add_row(v[0], v[1])?;
        weighted_sum(t, o, seed)
    });
    case!("scale", [random(r, &[3, 4])], move |t, v| {
        let o = t.scale(v[0], -0.7)?;
        weighted_sum(t, o, seed)
    });
    case!("relu", [random_off_zero(r, &[3, 4])], move |t, v| {
        let o = t.relu(v[0])?;
        weighted_sum(t, o, seed)
    });
    case!("transpose", [random(r, &[3, 4])], move |t, v| {
        let o = t.transpose(v[0])?;
        weighted_sum(t, o, seed)
    });
    case!("slice_cols", [random(r, &[3, 6])], move |t, v| {
        let o = t.slice_cols(v[0], 2, 3)?;
        weighted_sum(t, o, seed)
    });
    case!("concat_cols", [random(r, &[3, 2]), random(r, &[3, 3])], move |t, v| {
        let o = t.concat_cols(&[v[0], v[1]])?;
        weighted_sum(t, o, seed)
    });
    case!("slice_rows", [random(r, &[5, 3])], move |t, v| {
        let o = t.slice_rows(v[0], 1, 3)?;
        weighted_sum(t, o, seed)
    });
    case!("softmax_vector", [random(r, &[9])], move |t, v| {
        let o = t.softmax(v[0], 0)?;
        weighted_sum(t, o, seed)
    });
    case!("softmax_rows", [random(r, &[3, 4])], move |t, v| {
        let o = t.softmax(v[0], 1)?;
        weighted_sum(t, o, seed)
    });
    case!("softmax_columns", [random(r, &[3, 4])], move |t, v| {
        let o = t.softmax(v[0], 0)?;
        weighted_sum(t, o, seed)
    });
    case!("layer_norm", [random(r, &[3, 5]), random(r, &[5]), random(r, &[5])], move |t, v| {
        let o = t.layer_norm(v[0], v[1], v[2])?;
        weighted_sum(t, o, seed)
    });
    let target = r.gen_range(0..6);
    case!("cross_entropy", [random(r, &[6])], move |t, v| t.cross_entropy(v[0], target));
    case!("cross_entropy_row", [random(r, &[1, 6])], move |t, v| t.cross_entropy(v[0], target));
    case!("sum", [random(r, &[3, 4])], move |t, v| {
        let o = t.mul(v[0], v[0])?;
        t.sum(o)
    });
    cases
}

/// Relative error of the full-model gradient over `count` randomly chosen
/// parameter scalars.
pub fn model_check(model: &mut SignClassifier, frames: &[sslr::data::PoseFrame], label: usize, count: usize, seed: u64) -> f64 {
    let mut rng = rng_for(seed, "gradcheck/model");
    let ids: Vec<_> = model.params.ids().collect();
    let picks: Vec<(sslr::tensor::ParamId, usize)> = (0..count)
        .map(|_| {
            let id = ids[rng.gen_range(0..ids.len())];
            (id, rng.gen_range(0..model.params.get(id).numel()))
        })
        .collect();

    let loss = |m: &SignClassifier| {
        let mut tape = Tape::new();
        let l = m.loss(&mut tape, frames, label).unwrap();
        tape.value(l).item()
    };
    let mut tape = Tape::new();
    let l = model.loss(&mut tape, frames, label).unwrap();
    let grads = tape.backward(l).unwrap();
    model.params.accumulate(&tape, &grads);
    let analytic: Vec<f64> = picks.iter().map(|&(id, k)| model.params.grad(id)[k]).collect();
    model.params.zero_grads();

    let numeric: Vec<f64> = picks
        .iter()
        .map(|&(id, k)| {
            let orig = model.params.get(id).data()[k];
            model.params.value_mut(id)[k] = orig + EPS;
            let up = loss(model);
            model.params.value_mut(id)[k] = orig - EPS;
            let down = loss(model);
            model.params.value_mut(id)[k] = orig;
            (up - down) / (2.0 * EPS)
        })
        .collect();
    rel_error(&analytic, &numeric)
}
