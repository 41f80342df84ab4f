//! Build a small graph on the tape, backpropagate, and compare against
//! central differences.
//!
//! `cargo run --example gradient_check`

use sslr::tensor::{Tape, Tensor};

fn loss(x: &Tensor, w: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let (x, w) = (tape.constant(x.clone()), tape.constant(w.clone()));
    let y = tape.matmul(x, w).unwrap();
    let y = tape.relu(y).unwrap();
    let p = tape.softmax(y, 1).unwrap();
    let l = tape.mul(p, p).unwrap();
    let total = tape.sum(l).unwrap();
    tape.value(total).item()
}

fn main() {
    let x = Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 1.5, 0.3, -0.7]).unwrap();
    let w = Tensor::matrix(3, 2, vec![0.2, -0.4, 0.9, 0.1, -0.3, 0.8]).unwrap();

    let mut tape = Tape::new();
    let xv = tape.constant(x.clone());
    let wv = tape.input(w.clone());
    let y = tape.matmul(xv, wv).unwrap();
    let y = tape.relu(y).unwrap();
    let p = tape.softmax(y, 1).unwrap();
    let sq = tape.mul(p, p).unwrap();
    let l = tape.sum(sq).unwrap();
    let grad = tape.backward(l).unwrap().wrt(wv);

    let eps = 1e-6;
    for k in 0..w.numel() {
        let (mut up, mut down) = (w.clone(), w.clone());
        up.data_mut()[k] += eps;
        down.data_mut()[k] -= eps;
        let numeric = (loss(&x, &up) - loss(&x, &down)) / (2.0 * eps);
        println!("dL/dw[{k}]  tape {:+.8}  numeric {numeric:+.8}", grad.data()[k]);
    }
}
