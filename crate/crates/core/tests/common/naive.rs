//! Loop-by-loop reference forward pass of the classifier.

use sslr::data::PoseFrame;
use sslr::model::{Attention, FeedForward, Linear, Norm, SignClassifier};
use sslr::tensor::{ParamId, ParamStore};

type Mat = Vec<Vec<f64>>;

fn get(store: &ParamStore, id: ParamId) -> Mat {
    let t = store.get(id);
    match t.dims2() {
        Some((r, c)) => (0..r).map(|i| t.data()[i * c..(i + 1) * c].to_vec()).collect(),
        None => vec![t.data().to_vec()],
    }
}

pub fn linear(store: &ParamStore, x: &Mat, l: &Linear) -> Mat {
    let w = get(store, l.weight);
    let b = &get(store, l.bias)[0];
    x.iter()
        .map(|row| {
            (0..b.len())
                .map(|j| b[j] + row.iter().enumerate().map(|(i, v)| v * w[i][j]).sum::<f64>())
                .collect()
        })
        .collect()
}

pub fn norm(store: &ParamStore, x: &Mat, n: &Norm) -> Mat {
    let g = &get(store, n.gain)[0];
    let b = &get(store, n.bias)[0];
    x.iter()
        .map(|row| {
            let d = row.len() as f64;
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
            row.iter()
                .enumerate()
                .map(|(j, v)| g[j] * (v - mean) / (var + 1e-5).sqrt() + b[j])
                .collect()
        })
        .collect()
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn attention(store: &ParamStore, q_in: &Mat, kv_in: &Mat, a: &Attention, heads: usize) -> Mat {
    let q = linear(store, q_in, &a.query);
    let k = linear(store, kv_in, &a.key);
    let v = linear(store, kv_in, &a.value);
    let width = q[0].len();
    let d = width / heads;
    let mut joined = vec![vec![0.0; width]; q.len()];
    for h in 0..heads {
        let cols = h * d..(h + 1) * d;
        for (i, qi) in q.iter().enumerate() {
            let scores: Vec<f64> = k
                .iter()
                .map(|kj| cols.clone().map(|c| qi[c] * kj[c]).sum::<f64>() / (d as f64).sqrt())
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let z: f64 = e.iter().sum();
            for c in cols.clone() {
                joined[i][c] = e.iter().zip(&v).map(|(w, vj)| w / z * vj[c]).sum();
            }
        }
    }
    linear(store, &joined, &a.output)
}

fn ffn(store: &ParamStore, x: &Mat, f: &FeedForward) -> Mat {
    let h: Mat = linear(store, x, &f.inner)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.max(0.0)).collect())
        .collect();
    linear(store, &h, &f.outer)
}

pub fn logits(model: &SignClassifier, frames: &[PoseFrame]) -> Vec<f64> {
    let s = &model.params;
    let cfg = model.config();
    let t = frames.len().min(cfg.max_sequence_len);
    let raw: Mat = frames[..t]
        .iter()
        .map(|f| f.coords().iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect())
        .collect();
    let pos = get(s, model.positions());
    let mut x = add(&linear(s, &raw, &model.embed_layer()), &pos[..t].to_vec());
    for b in model.encoder_blocks() {
        x = norm(s, &add(&x, &attention(s, &x, &x, &b.attention, cfg.num_heads)), &b.norm1);
        x = norm(s, &add(&x, &ffn(s, &x, &b.ffn)), &b.norm2);
    }
    let mut q = get(s, model.class_query());
    for b in model.decoder_blocks() {
        let p = linear(s, &linear(s, &q, &b.projection.value), &b.projection.output);
        q = norm(s, &add(&q, &p), &b.norm1);
        q = norm(s, &add(&q, &attention(s, &q, &x, &b.cross, cfg.num_heads)), &b.norm2);
        q = norm(s, &add(&q, &ffn(s, &q, &b.ffn)), &b.norm3);
    }
    linear(s, &q, &model.head()).remove(0)
}

pub fn probabilities(model: &SignClassifier, frames: &[PoseFrame]) -> Vec<f64> {
    let z = logits(model, frames);
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}
