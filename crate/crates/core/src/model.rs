//! Class-query Transformer over pose sequences.
//!
//! Frames (108 values each) are projected to the hidden width and summed with
//! learned positional embeddings. A stack of post-norm encoder blocks follows.
//! The decoder consumes one learned class query. Because that query is a
//! sequence of length one, its self-attention reduces to the value
//! projection followed by the output layer; the query then cross-attends over
//! the encoder output. A linear head and softmax give class probabilities.

use log::warn;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{PoseFrame, FRAME_DIM};
use crate::error::{Error, Result, TensorError};
use crate::rng::rng_for;
use crate::tensor::{softmax_slice, ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub num_encoder_blocks: usize,
    pub num_decoder_blocks: usize,
    pub ffn_dim: usize,
    pub num_classes: usize,
    pub max_sequence_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: FRAME_DIM,
            hidden_dim: 108,
            num_heads: 9,
            num_encoder_blocks: 6,
            num_decoder_blocks: 6,
            ffn_dim: 216,
            num_classes: 100,
            max_sequence_len: 204,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.input_dim != FRAME_DIM {
            return fail(format!(
                "input_dim must be {FRAME_DIM} (54 joints × 2), got {}",
                self.input_dim
            ));
        }
        for (name, v) in [
            ("hidden_dim", self.hidden_dim),
            ("num_heads", self.num_heads),
            ("ffn_dim", self.ffn_dim),
            ("num_classes", self.num_classes),
            ("max_sequence_len", self.max_sequence_len),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if self.hidden_dim % self.num_heads != 0 {
            return fail(format!(
                "hidden_dim {} is not divisible by num_heads {}",
                self.hidden_dim, self.num_heads
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
pub struct Norm {
    pub gain: ParamId,
    pub bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
pub struct Attention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

/// Multi-head projection for a single-element sequence: only the value
/// projection and the output layer exist.
#[derive(Clone, Copy, Debug)]
pub struct ValueProjection {
    pub value: Linear,
    pub output: Linear,
}

#[derive(Clone, Copy, Debug)]
pub struct FeedForward {
    pub inner: Linear,
    pub outer: Linear,
}

#[derive(Clone, Copy, Debug)]
pub struct EncoderBlock {
    pub attention: Attention,
    pub norm1: Norm,
    pub ffn: FeedForward,
    pub norm2: Norm,
}

#[derive(Clone, Copy, Debug)]
pub struct DecoderBlock {
    pub projection: ValueProjection,
    pub norm1: Norm,
    pub cross: Attention,
    pub norm2: Norm,
    pub ffn: FeedForward,
    pub norm3: Norm,
}

/// Attention probabilities recorded during a forward pass, one matrix per
/// head (`queries × keys`).
#[derive(Clone, Debug, Default)]
pub struct AttentionTrace {
    pub encoder: Vec<Vec<Tensor>>,
    pub decoder: Vec<Vec<Tensor>>,
}

/// The classifier: configuration, parameters and the layout of those
/// parameters.
#[derive(Clone, Debug)]
pub struct SignClassifier {
    config: ModelConfig,
    pub params: ParamStore,
    embed: Linear,
    positions: ParamId,
    encoder: Vec<EncoderBlock>,
    class_query: ParamId,
    decoder: Vec<DecoderBlock>,
    head: Linear,
}

struct Builder<'a> {
    store: ParamStore,
    rng: &'a mut crate::rng::Rng,
}

impl Builder<'_> {
    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Linear {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| self.rng.gen_range(-bound..bound))
            .collect();
        Linear {
            weight: self.store.add(
                format!("{name}.weight"),
                Tensor::matrix(fan_in, fan_out, w).expect("linear shape"),
            ),
            bias: self
                .store
                .add(format!("{name}.bias"), Tensor::zeros(&[fan_out])),
        }
    }

    fn norm(&mut self, name: &str, width: usize) -> Norm {
        Norm {
            gain: self
                .store
                .add(format!("{name}.gain"), Tensor::vector(vec![1.0; width])),
            bias: self
                .store
                .add(format!("{name}.bias"), Tensor::zeros(&[width])),
        }
    }

    fn gaussian(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        let normal = Normal::new(0.0, 0.02).expect("std");
        let data: Vec<f64> = (0..rows * cols).map(|_| normal.sample(self.rng)).collect();
        self.store
            .add(name, Tensor::matrix(rows, cols, data).expect("shape"))
    }

    fn attention(&mut self, name: &str, h: usize) -> Attention {
        Attention {
            query: self.linear(&format!("{name}.query"), h, h),
            key: self.linear(&format!("{name}.key"), h, h),
            value: self.linear(&format!("{name}.value"), h, h),
            output: self.linear(&format!("{name}.output"), h, h),
        }
    }

    fn ffn(&mut self, name: &str, h: usize, f: usize) -> FeedForward {
        FeedForward {
            inner: self.linear(&format!("{name}.inner"), h, f),
            outer: self.linear(&format!("{name}.outer"), f, h),
        }
    }
}

/// `x · W + b`
pub fn linear(tape: &mut Tape, store: &ParamStore, x: Var, layer: &Linear) -> Result<Var, TensorError> {
    let w = tape.param(store, layer.weight);
    let b = tape.param(store, layer.bias);
    let xw = tape.matmul(x, w)?;
    tape.add_row(xw, b)
}

pub fn layer_norm(tape: &mut Tape, store: &ParamStore, x: Var, norm: &Norm) -> Result<Var, TensorError> {
    let g = tape.param(store, norm.gain);
    let b = tape.param(store, norm.bias);
    tape.layer_norm(x, g, b)
}

pub fn feed_forward(
    tape: &mut Tape,
    store: &ParamStore,
    x: Var,
    ffn: &FeedForward,
) -> Result<Var, TensorError> {
    let h = linear(tape, store, x, &ffn.inner)?;
    let h = tape.relu(h)?;
    linear(tape, store, h, &ffn.outer)
}

/// Scaled dot-product attention of `queries` over `keys_values` with
/// `heads` heads. Returns the output and the per-head attention matrices.
pub fn multi_head_attention(
    tape: &mut Tape,
    store: &ParamStore,
    queries: Var,
    keys_values: Var,
    attn: &Attention,
    heads: usize,
) -> Result<(Var, Vec<Var>), TensorError> {
    let q = linear(tape, store, queries, &attn.query)?;
    let k = linear(tape, store, keys_values, &attn.key)?;
    let v = linear(tape, store, keys_values, &attn.value)?;
    let width = tape.value(q).dims2().expect("2-D projection").1;
    let d = width / heads;
    let scale = 1.0 / (d as f64).sqrt();
    let mut outputs = Vec::with_capacity(heads);
    let mut weights = Vec::with_capacity(heads);
    for head in 0..heads {
        let qh = tape.slice_cols(q, head * d, d)?;
        let kh = tape.slice_cols(k, head * d, d)?;
        let vh = tape.slice_cols(v, head * d, d)?;
        let scores = tape.matmul_nt(qh, kh)?;
        let scores = tape.scale(scores, scale)?;
        let probs = tape.softmax(scores, 1)?;
        outputs.push(tape.matmul(probs, vh)?);
        weights.push(probs);
    }
    let joined = tape.concat_cols(&outputs)?;
    Ok((linear(tape, store, joined, &attn.output)?, weights))
}

/// Value-only projection step: `x + out(value(x))`, before normalization.
/// Per-head value projections concatenated equal one full-width projection.
pub fn value_projection_residual(
    tape: &mut Tape,
    store: &ParamStore,
    x: Var,
    proj: &ValueProjection,
) -> Result<Var, TensorError> {
    let v = linear(tape, store, x, &proj.value)?;
    let o = linear(tape, store, v, &proj.output)?;
    tape.add(x, o)
}

pub fn encoder_block(
    tape: &mut Tape,
    store: &ParamStore,
    x: Var,
    block: &EncoderBlock,
    heads: usize,
) -> Result<(Var, Vec<Var>), TensorError> {
    let (a, weights) = multi_head_attention(tape, store, x, x, &block.attention, heads)?;
    let x = tape.add(x, a)?;
    let x = layer_norm(tape, store, x, &block.norm1)?;
    let f = feed_forward(tape, store, x, &block.ffn)?;
    let x = tape.add(x, f)?;
    Ok((layer_norm(tape, store, x, &block.norm2)?, weights))
}

pub fn decoder_block(
    tape: &mut Tape,
    store: &ParamStore,
    query: Var,
    memory: Var,
    block: &DecoderBlock,
    heads: usize,
) -> Result<(Var, Vec<Var>), TensorError> {
    let x = value_projection_residual(tape, store, query, &block.projection)?;
    let x = layer_norm(tape, store, x, &block.norm1)?;
    let (c, weights) = multi_head_attention(tape, store, x, memory, &block.cross, heads)?;
    let x = tape.add(x, c)?;
    let x = layer_norm(tape, store, x, &block.norm2)?;
    let f = feed_forward(tape, store, x, &block.ffn)?;
    let x = tape.add(x, f)?;
    Ok((layer_norm(tape, store, x, &block.norm3)?, weights))
}

/// Frames as a `T × 108` matrix with missing joints read as zero.
pub fn frames_matrix(frames: &[PoseFrame]) -> Tensor {
    let data: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.coords().iter().map(|&v| if v.is_nan() { 0.0 } else { v }))
        .collect();
    Tensor::matrix(frames.len(), FRAME_DIM, data).expect("frame matrix")
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> (usize, f64) {
    let mut best = (0, probs[0]);
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > best.1 {
            best = (i, p);
        }
    }
    best
}

impl SignClassifier {
    /// Fresh model with seeded initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_for(seed, "model/init");
        let mut b = Builder {
            store: ParamStore::new(),
            rng: &mut rng,
        };
        let h = config.hidden_dim;
        let f = config.ffn_dim;
        let embed = b.linear("embed", config.input_dim, h);
        let positions = b.gaussian("positions", config.max_sequence_len, h);
        let encoder = (0..config.num_encoder_blocks)
            .map(|i| EncoderBlock {
                attention: b.attention(&format!("encoder.{i}.attention"), h),
                norm1: b.norm(&format!("encoder.{i}.norm1"), h),
                ffn: b.ffn(&format!("encoder.{i}.ffn"), h, f),
                norm2: b.norm(&format!("encoder.{i}.norm2"), h),
            })
            .collect();
        let class_query = b.gaussian("class_query", 1, h);
        let decoder = (0..config.num_decoder_blocks)
            .map(|i| DecoderBlock {
                projection: ValueProjection {
                    value: b.linear(&format!("decoder.{i}.projection.value"), h, h),
                    output: b.linear(&format!("decoder.{i}.projection.output"), h, h),
                },
                norm1: b.norm(&format!("decoder.{i}.norm1"), h),
                cross: b.attention(&format!("decoder.{i}.cross"), h),
                norm2: b.norm(&format!("decoder.{i}.norm2"), h),
                ffn: b.ffn(&format!("decoder.{i}.ffn"), h, f),
                norm3: b.norm(&format!("decoder.{i}.norm3"), h),
            })
            .collect();
        let head = b.linear("head", h, config.num_classes);
        Ok(SignClassifier {
            config,
            params: b.store,
            embed,
            positions,
            encoder,
            class_query,
            decoder,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn embed_layer(&self) -> Linear {
        self.embed
    }

    pub fn positions(&self) -> ParamId {
        self.positions
    }

    pub fn class_query(&self) -> ParamId {
        self.class_query
    }

    pub fn encoder_blocks(&self) -> &[EncoderBlock] {
        &self.encoder
    }

    pub fn decoder_blocks(&self) -> &[DecoderBlock] {
        &self.decoder
    }

    pub fn head(&self) -> Linear {
        self.head
    }

    /// Projected frames plus positional embeddings, `T × hidden`. Sequences
    /// longer than `max_sequence_len` are cut at the end.
    pub fn embed_sequence(&self, tape: &mut Tape, frames: &[PoseFrame]) -> Result<Var, TensorError> {
        if frames.is_empty() {
            return Err(TensorError::Usage("cannot embed an empty sequence".into()));
        }
        let limit = self.config.max_sequence_len;
        let frames = if frames.len() > limit {
            warn!(
                "sequence of {} frames truncated to {limit}",
                frames.len()
            );
            &frames[..limit]
        } else {
            frames
        };
        let x = tape.constant(frames_matrix(frames));
        let x = linear(tape, &self.params, x, &self.embed)?;
        let pos = tape.param(&self.params, self.positions);
        let pos = tape.slice_rows(pos, 0, frames.len())?;
        tape.add(x, pos)
    }

    pub fn encode(&self, tape: &mut Tape, embedded: Var, trace: Option<&mut AttentionTrace>) -> Result<Var, TensorError> {
        let mut x = embedded;
        let mut recorded = Vec::new();
        for block in &self.encoder {
            let (y, w) = encoder_block(tape, &self.params, x, block, self.config.num_heads)?;
            recorded.push(w);
            x = y;
        }
        if let Some(t) = trace {
            t.encoder = recorded
                .iter()
                .map(|ws| ws.iter().map(|&v| tape.value(v).clone()).collect())
                .collect();
        }
        Ok(x)
    }

    /// Runs the class query through the decoder stack; returns `1 × hidden`.
    pub fn decode_class_query(
        &self,
        tape: &mut Tape,
        encoded: Var,
        trace: Option<&mut AttentionTrace>,
    ) -> Result<Var, TensorError> {
        let mut q = tape.param(&self.params, self.class_query);
        let mut recorded = Vec::new();
        for block in &self.decoder {
            let (y, w) = decoder_block(tape, &self.params, q, encoded, block, self.config.num_heads)?;
            recorded.push(w);
            q = y;
        }
        if let Some(t) = trace {
            t.decoder = recorded
                .iter()
                .map(|ws| ws.iter().map(|&v| tape.value(v).clone()).collect())
                .collect();
        }
        Ok(q)
    }

    /// Unnormalized class scores, `1 × num_classes`.
    pub fn logits(
        &self,
        tape: &mut Tape,
        frames: &[PoseFrame],
        mut trace: Option<&mut AttentionTrace>,
    ) -> Result<Var, TensorError> {
        let e = self.embed_sequence(tape, frames)?;
        let enc = self.encode(tape, e, trace.as_deref_mut())?;
        let dec = self.decode_class_query(tape, enc, trace)?;
        linear(tape, &self.params, dec, &self.head)
    }

    /// Cross-entropy loss of one sample on a fresh tape.
    pub fn loss(&self, tape: &mut Tape, frames: &[PoseFrame], label: usize) -> Result<Var, TensorError> {
        let z = self.logits(tape, frames, None)?;
        tape.cross_entropy(z, label)
    }

    /// Class probabilities for one sample.
    pub fn forward(&self, frames: &[PoseFrame]) -> Result<Vec<f64>, TensorError> {
        let mut tape = Tape::new();
        let z = self.logits(&mut tape, frames, None)?;
        Ok(softmax_slice(tape.value(z).data()))
    }

    pub fn forward_traced(&self, frames: &[PoseFrame]) -> Result<(Vec<f64>, AttentionTrace), TensorError> {
        let mut tape = Tape::new();
        let mut trace = AttentionTrace::default();
        let z = self.logits(&mut tape, frames, Some(&mut trace))?;
        Ok((softmax_slice(tape.value(z).data()), trace))
    }

    /// Most probable class and its probability.
    pub fn predict_with_confidence(&self, frames: &[PoseFrame]) -> Result<(usize, f64), TensorError> {
        Ok(argmax(&self.forward(frames)?))
    }

    /// Copies parameter values from `other`, which must share the config.
    pub fn load_params_from(&mut self, other: &SignClassifier) -> Result<()> {
        if other.config != self.config {
            return Err(Error::Checkpoint("model configs differ".into()));
        }
        self.params = other.params.clone();
        self.params.zero_grads();
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredParam {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format_version: u32,
    config: ModelConfig,
    params: Vec<StoredParam>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

impl SignClassifier {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let ckpt = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            params: self
                .params
                .named()
                .map(|(name, t)| StoredParam {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    /// Restores a model. If `expected` is given, the stored config must
    /// equal it.
    pub fn from_checkpoint_json(text: &str, expected: Option<&ModelConfig>) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                ckpt.format_version
            )));
        }
        if let Some(exp) = expected {
            if *exp != ckpt.config {
                return Err(Error::Checkpoint(format!(
                    "config mismatch: checkpoint has {:?}, expected {:?}",
                    ckpt.config, exp
                )));
            }
        }
        let mut model = SignClassifier::new(ckpt.config, 0)?;
        if ckpt.params.len() != model.params.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} parameters, model needs {}",
                ckpt.params.len(),
                model.params.len()
            )));
        }
        for p in ckpt.params {
            let id = model
                .params
                .find(&p.name)
                .ok_or_else(|| Error::Checkpoint(format!("unknown parameter {:?}", p.name)))?;
            let t = Tensor::new(p.shape, p.data)?;
            model
                .params
                .set(id, t)
                .map_err(|e| Error::Checkpoint(format!("parameter {:?}: {e}", p.name)))?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>, expected: Option<&ModelConfig>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SignClassifier::from_checkpoint_json(&text, expected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config(classes: usize) -> ModelConfig {
        ModelConfig {
            hidden_dim: 18,
            num_heads: 3,
            num_encoder_blocks: 1,
            num_decoder_blocks: 1,
            ffn_dim: 12,
            num_classes: classes,
            max_sequence_len: 8,
            ..ModelConfig::default()
        }
    }

    fn frames(n: usize, seed: u64) -> Vec<PoseFrame> {
        let mut rng = rng_for(seed, "frames");
        (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..FRAME_DIM).map(|_| rng.gen_range(0.0..1.0)).collect();
                PoseFrame::new(&c).unwrap()
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let bad = ModelConfig {
            hidden_dim: 100,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            input_dim: 106,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_frame_embedding_shape() {
        let m = SignClassifier::new(tiny_config(3), 1).unwrap();
        let mut tape = Tape::new();
        let e = m.embed_sequence(&mut tape, &frames(1, 0)).unwrap();
        assert_eq!(tape.value(e).shape(), &[1, 18]);
    }

    #[test]
    fn zero_weights_and_frames_give_positions() {
        let mut m = SignClassifier::new(tiny_config(3), 1).unwrap();
        let w = m.embed.weight;
        let shape = m.params.get(w).shape().to_vec();
        m.params.set(w, Tensor::zeros(&shape)).unwrap();
        let zeros = vec![PoseFrame::zeros(); 4];
        let mut tape = Tape::new();
        let e = m.embed_sequence(&mut tape, &zeros).unwrap();
        let pos = m.params.get(m.positions);
        assert_eq!(tape.value(e).data(), &pos.data()[..4 * 18]);
    }

    #[test]
    fn frame_order_matters() {
        let m = SignClassifier::new(tiny_config(3), 1).unwrap();
        let f = frames(3, 4);
        let mut rev = f.clone();
        rev.reverse();
        let mut tape = Tape::new();
        let a = m.embed_sequence(&mut tape, &f).unwrap();
        let b = m.embed_sequence(&mut tape, &rev).unwrap();
        assert_ne!(tape.value(a), tape.value(b));
    }

    #[test]
    fn forward_is_a_distribution_and_deterministic() {
        let m = SignClassifier::new(tiny_config(4), 2).unwrap();
        let f = frames(5, 1);
        let p = m.forward(&f).unwrap();
        assert_eq!(p.len(), 4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&x| x > 0.0));
        let q = m.forward(&f.clone()).unwrap();
        assert_eq!(
            p.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            q.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_head_gives_uniform_and_class_zero() {
        let mut m = SignClassifier::new(tiny_config(5), 2).unwrap();
        let w = m.head.weight;
        m.params.set(w, Tensor::zeros(&[18, 5])).unwrap();
        let p = m.forward(&frames(3, 2)).unwrap();
        assert!(p.iter().all(|&x| x == 0.2));
        assert_eq!(m.predict_with_confidence(&frames(3, 2)).unwrap(), (0, 0.2));
    }

    #[test]
    fn long_sequences_are_truncated() {
        let m = SignClassifier::new(tiny_config(3), 3).unwrap();
        let f = frames(12, 9);
        let full = m.forward(&f).unwrap();
        let cut = m.forward(&f[..8]).unwrap();
        assert_eq!(full, cut);
        let shorter = m.forward(&f[..7]).unwrap();
        assert_ne!(full, shorter);
    }

    #[test]
    fn single_position_attention_is_one() {
        let m = SignClassifier::new(tiny_config(3), 3).unwrap();
        let (_, trace) = m.forward_traced(&frames(1, 3)).unwrap();
        for head in &trace.encoder[0] {
            assert_eq!(head.data(), &[1.0]);
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let m = SignClassifier::new(tiny_config(3), 5).unwrap();
        let json = m.to_checkpoint_json().unwrap();
        let back = SignClassifier::from_checkpoint_json(&json, Some(m.config())).unwrap();
        assert_eq!(back.params.fingerprint(), m.params.fingerprint());
        let other = tiny_config(4);
        assert!(SignClassifier::from_checkpoint_json(&json, Some(&other)).is_err());
    }
}
