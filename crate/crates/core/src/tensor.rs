//! Dense `f64` tensors and a define-by-run reverse-mode tape.
//!
//! A [`Tape`] is rebuilt for every forward pass. Each operation appends a node
//! holding its output value; [`Tape::backward`] walks the nodes in reverse
//! append order, which is a reverse topological order by construction.
//!
//! Only two broadcasts exist: matrix × vector in [`Tape::matmul`] and
//! tensor + last-axis vector in [`Tape::add_row`]. Every other shape mix is a
//! [`TensorError::Shape`].

use std::sync::Arc;

use crate::error::TensorError;

type TResult<T> = Result<T, TensorError>;

/// Immutable dense array of `f64` values in row-major order.
///
/// The storage is reference counted, so cloning a tensor is cheap and a tensor
/// can be shared read-only across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Arc<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> TResult<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(TensorError::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Tensor {
            shape,
            data: Arc::new(data),
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: Arc::new(vec![0.0; n]),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![],
            data: Arc::new(vec![value]),
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data: Arc::new(data),
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> TResult<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> TResult<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(TensorError::Shape {
                    op: "from_rows",
                    lhs: vec![cols],
                    rhs: vec![row.len()],
                });
            }
            data.extend_from_slice(row);
        }
        Tensor::matrix(rows.len(), cols, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access; copies the storage first if it is shared.
    pub fn data_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.data).as_mut_slice()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    /// `(rows, cols)` for a 2-D tensor.
    pub fn dims2(&self) -> Option<(usize, usize)> {
        match self.shape.as_slice() {
            &[r, c] => Some((r, c)),
            _ => None,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let (_, c) = self.dims2().expect("row() on a non-matrix");
        &self.data[i * c..(i + 1) * c]
    }

    fn last_dim(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }
}

// Kernels. All operands are row-major; transposed operands are expressed
// through strides.

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // SAFETY: the strides address exactly the m×k and k×n elements inside
    // `a` and `b`, and `out` holds m×n elements with row stride n.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            0.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}

/// `a[m×k] · b[k×n]`
fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert!(a.len() == m * k && b.len() == k * n);
    gemm(m, k, n, (a, k as isize, 1), (b, n as isize, 1))
}

/// `a[m×k] · b[n×k]ᵀ`
fn mm_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert!(a.len() == m * k && b.len() == n * k);
    gemm(m, k, n, (a, k as isize, 1), (b, 1, k as isize))
}

/// `a[k×m]ᵀ · b[k×n]`
fn mm_tn(a: &[f64], b: &[f64], k: usize, m: usize, n: usize) -> Vec<f64> {
    debug_assert!(a.len() == k * m && b.len() == k * n);
    gemm(m, k, n, (a, 1, m as isize), (b, n as isize, 1))
}

fn check_finite(op: &'static str, data: &[f64]) -> TResult<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TensorError::NonFinite { op })
    }
}

/// Lanes along `axis`: `(count, len, start_of_lane(i), stride)`.
fn lanes(shape: &[usize], axis: usize) -> TResult<(usize, usize, usize, usize)> {
    match (shape, axis) {
        ([n], 0) => Ok((1, *n, 0, 1)),
        ([r, c], 1) => Ok((*r, *c, *c, 1)),
        ([r, c], 0) => Ok((*c, *r, 1, *c)),
        _ => Err(TensorError::Shape {
            op: "softmax",
            lhs: shape.to_vec(),
            rhs: vec![axis],
        }),
    }
}

fn softmax_forward(x: &[f64], shape: &[usize], axis: usize) -> TResult<Vec<f64>> {
    let (count, len, lane_step, stride) = lanes(shape, axis)?;
    let mut out = vec![0.0; x.len()];
    for lane in 0..count {
        let base = lane * lane_step;
        let idx = |j: usize| base + j * stride;
        let max = (0..len).map(|j| x[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for j in 0..len {
            let e = (x[idx(j)] - max).exp();
            out[idx(j)] = e;
            total += e;
        }
        for j in 0..len {
            out[idx(j)] /= total;
        }
    }
    Ok(out)
}

/// Numerically stable softmax of a plain slice.
pub fn softmax_slice(x: &[f64]) -> Vec<f64> {
    softmax_forward(x, &[x.len()], 0).expect("1-D softmax")
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Identifies a parameter in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Constant,
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Transpose(Var),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize),
    Softmax(Var, usize),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normalized: Vec<f64>,
        inv_std: Vec<f64>,
    },
    CrossEntropy {
        logits: Var,
        target: usize,
        probs: Vec<f64>,
    },
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records operations of one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; zeros if `v` did not
    /// influence the loss.
    pub fn wrt(&self, v: Var) -> Tensor {
        let shape = self.shapes[v.0].clone();
        match &self.grads[v.0] {
            Some(g) => Tensor::new(shape, g.clone()).expect("gradient shape"),
            None => Tensor::zeros(&shape),
        }
    }
}

const LN_EPS: f64 = 1e-5;

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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn shape_err(&self, op: &'static str, a: Var, b: Var) -> TensorError {
        TensorError::Shape {
            op,
            lhs: self.shape(a).to_vec(),
            rhs: self.shape(b).to_vec(),
        }
    }

    /// A value that takes no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant, false)
    }

    /// A differentiable input whose gradient can be read back from
    /// [`Gradients::wrt`].
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input, true)
    }

    /// Places a parameter on the tape. Its gradient flows back into the store
    /// through [`ParamStore::accumulate`].
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.get(id).clone(), Op::Param(id), true)
    }

    /// Matrix product. `b` may be a vector, giving a vector result.
    pub fn matmul(&mut self, a: Var, b: Var) -> TResult<Var> {
        let (m, k) = self
            .value(a)
            .dims2()
            .ok_or_else(|| self.shape_err("matmul", a, b))?;
        let (k2, n, out_shape) = match self.shape(b) {
            &[k2, n] => (k2, n, vec![m, n]),
            &[k2] => (k2, 1, vec![m]),
            _ => return Err(self.shape_err("matmul", a, b)),
        };
        if k != k2 {
            return Err(self.shape_err("matmul", a, b));
        }
        let out = mm(self.value(a).data(), self.value(b).data(), m, k, n);
        check_finite("matmul", &out)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(out_shape, out)?, Op::MatMul(a, b), rg))
    }

    /// `a · bᵀ` for matrices `a[m×k]`, `b[n×k]`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> TResult<Var> {
        let (Some((m, k)), Some((n, k2))) = (self.value(a).dims2(), self.value(b).dims2()) else {
            return Err(self.shape_err("matmul_nt", a, b));
        };
        if k != k2 {
            return Err(self.shape_err("matmul_nt", a, b));
        }
        let out = mm_nt(self.value(a).data(), self.value(b).data(), m, k, n);
        check_finite("matmul_nt", &out)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::MatMulNt(a, b), rg))
    }

    fn zip_same(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> TResult<(Tensor, bool)> {
        if self.shape(a) != self.shape(b) {
            return Err(self.shape_err(op, a, b));
        }
        let out: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        check_finite(op, &out)?;
        let t = Tensor::new(self.shape(a).to_vec(), out)?;
        Ok((t, self.rg(a) || self.rg(b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> TResult<Var> {
        let (t, rg) = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.push(t, Op::Add(a, b), rg))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> TResult<Var> {
        let (t, rg) = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.push(t, Op::Mul(a, b), rg))
    }

    /// Adds vector `v` along the last axis of `a`.
    pub fn add_row(&mut self, a: Var, v: Var) -> TResult<Var> {
        let c = self.value(a).last_dim();
        if self.shape(v) != [c] || self.shape(a).is_empty() {
            return Err(self.shape_err("add_row", a, v));
        }
        let vd = self.value(v).data();
        let out: Vec<f64> = self
            .value(a)
            .data()
            .chunks(c)
            .flat_map(|row| row.iter().zip(vd).map(|(x, y)| x + y))
            .collect();
        check_finite("add_row", &out)?;
        let rg = self.rg(a) || self.rg(v);
        let t = Tensor::new(self.shape(a).to_vec(), out)?;
        Ok(self.push(t, Op::AddRow(a, v), rg))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> TResult<Var> {
        let out: Vec<f64> = self.value(a).data().iter().map(|x| x * s).collect();
        check_finite("scale", &out)?;
        let t = Tensor::new(self.shape(a).to_vec(), out)?;
        let rg = self.rg(a);
        Ok(self.push(t, Op::Scale(a, s), rg))
    }

    pub fn relu(&mut self, a: Var) -> TResult<Var> {
        let out: Vec<f64> = self.value(a).data().iter().map(|&x| x.max(0.0)).collect();
        let t = Tensor::new(self.shape(a).to_vec(), out)?;
        let rg = self.rg(a);
        Ok(self.push(t, Op::Relu(a), rg))
    }

    pub fn transpose(&mut self, a: Var) -> TResult<Var> {
        let (r, c) = self
            .value(a)
            .dims2()
            .ok_or_else(|| self.shape_err("transpose", a, a))?;
        let src = self.value(a).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let rg = self.rg(a);
        Ok(self.push(Tensor::matrix(c, r, out)?, Op::Transpose(a), rg))
    }

    /// Columns `start..start + len` of a matrix.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> TResult<Var> {
        let (r, c) = self
            .value(a)
            .dims2()
            .ok_or_else(|| self.shape_err("slice_cols", a, a))?;
        if start + len > c {
            return Err(TensorError::Shape {
                op: "slice_cols",
                lhs: vec![r, c],
                rhs: vec![start, len],
            });
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(r * len);
        for i in 0..r {
            out.extend_from_slice(&src[i * c + start..i * c + start + len]);
        }
        let rg = self.rg(a);
        Ok(self.push(Tensor::matrix(r, len, out)?, Op::SliceCols(a, start), rg))
    }

    /// Joins matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> TResult<Var> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::Usage("concat_cols of nothing".into()));
        };
        let r = self
            .value(first)
            .dims2()
            .ok_or_else(|| self.shape_err("concat_cols", first, first))?
            .0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            match self.value(p).dims2() {
                Some((pr, pc)) if pr == r => widths.push(pc),
                _ => return Err(self.shape_err("concat_cols", first, p)),
            }
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(r * total);
        for i in 0..r {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[i * w..(i + 1) * w]);
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(
            Tensor::matrix(r, total, out)?,
            Op::ConcatCols(parts.to_vec()),
            rg,
        ))
    }

    /// Rows `start..start + len` of a matrix.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> TResult<Var> {
        let (r, c) = self
            .value(a)
            .dims2()
            .ok_or_else(|| self.shape_err("slice_rows", a, a))?;
        if start + len > r {
            return Err(TensorError::Shape {
                op: "slice_rows",
                lhs: vec![r, c],
                rhs: vec![start, len],
            });
        }
        let out = self.value(a).data()[start * c..(start + len) * c].to_vec();
        let rg = self.rg(a);
        Ok(self.push(Tensor::matrix(len, c, out)?, Op::SliceRows(a, start), rg))
    }

    /// Softmax along `axis` (0 or 1 for matrices, 0 for vectors), stabilized
    /// by subtracting the lane maximum.
    pub fn softmax(&mut self, a: Var, axis: usize) -> TResult<Var> {
        let out = softmax_forward(self.value(a).data(), self.shape(a), axis)?;
        check_finite("softmax", &out)?;
        let t = Tensor::new(self.shape(a).to_vec(), out)?;
        let rg = self.rg(a);
        Ok(self.push(t, Op::Softmax(a, axis), rg))
    }

    /// Normalizes each last-axis lane to zero mean and unit variance, then
    /// applies `gain` and `bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> TResult<Var> {
        let c = self.value(x).last_dim();
        if c < 2 || self.shape(x).is_empty() {
            return Err(TensorError::Shape {
                op: "layer_norm",
                lhs: self.shape(x).to_vec(),
                rhs: vec![c],
            });
        }
        if self.shape(gain) != [c] {
            return Err(self.shape_err("layer_norm", x, gain));
        }
        if self.shape(bias) != [c] {
            return Err(self.shape_err("layer_norm", x, bias));
        }
        let xd = self.value(x).data();
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let rows = xd.len() / c;
        let mut normalized = Vec::with_capacity(xd.len());
        let mut inv_std = Vec::with_capacity(rows);
        let mut out = Vec::with_capacity(xd.len());
        for lane in xd.chunks(c) {
            let mean = lane.iter().sum::<f64>() / c as f64;
            let var = lane.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
            let rstd = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(rstd);
            for (j, v) in lane.iter().enumerate() {
                let n = (v - mean) * rstd;
                normalized.push(n);
                out.push(n * g[j] + b[j]);
            }
        }
        check_finite("layer_norm", &out)?;
        let t = Tensor::new(self.shape(x).to_vec(), out)?;
        let rg = self.rg(x) || self.rg(gain) || self.rg(bias);
        Ok(self.push(
            t,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            },
            rg,
        ))
    }

    /// `-ln softmax(logits)[target]` for a vector or `1×C` matrix of logits.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> TResult<Var> {
        let classes = match self.shape(logits) {
            &[c] | &[1, c] => c,
            _ => return Err(self.shape_err("cross_entropy", logits, logits)),
        };
        if target >= classes {
            return Err(TensorError::ClassIndex {
                index: target,
                classes,
            });
        }
        let z = self.value(logits).data();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_total = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = -(z[target] - max - log_total);
        let probs = softmax_slice(z);
        check_finite("cross_entropy", &[loss])?;
        let rg = self.rg(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
            rg,
        ))
    }

    /// Sum of all elements.
    pub fn sum(&mut self, a: Var) -> TResult<Var> {
        let s: f64 = self.value(a).data().iter().sum();
        check_finite("sum", &[s])?;
        let rg = self.rg(a);
        Ok(self.push(Tensor::scalar(s), Op::Sum(a), rg))
    }

    /// Reverse pass from a one-element `loss`.
    pub fn backward(&self, loss: Var) -> TResult<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(TensorError::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape.clone()).collect(),
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let mut acc = |v: Var, contrib: Vec<f64>| match &mut grads[v.0] {
            Some(existing) => existing.iter_mut().zip(&contrib).for_each(|(e, c)| *e += c),
            slot @ None => *slot = Some(contrib),
        };
        match &node.op {
            Op::Constant | Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2().expect("matmul lhs");
                let n = self.value(*b).numel() / k;
                if self.rg(*a) {
                    acc(*a, mm_nt(g, self.value(*b).data(), m, n, k));
                }
                if self.rg(*b) {
                    acc(*b, mm_tn(self.value(*a).data(), g, m, k, n));
                }
            }
            Op::MatMulNt(a, b) => {
                let (m, k) = self.value(*a).dims2().expect("matmul_nt lhs");
                let n = self.value(*b).dims2().expect("matmul_nt rhs").0;
                if self.rg(*a) {
                    acc(*a, mm(g, self.value(*b).data(), m, n, k));
                }
                if self.rg(*b) {
                    acc(*b, mm_tn(g, self.value(*a).data(), m, n, k));
                }
            }
            Op::Add(a, b) => {
                if self.rg(*a) {
                    acc(*a, g.to_vec());
                }
                if self.rg(*b) {
                    acc(*b, g.to_vec());
                }
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    let bd = self.value(*b).data();
                    acc(*a, g.iter().zip(bd).map(|(x, y)| x * y).collect());
                }
                if self.rg(*b) {
                    let ad = self.value(*a).data();
                    acc(*b, g.iter().zip(ad).map(|(x, y)| x * y).collect());
                }
            }
            Op::AddRow(a, v) => {
                if self.rg(*a) {
                    acc(*a, g.to_vec());
                }
                if self.rg(*v) {
                    let c = self.value(*v).numel();
                    let mut dv = vec![0.0; c];
                    for row in g.chunks(c) {
                        dv.iter_mut().zip(row).for_each(|(d, x)| *d += x);
                    }
                    acc(*v, dv);
                }
            }
            Op::Scale(a, s) => {
                if self.rg(*a) {
                    acc(*a, g.iter().map(|x| x * s).collect());
                }
            }
            Op::Relu(a) => {
                if self.rg(*a) {
                    let ad = self.value(*a).data();
                    acc(
                        *a,
                        g.iter()
                            .zip(ad)
                            .map(|(x, &y)| if y > 0.0 { *x } else { 0.0 })
                            .collect(),
                    );
                }
            }
            Op::Transpose(a) => {
                if self.rg(*a) {
                    let (r, c) = self.value(*a).dims2().expect("transpose");
                    let mut out = vec![0.0; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            out[i * c + j] = g[j * r + i];
                        }
                    }
                    acc(*a, out);
                }
            }
            Op::SliceCols(a, start) => {
                if self.rg(*a) {
                    let (r, c) = self.value(*a).dims2().expect("slice_cols");
                    let len = g.len() / r;
                    let mut out = vec![0.0; r * c];
                    for i in 0..r {
                        out[i * c + start..i * c + start + len]
                            .copy_from_slice(&g[i * len..(i + 1) * len]);
                    }
                    acc(*a, out);
                }
            }
            Op::ConcatCols(parts) => {
                let (r, total) = node.value.dims2().expect("concat_cols");
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).dims2().expect("concat part").1;
                    if self.rg(p) {
                        let mut out = Vec::with_capacity(r * w);
                        for i in 0..r {
                            out.extend_from_slice(&g[i * total + offset..i * total + offset + w]);
                        }
                        acc(p, out);
                    }
                    offset += w;
                }
            }
            Op::SliceRows(a, start) => {
                if self.rg(*a) {
                    let c = self.value(*a).dims2().expect("slice_rows").1;
                    let mut out = vec![0.0; self.value(*a).numel()];
                    out[start * c..start * c + g.len()].copy_from_slice(g);
                    acc(*a, out);
                }
            }
            Op::Softmax(a, axis) => {
                if self.rg(*a) {
                    let y = node.value.data();
                    let (count, len, lane_step, stride) =
                        lanes(node.value.shape(), *axis).expect("softmax lanes");
                    let mut out = vec![0.0; y.len()];
                    for lane in 0..count {
                        let base = lane * lane_step;
                        let dot: f64 = (0..len)
                            .map(|j| g[base + j * stride] * y[base + j * stride])
                            .sum();
                        for j in 0..len {
                            let i = base + j * stride;
                            out[i] = y[i] * (g[i] - dot);
                        }
                    }
                    acc(*a, out);
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                normalized,
                inv_std,
            } => {
                let c = self.value(*gain).numel();
                let gd = self.value(*gain).data();
                if self.rg(*x) {
                    let mut out = Vec::with_capacity(g.len());
                    for (row, (gl, nl)) in g.chunks(c).zip(normalized.chunks(c)).enumerate() {
                        let dn: Vec<f64> = gl.iter().zip(gd).map(|(a, b)| a * b).collect();
                        let sum_dn: f64 = dn.iter().sum();
                        let sum_dn_n: f64 = dn.iter().zip(nl).map(|(a, b)| a * b).sum();
                        let k = inv_std[row] / c as f64;
                        out.extend(
                            dn.iter()
                                .zip(nl)
                                .map(|(d, n)| k * (c as f64 * d - sum_dn - n * sum_dn_n)),
                        );
                    }
                    acc(*x, out);
                }
                if self.rg(*gain) {
                    let mut dg = vec![0.0; c];
                    for (gl, nl) in g.chunks(c).zip(normalized.chunks(c)) {
                        for j in 0..c {
                            dg[j] += gl[j] * nl[j];
                        }
                    }
                    acc(*gain, dg);
                }
                if self.rg(*bias) {
                    let mut db = vec![0.0; c];
                    for gl in g.chunks(c) {
                        db.iter_mut().zip(gl).for_each(|(d, x)| *d += x);
                    }
                    acc(*bias, db);
                }
            }
            Op::CrossEntropy {
                logits,
                target,
                probs,
            } => {
                if self.rg(*logits) {
                    let mut out: Vec<f64> = probs.iter().map(|p| p * g[0]).collect();
                    out[*target] -= g[0];
                    acc(*logits, out);
                }
            }
            Op::Sum(a) => {
                if self.rg(*a) {
                    acc(*a, vec![g[0]; self.value(*a).numel()]);
                }
            }
        }
    }
}

/// Named trainable tensors plus their accumulated gradients.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    grads: Vec<Vec<f64>>,
    grads_ready: bool,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.grads.push(vec![0.0; value.numel()]);
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::numel).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    /// Replaces a parameter value; the shape must not change.
    pub fn set(&mut self, id: ParamId, value: Tensor) -> TResult<()> {
        if value.shape() != self.values[id.0].shape() {
            return Err(TensorError::Shape {
                op: "ParamStore::set",
                lhs: self.values[id.0].shape().to_vec(),
                rhs: value.shape().to_vec(),
            });
        }
        self.values[id.0] = value;
        Ok(())
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [f64] {
        self.values[id.0].data_mut()
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    /// Adds the gradients of every parameter node on `tape` into the store.
    pub fn accumulate(&mut self, tape: &Tape, grads: &Gradients) {
        for (idx, node) in tape.nodes.iter().enumerate() {
            if let (Op::Param(id), Some(g)) = (&node.op, &grads.grads[idx]) {
                self.grads[id.0]
                    .iter_mut()
                    .zip(g)
                    .for_each(|(a, b)| *a += b);
            }
        }
        self.grads_ready = true;
    }

    pub fn has_gradients(&self) -> bool {
        self.grads_ready
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        self.grads_ready = false;
    }

    /// Pairs of `(name, tensor)` in registration order.
    pub fn named(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Order-sensitive digest of every parameter bit pattern.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the raw bits.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.values {
            for v in t.data() {
                for byte in v.to_bits().to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}
