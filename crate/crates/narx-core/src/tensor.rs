//! Dense f32 tensors with tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] owns every tensor created through it and records the operation
//! graph as it goes. Calling [`Tape::backward`] on a scalar walks the tape
//! once in reverse and accumulates gradients into every tensor created with
//! `requires_grad`. Ops are deliberately minimal: matrix multiply, a handful
//! of elementwise functions, segment reductions for message passing, row
//! gathers for edge indexing, and fused classification losses.
//!
//! Reductions run in a fixed order so repeated runs are bitwise identical;
//! there is no parallelism inside a tape.

use thiserror::Error;

/// Errors raised by tensor construction and tape operations.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: data length {len} does not match shape {shape:?}")]
    LengthMismatch {
        op: &'static str,
        shape: Vec<usize>,
        len: usize,
    },
    #[error("domain violation in {op}: element {index} = {value}")]
    Domain {
        op: &'static str,
        index: usize,
        value: f32,
    },
    #[error("{op} produced a non-finite value at element {index}")]
    NonFinite { op: &'static str, index: usize },
    #[error("index {index} out of range for {op} (limit {limit})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("{op}: {what}")]
    Contract { op: &'static str, what: String },
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Handle to a tensor stored on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(u32);

impl TensorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A dense row-major f32 tensor. Owned by the tape that created it.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    pub grad: Option<Vec<f32>>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Relu,
    Sigmoid,
    Neg,
    Exp,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Max,
    Sum,
    Mean,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul {
        a: TensorId,
        b: TensorId,
    },
    Transpose {
        x: TensorId,
    },
    Unary {
        op: UnaryOp,
        x: TensorId,
    },
    Binary {
        op: BinaryOp,
        a: TensorId,
        b: TensorId,
    },
    GatherRows {
        x: TensorId,
        idx: Vec<u32>,
    },
    SegmentReduce {
        op: ReduceOp,
        x: TensorId,
        segments: Vec<u32>,
        counts: Vec<u32>,
        // for max: flat index into x per output element, u32::MAX if segment empty
        argmax: Vec<u32>,
    },
    SumAll {
        x: TensorId,
    },
    BceLogitsMean {
        x: TensorId,
        targets: Vec<f32>,
    },
    SoftmaxXentMean {
        x: TensorId,
        targets: Vec<u32>,
        probs: Vec<f32>,
    },
    MseMean {
        x: TensorId,
        targets: Vec<f32>,
    },
}

/// Append-only record of tensors and the ops that produced them.
#[derive(Debug, Default)]
pub struct Tape {
    tensors: Vec<Tensor>,
    ops: Vec<Op>,
}

fn check_finite(op: &'static str, data: &[f32]) -> Result<()> {
    for (i, v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(TensorError::NonFinite { op, index: i });
        }
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f32>, requires_grad: bool, op: Op) -> TensorId {
        self.tensors.push(Tensor {
            shape,
            data,
            grad: None,
            requires_grad,
        });
        self.ops.push(op);
        TensorId((self.tensors.len() - 1) as u32)
    }

    fn new_tensor(
        &mut self,
        op: &'static str,
        shape: &[usize],
        data: Vec<f32>,
        requires_grad: bool,
    ) -> Result<TensorId> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::LengthMismatch {
                op,
                shape: shape.to_vec(),
                len: data.len(),
            });
        }
        check_finite(op, &data)?;
        Ok(self.push(shape.to_vec(), data, requires_grad, Op::Leaf))
    }

    /// Input tensor without gradient tracking.
    pub fn leaf(&mut self, shape: &[usize], data: Vec<f32>) -> Result<TensorId> {
        self.new_tensor("leaf", shape, data, false)
    }

    /// Trainable tensor; `backward` accumulates its gradient.
    pub fn param(&mut self, shape: &[usize], data: Vec<f32>) -> Result<TensorId> {
        self.new_tensor("param", shape, data, true)
    }

    pub fn scalar(&mut self, v: f32) -> TensorId {
        self.push(vec![1], vec![v], false, Op::Leaf)
    }

    pub fn zeros(&mut self, shape: &[usize]) -> TensorId {
        let n: usize = shape.iter().product();
        self.push(shape.to_vec(), vec![0.0; n], false, Op::Leaf)
    }

    pub fn tensor(&self, id: TensorId) -> &Tensor {
        &self.tensors[id.index()]
    }

    pub fn data(&self, id: TensorId) -> &[f32] {
        &self.tensors[id.index()].data
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.tensors[id.index()].shape
    }

    pub fn grad(&self, id: TensorId) -> Option<&[f32]> {
        self.tensors[id.index()].grad.as_deref()
    }

    /// `a[m,k] @ b[k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let da = self.data(a);
        let db = self.data(b);
        let mut out = vec![0.0f32; m * n];
        // ikj order: stream over b rows for cache locality
        for i in 0..m {
            let arow = &da[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (p, &av) in arow.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let brow = &db[p * n..(p + 1) * n];
                for j in 0..n {
                    orow[j] += av * brow[j];
                }
            }
        }
        check_finite("matmul", &out)?;
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(vec![m, n], out, rg, Op::Matmul { a, b }))
    }

    /// `x[m,n] -> [n,m]`.
    pub fn transpose(&mut self, x: TensorId) -> Result<TensorId> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return Err(TensorError::Contract {
                op: "transpose",
                what: format!("expected rank 2, got {s:?}"),
            });
        }
        let (m, n) = (s[0], s[1]);
        let d = self.data(x);
        let mut out = vec![0.0f32; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = d[i * n + j];
            }
        }
        let rg = self.requires(x);
        Ok(self.push(vec![n, m], out, rg, Op::Transpose { x }))
    }

    pub fn unary(&mut self, op: UnaryOp, x: TensorId) -> Result<TensorId> {
        let d = self.data(x);
        let mut out = Vec::with_capacity(d.len());
        for (i, &v) in d.iter().enumerate() {
            let r = match op {
                UnaryOp::Relu => v.max(0.0),
                UnaryOp::Sigmoid => stable_sigmoid(v),
                UnaryOp::Neg => -v,
                UnaryOp::Exp => v.exp(),
                UnaryOp::Log => {
                    if v <= 0.0 {
                        return Err(TensorError::Domain {
                            op: "log",
                            index: i,
                            value: v,
                        });
                    }
                    v.ln()
                }
            };
            out.push(r);
        }
        check_finite(unary_name(op), &out)?;
        let shape = self.shape(x).to_vec();
        let rg = self.requires(x);
        Ok(self.push(shape, out, rg, Op::Unary { op, x }))
    }

    pub fn relu(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary(UnaryOp::Relu, x)
    }
    pub fn sigmoid(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary(UnaryOp::Sigmoid, x)
    }
    pub fn neg(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary(UnaryOp::Neg, x)
    }
    pub fn exp(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary(UnaryOp::Exp, x)
    }
    pub fn log(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary(UnaryOp::Log, x)
    }

    pub fn binary(&mut self, op: BinaryOp, a: TensorId, b: TensorId) -> Result<TensorId> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let out_shape = broadcast_shape(&sa, &sb).ok_or(TensorError::ShapeMismatch {
            op: binary_name(op),
            lhs: sa.clone(),
            rhs: sb.clone(),
        })?;
        let numel: usize = out_shape.iter().product();
        let da = self.data(a);
        let db = self.data(b);
        let (la, lb) = (da.len(), db.len());
        let apply = |va: f32, vb: f32| match op {
            BinaryOp::Add => va + vb,
            BinaryOp::Sub => va - vb,
            BinaryOp::Mul => va * vb,
            // ties go to the first operand
            BinaryOp::Max => {
                if va >= vb {
                    va
                } else {
                    vb
                }
            }
        };
        let mut out = Vec::with_capacity(numel);
        if la == lb {
            out.extend(da.iter().zip(db).map(|(&va, &vb)| apply(va, vb)));
        } else if lb == 1 {
            let vb = db[0];
            out.extend(da.iter().map(|&va| apply(va, vb)));
        } else if la == 1 {
            let va = da[0];
            out.extend(db.iter().map(|&vb| apply(va, vb)));
        } else if la == numel {
            // b repeats along the leading axes
            for chunk in da.chunks(lb) {
                out.extend(chunk.iter().zip(db).map(|(&va, &vb)| apply(va, vb)));
            }
        } else {
            for chunk in db.chunks(la) {
                out.extend(da.iter().zip(chunk).map(|(&va, &vb)| apply(va, vb)));
            }
        }
        check_finite(binary_name(op), &out)?;
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(out_shape, out, rg, Op::Binary { op, a, b }))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryOp::Add, a, b)
    }
    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryOp::Sub, a, b)
    }
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryOp::Mul, a, b)
    }
    pub fn maximum(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryOp::Max, a, b)
    }

    /// Select rows of `x[n,d]` by index; gradient scatter-adds back.
    pub fn gather_rows(&mut self, x: TensorId, idx: &[u32]) -> Result<TensorId> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return Err(TensorError::Contract {
                op: "gather_rows",
                what: format!("expected rank 2, got {s:?}"),
            });
        }
        let (n, d) = (s[0], s[1]);
        let data = self.data(x);
        let mut out = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            let i = i as usize;
            if i >= n {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_rows",
                    index: i,
                    limit: n,
                });
            }
            out.extend_from_slice(&data[i * d..(i + 1) * d]);
        }
        let rg = self.requires(x);
        Ok(self.push(
            vec![idx.len(), d],
            out,
            rg,
            Op::GatherRows {
                x,
                idx: idx.to_vec(),
            },
        ))
    }

    /// Reduce rows of `values[e,d]` into `num_segments` buckets.
    ///
    /// Empty segments produce 0 for every reduce op. For `max` the gradient
    /// routes to the first row attaining the maximum within its segment.
    pub fn segment_reduce(
        &mut self,
        op: ReduceOp,
        values: TensorId,
        segments: &[u32],
        num_segments: usize,
    ) -> Result<TensorId> {
        let s = self.shape(values).to_vec();
        if s.len() != 2 || s[0] != segments.len() {
            return Err(TensorError::ShapeMismatch {
                op: "segment_reduce",
                lhs: s,
                rhs: vec![segments.len()],
            });
        }
        let (e, d) = (s[0], s[1]);
        for &seg in segments {
            if seg as usize >= num_segments {
                return Err(TensorError::IndexOutOfRange {
                    op: "segment_reduce",
                    index: seg as usize,
                    limit: num_segments,
                });
            }
        }
        let data = self.data(values);
        let mut counts = vec![0u32; num_segments];
        for &seg in segments {
            counts[seg as usize] += 1;
        }
        let mut out = vec![0.0f32; num_segments * d];
        let mut argmax = Vec::new();
        match op {
            ReduceOp::Sum | ReduceOp::Mean => {
                for (row, &seg) in segments.iter().enumerate() {
                    let dst = &mut out[seg as usize * d..(seg as usize + 1) * d];
                    let src = &data[row * d..(row + 1) * d];
                    for j in 0..d {
                        dst[j] += src[j];
                    }
                }
                if op == ReduceOp::Mean {
                    for seg in 0..num_segments {
                        if counts[seg] > 0 {
                            let inv = 1.0 / counts[seg] as f32;
                            for v in &mut out[seg * d..(seg + 1) * d] {
                                *v *= inv;
                            }
                        }
                    }
                }
            }
            ReduceOp::Max => {
                argmax = vec![u32::MAX; num_segments * d];
                let mut seen = vec![false; num_segments];
                for (row, &seg) in segments.iter().enumerate() {
                    let seg = seg as usize;
                    let src = &data[row * d..(row + 1) * d];
                    let dst = &mut out[seg * d..(seg + 1) * d];
                    let am = &mut argmax[seg * d..(seg + 1) * d];
                    if !seen[seg] {
                        seen[seg] = true;
                        for j in 0..d {
                            dst[j] = src[j];
                            am[j] = (row * d + j) as u32;
                        }
                    } else {
                        for j in 0..d {
                            if src[j] > dst[j] {
                                dst[j] = src[j];
                                am[j] = (row * d + j) as u32;
                            }
                        }
                    }
                }
                // empty-segment max fills 0 after the reduction
            }
        }
        if e > 0 {
            check_finite("segment_reduce", &out)?;
        }
        let rg = self.requires(values);
        Ok(self.push(
            vec![num_segments, d],
            out,
            rg,
            Op::SegmentReduce {
                op,
                x: values,
                segments: segments.to_vec(),
                counts,
                argmax,
            },
        ))
    }

    pub fn segment_max(
        &mut self,
        values: TensorId,
        segments: &[u32],
        num_segments: usize,
    ) -> Result<TensorId> {
        self.segment_reduce(ReduceOp::Max, values, segments, num_segments)
    }
    pub fn segment_sum(
        &mut self,
        values: TensorId,
        segments: &[u32],
        num_segments: usize,
    ) -> Result<TensorId> {
        self.segment_reduce(ReduceOp::Sum, values, segments, num_segments)
    }
    pub fn segment_mean(
        &mut self,
        values: TensorId,
        segments: &[u32],
        num_segments: usize,
    ) -> Result<TensorId> {
        self.segment_reduce(ReduceOp::Mean, values, segments, num_segments)
    }

    /// Sum every element into a scalar.
    pub fn sum_all(&mut self, x: TensorId) -> Result<TensorId> {
        let total: f32 = self.data(x).iter().sum();
        check_finite("sum_all", &[total])?;
        let rg = self.requires(x);
        Ok(self.push(vec![1], vec![total], rg, Op::SumAll { x }))
    }

    /// Mean binary cross-entropy with logits. Numerically stable for any
    /// logit magnitude; targets must be in {0,1}.
    pub fn bce_with_logits_mean(&mut self, x: TensorId, targets: &[f32]) -> Result<TensorId> {
        let d = self.data(x);
        if d.len() != targets.len() {
            return Err(TensorError::ShapeMismatch {
                op: "bce_with_logits_mean",
                lhs: self.shape(x).to_vec(),
                rhs: vec![targets.len()],
            });
        }
        if d.is_empty() {
            return Err(TensorError::Contract {
                op: "bce_with_logits_mean",
                what: "empty input".into(),
            });
        }
        let mut total = 0.0f64;
        for (&z, &y) in d.iter().zip(targets) {
            // max(z,0) - z*y + ln(1 + exp(-|z|))
            let loss = z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
            total += loss as f64;
        }
        let mean = (total / d.len() as f64) as f32;
        check_finite("bce_with_logits_mean", &[mean])?;
        let rg = self.requires(x);
        Ok(self.push(
            vec![1],
            vec![mean],
            rg,
            Op::BceLogitsMean {
                x,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Mean categorical cross-entropy over row-softmaxed scores.
    /// `targets[r]` is the true column of row `r`.
    pub fn softmax_cross_entropy_mean(&mut self, x: TensorId, targets: &[u32]) -> Result<TensorId> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 || s[0] != targets.len() {
            return Err(TensorError::ShapeMismatch {
                op: "softmax_cross_entropy_mean",
                lhs: s,
                rhs: vec![targets.len()],
            });
        }
        let (rows, cols) = (s[0], s[1]);
        if rows == 0 {
            return Err(TensorError::Contract {
                op: "softmax_cross_entropy_mean",
                what: "empty input".into(),
            });
        }
        let d = self.data(x);
        let mut probs = vec![0.0f32; rows * cols];
        let mut total = 0.0f64;
        for r in 0..rows {
            let t = targets[r] as usize;
            if t >= cols {
                return Err(TensorError::IndexOutOfRange {
                    op: "softmax_cross_entropy_mean",
                    index: t,
                    limit: cols,
                });
            }
            let row = &d[r * cols..(r + 1) * cols];
            let m = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            let mut z = 0.0f64;
            for &v in row {
                z += ((v - m) as f64).exp();
            }
            let p = &mut probs[r * cols..(r + 1) * cols];
            for (j, &v) in row.iter().enumerate() {
                p[j] = (((v - m) as f64).exp() / z) as f32;
            }
            // -log softmax[target], computed in log space
            total += -((row[t] - m) as f64 - z.ln());
        }
        let mean = (total / rows as f64) as f32;
        check_finite("softmax_cross_entropy_mean", &[mean])?;
        let rg = self.requires(x);
        Ok(self.push(
            vec![1],
            vec![mean],
            rg,
            Op::SoftmaxXentMean {
                x,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    /// Mean squared error against fixed targets.
    pub fn mse_mean(&mut self, x: TensorId, targets: &[f32]) -> Result<TensorId> {
        let d = self.data(x);
        if d.len() != targets.len() || d.is_empty() {
            return Err(TensorError::ShapeMismatch {
                op: "mse_mean",
                lhs: self.shape(x).to_vec(),
                rhs: vec![targets.len()],
            });
        }
        let mut total = 0.0f64;
        for (&p, &y) in d.iter().zip(targets) {
            let e = (p - y) as f64;
            total += e * e;
        }
        let mean = (total / d.len() as f64) as f32;
        check_finite("mse_mean", &[mean])?;
        let rg = self.requires(x);
        Ok(self.push(
            vec![1],
            vec![mean],
            rg,
            Op::MseMean {
                x,
                targets: targets.to_vec(),
            },
        ))
    }

    fn requires(&self, id: TensorId) -> bool {
        self.tensors[id.index()].requires_grad
    }

    /// Reverse pass from a scalar loss; seeds with gradient 1.0 and
    /// visits each recorded op exactly once in reverse order. Gradients
    /// persist only on tensors created with [`Tape::param`]; interior
    /// results keep transient buffers that are dropped as the pass moves on.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        let lt = &self.tensors[loss.index()];
        if lt.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: lt.shape.clone(),
            });
        }
        if !lt.data[0].is_finite() {
            return Err(TensorError::NonFinite {
                op: "backward",
                index: 0,
            });
        }
        // grad buffers for every node, indexed like tensors; only nodes on a
        // parameter path (requires_grad propagated at construction) receive one
        let n = self.tensors.len();
        let mut grads: Vec<Option<Vec<f32>>> = vec![None; n];
        grads[loss.index()] = Some(vec![1.0]);

        let ops = std::mem::take(&mut self.ops);
        for node in (0..=loss.index()).rev() {
            let Some(up) = grads[node].take() else {
                continue;
            };
            if self.tensors[node].requires_grad && matches!(ops[node], Op::Leaf) {
                let t = &mut self.tensors[node];
                let g = t.grad.get_or_insert_with(|| vec![0.0; t.data.len()]);
                for (gi, di) in g.iter_mut().zip(&up) {
                    *gi += di;
                }
            }
            match &ops[node] {
                Op::Leaf => {}
                &Op::Matmul { a, b } => {
                    let (m, k) = (self.shape(a)[0], self.shape(a)[1]);
                    let nn = self.shape(b)[1];
                    if self.needs(a, &grads) {
                        // dA = dC @ B^T
                        let db = self.data(b);
                        let mut da = vec![0.0f32; m * k];
                        for i in 0..m {
                            for p in 0..k {
                                let mut s = 0.0;
                                for j in 0..nn {
                                    s += up[i * nn + j] * db[p * nn + j];
                                }
                                da[i * k + p] = s;
                            }
                        }
                        add_into(&mut grads, a, da);
                    }
                    if self.needs(b, &grads) {
                        // dB = A^T @ dC
                        let dat = self.data(a);
                        let mut dbg = vec![0.0f32; k * nn];
                        for i in 0..m {
                            for p in 0..k {
                                let av = dat[i * k + p];
                                if av == 0.0 {
                                    continue;
                                }
                                for j in 0..nn {
                                    dbg[p * nn + j] += av * up[i * nn + j];
                                }
                            }
                        }
                        add_into(&mut grads, b, dbg);
                    }
                }
                &Op::Transpose { x } => {
                    if self.needs(x, &grads) {
                        let s = self.shape(x);
                        let (m, nn) = (s[0], s[1]);
                        let mut dx = vec![0.0f32; m * nn];
                        for i in 0..m {
                            for j in 0..nn {
                                dx[i * nn + j] = up[j * m + i];
                            }
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
                &Op::Unary { op, x } => {
                    if self.needs(x, &grads) {
                        let xin = self.data(x);
                        let yout = &self.tensors[node].data;
                        let mut dx = Vec::with_capacity(up.len());
                        for i in 0..up.len() {
                            let local = match op {
                                UnaryOp::Relu => {
                                    if xin[i] > 0.0 {
                                        1.0
                                    } else {
                                        0.0
                                    }
                                }
                                UnaryOp::Sigmoid => yout[i] * (1.0 - yout[i]),
                                UnaryOp::Neg => -1.0,
                                UnaryOp::Exp => yout[i],
                                UnaryOp::Log => 1.0 / xin[i],
                            };
                            dx.push(up[i] * local);
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
                &Op::Binary { op, a, b } => {
                    let la = self.data(a).len();
                    let lb = self.data(b).len();
                    let need_a = self.needs(a, &grads);
                    let need_b = self.needs(b, &grads);
                    let mut da = if need_a { vec![0.0f32; la] } else { Vec::new() };
                    let mut db = if need_b { vec![0.0f32; lb] } else { Vec::new() };
                    let (xa, xb) = (self.data(a), self.data(b));
                    for (i, &u) in up.iter().enumerate() {
                        let (va, vb) = (xa[i % la], xb[i % lb]);
                        let (ga, gb) = match op {
                            BinaryOp::Add => (u, u),
                            BinaryOp::Sub => (u, -u),
                            BinaryOp::Mul => (u * vb, u * va),
                            BinaryOp::Max => {
                                if va >= vb {
                                    (u, 0.0)
                                } else {
                                    (0.0, u)
                                }
                            }
                        };
                        if need_a {
                            da[i % la] += ga;
                        }
                        if need_b {
                            db[i % lb] += gb;
                        }
                    }
                    if need_a {
                        add_into(&mut grads, a, da);
                    }
                    if need_b {
                        add_into(&mut grads, b, db);
                    }
                }
                Op::GatherRows { x, idx } => {
                    let x = *x;
                    if self.needs(x, &grads) {
                        let d = self.shape(x)[1];
                        let mut dx = vec![0.0f32; self.data(x).len()];
                        for (row, &i) in idx.iter().enumerate() {
                            let dst = &mut dx[i as usize * d..(i as usize + 1) * d];
                            let src = &up[row * d..(row + 1) * d];
                            for j in 0..d {
                                dst[j] += src[j];
                            }
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
                Op::SegmentReduce {
                    op,
                    x,
                    segments,
                    counts,
                    argmax,
                } => {
                    let (op, x) = (*op, *x);
                    if self.needs(x, &grads) {
                        let d = self.shape(x)[1];
                        let mut dx = vec![0.0f32; self.data(x).len()];
                        match op {
                            ReduceOp::Sum => {
                                for (row, &seg) in segments.iter().enumerate() {
                                    let src = &up[seg as usize * d..(seg as usize + 1) * d];
                                    let dst = &mut dx[row * d..(row + 1) * d];
                                    for j in 0..d {
                                        dst[j] += src[j];
                                    }
                                }
                            }
                            ReduceOp::Mean => {
                                for (row, &seg) in segments.iter().enumerate() {
                                    let c = counts[seg as usize].max(1) as f32;
                                    let src = &up[seg as usize * d..(seg as usize + 1) * d];
                                    let dst = &mut dx[row * d..(row + 1) * d];
                                    for j in 0..d {
                                        dst[j] += src[j] / c;
                                    }
                                }
                            }
                            ReduceOp::Max => {
                                for (o, &flat) in argmax.iter().enumerate() {
                                    if flat != u32::MAX {
                                        dx[flat as usize] += up[o];
                                    }
                                }
                            }
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
                &Op::SumAll { x } => {
                    if self.needs(x, &grads) {
                        let dx = vec![up[0]; self.data(x).len()];
                        add_into(&mut grads, x, dx);
                    }
                }
                Op::BceLogitsMean { x, targets } => {
                    let x = *x;
                    if self.needs(x, &grads) {
                        let d = self.data(x);
                        let inv = up[0] / d.len() as f32;
                        let mut dx = Vec::with_capacity(d.len());
                        for (&z, &y) in d.iter().zip(targets) {
                            dx.push((stable_sigmoid(z) - y) * inv);
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
                Op::SoftmaxXentMean { x, targets, probs } => {
                    let x = *x;
                    if self.needs(x, &grads) {
                        let cols = self.shape(x)[1];
                        let rows = targets.len();
                        let inv = up[0] / rows as f32;
                        let mut dx = probs.clone();
                        for (r, &t) in targets.iter().enumerate() {
                            dx[r * cols + t as usize] -= 1.0;
                        }
                        for v in &mut dx {
                            *v *= inv;
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
                Op::MseMean { x, targets } => {
                    let x = *x;
                    if self.needs(x, &grads) {
                        let d = self.data(x);
                        let inv = 2.0 * up[0] / d.len() as f32;
                        let mut dx = Vec::with_capacity(d.len());
                        for (&p, &y) in d.iter().zip(targets) {
                            dx.push((p - y) * inv);
                        }
                        add_into(&mut grads, x, dx);
                    }
                }
            }
        }
        self.ops = ops;
        Ok(())
    }

    // requires_grad propagates at construction, so it marks exactly the
    // tensors on some parameter path
    fn needs(&self, id: TensorId, _grads: &[Option<Vec<f32>>]) -> bool {
        self.tensors[id.index()].requires_grad
    }
}

fn add_into(grads: &mut [Option<Vec<f32>>], id: TensorId, delta: Vec<f32>) {
    match &mut grads[id.index()] {
        Some(g) => {
            for (gi, di) in g.iter_mut().zip(&delta) {
                *gi += di;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}

fn stable_sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn unary_name(op: UnaryOp) -> &'static str {
    match op {
        UnaryOp::Relu => "relu",
        UnaryOp::Sigmoid => "sigmoid",
        UnaryOp::Neg => "neg",
        UnaryOp::Exp => "exp",
        UnaryOp::Log => "log",
    }
}

fn binary_name(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Add => "add",
        BinaryOp::Sub => "sub",
        BinaryOp::Mul => "mul",
        BinaryOp::Max => "max",
    }
}

/// Broadcast rule: shapes equal, one operand scalar, or (after stripping
/// leading 1s) one shape is a suffix of the other. The smaller operand
/// repeats along the missing leading axes; the output keeps the shape of
/// the operand with more elements (higher rank on ties) so row/column
/// structure survives the op.
fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let strip = |s: &[usize]| -> Vec<usize> {
        let mut i = 0;
        while i + 1 < s.len() && s[i] == 1 {
            i += 1;
        }
        s[i..].to_vec()
    };
    let (na, nb) = (strip(a), strip(b));
    let pa: usize = a.iter().product();
    let pb: usize = b.iter().product();
    let compatible = na == nb
        || pa == 1
        || pb == 1
        || (na.len() > nb.len() && na.ends_with(&nb))
        || (nb.len() > na.len() && nb.ends_with(&na));
    if !compatible {
        return None;
    }
    // an empty operand forces an empty result of its own shape
    if pa == 0 {
        return Some(a.to_vec());
    }
    if pb == 0 {
        return Some(b.to_vec());
    }
    if pa > pb || (pa == pb && a.len() >= b.len()) {
        Some(a.to_vec())
    } else {
        Some(b.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f32, b: f32, tol: f32) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matmul_identity() {
        let mut t = Tape::new();
        let a = t.leaf(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = t.leaf(&[2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = t.matmul(a, b).unwrap();
        assert_eq!(t.data(c), &[3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn matmul_dot() {
        let mut t = Tape::new();
        let a = t.leaf(&[1, 2], vec![1.0, 2.0]).unwrap();
        let b = t.leaf(&[2, 1], vec![3.0, 4.0]).unwrap();
        let c = t.matmul(a, b).unwrap();
        assert_eq!(t.data(c), &[11.0]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f32> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f32> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut expect = vec![0.0f32; 3 * 2];
        for i in 0..3 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a[i * 4 + k] * b[k * 2 + j];
                }
                expect[i * 2 + j] = s;
            }
        }
        let mut t = Tape::new();
        let ta = t.leaf(&[3, 4], a).unwrap();
        let tb = t.leaf(&[4, 2], b).unwrap();
        let c = t.matmul(ta, tb).unwrap();
        for (got, want) in t.data(c).iter().zip(&expect) {
            assert!(close(*got, *want, 1e-6));
        }
    }

    #[test]
    fn matmul_shape_mismatch() {
        let mut t = Tape::new();
        let a = t.leaf(&[2, 3], vec![0.0; 6]).unwrap();
        let b = t.leaf(&[2, 2], vec![0.0; 4]).unwrap();
        assert!(matches!(
            t.matmul(a, b),
            Err(TensorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn relu_and_sigmoid_values() {
        let mut t = Tape::new();
        let x = t.leaf(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
        let r = t.relu(x).unwrap();
        assert_eq!(t.data(r), &[0.0, 0.0, 2.0]);
        let z = t.leaf(&[1], vec![0.0]).unwrap();
        let s = t.sigmoid(z).unwrap();
        assert_eq!(t.data(s), &[0.5]);
    }

    #[test]
    fn sigmoid_grad_at_zero_matches_finite_difference() {
        // analytic: s'(0) = 0.25; reference difference taken in f64
        let eps = 1e-3f64;
        let f = |x: f64| 1.0 / (1.0 + (-x).exp());
        let fd = ((f(eps) - f(-eps)) / (2.0 * eps)) as f32;
        let mut t = Tape::new();
        let x = t.param(&[1], vec![0.0]).unwrap();
        let s = t.sigmoid(x).unwrap();
        let loss = t.sum_all(s).unwrap();
        t.backward(loss).unwrap();
        let g = t.grad(x).unwrap()[0];
        assert!(close(g, 0.25, 1e-6));
        assert!(close(g, fd, 1e-6));
    }

    #[test]
    fn log_domain_violation() {
        let mut t = Tape::new();
        let x = t.leaf(&[2], vec![1.0, -0.5]).unwrap();
        assert!(matches!(t.log(x), Err(TensorError::Domain { .. })));
    }

    #[test]
    fn exp_overflow_is_an_error() {
        let mut t = Tape::new();
        let x = t.leaf(&[1], vec![200.0]).unwrap();
        assert!(matches!(t.exp(x), Err(TensorError::NonFinite { .. })));
    }

    #[test]
    fn binary_examples() {
        let mut t = Tape::new();
        let a = t.leaf(&[2], vec![1.0, 2.0]).unwrap();
        let b = t.leaf(&[2], vec![3.0, 4.0]).unwrap();
        let c = t.add(a, b).unwrap();
        assert_eq!(t.data(c), &[4.0, 6.0]);
        let d = t.leaf(&[2], vec![1.0, 5.0]).unwrap();
        let e = t.leaf(&[2], vec![2.0, 3.0]).unwrap();
        let m = t.maximum(d, e).unwrap();
        assert_eq!(t.data(m), &[2.0, 5.0]);
    }

    #[test]
    fn max_routes_gradient_to_argmax() {
        let mut t = Tape::new();
        let a = t.param(&[2], vec![1.0, 5.0]).unwrap();
        let b = t.leaf(&[2], vec![2.0, 3.0]).unwrap();
        let m = t.maximum(a, b).unwrap();
        let loss = t.sum_all(m).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(a).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn max_tie_goes_to_first_operand() {
        let mut t = Tape::new();
        let a = t.param(&[1], vec![2.0]).unwrap();
        let b = t.param(&[1], vec![2.0]).unwrap();
        let m = t.maximum(a, b).unwrap();
        let loss = t.sum_all(m).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(a).unwrap(), &[1.0]);
        assert_eq!(t.grad(b).unwrap(), &[0.0]);
    }

    #[test]
    fn broadcast_bias_over_rows() {
        let mut t = Tape::new();
        let x = t.param(&[2, 3], vec![0.0; 6]).unwrap();
        let b = t.param(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let y = t.add(x, b).unwrap();
        assert_eq!(t.data(y), &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let loss = t.sum_all(y).unwrap();
        t.backward(loss).unwrap();
        // broadcast operand accumulates over the repeated axis
        assert_eq!(t.grad(b).unwrap(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn non_broadcastable_shapes_error() {
        let mut t = Tape::new();
        let a = t.leaf(&[2, 3], vec![0.0; 6]).unwrap();
        let b = t.leaf(&[2], vec![0.0; 2]).unwrap();
        assert!(matches!(
            t.add(a, b),
            Err(TensorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn segment_reduce_examples() {
        let mut t = Tape::new();
        let v = t.leaf(&[3, 1], vec![1.0, 3.0, 2.0]).unwrap();
        let mx = t.segment_max(v, &[0, 0, 1], 2).unwrap();
        assert_eq!(t.data(mx), &[3.0, 2.0]);
        let sm = t.segment_sum(v, &[0, 0, 1], 2).unwrap();
        assert_eq!(t.data(sm), &[4.0, 2.0]);
        let mn = t.segment_mean(v, &[0, 0, 1], 2).unwrap();
        assert_eq!(t.data(mn), &[2.0, 2.0]);
    }

    #[test]
    fn segment_empty_yields_zero() {
        let mut t = Tape::new();
        let v = t.leaf(&[2, 2], vec![-1.0, -2.0, -3.0, -4.0]).unwrap();
        let mx = t.segment_max(v, &[0, 0], 3).unwrap();
        assert_eq!(t.data(mx), &[-1.0, -2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn segment_out_of_range_errors() {
        let mut t = Tape::new();
        let v = t.leaf(&[2, 1], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            t.segment_sum(v, &[0, 5], 2),
            Err(TensorError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn segment_max_backward_routes_to_argmax() {
        let mut t = Tape::new();
        let v = t.param(&[3, 1], vec![1.0, 3.0, 2.0]).unwrap();
        let mx = t.segment_max(v, &[0, 0, 1], 2).unwrap();
        let loss = t.sum_all(mx).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(v).unwrap(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_square() {
        let mut t = Tape::new();
        let x = t.param(&[1], vec![3.0]).unwrap();
        let y = t.mul(x, x).unwrap();
        let loss = t.sum_all(y).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[6.0]);
    }

    #[test]
    fn backward_sigmoid_of_scaled_input() {
        // f(x) = sigmoid(2x) at x=0 -> f' = 2 * 0.25 = 0.5
        let mut t = Tape::new();
        let x = t.param(&[1], vec![0.0]).unwrap();
        let two = t.scalar(2.0);
        let z = t.mul(x, two).unwrap();
        let s = t.sigmoid(z).unwrap();
        let loss = t.sum_all(s).unwrap();
        t.backward(loss).unwrap();
        assert!(close(t.grad(x).unwrap()[0], 0.5, 1e-6));
    }

    #[test]
    fn backward_accumulates_shared_subexpressions() {
        let mut t = Tape::new();
        let x = t.param(&[1], vec![1.5]).unwrap();
        let y = t.add(x, x).unwrap();
        let loss = t.sum_all(y).unwrap();
        t.backward(loss).unwrap();
        assert_eq!(t.grad(x).unwrap(), &[2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut t = Tape::new();
        let x = t.param(&[2], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            t.backward(x),
            Err(TensorError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn loss_ops_match_hand_values() {
        let mut t = Tape::new();
        // BCE at logit 0 vs target 1 = ln 2
        let x = t.leaf(&[1], vec![0.0]).unwrap();
        let l = t.bce_with_logits_mean(x, &[1.0]).unwrap();
        assert!(close(t.data(l)[0], std::f32::consts::LN_2, 1e-6));
        // MSE
        let p = t.leaf(&[2], vec![1.0, 3.0]).unwrap();
        let m = t.mse_mean(p, &[0.0, 1.0]).unwrap();
        assert!(close(t.data(m)[0], 2.5, 1e-6));
        // categorical CE of a uniform row over 4 classes = ln 4
        let s = t.leaf(&[1, 4], vec![0.0; 4]).unwrap();
        let ce = t.softmax_cross_entropy_mean(s, &[2]).unwrap();
        assert!(close(t.data(ce)[0], 4.0f32.ln(), 1e-6));
    }

    #[test]
    fn saturated_pointer_logits_drive_loss_to_zero() {
        let mut t = Tape::new();
        let s = t
            .leaf(&[2, 2], vec![50.0, -50.0, -50.0, 50.0])
            .unwrap();
        let ce = t.softmax_cross_entropy_mean(s, &[0, 1]).unwrap();
        assert!(t.data(ce)[0] < 1e-6);
    }

    /// Central finite differences of an f64 reference function, compared
    /// against the tape's analytic gradients. The reference is written
    /// independently of the tape ops so it can serve as an oracle.
    fn finite_diff_check(
        build: impl Fn(&mut Tape, &[TensorId]) -> TensorId,
        reference: impl Fn(&[Vec<f64>]) -> f64,
        shapes: &[&[usize]],
        seed: u64,
        tol: f32,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let datas: Vec<Vec<f32>> = shapes
            .iter()
            .map(|s| {
                (0..s.iter().product::<usize>())
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect()
            })
            .collect();
        let datas64: Vec<Vec<f64>> = datas
            .iter()
            .map(|v| v.iter().map(|&x| x as f64).collect())
            .collect();
        // analytic gradients from the tape
        let mut t = Tape::new();
        let ids: Vec<TensorId> = shapes
            .iter()
            .zip(&datas)
            .map(|(s, d)| t.param(s, d.clone()).unwrap())
            .collect();
        let out = build(&mut t, &ids);
        // forward values must agree between tape and reference
        let ref_val = reference(&datas64);
        assert!(
            (t.data(out)[0] as f64 - ref_val).abs() <= 1e-4 * ref_val.abs().max(1.0),
            "forward mismatch: tape {} vs reference {ref_val}",
            t.data(out)[0]
        );
        t.backward(out).unwrap();
        let eps = 1e-3f64;
        for (pi, shape) in shapes.iter().enumerate() {
            let g = t.grad(ids[pi]).unwrap().to_vec();
            for e in 0..shape.iter().product::<usize>() {
                let mut plus = datas64.clone();
                plus[pi][e] += eps;
                let mut minus = datas64.clone();
                minus[pi][e] -= eps;
                let fd = ((reference(&plus) - reference(&minus)) / (2.0 * eps)) as f32;
                let denom = fd.abs().max(g[e].abs()).max(1.0);
                assert!(
                    (fd - g[e]).abs() / denom < tol,
                    "param {pi} elem {e}: analytic {} vs fd {fd}",
                    g[e]
                );
            }
        }
    }

    fn ref_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    fn ref_sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn gradients_match_finite_differences_per_op() {
        // matmul
        finite_diff_check(
            |t, ids| {
                let c = t.matmul(ids[0], ids[1]).unwrap();
                t.sum_all(c).unwrap()
            },
            |xs| ref_matmul(&xs[0], &xs[1], 3, 4, 2).iter().sum(),
            &[&[3, 4], &[4, 2]],
            11,
            1e-4,
        );
        // exp(sigmoid(x))
        finite_diff_check(
            |t, ids| {
                let s = t.sigmoid(ids[0]).unwrap();
                let e = t.exp(s).unwrap();
                t.sum_all(e).unwrap()
            },
            |xs| xs[0].iter().map(|&v| ref_sigmoid(v).exp()).sum(),
            &[&[5]],
            12,
            1e-4,
        );
        // gather + segment sum + segment mean over rows of x[3,2]
        finite_diff_check(
            |t, ids| {
                let g = t.gather_rows(ids[0], &[2, 0, 1, 2]).unwrap();
                let s = t.segment_sum(g, &[0, 1, 1, 0], 2).unwrap();
                let m = t.segment_mean(s, &[0, 0], 1).unwrap();
                t.sum_all(m).unwrap()
            },
            |xs| {
                let x = &xs[0];
                let rows = [2usize, 0, 1, 2];
                let segs = [0usize, 1, 1, 0];
                let mut seg_out = vec![0.0f64; 2 * 2];
                for (r, (&row, &s)) in rows.iter().zip(&segs).enumerate() {
                    let _ = r;
                    for j in 0..2 {
                        seg_out[s * 2 + j] += x[row * 2 + j];
                    }
                }
                // mean over the two segment rows, then total
                seg_out.iter().sum::<f64>() / 2.0
            },
            &[&[3, 2]],
            13,
            1e-4,
        );
        // losses
        finite_diff_check(
            |t, ids| t.bce_with_logits_mean(ids[0], &[1.0, 0.0, 1.0]).unwrap(),
            |xs| {
                let ys = [1.0, 0.0, 1.0];
                xs[0]
                    .iter()
                    .zip(ys)
                    .map(|(&z, y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
                    .sum::<f64>()
                    / 3.0
            },
            &[&[3]],
            14,
            1e-4,
        );
        finite_diff_check(
            |t, ids| t.softmax_cross_entropy_mean(ids[0], &[1, 0]).unwrap(),
            |xs| {
                let x = &xs[0];
                let targets = [1usize, 0];
                let mut total = 0.0;
                for (r, &tgt) in targets.iter().enumerate() {
                    let row = &x[r * 3..(r + 1) * 3];
                    let z: f64 = row.iter().map(|v| v.exp()).sum();
                    total += -(row[tgt] - z.ln());
                }
                total / 2.0
            },
            &[&[2, 3]],
            15,
            1e-4,
        );
        finite_diff_check(
            |t, ids| t.mse_mean(ids[0], &[0.3, -0.7]).unwrap(),
            |xs| {
                let ys = [0.3, -0.7];
                xs[0]
                    .iter()
                    .zip(ys)
                    .map(|(&p, y)| (p - y) * (p - y))
                    .sum::<f64>()
                    / 2.0
            },
            &[&[2]],
            16,
            1e-4,
        );
        // transpose through matmul: sum(B @ A^T), A[2,3], B[4,3]
        finite_diff_check(
            |t, ids| {
                let tr = t.transpose(ids[0]).unwrap();
                let c = t.matmul(ids[1], tr).unwrap();
                t.sum_all(c).unwrap()
            },
            |xs| {
                let a = &xs[0];
                let mut at = vec![0.0; 6];
                for i in 0..2 {
                    for j in 0..3 {
                        at[j * 2 + i] = a[i * 3 + j];
                    }
                }
                ref_matmul(&xs[1], &at, 4, 3, 2).iter().sum()
            },
            &[&[2, 3], &[4, 3]],
            17,
            1e-4,
        );
    }

    #[test]
    fn two_layer_mlp_gradient_matches_finite_differences() {
        // x[2,3] @ w1[3,4] + b1, relu, @ w2[4,2] + b2, sigmoid, sum
        finite_diff_check(
            |t, ids| {
                let h = t.matmul(ids[0], ids[1]).unwrap();
                let hb = t.add(h, ids[2]).unwrap();
                let a = t.relu(hb).unwrap();
                let o = t.matmul(a, ids[3]).unwrap();
                let ob = t.add(o, ids[4]).unwrap();
                let s = t.sigmoid(ob).unwrap();
                t.sum_all(s).unwrap()
            },
            |xs| {
                let h = ref_matmul(&xs[0], &xs[1], 2, 3, 4);
                let a: Vec<f64> = h
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v + xs[2][i % 4]).max(0.0))
                    .collect();
                let o = ref_matmul(&a, &xs[3], 2, 4, 2);
                o.iter()
                    .enumerate()
                    .map(|(i, &v)| ref_sigmoid(v + xs[4][i % 2]))
                    .sum()
            },
            &[&[2, 3], &[3, 4], &[4], &[4, 2], &[2]],
            21,
            1e-4,
        );
    }

    #[test]
    fn gather_out_of_range_errors() {
        let mut t = Tape::new();
        let x = t.leaf(&[2, 2], vec![0.0; 4]).unwrap();
        assert!(matches!(
            t.gather_rows(x, &[0, 3]),
            Err(TensorError::IndexOutOfRange { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn segment_reduce_is_permutation_invariant(
            rows in 1usize..24,
            segs in 1usize..5,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = 3usize;
            let values: Vec<f32> = (0..rows * d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let segments: Vec<u32> = (0..rows).map(|_| rng.random_range(0..segs as u32)).collect();
            let mut perm: Vec<usize> = (0..rows).collect();
            // Fisher-Yates with the seeded rng
            for i in (1..rows).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let mut pvalues = vec![0.0f32; rows * d];
            let mut psegments = vec![0u32; rows];
            for (dst, &src) in perm.iter().enumerate() {
                pvalues[dst * d..(dst + 1) * d].copy_from_slice(&values[src * d..(src + 1) * d]);
                psegments[dst] = segments[src];
            }
            for op in [ReduceOp::Max, ReduceOp::Sum, ReduceOp::Mean] {
                let mut t1 = Tape::new();
                let v1 = t1.leaf(&[rows, d], values.clone()).unwrap();
                let r1 = t1.segment_reduce(op, v1, &segments, segs).unwrap();
                let mut t2 = Tape::new();
                let v2 = t2.leaf(&[rows, d], pvalues.clone()).unwrap();
                let r2 = t2.segment_reduce(op, v2, &psegments, segs).unwrap();
                for (a, b) in t1.data(r1).iter().zip(t2.data(r2)) {
                    proptest::prop_assert!((a - b).abs() <= 1e-5);
                }
            }
        }
    }
}
