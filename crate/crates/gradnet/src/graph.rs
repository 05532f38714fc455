use crate::error::GradnetError;
use crate::io::ParamSet;
use crate::tensor::Tensor;
use crate::GradVec;

pub type NodeId = usize;

const NORM_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Min2(NodeId, NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Clamp(NodeId, f64, f64),
    Matmul(NodeId, NodeId),
    BiasRow(NodeId, NodeId),
    BiasCh(NodeId, NodeId),
    Concat(NodeId, NodeId),
    ConcatCols(NodeId, NodeId),
    Reshape(NodeId),
    Conv2d { x: NodeId, k: NodeId, stride: usize },
    ConvT2d { x: NodeId, k: NodeId, stride: usize },
    CausalConv1d { x: NodeId, k: NodeId, dilation: usize },
    LastCol(NodeId),
    L2Norm(NodeId),
    Mse(NodeId, NodeId),
    Sum(NodeId),
    Mean(NodeId),
    SumRows(NodeId),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Min2(..) => "min2",
            Op::Neg(..) => "neg",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::Relu(..) => "relu",
            Op::Sigmoid(..) => "sigmoid",
            Op::Tanh(..) => "tanh",
            Op::Exp(..) => "exp",
            Op::Ln(..) => "ln",
            Op::Clamp(..) => "clamp",
            Op::Matmul(..) => "matmul",
            Op::BiasRow(..) => "bias_row",
            Op::BiasCh(..) => "bias_ch",
            Op::Concat(..) => "concat",
            Op::ConcatCols(..) => "concat_cols",
            Op::Reshape(..) => "reshape",
            Op::Conv2d { .. } => "conv2d",
            Op::ConvT2d { .. } => "conv_transpose2d",
            Op::CausalConv1d { .. } => "causal_conv1d",
            Op::LastCol(..) => "last_col",
            Op::L2Norm(..) => "l2_normalize",
            Op::Mse(..) => "mse",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::SumRows(..) => "sum_rows",
        }
    }
}

struct Node {
    op: Op,
    value: Tensor,
    param: Option<usize>,
}

/// Tape of op nodes. Build the forward pass with the op methods, then call
/// [`Graph::backward`] on a scalar loss node.
pub struct Graph {
    nodes: Vec<Node>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

fn mismatch(op: &'static str, detail: String) -> GradnetError {
    GradnetError::ShapeMismatch { op, detail }
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    /// Insert a constant leaf. No gradient is reported for it.
    pub fn input(&mut self, t: Tensor) -> NodeId {
        self.push_unchecked(Op::Leaf, t, None)
    }

    /// Insert a leaf bound to parameter `id` of the set the caller is
    /// differentiating. One graph must only reference one parameter set.
    pub fn param(&mut self, id: usize, t: &Tensor) -> NodeId {
        self.push_unchecked(Op::Leaf, t.clone(), Some(id))
    }

    /// Insert every tensor of `set` as a bound parameter leaf, in set order.
    pub fn params(&mut self, set: &ParamSet) -> Vec<NodeId> {
        (0..set.len()).map(|i| self.param(i, set.by_id(i))).collect()
    }

    fn push_unchecked(&mut self, op: Op, value: Tensor, param: Option<usize>) -> NodeId {
        self.nodes.push(Node { op, value, param });
        self.nodes.len() - 1
    }

    fn push(&mut self, op: Op, value: Tensor) -> Result<NodeId, GradnetError> {
        if !value.all_finite() {
            return Err(GradnetError::NonFinite { node: self.nodes.len(), op: op.name() });
        }
        Ok(self.push_unchecked(op, value, None))
    }

    fn binary_same_shape(
        &mut self,
        a: NodeId,
        b: NodeId,
        op_name: &'static str,
    ) -> Result<(), GradnetError> {
        if self.nodes[a].value.shape() != self.nodes[b].value.shape() {
            return Err(mismatch(
                op_name,
                format!(
                    "{:?} vs {:?}",
                    self.nodes[a].value.shape(),
                    self.nodes[b].value.shape()
                ),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        self.binary_same_shape(a, b, "add")?;
        let mut v = self.nodes[a].value.clone();
        v.add_assign(&self.nodes[b].value);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        self.binary_same_shape(a, b, "sub")?;
        let mut v = self.nodes[a].value.clone();
        for (x, y) in v.data_mut().iter_mut().zip(self.nodes[b].value.data()) {
            *x -= *y;
        }
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        self.binary_same_shape(a, b, "mul")?;
        let mut v = self.nodes[a].value.clone();
        for (x, y) in v.data_mut().iter_mut().zip(self.nodes[b].value.data()) {
            *x *= *y;
        }
        self.push(Op::Mul(a, b), v)
    }

    /// Elementwise minimum; the gradient routes to the smaller input
    /// (ties go to the first input).
    pub fn min2(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        self.binary_same_shape(a, b, "min2")?;
        let mut v = self.nodes[a].value.clone();
        for (x, y) in v.data_mut().iter_mut().zip(self.nodes[b].value.data()) {
            if *y < *x {
                *x = *y;
            }
        }
        self.push(Op::Min2(a, b), v)
    }

    pub fn neg(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x = -*x;
        }
        self.push(Op::Neg(a), v)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x *= c;
        }
        self.push(Op::Scale(a, c), v)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x += c;
        }
        self.push(Op::AddScalar(a), v)
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        self.push(Op::Relu(a), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x = 1.0 / (1.0 + (-*x).exp());
        }
        self.push(Op::Sigmoid(a), v)
    }

    pub fn tanh_(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x = x.tanh();
        }
        self.push(Op::Tanh(a), v)
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x = x.exp();
        }
        self.push(Op::Exp(a), v)
    }

    pub fn ln(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x = x.ln();
        }
        self.push(Op::Ln(a), v)
    }

    /// Hard clamp; subgradient is 1 inside [lo, hi] and 0 outside.
    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> Result<NodeId, GradnetError> {
        let mut v = self.nodes[a].value.clone();
        for x in v.data_mut() {
            *x = x.clamp(lo, hi);
        }
        self.push(Op::Clamp(a, lo, hi), v)
    }

    /// `[k] x [k,n] -> [n]` or `[m,k] x [k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        if bv.rank() != 2 {
            return Err(mismatch("matmul", format!("rhs must be rank 2, got {:?}", bv.shape())));
        }
        let (k2, n) = (bv.shape()[0], bv.shape()[1]);
        let value = match av.rank() {
            1 => {
                let k = av.shape()[0];
                if k != k2 {
                    return Err(mismatch("matmul", format!("{:?} x {:?}", av.shape(), bv.shape())));
                }
                let mut out = vec![0.0; n];
                let (ad, bd) = (av.data(), bv.data());
                for (ki, &x) in ad.iter().enumerate() {
                    let row = &bd[ki * n..(ki + 1) * n];
                    for (o, &w) in out.iter_mut().zip(row) {
                        *o += x * w;
                    }
                }
                Tensor::from_vec(&[n], out)?
            }
            2 => {
                let (m, k) = (av.shape()[0], av.shape()[1]);
                if k != k2 {
                    return Err(mismatch("matmul", format!("{:?} x {:?}", av.shape(), bv.shape())));
                }
                let mut out = vec![0.0; m * n];
                let (ad, bd) = (av.data(), bv.data());
                for i in 0..m {
                    let arow = &ad[i * k..(i + 1) * k];
                    let orow = &mut out[i * n..(i + 1) * n];
                    for (ki, &x) in arow.iter().enumerate() {
                        let brow = &bd[ki * n..(ki + 1) * n];
                        for (o, &w) in orow.iter_mut().zip(brow) {
                            *o += x * w;
                        }
                    }
                }
                Tensor::from_vec(&[m, n], out)?
            }
            r => return Err(mismatch("matmul", format!("lhs rank {} unsupported", r))),
        };
        self.push(Op::Matmul(a, b), value)
    }

    /// Add bias `[n]` to every row of `[m,n]`.
    pub fn bias_row(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        if av.rank() != 2 || bv.rank() != 1 || av.shape()[1] != bv.shape()[0] {
            return Err(mismatch("bias_row", format!("{:?} + {:?}", av.shape(), bv.shape())));
        }
        let n = bv.shape()[0];
        let mut v = av.clone();
        for (i, x) in v.data_mut().iter_mut().enumerate() {
            *x += bv.data()[i % n];
        }
        self.push(Op::BiasRow(a, b), v)
    }

    /// Add bias `[c]` to a `[c, ...]` tensor, one value per leading channel.
    pub fn bias_ch(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        if bv.rank() != 1 || av.rank() < 1 || av.shape()[0] != bv.shape()[0] {
            return Err(mismatch("bias_ch", format!("{:?} + {:?}", av.shape(), bv.shape())));
        }
        let c = bv.shape()[0];
        let spatial = av.len() / c;
        let mut v = av.clone();
        for ch in 0..c {
            let bias = bv.data()[ch];
            for x in &mut v.data_mut()[ch * spatial..(ch + 1) * spatial] {
                *x += bias;
            }
        }
        self.push(Op::BiasCh(a, b), v)
    }

    /// Concatenate two rank-1 tensors.
    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        if av.rank() != 1 || bv.rank() != 1 {
            return Err(mismatch("concat", format!("{:?} ++ {:?}", av.shape(), bv.shape())));
        }
        let mut data = av.data().to_vec();
        data.extend_from_slice(bv.data());
        let n = data.len();
        self.push(Op::Concat(a, b), Tensor::from_vec(&[n], data)?)
    }

    /// Concatenate two rank-2 tensors along columns: `[m,p] ++ [m,q] -> [m,p+q]`.
    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        if av.rank() != 2 || bv.rank() != 2 || av.shape()[0] != bv.shape()[0] {
            return Err(mismatch("concat_cols", format!("{:?} ++ {:?}", av.shape(), bv.shape())));
        }
        let (m, p, q) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
        let mut data = Vec::with_capacity(m * (p + q));
        for i in 0..m {
            data.extend_from_slice(&av.data()[i * p..(i + 1) * p]);
            data.extend_from_slice(&bv.data()[i * q..(i + 1) * q]);
        }
        self.push(Op::ConcatCols(a, b), Tensor::from_vec(&[m, p + q], data)?)
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId, GradnetError> {
        let v = self.nodes[a].value.reshaped(shape)?;
        self.push(Op::Reshape(a), v)
    }

    /// Valid-padding 2D cross-correlation: `[ci,h,w]` with kernels
    /// `[co,ci,kh,kw]` at the given stride.
    pub fn conv2d(&mut self, x: NodeId, k: NodeId, stride: usize) -> Result<NodeId, GradnetError> {
        let (xv, kv) = (&self.nodes[x].value, &self.nodes[k].value);
        let v = conv2d_forward(xv, kv, stride)?;
        self.push(Op::Conv2d { x, k, stride }, v)
    }

    /// Transposed 2D convolution (adjoint of [`Graph::conv2d`]): `[ci,h,w]`
    /// with kernels `[ci,co,kh,kw]`, output `(h-1)*stride + kh` per side.
    pub fn conv_transpose2d(
        &mut self,
        x: NodeId,
        k: NodeId,
        stride: usize,
    ) -> Result<NodeId, GradnetError> {
        let (xv, kv) = (&self.nodes[x].value, &self.nodes[k].value);
        let v = conv_transpose2d_forward(xv, kv, stride)?;
        self.push(Op::ConvT2d { x, k, stride }, v)
    }

    /// Length-preserving causal 1D convolution: `[ci,l]` with kernels
    /// `[co,ci,kw]`; output at t depends only on inputs at positions <= t.
    pub fn causal_conv1d(
        &mut self,
        x: NodeId,
        k: NodeId,
        dilation: usize,
    ) -> Result<NodeId, GradnetError> {
        let (xv, kv) = (&self.nodes[x].value, &self.nodes[k].value);
        let v = causal_conv1d_forward(xv, kv, dilation)?;
        self.push(Op::CausalConv1d { x, k, dilation }, v)
    }

    /// Last timestep of a `[c,l]` feature map -> `[c]`.
    pub fn last_col(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let av = &self.nodes[a].value;
        if av.rank() != 2 {
            return Err(mismatch("last_col", format!("want rank 2, got {:?}", av.shape())));
        }
        let (c, l) = (av.shape()[0], av.shape()[1]);
        let mut out = Vec::with_capacity(c);
        for ch in 0..c {
            out.push(av.data()[ch * l + l - 1]);
        }
        self.push(Op::LastCol(a), Tensor::from_vec(&[c], out)?)
    }

    /// v / ||v|| for a rank-1 tensor. Errors when the norm is <= 1e-8.
    pub fn l2_normalize(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let av = &self.nodes[a].value;
        if av.rank() != 1 {
            return Err(mismatch("l2_normalize", format!("want rank 1, got {:?}", av.shape())));
        }
        let norm = av.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= NORM_EPS {
            return Err(GradnetError::DegenerateNorm { norm, eps: NORM_EPS });
        }
        let data = av.data().iter().map(|v| v / norm).collect();
        let n = av.len();
        self.push(Op::L2Norm(a), Tensor::from_vec(&[n], data)?)
    }

    /// Mean squared error over all elements -> scalar.
    pub fn mse(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        self.binary_same_shape(a, b, "mse")?;
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        let n = av.len() as f64;
        let sum: f64 = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum();
        self.push(Op::Mse(a, b), Tensor::scalar(sum / n))
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let s: f64 = self.nodes[a].value.data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(s))
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let av = &self.nodes[a].value;
        let s: f64 = av.data().iter().sum();
        let n = av.len() as f64;
        self.push(Op::Mean(a), Tensor::scalar(s / n))
    }

    /// Row sums of `[m,n] -> [m,1]`.
    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId, GradnetError> {
        let av = &self.nodes[a].value;
        if av.rank() != 2 {
            return Err(mismatch("sum_rows", format!("want rank 2, got {:?}", av.shape())));
        }
        let (m, n) = (av.shape()[0], av.shape()[1]);
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            out.push(av.data()[i * n..(i + 1) * n].iter().sum());
        }
        self.push(Op::SumRows(a), Tensor::from_vec(&[m, 1], out)?)
    }

    /// Dense layer `x W + b` for rank-1 or rank-2 (batched) `x`.
    pub fn dense(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId, GradnetError> {
        let y = self.matmul(x, w)?;
        match self.nodes[y].value.rank() {
            1 => self.add(y, b),
            _ => self.bias_row(y, b),
        }
    }

    /// Reverse-mode sweep from a scalar `loss` node. Returns the gradient of
    /// the loss with respect to each bound parameter id in `0..n_params`.
    pub fn backward(&self, loss: NodeId, n_params: usize) -> Result<GradVec, GradnetError> {
        let loss_val = &self.nodes[loss].value;
        if loss_val.len() != 1 {
            return Err(GradnetError::NonScalarLoss(loss_val.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut out: GradVec = (0..n_params).map(|_| None).collect();
        grads[loss] = Some(Tensor::scalar(1.0));

        for id in (0..=loss).rev() {
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            if !g.all_finite() {
                return Err(GradnetError::NonFinite { node: id, op: self.nodes[id].op.name() });
            }
            if let Some(pid) = self.nodes[id].param {
                crate::accumulate_grad(&mut out, pid, &g);
            }
            self.propagate(id, &g, &mut grads);
        }
        Ok(out)
    }

    fn acc(&self, grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        match &mut grads[id] {
            Some(t) => t.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&self, id: NodeId, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[id];
        match node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.acc(grads, a, g.clone());
                self.acc(grads, b, g.clone());
            }
            Op::Sub(a, b) => {
                self.acc(grads, a, g.clone());
                let mut gb = g.clone();
                for v in gb.data_mut() {
                    *v = -*v;
                }
                self.acc(grads, b, gb);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                let mut ga = g.clone();
                for (x, y) in ga.data_mut().iter_mut().zip(bv.data()) {
                    *x *= *y;
                }
                let mut gb = g.clone();
                for (x, y) in gb.data_mut().iter_mut().zip(av.data()) {
                    *x *= *y;
                }
                self.acc(grads, a, ga);
                self.acc(grads, b, gb);
            }
            Op::Min2(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                let mut ga = g.clone();
                let mut gb = g.clone();
                for i in 0..g.len() {
                    if bv.data()[i] < av.data()[i] {
                        ga.data_mut()[i] = 0.0;
                    } else {
                        gb.data_mut()[i] = 0.0;
                    }
                }
                self.acc(grads, a, ga);
                self.acc(grads, b, gb);
            }
            Op::Neg(a) => {
                let mut ga = g.clone();
                for v in ga.data_mut() {
                    *v = -*v;
                }
                self.acc(grads, a, ga);
            }
            Op::Scale(a, c) => {
                let mut ga = g.clone();
                for v in ga.data_mut() {
                    *v *= c;
                }
                self.acc(grads, a, ga);
            }
            Op::AddScalar(a) => self.acc(grads, a, g.clone()),
            Op::Relu(a) => {
                let av = &self.nodes[a].value;
                let mut ga = g.clone();
                for (v, x) in ga.data_mut().iter_mut().zip(av.data()) {
                    if *x <= 0.0 {
                        *v = 0.0;
                    }
                }
                self.acc(grads, a, ga);
            }
            Op::Sigmoid(a) => {
                let yv = &node.value;
                let mut ga = g.clone();
                for (v, y) in ga.data_mut().iter_mut().zip(yv.data()) {
                    *v *= y * (1.0 - y);
                }
                self.acc(grads, a, ga);
            }
            Op::Tanh(a) => {
                let yv = &node.value;
                let mut ga = g.clone();
                for (v, y) in ga.data_mut().iter_mut().zip(yv.data()) {
                    *v *= 1.0 - y * y;
                }
                self.acc(grads, a, ga);
            }
            Op::Exp(a) => {
                let yv = &node.value;
                let mut ga = g.clone();
                for (v, y) in ga.data_mut().iter_mut().zip(yv.data()) {
                    *v *= *y;
                }
                self.acc(grads, a, ga);
            }
            Op::Ln(a) => {
                let av = &self.nodes[a].value;
                let mut ga = g.clone();
                for (v, x) in ga.data_mut().iter_mut().zip(av.data()) {
                    *v /= *x;
                }
                self.acc(grads, a, ga);
            }
            Op::Clamp(a, lo, hi) => {
                let av = &self.nodes[a].value;
                let mut ga = g.clone();
                for (v, x) in ga.data_mut().iter_mut().zip(av.data()) {
                    if *x < lo || *x > hi {
                        *v = 0.0;
                    }
                }
                self.acc(grads, a, ga);
            }
            Op::Matmul(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                let (k, n) = (bv.shape()[0], bv.shape()[1]);
                match av.rank() {
                    1 => {
                        // y[j] = sum_k a[k] b[k,j]
                        let mut ga = Tensor::zeros(&[k]);
                        let mut gb = Tensor::zeros(&[k, n]);
                        for ki in 0..k {
                            let brow = &bv.data()[ki * n..(ki + 1) * n];
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g.data()[j] * brow[j];
                                gb.data_mut()[ki * n + j] += av.data()[ki] * g.data()[j];
                            }
                            ga.data_mut()[ki] = s;
                        }
                        self.acc(grads, a, ga);
                        self.acc(grads, b, gb);
                    }
                    _ => {
                        let m = av.shape()[0];
                        let mut ga = Tensor::zeros(&[m, k]);
                        let mut gb = Tensor::zeros(&[k, n]);
                        for i in 0..m {
                            let grow = &g.data()[i * n..(i + 1) * n];
                            let arow = &av.data()[i * k..(i + 1) * k];
                            for ki in 0..k {
                                let brow = &bv.data()[ki * n..(ki + 1) * n];
                                let mut s = 0.0;
                                let gbrow = &mut gb.data_mut()[ki * n..(ki + 1) * n];
                                for j in 0..n {
                                    s += grow[j] * brow[j];
                                    gbrow[j] += arow[ki] * grow[j];
                                }
                                ga.data_mut()[i * k + ki] = s;
                            }
                        }
                        self.acc(grads, a, ga);
                        self.acc(grads, b, gb);
                    }
                }
            }
            Op::BiasRow(a, b) => {
                let n = self.nodes[b].value.len();
                let mut gb = Tensor::zeros(&[n]);
                for (i, v) in g.data().iter().enumerate() {
                    gb.data_mut()[i % n] += *v;
                }
                self.acc(grads, a, g.clone());
                self.acc(grads, b, gb);
            }
            Op::BiasCh(a, b) => {
                let c = self.nodes[b].value.len();
                let spatial = g.len() / c;
                let mut gb = Tensor::zeros(&[c]);
                for ch in 0..c {
                    gb.data_mut()[ch] = g.data()[ch * spatial..(ch + 1) * spatial].iter().sum();
                }
                self.acc(grads, a, g.clone());
                self.acc(grads, b, gb);
            }
            Op::Concat(a, b) => {
                let na = self.nodes[a].value.len();
                let nb = self.nodes[b].value.len();
                let ga = Tensor::from_vec(&[na], g.data()[..na].to_vec()).unwrap();
                let gb = Tensor::from_vec(&[nb], g.data()[na..].to_vec()).unwrap();
                self.acc(grads, a, ga);
                self.acc(grads, b, gb);
            }
            Op::ConcatCols(a, b) => {
                let (m, p) = {
                    let s = self.nodes[a].value.shape();
                    (s[0], s[1])
                };
                let q = self.nodes[b].value.shape()[1];
                let mut ga = Tensor::zeros(&[m, p]);
                let mut gb = Tensor::zeros(&[m, q]);
                for i in 0..m {
                    let grow = &g.data()[i * (p + q)..(i + 1) * (p + q)];
                    ga.data_mut()[i * p..(i + 1) * p].copy_from_slice(&grow[..p]);
                    gb.data_mut()[i * q..(i + 1) * q].copy_from_slice(&grow[p..]);
                }
                self.acc(grads, a, ga);
                self.acc(grads, b, gb);
            }
            Op::Reshape(a) => {
                let ga = g.reshaped(self.nodes[a].value.shape()).unwrap();
                self.acc(grads, a, ga);
            }
            Op::Conv2d { x, k, stride } => {
                let (xv, kv) = (&self.nodes[x].value, &self.nodes[k].value);
                let (gx, gk) = conv2d_backward(xv, kv, stride, g);
                self.acc(grads, x, gx);
                self.acc(grads, k, gk);
            }
            Op::ConvT2d { x, k, stride } => {
                let (xv, kv) = (&self.nodes[x].value, &self.nodes[k].value);
                let (gx, gk) = conv_transpose2d_backward(xv, kv, stride, g);
                self.acc(grads, x, gx);
                self.acc(grads, k, gk);
            }
            Op::CausalConv1d { x, k, dilation } => {
                let (xv, kv) = (&self.nodes[x].value, &self.nodes[k].value);
                let (gx, gk) = causal_conv1d_backward(xv, kv, dilation, g);
                self.acc(grads, x, gx);
                self.acc(grads, k, gk);
            }
            Op::LastCol(a) => {
                let av = &self.nodes[a].value;
                let (c, l) = (av.shape()[0], av.shape()[1]);
                let mut ga = Tensor::zeros(&[c, l]);
                for ch in 0..c {
                    ga.data_mut()[ch * l + l - 1] = g.data()[ch];
                }
                self.acc(grads, a, ga);
            }
            Op::L2Norm(a) => {
                let av = &self.nodes[a].value;
                let yv = &node.value;
                let norm = av.data().iter().map(|v| v * v).sum::<f64>().sqrt();
                let gy_dot_y: f64 = g.data().iter().zip(yv.data()).map(|(x, y)| x * y).sum();
                let mut ga = Tensor::zeros(&[av.len()]);
                for i in 0..av.len() {
                    ga.data_mut()[i] = (g.data()[i] - yv.data()[i] * gy_dot_y) / norm;
                }
                self.acc(grads, a, ga);
            }
            Op::Mse(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                let n = av.len() as f64;
                let s = g.item() * 2.0 / n;
                let mut ga = Tensor::zeros(&[av.len()]);
                for i in 0..av.len() {
                    ga.data_mut()[i] = s * (av.data()[i] - bv.data()[i]);
                }
                let ga = ga.reshaped(av.shape()).unwrap();
                let mut gb = ga.clone();
                for v in gb.data_mut() {
                    *v = -*v;
                }
                self.acc(grads, a, ga);
                self.acc(grads, b, gb);
            }
            Op::Sum(a) => {
                let av = &self.nodes[a].value;
                let ga = Tensor::filled(av.shape(), g.item());
                self.acc(grads, a, ga);
            }
            Op::Mean(a) => {
                let av = &self.nodes[a].value;
                let ga = Tensor::filled(av.shape(), g.item() / av.len() as f64);
                self.acc(grads, a, ga);
            }
            Op::SumRows(a) => {
                let av = &self.nodes[a].value;
                let (m, n) = (av.shape()[0], av.shape()[1]);
                let mut ga = Tensor::zeros(&[m, n]);
                for i in 0..m {
                    let gi = g.data()[i];
                    for j in 0..n {
                        ga.data_mut()[i * n + j] = gi;
                    }
                }
                self.acc(grads, a, ga);
            }
        }
    }
}

fn conv2d_forward(x: &Tensor, k: &Tensor, stride: usize) -> Result<Tensor, GradnetError> {
    if x.rank() != 3 || k.rank() != 4 || stride < 1 {
        return Err(mismatch(
            "conv2d",
            format!("input {:?}, kernel {:?}, stride {}", x.shape(), k.shape(), stride),
        ));
    }
    let (ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (co, kci, kh, kw) = (k.shape()[0], k.shape()[1], k.shape()[2], k.shape()[3]);
    if kci != ci || h < kh || w < kw {
        return Err(mismatch(
            "conv2d",
            format!("input {:?} incompatible with kernel {:?}", x.shape(), k.shape()),
        ));
    }
    let oh = (h - kh) / stride + 1;
    let ow = (w - kw) / stride + 1;
    let mut out = Tensor::zeros(&[co, oh, ow]);
    let (xd, kd) = (x.data(), k.data());
    let od = out.data_mut();
    for c_out in 0..co {
        for c_in in 0..ci {
            let kbase = (c_out * ci + c_in) * kh * kw;
            let xbase = c_in * h * w;
            for ky in 0..kh {
                for kx in 0..kw {
                    let kval = kd[kbase + ky * kw + kx];
                    if kval == 0.0 {
                        continue;
                    }
                    for oy in 0..oh {
                        let xrow = xbase + (oy * stride + ky) * w + kx;
                        let orow = (c_out * oh + oy) * ow;
                        for ox in 0..ow {
                            od[orow + ox] += kval * xd[xrow + ox * stride];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn conv2d_backward(x: &Tensor, k: &Tensor, stride: usize, g: &Tensor) -> (Tensor, Tensor) {
    let (ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (co, _, kh, kw) = (k.shape()[0], k.shape()[1], k.shape()[2], k.shape()[3]);
    let (oh, ow) = (g.shape()[1], g.shape()[2]);
    let mut gx = Tensor::zeros(&[ci, h, w]);
    let mut gk = Tensor::zeros(k.shape());
    let (xd, kd, gd) = (x.data(), k.data(), g.data());
    let gxd = gx.data_mut();
    let gkd = gk.data_mut();
    for c_out in 0..co {
        for c_in in 0..ci {
            let kbase = (c_out * ci + c_in) * kh * kw;
            let xbase = c_in * h * w;
            for ky in 0..kh {
                for kx in 0..kw {
                    let kval = kd[kbase + ky * kw + kx];
                    let mut ksum = 0.0;
                    for oy in 0..oh {
                        let xrow = xbase + (oy * stride + ky) * w + kx;
                        let grow = (c_out * oh + oy) * ow;
                        for ox in 0..ow {
                            let gv = gd[grow + ox];
                            gxd[xrow + ox * stride] += kval * gv;
                            ksum += xd[xrow + ox * stride] * gv;
                        }
                    }
                    gkd[kbase + ky * kw + kx] += ksum;
                }
            }
        }
    }
    (gx, gk)
}

fn conv_transpose2d_forward(x: &Tensor, k: &Tensor, stride: usize) -> Result<Tensor, GradnetError> {
    if x.rank() != 3 || k.rank() != 4 || stride < 1 {
        return Err(mismatch(
            "conv_transpose2d",
            format!("input {:?}, kernel {:?}, stride {}", x.shape(), k.shape(), stride),
        ));
    }
    let (ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (kci, co, kh, kw) = (k.shape()[0], k.shape()[1], k.shape()[2], k.shape()[3]);
    if kci != ci {
        return Err(mismatch(
            "conv_transpose2d",
            format!("input {:?} incompatible with kernel {:?}", x.shape(), k.shape()),
        ));
    }
    let oh = (h - 1) * stride + kh;
    let ow = (w - 1) * stride + kw;
    let mut out = Tensor::zeros(&[co, oh, ow]);
    let (xd, kd) = (x.data(), k.data());
    let od = out.data_mut();
    for c_in in 0..ci {
        for c_out in 0..co {
            let kbase = (c_in * co + c_out) * kh * kw;
            let xbase = c_in * h * w;
            for iy in 0..h {
                for ix in 0..w {
                    let xval = xd[xbase + iy * w + ix];
                    if xval == 0.0 {
                        continue;
                    }
                    for ky in 0..kh {
                        let orow = (c_out * oh + iy * stride + ky) * ow + ix * stride;
                        let krow = kbase + ky * kw;
                        for kx in 0..kw {
                            od[orow + kx] += xval * kd[krow + kx];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn conv_transpose2d_backward(x: &Tensor, k: &Tensor, stride: usize, g: &Tensor) -> (Tensor, Tensor) {
    let (ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (_, co, kh, kw) = (k.shape()[0], k.shape()[1], k.shape()[2], k.shape()[3]);
    let (oh, ow) = (g.shape()[1], g.shape()[2]);
    let mut gx = Tensor::zeros(&[ci, h, w]);
    let mut gk = Tensor::zeros(k.shape());
    let (xd, kd, gd) = (x.data(), k.data(), g.data());
    let gxd = gx.data_mut();
    let gkd = gk.data_mut();
    for c_in in 0..ci {
        for c_out in 0..co {
            let kbase = (c_in * co + c_out) * kh * kw;
            let xbase = c_in * h * w;
            for iy in 0..h {
                for ix in 0..w {
                    let xval = xd[xbase + iy * w + ix];
                    let mut xsum = 0.0;
                    for ky in 0..kh {
                        let grow = (c_out * oh + iy * stride + ky) * ow + ix * stride;
                        let krow = kbase + ky * kw;
                        for kx in 0..kw {
                            let gv = gd[grow + kx];
                            xsum += kd[krow + kx] * gv;
                            gkd[krow + kx] += xval * gv;
                        }
                    }
                    gxd[xbase + iy * w + ix] += xsum;
                }
            }
        }
    }
    (gx, gk)
}

fn causal_conv1d_forward(x: &Tensor, k: &Tensor, dilation: usize) -> Result<Tensor, GradnetError> {
    if x.rank() != 2 || k.rank() != 3 || dilation < 1 {
        return Err(mismatch(
            "causal_conv1d",
            format!("input {:?}, kernel {:?}, dilation {}", x.shape(), k.shape(), dilation),
        ));
    }
    let (ci, l) = (x.shape()[0], x.shape()[1]);
    let (co, kci, kw) = (k.shape()[0], k.shape()[1], k.shape()[2]);
    if kci != ci || l < 1 {
        return Err(mismatch(
            "causal_conv1d",
            format!("input {:?} incompatible with kernel {:?}", x.shape(), k.shape()),
        ));
    }
    let mut out = Tensor::zeros(&[co, l]);
    let (xd, kd) = (x.data(), k.data());
    let od = out.data_mut();
    for c_out in 0..co {
        for c_in in 0..ci {
            let kbase = (c_out * ci + c_in) * kw;
            for j in 0..kw {
                let kval = kd[kbase + j];
                if kval == 0.0 {
                    continue;
                }
                // Tap j looks back by (kw-1-j)*dilation steps.
                let back = (kw - 1 - j) * dilation;
                for t in back..l {
                    od[c_out * l + t] += kval * xd[c_in * l + t - back];
                }
            }
        }
    }
    Ok(out)
}

fn causal_conv1d_backward(x: &Tensor, k: &Tensor, dilation: usize, g: &Tensor) -> (Tensor, Tensor) {
    let (ci, l) = (x.shape()[0], x.shape()[1]);
    let (co, _, kw) = (k.shape()[0], k.shape()[1], k.shape()[2]);
    let mut gx = Tensor::zeros(&[ci, l]);
    let mut gk = Tensor::zeros(k.shape());
    let (xd, kd, gd) = (x.data(), k.data(), g.data());
    let gxd = gx.data_mut();
    let gkd = gk.data_mut();
    for c_out in 0..co {
        for c_in in 0..ci {
            let kbase = (c_out * ci + c_in) * kw;
            for j in 0..kw {
                let kval = kd[kbase + j];
                let back = (kw - 1 - j) * dilation;
                let mut ksum = 0.0;
                for t in back..l {
                    let gv = gd[c_out * l + t];
                    gxd[c_in * l + t - back] += kval * gv;
                    ksum += xd[c_in * l + t - back] * gv;
                }
                gkd[kbase + j] += ksum;
            }
        }
    }
    (gx, gk)
}
