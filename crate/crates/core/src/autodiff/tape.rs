use std::fmt;
use std::sync::Arc;

use super::{ParamGrads, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Reference to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Backward rule of a user-defined operation: receives the operand values,
/// the forward output and the upstream gradient, and returns one gradient
/// buffer per operand.
pub type CustomBackward = Arc<dyn Fn(&[&Tensor], &Tensor, &[f64]) -> Vec<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    MatVec(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    Mse(Var, Var),
    Scale(Var, f64),
    Dropout(Var, Arc<[f64]>),
    Sum(Vec<Var>),
    StraightThrough(Var),
    WeightedSum(Var, Vec<Var>),
    CrossEntropy(Var, usize),
    Custom(Vec<Var>, CustomBackward),
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::MatVec(..) => "matvec",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Concat(_) => "concat",
            Op::Slice(..) => "slice",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Softmax(_) => "softmax",
            Op::Mse(..) => "mse",
            Op::Scale(..) => "scale",
            Op::Dropout(..) => "dropout",
            Op::Sum(_) => "sum",
            Op::StraightThrough(_) => "straight_through",
            Op::WeightedSum(..) => "weighted_sum",
            Op::CrossEntropy(..) => "cross_entropy",
            Op::Custom(..) => "custom",
        };
        f.write_str(name)
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    // `None` for parameters, whose value lives in the store.
    value: Option<Tensor>,
}

/// Records a computation over dense tensors for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and [`Tape::backward`] is a single reverse sweep.
/// Parameters are read from the borrowed [`ParamStore`] rather than copied.
#[derive(Debug)]
pub struct Tape<'s> {
    store: &'s ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
}

fn check_finite(op: &'static str, data: &[f64]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_slice(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            param_nodes: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'s ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        let node = &self.nodes[var.0];
        match (&node.op, &node.value) {
            (_, Some(v)) => v,
            (Op::Param(id), None) => self.store.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        Var(self.nodes.len() - 1)
    }

    fn push_checked(&mut self, op: Op, name: &'static str, value: Tensor) -> Result<Var> {
        check_finite(name, value.data())?;
        Ok(self.push(op, value))
    }

    fn expect_vector(&self, op: &'static str, var: Var) -> Result<&Tensor> {
        let t = self.value(var);
        if t.shape().len() > 1 {
            return Err(Error::ShapeMismatch {
                op,
                left: t.shape().to_vec(),
                right: vec![t.len()],
            });
        }
        Ok(t)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Records an input value. Leaves receive gradients like any other node.
    pub fn leaf(&mut self, value: Tensor) -> Result<Var> {
        self.push_checked(Op::Leaf, "leaf", value)
    }

    /// Returns the node for a stored parameter, recording it on first use.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(var) = self.param_nodes[id.0] {
            return var;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        let var = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(var);
        var
    }

    /// Matrix-vector product `m · v` for `m` of shape `[rows, cols]`.
    pub fn matvec(&mut self, m: Var, v: Var) -> Result<Var> {
        let (tm, tv) = (self.value(m), self.value(v));
        if tm.shape().len() != 2 || tm.cols() != tv.len() || tv.shape().len() > 1 {
            return Err(Error::ShapeMismatch {
                op: "matvec",
                left: tm.shape().to_vec(),
                right: tv.shape().to_vec(),
            });
        }
        let cols = tm.cols();
        let x = tv.data();
        let out: Vec<f64> = tm
            .data()
            .chunks_exact(cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        self.push_checked(Op::MatVec(m, v), "matvec", Tensor::vector(out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = ta.shape().to_vec();
        self.push_checked(Op::Add(a, b), "add", Tensor::from_parts(shape, data))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x * y)
            .collect();
        let shape = ta.shape().to_vec();
        self.push_checked(Op::Mul(a, b), "mul", Tensor::from_parts(shape, data))
    }

    /// `m · v + b`.
    pub fn affine(&mut self, m: Var, v: Var, b: Var) -> Result<Var> {
        let mv = self.matvec(m, v)?;
        self.add(mv, b)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::invalid("concat of zero tensors"));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.expect_vector("concat", p)?.data());
        }
        self.push_checked(Op::Concat(parts.to_vec()), "concat", Tensor::vector(data))
    }

    /// Contiguous sub-vector `v[start..start + len]`.
    pub fn slice(&mut self, v: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.expect_vector("slice", v)?;
        if len == 0 || start + len > t.len() {
            return Err(Error::ShapeMismatch {
                op: "slice",
                left: t.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let data = t.data()[start..start + len].to_vec();
        self.push_checked(Op::Slice(v, start), "slice", Tensor::vector(data))
    }

    /// Splits a vector into `parts` equal chunks.
    pub fn chunks(&mut self, v: Var, parts: usize) -> Result<Vec<Var>> {
        let n = self.value(v).len();
        if parts == 0 || !n.is_multiple_of(parts) {
            return Err(Error::ShapeMismatch {
                op: "chunks",
                left: vec![n],
                right: vec![parts],
            });
        }
        let size = n / parts;
        (0..parts).map(|k| self.slice(v, k * size, size)).collect()
    }

    fn unary(&mut self, op: Op, name: &'static str, v: Var, f: impl Fn(f64) -> f64) -> Result<Var> {
        let t = self.value(v);
        let data = t.data().iter().map(|&x| f(x)).collect();
        let shape = t.shape().to_vec();
        self.push_checked(op, name, Tensor::from_parts(shape, data))
    }

    pub fn sigmoid(&mut self, v: Var) -> Result<Var> {
        self.unary(Op::Sigmoid(v), "sigmoid", v, sigmoid)
    }

    pub fn tanh(&mut self, v: Var) -> Result<Var> {
        self.unary(Op::Tanh(v), "tanh", v, f64::tanh)
    }

    /// Max-shifted softmax over all entries.
    pub fn softmax(&mut self, v: Var) -> Result<Var> {
        let t = self.expect_vector("softmax", v)?;
        let out = softmax_slice(t.data());
        self.push_checked(Op::Softmax(v), "softmax", Tensor::vector(out))
    }

    /// Mean squared error between two equally shaped tensors.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mse", a, b)?;
        let (ta, tb) = (self.value(a), self.value(b));
        let n = ta.len() as f64;
        let sq: f64 = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        self.push_checked(Op::Mse(a, b), "mse", Tensor::scalar(sq / n))
    }

    pub fn scale(&mut self, v: Var, factor: f64) -> Result<Var> {
        self.unary(Op::Scale(v, factor), "scale", v, |x| x * factor)
    }

    /// Multiplies by a fixed mask. Callers build inverted-dropout masks with
    /// entries `0` or `1 / (1 - p)`.
    pub fn dropout(&mut self, v: Var, mask: Arc<[f64]>) -> Result<Var> {
        let t = self.value(v);
        if mask.len() != t.len() {
            return Err(Error::ShapeMismatch {
                op: "dropout",
                left: t.shape().to_vec(),
                right: vec![mask.len()],
            });
        }
        let data = t
            .data()
            .iter()
            .zip(mask.iter())
            .map(|(x, m)| x * m)
            .collect();
        let shape = t.shape().to_vec();
        self.push_checked(
            Op::Dropout(v, mask),
            "dropout",
            Tensor::from_parts(shape, data),
        )
    }

    /// Elementwise sum of equally shaped tensors.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::invalid("sum of zero tensors"));
        };
        for &p in &parts[1..] {
            self.same_shape("sum", first, p)?;
        }
        let mut acc = self.value(first).clone();
        for &p in &parts[1..] {
            for (a, b) in acc.data_mut().iter_mut().zip(self.value(p).data()) {
                *a += b;
            }
        }
        self.push_checked(Op::Sum(parts.to_vec()), "sum", acc)
    }

    /// Arithmetic mean of equally shaped tensors.
    pub fn mean(&mut self, parts: &[Var]) -> Result<Var> {
        let total = self.sum(parts)?;
        self.scale(total, 1.0 / parts.len() as f64)
    }

    /// Forward: one-hot at `index`. Backward: identity, so gradients reach
    /// `probs` unchanged.
    pub fn straight_through(&mut self, probs: Var, index: usize) -> Result<Var> {
        let t = self.expect_vector("straight_through", probs)?;
        if index >= t.len() {
            return Err(Error::invalid(format!(
                "one-hot index {index} out of range {}",
                t.len()
            )));
        }
        let mut out = vec![0.0; t.len()];
        out[index] = 1.0;
        self.push_checked(
            Op::StraightThrough(probs),
            "straight_through",
            Tensor::vector(out),
        )
    }

    /// `Σ_k weights[k] · items[k]`.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Result<Var> {
        let w = self.expect_vector("weighted_sum", weights)?;
        if w.len() != items.len() || items.is_empty() {
            return Err(Error::ShapeMismatch {
                op: "weighted_sum",
                left: w.shape().to_vec(),
                right: vec![items.len()],
            });
        }
        for &it in &items[1..] {
            self.same_shape("weighted_sum", items[0], it)?;
        }
        let w = w.data().to_vec();
        let mut acc = Tensor::zeros(self.value(items[0]).shape());
        for (&wk, &it) in w.iter().zip(items) {
            if wk != 0.0 {
                for (a, b) in acc.data_mut().iter_mut().zip(self.value(it).data()) {
                    *a += wk * b;
                }
            }
        }
        self.push_checked(
            Op::WeightedSum(weights, items.to_vec()),
            "weighted_sum",
            acc,
        )
    }

    /// Negative log-likelihood of `class` under `softmax(logits)`.
    pub fn cross_entropy(&mut self, logits: Var, class: usize) -> Result<Var> {
        let t = self.expect_vector("cross_entropy", logits)?;
        if class >= t.len() {
            return Err(Error::invalid(format!(
                "class {class} out of range for {} logits",
                t.len()
            )));
        }
        let max = t.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = t.data().iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        let loss = lse - t.data()[class];
        self.push_checked(
            Op::CrossEntropy(logits, class),
            "cross_entropy",
            Tensor::scalar(loss),
        )
    }

    /// Records an operation with a caller-supplied backward rule.
    pub fn custom(
        &mut self,
        operands: &[Var],
        value: Tensor,
        backward: CustomBackward,
    ) -> Result<Var> {
        self.push_checked(Op::Custom(operands.to_vec(), backward), "custom", value)
    }

    /// Reverse sweep from a scalar `root`.
    ///
    /// Gradients are computed into fresh buffers on every call, so running
    /// backward twice over the same tape yields identical results.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(Error::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf | Op::Param(_) => {}
                Op::MatVec(m, v) => {
                    let tm = self.value(*m);
                    let tv = self.value(*v);
                    let cols = tm.cols();
                    self.accumulate(&mut grads, *m, |gm| {
                        for (r, &gr) in g.iter().enumerate() {
                            if gr != 0.0 {
                                let row = &mut gm[r * cols..(r + 1) * cols];
                                for (dst, x) in row.iter_mut().zip(tv.data()) {
                                    *dst += gr * x;
                                }
                            }
                        }
                    });
                    self.accumulate(&mut grads, *v, |gv| {
                        for (r, &gr) in g.iter().enumerate() {
                            if gr != 0.0 {
                                let row = &tm.data()[r * cols..(r + 1) * cols];
                                for (dst, w) in gv.iter_mut().zip(row) {
                                    *dst += gr * w;
                                }
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, *a, |ga| add_into(ga, &g));
                    self.accumulate(&mut grads, *b, |gb| add_into(gb, &g));
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    self.accumulate(&mut grads, *a, |ga| {
                        for ((d, gi), y) in ga.iter_mut().zip(&g).zip(tb.data()) {
                            *d += gi * y;
                        }
                    });
                    self.accumulate(&mut grads, *b, |gb| {
                        for ((d, gi), x) in gb.iter_mut().zip(&g).zip(ta.data()) {
                            *d += gi * x;
                        }
                    });
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        self.accumulate(&mut grads, p, |gp| add_into(gp, &g[offset..offset + n]));
                        offset += n;
                    }
                }
                Op::Slice(v, start) => {
                    let start = *start;
                    self.accumulate(&mut grads, *v, |gv| {
                        add_into(&mut gv[start..start + g.len()], &g)
                    });
                }
                Op::Sigmoid(v) => {
                    let y = node.value.as_ref().unwrap().data();
                    self.accumulate(&mut grads, *v, |gv| {
                        for ((d, gi), yi) in gv.iter_mut().zip(&g).zip(y) {
                            *d += gi * yi * (1.0 - yi);
                        }
                    });
                }
                Op::Tanh(v) => {
                    let y = node.value.as_ref().unwrap().data();
                    self.accumulate(&mut grads, *v, |gv| {
                        for ((d, gi), yi) in gv.iter_mut().zip(&g).zip(y) {
                            *d += gi * (1.0 - yi * yi);
                        }
                    });
                }
                Op::Softmax(v) => {
                    let y = node.value.as_ref().unwrap().data();
                    let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    self.accumulate(&mut grads, *v, |gv| {
                        for ((d, gi), yi) in gv.iter_mut().zip(&g).zip(y) {
                            *d += yi * (gi - gy);
                        }
                    });
                }
                Op::Mse(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let coef = 2.0 * g[0] / ta.len() as f64;
                    let diff: Vec<f64> = ta
                        .data()
                        .iter()
                        .zip(tb.data())
                        .map(|(x, y)| coef * (x - y))
                        .collect();
                    self.accumulate(&mut grads, *a, |ga| add_into(ga, &diff));
                    self.accumulate(&mut grads, *b, |gb| {
                        for (d, x) in gb.iter_mut().zip(&diff) {
                            *d -= x;
                        }
                    });
                }
                Op::Scale(v, factor) => {
                    self.accumulate(&mut grads, *v, |gv| {
                        for (d, gi) in gv.iter_mut().zip(&g) {
                            *d += gi * factor;
                        }
                    });
                }
                Op::Dropout(v, mask) => {
                    self.accumulate(&mut grads, *v, |gv| {
                        for ((d, gi), m) in gv.iter_mut().zip(&g).zip(mask.iter()) {
                            *d += gi * m;
                        }
                    });
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        self.accumulate(&mut grads, p, |gp| add_into(gp, &g));
                    }
                }
                Op::StraightThrough(p) => {
                    self.accumulate(&mut grads, *p, |gp| add_into(gp, &g));
                }
                Op::WeightedSum(weights, items) => {
                    let w = self.value(*weights).data();
                    let dw: Vec<f64> = items
                        .iter()
                        .map(|&it| {
                            self.value(it)
                                .data()
                                .iter()
                                .zip(&g)
                                .map(|(x, gi)| x * gi)
                                .sum()
                        })
                        .collect();
                    for (&wk, &it) in w.iter().zip(items) {
                        if wk != 0.0 {
                            self.accumulate(&mut grads, it, |gi| {
                                for (d, x) in gi.iter_mut().zip(&g) {
                                    *d += wk * x;
                                }
                            });
                        }
                    }
                    self.accumulate(&mut grads, *weights, |gw| add_into(gw, &dw));
                }
                Op::CrossEntropy(logits, class) => {
                    let probs = softmax_slice(self.value(*logits).data());
                    let class = *class;
                    self.accumulate(&mut grads, *logits, |gl| {
                        for (k, (d, p)) in gl.iter_mut().zip(&probs).enumerate() {
                            let target = if k == class { 1.0 } else { 0.0 };
                            *d += g[0] * (p - target);
                        }
                    });
                }
                Op::Custom(operands, rule) => {
                    let values: Vec<&Tensor> = operands.iter().map(|&o| self.value(o)).collect();
                    let out = node.value.as_ref().unwrap();
                    let parts = rule(&values, out, &g);
                    for (&o, part) in operands.iter().zip(parts) {
                        self.accumulate(&mut grads, o, |go| add_into(go, &part));
                    }
                }
            }
            grads[i] = Some(g);
        }

        let mut params = ParamGrads::zeros(self.store);
        for (pid, var) in self.param_nodes.iter().enumerate() {
            if let Some(var) = var {
                if let Some(Some(g)) = grads.get(var.0) {
                    params.get_mut(ParamId(pid)).copy_from_slice(g);
                }
            }
        }
        let nodes = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.map(|g| Tensor::from_parts(self.value(Var(i)).shape().to_vec(), g)))
            .collect();
        Ok(Gradients { nodes, params })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], target: Var, f: impl FnOnce(&mut [f64])) {
        let buf = grads[target.0].get_or_insert_with(|| vec![0.0; self.value(target).len()]);
        f(buf);
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Result of [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    nodes: Vec<Option<Tensor>>,
    params: ParamGrads,
}

impl Gradients {
    /// Gradient of the root with respect to `var`; `None` if unreachable.
    pub fn wrt(&self, var: Var) -> Option<&Tensor> {
        self.nodes.get(var.0).and_then(Option::as_ref)
    }

    pub fn params(&self) -> &ParamGrads {
        &self.params
    }

    pub fn into_params(self) -> ParamGrads {
        self.params
    }
}
