//! Tape-based reverse-mode differentiation over [`Tensor`] values.
//!
//! A [`Tape`] borrows a [`ParamSet`] and records every operation applied to
//! its values. Parameters are referenced in place, never copied onto the
//! tape. [`Tape::backward`] walks the record in reverse and returns a
//! [`GradientMap`] covering every parameter; parameters that did not take
//! part in the computation get zero gradients.
//!
//! One tape serves one forward/backward pass. Independent tapes over the
//! same parameters can run on different threads.

use crate::params::{GradientMap, ParamSet};
use crate::tensor::{Tensor, TensorError};

static NO_PARAMS: ParamSet = ParamSet::EMPTY;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Pointwise and structural operation kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementwiseKind {
    Sigmoid,
    Tanh,
    Relu,
    Log1p,
    Add,
    Sub,
    Mul,
    Scale(f64),
    ConcatCols,
    RowSum,
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Log1p(Var),
    ConcatCols(Var, Var),
    RowSum(Var),
    GatherRows(Var, Vec<usize>),
    /// Per output entry, the source row that supplied the maximum (if any).
    NeighborMax(Var, Vec<Option<usize>>),
    NeighborSum(Var, Vec<Vec<(usize, f64)>>),
}

#[derive(Debug)]
struct Node {
    value: Option<Tensor>,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl Default for Tape<'static> {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape<'static> {
    /// A tape with no registered parameters.
    pub fn new() -> Self {
        Tape::with_params(&NO_PARAMS)
    }
}

impl<'p> Tape<'p> {
    pub fn with_params(params: &'p ParamSet) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        let node = &self.nodes[var.0];
        match node.op {
            Op::Param(i) => self.params.get(i),
            _ => node.value.as_ref().expect("non-parameter nodes own their value"),
        }
    }

    pub fn shape(&self, var: Var) -> (usize, usize) {
        self.value(var).shape()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, var: Var) -> bool {
        self.nodes[var.0].needs_grad
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// The differentiable handle for parameter `index`. Repeated calls return
    /// the same handle.
    pub fn param(&mut self, index: usize) -> Var {
        if let Some(v) = self.param_vars[index] {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(index),
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[index] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).matmul(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul(a, b), needs))
    }

    /// `a · bᵀ`, the natural form for applying a `out×in` weight matrix to
    /// row-stacked inputs.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).matmul_t(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMulT(a, b), needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add(a, b), needs))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Sub(a, b), needs))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Mul(a, b), needs))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a).map(|x| x * factor);
        let needs = self.needs(a);
        self.push(value, Op::Scale(a, factor), needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let needs = self.needs(a);
        self.push(value, Op::Sigmoid(a), needs)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        let needs = self.needs(a);
        self.push(value, Op::Tanh(a), needs)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let needs = self.needs(a);
        self.push(value, Op::Relu(a), needs)
    }

    pub fn log1p(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::ln_1p);
        let needs = self.needs(a);
        self.push(value, Op::Log1p(a), needs)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = self.value(a).concat_cols(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::ConcatCols(a, b), needs))
    }

    /// Sum over rows: `n×m → 1×m`.
    pub fn row_sum(&mut self, a: Var) -> Var {
        let value = self.value(a).row_sum();
        let needs = self.needs(a);
        self.push(value, Op::RowSum(a), needs)
    }

    /// Selects rows of `src` by index (embedding lookup).
    pub fn gather_rows(&mut self, src: Var, rows: &[usize]) -> Result<Var, TensorError> {
        let s = self.value(src);
        let cols = s.cols();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            if r >= s.rows() {
                return Err(TensorError::Contract(format!(
                    "gather index {r} out of range for {} rows",
                    s.rows()
                )));
            }
            data.extend_from_slice(s.row(r));
        }
        let value = Tensor::new(rows.len(), cols, data)?;
        let needs = self.needs(src);
        Ok(self.push(value, Op::GatherRows(src, rows.to_vec()), needs))
    }

    /// Row `v` of the output is the elementwise maximum over the rows of
    /// `src` listed in `neighbors[v]`, or zeros when the list is empty.
    pub fn neighbor_max(&mut self, src: Var, neighbors: &[Vec<usize>]) -> Result<Var, TensorError> {
        let s = self.value(src);
        if neighbors.len() != s.rows() {
            return Err(TensorError::Dimension {
                op: "neighbor_max",
                left: (neighbors.len(), 0),
                right: s.shape(),
            });
        }
        let cols = s.cols();
        let mut data = vec![0.0; neighbors.len() * cols];
        let mut argmax = vec![None; neighbors.len() * cols];
        for (v, list) in neighbors.iter().enumerate() {
            for c in 0..cols {
                let mut best: Option<(usize, f64)> = None;
                for &u in list {
                    let x = s.get(u, c);
                    if best.is_none_or(|(_, b)| x > b) {
                        best = Some((u, x));
                    }
                }
                if let Some((u, x)) = best {
                    data[v * cols + c] = x;
                    argmax[v * cols + c] = Some(u);
                }
            }
        }
        let value = Tensor::new(neighbors.len(), cols, data)?;
        let needs = self.needs(src);
        Ok(self.push(value, Op::NeighborMax(src, argmax), needs))
    }

    /// Row `v` of the output is `Σ w · src[u]` over `(u, w)` in
    /// `neighbors[v]` — a sparse `A·src` with `A[v][u] = w`. Terms are added
    /// in list order.
    pub fn neighbor_sum(&mut self, src: Var, neighbors: &[Vec<(usize, f64)>]) -> Result<Var, TensorError> {
        let s = self.value(src);
        let cols = s.cols();
        let mut data = vec![0.0; neighbors.len() * cols];
        for (v, list) in neighbors.iter().enumerate() {
            let out = &mut data[v * cols..(v + 1) * cols];
            for &(u, w) in list {
                if u >= s.rows() {
                    return Err(TensorError::Contract(format!(
                        "neighbor index {u} out of range for {} rows",
                        s.rows()
                    )));
                }
                for (o, x) in out.iter_mut().zip(s.row(u)) {
                    *o += w * x;
                }
            }
        }
        let value = Tensor::new(neighbors.len(), cols, data)?;
        let needs = self.needs(src);
        Ok(self.push(value, Op::NeighborSum(src, neighbors.to_vec()), needs))
    }

    /// Single entry point for the pointwise/structural kinds.
    pub fn elementwise(&mut self, kind: ElementwiseKind, operands: &[Var]) -> Result<Var, TensorError> {
        let arity = match kind {
            ElementwiseKind::Add
            | ElementwiseKind::Sub
            | ElementwiseKind::Mul
            | ElementwiseKind::ConcatCols => 2,
            _ => 1,
        };
        if operands.len() != arity {
            return Err(TensorError::Contract(format!(
                "{kind:?} takes {arity} operand(s), got {}",
                operands.len()
            )));
        }
        let a = operands[0];
        match kind {
            ElementwiseKind::Sigmoid => Ok(self.sigmoid(a)),
            ElementwiseKind::Tanh => Ok(self.tanh(a)),
            ElementwiseKind::Relu => Ok(self.relu(a)),
            ElementwiseKind::Log1p => Ok(self.log1p(a)),
            ElementwiseKind::Scale(f) => Ok(self.scale(a, f)),
            ElementwiseKind::RowSum => Ok(self.row_sum(a)),
            ElementwiseKind::Add => self.add(a, operands[1]),
            ElementwiseKind::Sub => self.sub(a, operands[1]),
            ElementwiseKind::Mul => self.mul(a, operands[1]),
            ElementwiseKind::ConcatCols => self.concat_cols(a, operands[1]),
        }
    }

    /// Reverse accumulation from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<GradientMap, TensorError> {
        if self.shape(loss) != (1, 1) {
            return Err(TensorError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut out = GradientMap::zeros_for(self.params);
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(p) => out.get_mut(*p).add_assign(&g),
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        let ga = g.matmul_t(self.value(*b))?;
                        accumulate(&mut grads, *a, ga);
                    }
                    if self.needs(*b) {
                        let gb = self.value(*a).t_matmul(&g)?;
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::MatMulT(a, b) => {
                    if self.needs(*a) {
                        let ga = g.matmul(self.value(*b))?;
                        accumulate(&mut grads, *a, ga);
                    }
                    if self.needs(*b) {
                        let gb = g.t_matmul(self.value(*a))?;
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, g.map(|x| -x));
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        let ga = g.zip_map(self.value(*b), "mul", |x, y| x * y)?;
                        accumulate(&mut grads, *a, ga);
                    }
                    if self.needs(*b) {
                        let gb = g.zip_map(self.value(*a), "mul", |x, y| x * y)?;
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::Scale(a, f) => {
                    let f = *f;
                    accumulate(&mut grads, *a, g.map(|x| x * f));
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().unwrap();
                    let ga = g.zip_map(y, "sigmoid", |g, y| g * y * (1.0 - y))?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().unwrap();
                    let ga = g.zip_map(y, "tanh", |g, y| g * (1.0 - y * y))?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::Relu(a) => {
                    let ga = g.zip_map(self.value(*a), "relu", |g, x| if x > 0.0 { g } else { 0.0 })?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::Log1p(a) => {
                    let ga = g.zip_map(self.value(*a), "log1p", |g, x| g / (1.0 + x))?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::ConcatCols(a, b) => {
                    let left = self.value(*a).cols();
                    let (rows, cols) = g.shape();
                    let right = cols - left;
                    let mut ga = Vec::with_capacity(rows * left);
                    let mut gb = Vec::with_capacity(rows * right);
                    for r in 0..rows {
                        let row = g.row(r);
                        ga.extend_from_slice(&row[..left]);
                        gb.extend_from_slice(&row[left..]);
                    }
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, Tensor::new(rows, left, ga)?);
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, Tensor::new(rows, right, gb)?);
                    }
                }
                Op::RowSum(a) => {
                    let rows = self.value(*a).rows();
                    let cols = g.cols();
                    let data = (0..rows).flat_map(|_| g.data().iter().copied()).collect();
                    accumulate(&mut grads, *a, Tensor::new(rows, cols, data)?);
                }
                Op::GatherRows(src, idx) => {
                    let (rows, cols) = self.value(*src).shape();
                    let mut gs = Tensor::zeros(rows, cols);
                    for (r, &s) in idx.iter().enumerate() {
                        let dst = &mut gs.data_mut()[s * cols..(s + 1) * cols];
                        for (d, x) in dst.iter_mut().zip(g.row(r)) {
                            *d += x;
                        }
                    }
                    accumulate(&mut grads, *src, gs);
                }
                Op::NeighborMax(src, argmax) => {
                    let (rows, cols) = self.value(*src).shape();
                    let mut gs = Tensor::zeros(rows, cols);
                    for (k, arg) in argmax.iter().enumerate() {
                        if let Some(u) = arg {
                            let c = k % cols;
                            gs.data_mut()[u * cols + c] += g.data()[k];
                        }
                    }
                    accumulate(&mut grads, *src, gs);
                }
                Op::NeighborSum(src, neighbors) => {
                    let (rows, cols) = self.value(*src).shape();
                    let mut gs = Tensor::zeros(rows, cols);
                    for (v, list) in neighbors.iter().enumerate() {
                        for &(u, w) in list {
                            let dst = &mut gs.data_mut()[u * cols..(u + 1) * cols];
                            for (d, x) in dst.iter_mut().zip(g.row(v)) {
                                *d += w * x;
                            }
                        }
                    }
                    accumulate(&mut grads, *src, gs);
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Tensor>], var: Var, g: Tensor) {
    match &mut grads[var.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Outcome of [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
}

/// Compares tape gradients against central finite differences for every
/// parameter entry. The error of an entry is
/// `|analytic - fd| / max(1, |analytic|)`.
pub fn grad_check<F>(f: F, params: &ParamSet, epsilon: f64) -> Result<GradCheck, TensorError>
where
    F: Fn(&mut Tape) -> Result<Var, TensorError>,
{
    if !(epsilon > 0.0) {
        return Err(TensorError::Contract("epsilon must be positive".into()));
    }
    let eval = |p: &ParamSet| -> Result<f64, TensorError> {
        let mut tape = Tape::with_params(p);
        let loss = f(&mut tape)?;
        tape.value(loss).item()
    };
    let analytic = {
        let mut tape = Tape::with_params(params);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    let mut work = params.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    for p in 0..params.len() {
        for k in 0..params.get(p).len() {
            let location = || format!("{}[{k}]", params.name(p));
            let original = params.get(p).data()[k];
            work.get_mut(p).data_mut()[k] = original + epsilon;
            let plus = eval(&work)?;
            work.get_mut(p).data_mut()[k] = original - epsilon;
            let minus = eval(&work)?;
            work.get_mut(p).data_mut()[k] = original;
            let a = analytic.get(p).data()[k];
            let fd = (plus - minus) / (2.0 * epsilon);
            if !a.is_finite() || !fd.is_finite() {
                return Err(TensorError::NonFinite {
                    location: location(),
                });
            }
            let err = (a - fd).abs() / a.abs().max(1.0);
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((params.name(p).to_string(), k));
            }
            report.entries_checked += 1;
        }
    }
    Ok(report)
}
