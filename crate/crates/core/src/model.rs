//! The CasGCN forward pass.
//!
//! For a cascade with `n` nodes and embedding width `D`:
//!
//! 1. `H⁰ = X`, one embedding row per node (unknown ids share the UNK row).
//! 2. `k` gated convolution rounds. Each round aggregates neighbour states
//!    separately along incoming and outgoing edges,
//!    `h_N(v) = [a_in(v)·H, a_out(v)·H]` (width `2D`), then applies a GRU
//!    update with reset gate `r`, update gate `z` and candidate `h̃`:
//!
//!    ```text
//!    r = σ(W_r h_N + U_r h)      z = σ(W_z h_N + U_z h)
//!    h̃ = tanh(W h_N + U (r ⊙ h))  h' = (1 - z) ⊙ h + z ⊙ h̃
//!    ```
//!
//!    Input-side matrices are `D×2D`, state-side matrices `D×D`, shared by
//!    all rounds.
//! 3. Node times normalized by the observation window, `T = t / window_t`.
//! 4. Attention readout over `u_v = [h_v, T_v]`:
//!    `g = relu(Σ_v σ(i(u_v)) ⊙ tanh(j(u_v)))` with affine `i`, `j`.
//! 5. An MLP maps `g` to the scalar prediction `ŷ`.
//!
//! With the log head `ŷ` estimates `ln(Δs + 1)`; the raw head estimates `Δs`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Tape, Var};
use crate::cascade::{ensure_valid, CascadeError, CascadeGraph, LabeledCascade, NodeId};
use crate::params::{CheckpointError, ParamSet};
use crate::tensor::{Tensor, TensorError};
use crate::train::{Example, Regressor};

pub const CHECKPOINT_KIND: &str = "casgcn";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("cascade {0} has no growth label")]
    MissingLabel(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Aggregation/readout variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Bi-directional sum aggregation with temporal readout.
    Full,
    /// Per-direction elementwise max over neighbours.
    MaxPool,
    /// Per-direction mean over neighbours.
    MeanPool,
    /// One summed aggregation over both directions.
    Undirected,
    /// Readout without node times.
    NoTime,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::MaxPool,
        Variant::MeanPool,
        Variant::Undirected,
        Variant::NoTime,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "CasGCN",
            Variant::MaxPool => "CasGCN-max",
            Variant::MeanPool => "CasGCN-mean",
            Variant::Undirected => "CasGCN-undirected",
            Variant::NoTime => "CasGCN(no time effect)",
        }
    }

    fn bidirectional(self) -> bool {
        self != Variant::Undirected
    }

    fn uses_time(self) -> bool {
        self != Variant::NoTime
    }
}

/// Space the scalar output lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Output estimates `ln(Δs + 1)`; growth is `max(0, exp(ŷ) - 1)`.
    Log,
    /// Output estimates `Δs`; growth is `max(0, ŷ)`.
    Raw,
}

impl Head {
    pub fn target(self, growth: f64) -> f64 {
        match self {
            Head::Log => growth.ln_1p(),
            Head::Raw => growth,
        }
    }

    pub fn growth(self, output: f64) -> f64 {
        match self {
            Head::Log => output.exp_m1().max(0.0),
            Head::Raw => output.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub iterations: usize,
    pub readout_dim: usize,
    pub mlp_hidden: Vec<usize>,
    pub variant: Variant,
    /// Rows of the embedding table, not counting the UNK row.
    pub vocab_size: usize,
    pub head: Head,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 16,
            iterations: 2,
            readout_dim: 16,
            mlp_hidden: vec![16],
            variant: Variant::Full,
            vocab_size: 0,
            head: Head::Log,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.embed_dim == 0 || self.readout_dim == 0 {
            return Err(ModelError::Config("embed_dim and readout_dim must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(ModelError::Config("iterations must be >= 1".into()));
        }
        if self.mlp_hidden.contains(&0) {
            return Err(ModelError::Config("mlp_hidden widths must be >= 1".into()));
        }
        Ok(())
    }

    fn conv_input_width(&self) -> usize {
        if self.variant.bidirectional() {
            2 * self.embed_dim
        } else {
            self.embed_dim
        }
    }

    fn readout_input_width(&self) -> usize {
        self.embed_dim + usize::from(self.variant.uses_time())
    }
}

/// Node-id → embedding-row map. Ids outside the vocabulary use row
/// `len()`, the UNK row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocab {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
}

impl Vocab {
    pub fn from_ids(ids: Vec<NodeId>) -> Self {
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Self { ids, index }
    }

    /// Ids seen in at least `min_count` distinct cascades, in first-seen
    /// order. Rarer ids fall back to UNK, which keeps the UNK row trained.
    pub fn build(cascades: &[LabeledCascade], min_count: usize) -> Self {
        let mut counts: HashMap<&NodeId, usize> = HashMap::new();
        let mut order = Vec::new();
        for c in cascades {
            for n in &c.graph.nodes {
                let e = counts.entry(&n.id).or_insert_with(|| {
                    order.push(&n.id);
                    0
                });
                *e += 1;
            }
        }
        let ids = order
            .into_iter()
            .filter(|id| counts[id] >= min_count.max(1))
            .cloned()
            .collect();
        Self::from_ids(ids)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn unk(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, id: &NodeId) -> usize {
        self.index.get(id).copied().unwrap_or(self.ids.len())
    }

    pub fn write(&self, path: &Path) -> Result<(), ModelError> {
        let mut text = String::new();
        for id in &self.ids {
            text.push_str(&id.0);
            text.push('\n');
        }
        fs::write(path, text).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_ids(text.lines().map(NodeId::from).collect()))
    }
}

/// Index-form cascade, ready for repeated forward passes.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCascade {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    /// `n×1` normalized times.
    pub times: Tensor,
    /// Embedding row per node.
    pub rows: Vec<usize>,
}

impl PreparedCascade {
    pub fn new(graph: &CascadeGraph, vocab: &Vocab) -> Result<Self, ModelError> {
        ensure_valid(graph)?;
        Ok(Self {
            n: graph.nodes.len(),
            edges: graph.index_edges(),
            times: temporal_vector(graph)?,
            rows: graph.nodes.iter().map(|n| vocab.row(&n.id)).collect(),
        })
    }
}

/// `t_v / window_t` for every node, in node order.
pub fn temporal_vector(graph: &CascadeGraph) -> Result<Tensor, ModelError> {
    if !(graph.window_t > 0.0) {
        return Err(ModelError::Cascade(CascadeError::Parameter(format!(
            "window_t {} must be > 0",
            graph.window_t
        ))));
    }
    let t: Vec<f64> = graph.nodes.iter().map(|n| n.time / graph.window_t).collect();
    Ok(Tensor::column_vector(&t))
}

/// Neighbourhood structure in the form a variant consumes. Neighbour
/// lists are sorted by node index so summation order depends only on the
/// neighbour set, not on edge listing or orientation.
enum Aggregation {
    /// Weighted sums; `(in, out)` lists, or one undirected list.
    Sum(Vec<Vec<(usize, f64)>>, Option<Vec<Vec<(usize, f64)>>>),
    /// Per-direction neighbour lists for max pooling.
    Max(Vec<Vec<usize>>, Vec<Vec<usize>>),
}

impl Aggregation {
    fn new(variant: Variant, n: usize, edges: &[(usize, usize)]) -> Self {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(u, v) in edges {
            parents[v].push(u);
            children[u].push(v);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let weighted = |lists: &[Vec<usize>], mean: bool| -> Vec<Vec<(usize, f64)>> {
            lists
                .iter()
                .map(|l| {
                    let w = if mean && !l.is_empty() { 1.0 / l.len() as f64 } else { 1.0 };
                    l.iter().map(|&u| (u, w)).collect()
                })
                .collect()
        };
        match variant {
            Variant::Full | Variant::NoTime => {
                Aggregation::Sum(weighted(&parents, false), Some(weighted(&children, false)))
            }
            Variant::MeanPool => {
                Aggregation::Sum(weighted(&parents, true), Some(weighted(&children, true)))
            }
            Variant::Undirected => {
                // (a_in + a_out) counts a neighbour twice only when edges
                // run both ways, which a valid cascade never has.
                let both: Vec<Vec<usize>> = parents
                    .into_iter()
                    .zip(children)
                    .map(|(mut p, c)| {
                        p.extend(c);
                        p.sort_unstable();
                        p
                    })
                    .collect();
                Aggregation::Sum(weighted(&both, false), None)
            }
            Variant::MaxPool => Aggregation::Max(parents, children),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ParamIndex {
    embedding: usize,
    w_r: usize,
    u_r: usize,
    w_z: usize,
    u_z: usize,
    w: usize,
    u: usize,
    i_weight: usize,
    i_bias: usize,
    j_weight: usize,
    j_bias: usize,
    mlp: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CasGcn {
    config: ModelConfig,
    params: ParamSet,
    index: ParamIndex,
}

impl CasGcn {
    /// Parameters drawn uniformly from `±1/√fan_in`; embedding rows from
    /// `±1` (a one-hot input has a single active unit).
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::build(config, |rows, cols, fan_in| {
            ParamSet::uniform(rows, cols, 1.0 / (fan_in as f64).sqrt(), &mut rng)
        }))
    }

    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        Ok(Self::build(config, |rows, cols, _| Tensor::zeros(rows, cols)))
    }

    pub fn from_params(config: ModelConfig, params: ParamSet) -> Result<Self, ModelError> {
        let mut model = Self::zeros(config)?;
        model.params.check_compatible(&params)?;
        model.params = params;
        Ok(model)
    }

    pub fn load(config: ModelConfig, path: &Path) -> Result<Self, ModelError> {
        let (kind, params) = ParamSet::read_checkpoint(path)?;
        if kind != CHECKPOINT_KIND {
            return Err(CheckpointError::Kind {
                expected: CHECKPOINT_KIND.into(),
                found: kind,
            }
            .into());
        }
        Self::from_params(config, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(self.params.write_checkpoint(CHECKPOINT_KIND, path)?)
    }

    fn build(config: ModelConfig, mut init: impl FnMut(usize, usize, usize) -> Tensor) -> Self {
        let d = config.embed_dim;
        let e = config.readout_dim;
        let conv_in = config.conv_input_width();
        let read_in = config.readout_input_width();
        let mut p = ParamSet::new();
        let embedding = p.push("embedding", init(config.vocab_size + 1, d, 1));
        let w_r = p.push("conv.w_r", init(d, conv_in, conv_in));
        let u_r = p.push("conv.u_r", init(d, d, d));
        let w_z = p.push("conv.w_z", init(d, conv_in, conv_in));
        let u_z = p.push("conv.u_z", init(d, d, d));
        let w = p.push("conv.w", init(d, conv_in, conv_in));
        let u = p.push("conv.u", init(d, d, d));
        let i_weight = p.push("readout.i.weight", init(e, read_in, read_in));
        let i_bias = p.push("readout.i.bias", init(1, e, read_in));
        let j_weight = p.push("readout.j.weight", init(e, read_in, read_in));
        let j_bias = p.push("readout.j.bias", init(1, e, read_in));
        let mut mlp = Vec::new();
        let mut width = e;
        for (l, &h) in config.mlp_hidden.iter().chain(std::iter::once(&1)).enumerate() {
            let wi = p.push(format!("mlp.{l}.weight"), init(h, width, width));
            let bi = p.push(format!("mlp.{l}.bias"), init(1, h, width));
            mlp.push((wi, bi));
            width = h;
        }
        Self {
            config,
            params: p,
            index: ParamIndex {
                embedding,
                w_r,
                u_r,
                w_z,
                u_z,
                w,
                u,
                i_weight,
                i_bias,
                j_weight,
                j_bias,
                mlp,
            },
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    // -- tape-level building blocks -------------------------------------

    fn embed_on(&self, tape: &mut Tape, rows: &[usize]) -> Result<Var, TensorError> {
        let table = tape.param(self.index.embedding);
        tape.gather_rows(table, rows)
    }

    fn aggregate_on(&self, tape: &mut Tape, h: Var, agg: &Aggregation) -> Result<Var, TensorError> {
        match agg {
            Aggregation::Sum(both, None) => tape.neighbor_sum(h, both),
            Aggregation::Sum(a_in, Some(a_out)) => {
                let h_in = tape.neighbor_sum(h, a_in)?;
                let h_out = tape.neighbor_sum(h, a_out)?;
                tape.concat_cols(h_in, h_out)
            }
            Aggregation::Max(parents, children) => {
                let h_in = tape.neighbor_max(h, parents)?;
                let h_out = tape.neighbor_max(h, children)?;
                tape.concat_cols(h_in, h_out)
            }
        }
    }

    /// One gated round. `update_gate` replaces `z` with a constant, for
    /// exercising the update equation in isolation.
    /// `h_n Wᵀ + state Uᵀ`, the pre-activation shared by both gates and the
    /// candidate state.
    fn gate_on(&self, tape: &mut Tape, h_n: Var, w: usize, u: usize, state: Var) -> Result<Var, TensorError> {
        let w = tape.param(w);
        let u = tape.param(u);
        let a = tape.matmul_t(h_n, w)?;
        let b = tape.matmul_t(state, u)?;
        tape.add(a, b)
    }

    fn conv_on(
        &self,
        tape: &mut Tape,
        h: Var,
        agg: &Aggregation,
        update_gate: Option<f64>,
    ) -> Result<Var, TensorError> {
        let ix = &self.index;
        let h_n = self.aggregate_on(tape, h, agg)?;
        let r_pre = self.gate_on(tape, h_n, ix.w_r, ix.u_r, h)?;
        let r = tape.sigmoid(r_pre);
        let z = match update_gate {
            None => {
                let z_pre = self.gate_on(tape, h_n, ix.w_z, ix.u_z, h)?;
                tape.sigmoid(z_pre)
            }
            Some(c) => {
                let (rows, cols) = tape.shape(h);
                tape.constant(Tensor::filled(rows, cols, c))
            }
        };
        let rh = tape.mul(r, h)?;
        let cand_pre = self.gate_on(tape, h_n, ix.w, ix.u, rh)?;
        let cand = tape.tanh(cand_pre);
        // h' = h - z⊙h + z⊙h̃
        let zh = tape.mul(z, h)?;
        let zc = tape.mul(z, cand)?;
        let keep = tape.sub(h, zh)?;
        tape.add(keep, zc)
    }

    fn affine_on(&self, tape: &mut Tape, x: Var, weight: usize, bias: usize) -> Result<Var, TensorError> {
        let w = tape.param(weight);
        let b = tape.param(bias);
        let y = tape.matmul_t(x, w)?;
        let rows = tape.shape(x).0;
        let ones = tape.constant(Tensor::filled(rows, 1, 1.0));
        let b = tape.matmul(ones, b)?;
        tape.add(y, b)
    }

    fn readout_on(&self, tape: &mut Tape, h: Var, times: Var) -> Result<Var, TensorError> {
        let u = if self.config.variant.uses_time() {
            tape.concat_cols(h, times)?
        } else {
            h
        };
        let i = self.affine_on(tape, u, self.index.i_weight, self.index.i_bias)?;
        let j = self.affine_on(tape, u, self.index.j_weight, self.index.j_bias)?;
        let attn = tape.sigmoid(i);
        let val = tape.tanh(j);
        let gated = tape.mul(attn, val)?;
        let pooled = tape.row_sum(gated);
        Ok(tape.relu(pooled))
    }

    fn mlp_on(&self, tape: &mut Tape, g: Var) -> Result<Var, TensorError> {
        let mut x = g;
        let last = self.index.mlp.len() - 1;
        for (l, &(w, b)) in self.index.mlp.iter().enumerate() {
            x = self.affine_on(tape, x, w, b)?;
            if l < last {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }

    /// Full forward pass recorded on `tape`; returns the `1×1` output.
    pub fn forward(&self, tape: &mut Tape, input: &PreparedCascade) -> Result<Var, TensorError> {
        let agg = Aggregation::new(self.config.variant, input.n, &input.edges);
        let mut h = self.embed_on(tape, &input.rows)?;
        for _ in 0..self.config.iterations {
            h = self.conv_on(tape, h, &agg, None)?;
        }
        let times = tape.constant(input.times.clone());
        let g = self.readout_on(tape, h, times)?;
        self.mlp_on(tape, g)
    }

    /// Node representations `H_c` after all convolution rounds.
    pub fn node_states(&self, input: &PreparedCascade) -> Result<Tensor, TensorError> {
        let mut tape = Tape::with_params(&self.params);
        let agg = Aggregation::new(self.config.variant, input.n, &input.edges);
        let mut h = self.embed_on(&mut tape, &input.rows)?;
        for _ in 0..self.config.iterations {
            h = self.conv_on(&mut tape, h, &agg, None)?;
        }
        Ok(tape.value(h).clone())
    }

    // -- value-level API -------------------------------------------------

    /// `H⁰`: one embedding row per node id.
    pub fn embed_nodes(&self, node_ids: &[NodeId], vocab: &Vocab) -> Result<Tensor, TensorError> {
        let rows: Vec<usize> = node_ids.iter().map(|id| vocab.row(id)).collect();
        let mut tape = Tape::with_params(&self.params);
        let x = self.embed_on(&mut tape, &rows)?;
        Ok(tape.value(x).clone())
    }

    /// One convolution round applied to `h_prev` over the given edges.
    pub fn conv_step(&self, h_prev: &Tensor, edges: &[(usize, usize)]) -> Result<Tensor, TensorError> {
        self.conv_step_with_gate(h_prev, edges, None)
    }

    pub(crate) fn conv_step_with_gate(
        &self,
        h_prev: &Tensor,
        edges: &[(usize, usize)],
        update_gate: Option<f64>,
    ) -> Result<Tensor, TensorError> {
        if h_prev.cols() != self.config.embed_dim {
            return Err(TensorError::Dimension {
                op: "conv_step",
                left: h_prev.shape(),
                right: (h_prev.rows(), self.config.embed_dim),
            });
        }
        let mut tape = Tape::with_params(&self.params);
        let agg = Aggregation::new(self.config.variant, h_prev.rows(), edges);
        let h = tape.constant(h_prev.clone());
        let out = self.conv_on(&mut tape, h, &agg, update_gate)?;
        Ok(tape.value(out).clone())
    }

    /// Reset and update gates `(r, z)` of one round from `h_prev`.
    pub fn gates(&self, h_prev: &Tensor, edges: &[(usize, usize)]) -> Result<(Tensor, Tensor), TensorError> {
        let mut tape = Tape::with_params(&self.params);
        let agg = Aggregation::new(self.config.variant, h_prev.rows(), edges);
        let h = tape.constant(h_prev.clone());
        let h_n = self.aggregate_on(&mut tape, h, &agg)?;
        let r = self.gate_on(&mut tape, h_n, self.index.w_r, self.index.u_r, h)?;
        let r = tape.sigmoid(r);
        let z = self.gate_on(&mut tape, h_n, self.index.w_z, self.index.u_z, h)?;
        let z = tape.sigmoid(z);
        Ok((tape.value(r).clone(), tape.value(z).clone()))
    }

    /// The `1×E` cascade representation `g`.
    pub fn attention_readout(&self, h: &Tensor, times: &Tensor) -> Result<Tensor, TensorError> {
        if times.shape() != (h.rows(), 1) {
            return Err(TensorError::Dimension {
                op: "attention_readout",
                left: h.shape(),
                right: times.shape(),
            });
        }
        let mut tape = Tape::with_params(&self.params);
        let h = tape.constant(h.clone());
        let t = tape.constant(times.clone());
        let g = self.readout_on(&mut tape, h, t)?;
        Ok(tape.value(g).clone())
    }

    pub fn predict_prepared(&self, input: &PreparedCascade) -> Result<f64, TensorError> {
        let mut tape = Tape::with_params(&self.params);
        let y = self.forward(&mut tape, input)?;
        tape.value(y).item()
    }

    /// Predicted output `ŷ` for one cascade.
    pub fn predict(&self, graph: &CascadeGraph, vocab: &Vocab) -> Result<f64, ModelError> {
        let prepared = PreparedCascade::new(graph, vocab)?;
        Ok(self.predict_prepared(&prepared)?)
    }

    /// Predicted growth `Δs'` under the configured head.
    pub fn predict_growth(&self, graph: &CascadeGraph, vocab: &Vocab) -> Result<f64, ModelError> {
        Ok(self.config.head.growth(self.predict(graph, vocab)?))
    }
}

impl Regressor for CasGcn {
    type Input = PreparedCascade;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn head(&self) -> Head {
        self.config.head
    }

    fn forward(&self, tape: &mut Tape, input: &PreparedCascade) -> Result<Var, TensorError> {
        CasGcn::forward(self, tape, input)
    }
}

/// Prepares labeled cascades for training or evaluation.
pub fn prepare_examples(
    cascades: &[LabeledCascade],
    vocab: &Vocab,
) -> Result<Vec<Example<PreparedCascade>>, ModelError> {
    cascades
        .par_iter()
        .map(|c| {
            let label = c
                .label
                .ok_or_else(|| ModelError::MissingLabel(c.graph.cascade_id.clone()))?;
            Ok(Example {
                input: PreparedCascade::new(&c.graph, vocab)?,
                growth: label.0 as f64,
            })
        })
        .collect()
}
