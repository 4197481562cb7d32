//! Cascade graphs, growth labels, size filtering and dataset splits.
//!
//! Edge `(u, v)` means `v` adopted the cascade from `u`: information flows
//! from `u` to `v`, so `t_u <= t_v` must hold.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;

/// Earliest time an adopter other than the origin may carry. Sources with
/// coarse clocks (whole seconds, whole years) can report adoptions at the
/// origin's own timestamp; those are moved here so the origin stays unique.
pub const MIN_ADOPTION_TIME: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum CascadeError {
    #[error("invalid cascade {cascade_id}: {violation}")]
    Invalid {
        cascade_id: String,
        violation: Violation,
    },
    #[error("parameter error: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Seconds since the origin post.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
}

impl Edge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>) -> Self {
        Self {
            src: NodeId(src.into()),
            dst: NodeId(dst.into()),
        }
    }
}

/// A directed, time-stamped diffusion graph observed for `window_t` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeGraph {
    pub cascade_id: String,
    pub window_t: f64,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// Number of adopters arriving in the growth horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GrowthLabel(pub u64);

impl GrowthLabel {
    pub fn delta_s(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCascade {
    pub graph: CascadeGraph,
    /// Absent when the source carried no label (prediction-only inputs).
    pub label: Option<GrowthLabel>,
}

impl LabeledCascade {
    pub fn new(graph: CascadeGraph, label: GrowthLabel) -> Self {
        Self {
            graph,
            label: Some(label),
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<LabeledCascade>,
    pub val: Vec<LabeledCascade>,
    pub test: Vec<LabeledCascade>,
}

/// One broken invariant of a [`CascadeGraph`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveWindow(f64),
    EmptyNodeId { position: usize },
    DuplicateNode(NodeId),
    NoOrigin,
    MultipleOrigins(Vec<NodeId>),
    TimeOutOfWindow { node: NodeId, time: f64 },
    UnknownEndpoint { edge: (NodeId, NodeId), missing: NodeId },
    EdgeAgainstTime { edge: (NodeId, NodeId), src_time: f64, dst_time: f64 },
    SelfLoop(NodeId),
    DuplicateEdge(NodeId, NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveWindow(w) => write!(f, "non-positive window_t {w}"),
            Violation::EmptyNodeId { position } => write!(f, "empty node id at position {position}"),
            Violation::DuplicateNode(id) => write!(f, "duplicate node {id}"),
            Violation::NoOrigin => write!(f, "no origin (no node at time 0)"),
            Violation::MultipleOrigins(ids) => {
                let ids: Vec<&str> = ids.iter().map(NodeId::as_str).collect();
                write!(f, "multiple origins: {}", ids.join(", "))
            }
            Violation::TimeOutOfWindow { node, time } => {
                write!(f, "node {node} time {time} outside [0, window_t]")
            }
            Violation::UnknownEndpoint { edge, missing } => {
                write!(f, "edge ({}, {}) names unknown node {missing}", edge.0, edge.1)
            }
            Violation::EdgeAgainstTime {
                edge,
                src_time,
                dst_time,
            } => write!(
                f,
                "edge against time order: ({}, {}) goes from t={src_time} to t={dst_time}",
                edge.0, edge.1
            ),
            Violation::SelfLoop(id) => write!(f, "self-loop on {id}"),
            Violation::DuplicateEdge(a, b) => write!(f, "duplicate edge ({a}, {b})"),
        }
    }
}

/// Checks every structural invariant and names each violation found.
/// An empty result means the graph is valid.
pub fn validate_cascade(graph: &CascadeGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(graph.window_t > 0.0) || !graph.window_t.is_finite() {
        out.push(Violation::NonPositiveWindow(graph.window_t));
    }
    let mut times: HashMap<&NodeId, f64> = HashMap::with_capacity(graph.nodes.len());
    let mut origins = Vec::new();
    for (position, node) in graph.nodes.iter().enumerate() {
        if node.id.0.is_empty() {
            out.push(Violation::EmptyNodeId { position });
        }
        if times.insert(&node.id, node.time).is_some() {
            out.push(Violation::DuplicateNode(node.id.clone()));
        }
        if node.time == 0.0 {
            origins.push(node.id.clone());
        }
        if !(node.time >= 0.0 && node.time <= graph.window_t) {
            out.push(Violation::TimeOutOfWindow {
                node: node.id.clone(),
                time: node.time,
            });
        }
    }
    match origins.len() {
        0 => out.push(Violation::NoOrigin),
        1 => {}
        _ => out.push(Violation::MultipleOrigins(origins)),
    }
    let mut seen = HashSet::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let pair = (e.src.clone(), e.dst.clone());
        if e.src == e.dst {
            out.push(Violation::SelfLoop(e.src.clone()));
        }
        if !seen.insert((&e.src, &e.dst)) {
            out.push(Violation::DuplicateEdge(e.src.clone(), e.dst.clone()));
        }
        let (src_t, dst_t) = (times.get(&e.src), times.get(&e.dst));
        for (id, t) in [(&e.src, src_t), (&e.dst, dst_t)] {
            if t.is_none() {
                out.push(Violation::UnknownEndpoint {
                    edge: pair.clone(),
                    missing: id.clone(),
                });
            }
        }
        if let (Some(&a), Some(&b)) = (src_t, dst_t) {
            if a > b {
                out.push(Violation::EdgeAgainstTime {
                    edge: pair,
                    src_time: a,
                    dst_time: b,
                });
            }
        }
    }
    out
}

/// Validates, returning the first violation as an error.
pub fn ensure_valid(graph: &CascadeGraph) -> Result<(), CascadeError> {
    match validate_cascade(graph).into_iter().next() {
        None => Ok(()),
        Some(violation) => Err(CascadeError::Invalid {
            cascade_id: graph.cascade_id.clone(),
            violation,
        }),
    }
}

/// `a_in[v][u] = 1` iff edge `(u, v)`; `a_out[v][u] = 1` iff edge `(v, u)`.
/// Rows and columns follow `node_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyPair {
    pub a_in: Tensor,
    pub a_out: Tensor,
    pub node_order: Vec<NodeId>,
}

impl CascadeGraph {
    /// Maps every node id to its row index.
    pub fn index(&self) -> HashMap<&NodeId, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect()
    }

    /// Edges as `(src_index, dst_index)`. Edges naming unknown nodes are
    /// skipped; validate first.
    pub fn index_edges(&self) -> Vec<(usize, usize)> {
        let index = self.index();
        self.edges
            .iter()
            .filter_map(|e| Some((*index.get(&e.src)?, *index.get(&e.dst)?)))
            .collect()
    }
}

/// Dense `(a_in, a_out)` for `n` nodes and index edges.
pub fn dense_adjacency(n: usize, edges: &[(usize, usize)]) -> (Tensor, Tensor) {
    let mut a_in = Tensor::zeros(n, n);
    let mut a_out = Tensor::zeros(n, n);
    for &(u, v) in edges {
        a_in.set(v, u, 1.0);
        a_out.set(u, v, 1.0);
    }
    (a_in, a_out)
}

pub fn build_adjacency(graph: &CascadeGraph) -> Result<AdjacencyPair, CascadeError> {
    ensure_valid(graph)?;
    let (a_in, a_out) = dense_adjacency(graph.nodes.len(), &graph.index_edges());
    Ok(AdjacencyPair {
        a_in,
        a_out,
        node_order: graph.nodes.iter().map(|n| n.id.clone()).collect(),
    })
}

/// Counts events in `(t, t + delta_t]`. An event exactly at `t` is observed,
/// one exactly at `t + delta_t` is growth.
pub fn growth_label(event_times: &[f64], t: f64, delta_t: f64) -> Result<GrowthLabel, CascadeError> {
    if !(t > 0.0) {
        return Err(CascadeError::Parameter(format!("observation window t={t} must be > 0")));
    }
    if !(delta_t > 0.0) {
        return Err(CascadeError::Parameter(format!("horizon delta_t={delta_t} must be > 0")));
    }
    let end = t + delta_t;
    let n = event_times.iter().filter(|&&x| x > t && x <= end).count();
    Ok(GrowthLabel(n as u64))
}

/// Keeps cascades with strictly more than `min_nodes` observed nodes.
pub fn filter_by_size(cascades: &[LabeledCascade], min_nodes: usize) -> Vec<LabeledCascade> {
    cascades
        .iter()
        .filter(|c| c.node_count() > min_nodes)
        .cloned()
        .collect()
}

pub const DEFAULT_SPLIT_RATIOS: (f64, f64, f64) = (5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0);

/// Seeded shuffle, then cut into train/val/test. Train and validation sizes
/// are `round(n * ratio)`; the test split takes the remainder.
pub fn split_dataset(
    cascades: &[LabeledCascade],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit, CascadeError> {
    let (r_train, r_val, r_test) = ratios;
    if [r_train, r_val, r_test].iter().any(|r| !(*r > 0.0)) {
        return Err(CascadeError::Parameter(format!("split ratios must be positive: {ratios:?}")));
    }
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(CascadeError::Parameter(format!("split ratios must sum to 1: {ratios:?}")));
    }
    let mut ids = HashSet::with_capacity(cascades.len());
    for c in cascades {
        if !ids.insert(c.graph.cascade_id.as_str()) {
            return Err(CascadeError::Parameter(format!(
                "duplicate cascade_id {}",
                c.graph.cascade_id
            )));
        }
    }
    let n = cascades.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (((n as f64) * r_train).round() as usize).min(n);
    let n_val = (((n as f64) * r_val).round() as usize).min(n - n_train);
    let take = |range: std::ops::Range<usize>| -> Vec<LabeledCascade> {
        order[range].iter().map(|&i| cascades[i].clone()).collect()
    };
    Ok(DatasetSplit {
        train: take(0..n_train),
        val: take(n_train..n_train + n_val),
        test: take(n_train + n_val..n),
    })
}
