//! Shared test helpers: random cascades and a plain-loop reference
//! implementation of the CasGCN forward pass that shares no code with the
//! library's tensor/tape machinery.

#![allow(dead_code)]

use casgcn_core::cascade::{CascadeGraph, Edge, Node, NodeId};
use casgcn_core::model::{CasGcn, Variant, Vocab};
use casgcn_core::ParamSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A valid cascade with `n` nodes: node 0 is the origin at t=0, every other
/// node gets a distinct later time and one parent among earlier nodes, plus
/// occasional extra forward-in-time edges.
pub fn random_cascade(rng: &mut impl Rng, n: usize, id: &str) -> CascadeGraph {
    let window = 100.0;
    let mut times: Vec<f64> = (1..n).map(|_| rng.random_range(1.0..window)).collect();
    times.sort_by(f64::total_cmp);
    times.insert(0, 0.0);
    let nodes: Vec<Node> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| Node {
            id: NodeId(format!("{id}-n{i}")),
            time: t,
        })
        .collect();
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
        if v >= 2 && rng.random_bool(0.3) {
            let u = rng.random_range(0..v);
            if !pairs.contains(&(u, v)) {
                pairs.push((u, v));
            }
        }
    }
    CascadeGraph {
        cascade_id: id.to_string(),
        window_t: window,
        nodes: nodes.clone(),
        edges: pairs
            .iter()
            .map(|&(u, v)| Edge {
                src: nodes[u].id.clone(),
                dst: nodes[v].id.clone(),
            })
            .collect(),
    }
}

/// Same cascade with nodes listed in order `perm` (new position i holds
/// old node `perm[i]`) and edges shuffled accordingly.
pub fn permuted(graph: &CascadeGraph, perm: &[usize]) -> CascadeGraph {
    let mut g = graph.clone();
    g.nodes = perm.iter().map(|&i| graph.nodes[i].clone()).collect();
    g.edges.reverse();
    g
}

pub fn random_perm(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

fn mat(params: &ParamSet, name: &str) -> Mat {
    let t = params.by_name(name).unwrap_or_else(|| panic!("missing {name}"));
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn matvec(m: &Mat, x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| {
            assert_eq!(row.len(), x.len());
            row.iter().zip(x).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One gated round, node by node.
pub fn ref_conv_step(params: &ParamSet, variant: Variant, h: &Mat, edges: &[(usize, usize)]) -> Mat {
    let n = h.len();
    let d = h.first().map_or(0, Vec::len);
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|v| edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect())
        .collect();
    let children: Vec<Vec<usize>> = (0..n)
        .map(|v| edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect())
        .collect();
    let pool = |list: &[usize], kind: Variant| -> Vec<f64> {
        let mut out = vec![0.0; d];
        if list.is_empty() {
            return out;
        }
        match kind {
            Variant::MaxPool => {
                for (c, o) in out.iter_mut().enumerate() {
                    *o = list.iter().map(|&u| h[u][c]).fold(f64::NEG_INFINITY, f64::max);
                }
            }
            _ => {
                for &u in list {
                    for c in 0..d {
                        out[c] += h[u][c];
                    }
                }
                if kind == Variant::MeanPool {
                    out.iter_mut().for_each(|o| *o /= list.len() as f64);
                }
            }
        }
        out
    };
    let (wr, ur) = (mat(params, "conv.w_r"), mat(params, "conv.u_r"));
    let (wz, uz) = (mat(params, "conv.w_z"), mat(params, "conv.u_z"));
    let (w, u) = (mat(params, "conv.w"), mat(params, "conv.u"));
    (0..n)
        .map(|v| {
            let hn: Vec<f64> = if variant == Variant::Undirected {
                let both: Vec<usize> = parents[v].iter().chain(&children[v]).copied().collect();
                pool(&both, Variant::Full)
            } else {
                let mut x = pool(&parents[v], variant);
                x.extend(pool(&children[v], variant));
                x
            };
            let hv = &h[v];
            let a = matvec(&wr, &hn);
            let b = matvec(&ur, hv);
            let r: Vec<f64> = (0..d).map(|i| sig(a[i] + b[i])).collect();
            let a = matvec(&wz, &hn);
            let b = matvec(&uz, hv);
            let z: Vec<f64> = (0..d).map(|i| sig(a[i] + b[i])).collect();
            let rh: Vec<f64> = (0..d).map(|i| r[i] * hv[i]).collect();
            let a = matvec(&w, &hn);
            let b = matvec(&u, &rh);
            (0..d)
                .map(|i| {
                    let cand = (a[i] + b[i]).tanh();
                    (1.0 - z[i]) * hv[i] + z[i] * cand
                })
                .collect()
        })
        .collect()
}

pub fn ref_readout(params: &ParamSet, variant: Variant, h: &Mat, times: &[f64]) -> Vec<f64> {
    let (wi, bi) = (mat(params, "readout.i.weight"), mat(params, "readout.i.bias"));
    let (wj, bj) = (mat(params, "readout.j.weight"), mat(params, "readout.j.bias"));
    let e = wi.len();
    let mut g = vec![0.0; e];
    for (v, hv) in h.iter().enumerate() {
        let mut u = hv.clone();
        if variant != Variant::NoTime {
            u.push(times[v]);
        }
        let i = matvec(&wi, &u);
        let j = matvec(&wj, &u);
        for k in 0..e {
            g[k] += sig(i[k] + bi[0][k]) * (j[k] + bj[0][k]).tanh();
        }
    }
    g.into_iter().map(|x| x.max(0.0)).collect()
}

pub fn ref_mlp(params: &ParamSet, g: &[f64]) -> f64 {
    let mut x = g.to_vec();
    let mut layer = 0;
    while let Some(w) = params.by_name(&format!("mlp.{layer}.weight")) {
        let w: Mat = (0..w.rows()).map(|r| w.row(r).to_vec()).collect();
        let b = mat(params, &format!("mlp.{layer}.bias"));
        x = matvec(&w, &x).iter().zip(&b[0]).map(|(a, b)| a + b).collect();
        layer += 1;
        if params.by_name(&format!("mlp.{layer}.weight")).is_some() {
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    assert_eq!(x.len(), 1);
    x[0]
}

pub fn ref_embed(params: &ParamSet, graph: &CascadeGraph, vocab: &Vocab) -> Mat {
    let table = mat(params, "embedding");
    graph.nodes.iter().map(|n| table[vocab.row(&n.id)].clone()).collect()
}

pub fn edge_indices(graph: &CascadeGraph) -> Vec<(usize, usize)> {
    let pos = |id: &NodeId| graph.nodes.iter().position(|n| &n.id == id).unwrap();
    graph.edges.iter().map(|e| (pos(&e.src), pos(&e.dst))).collect()
}

/// Straight-line forward pass: embed, k rounds, readout, MLP.
pub fn ref_predict(model: &CasGcn, graph: &CascadeGraph, vocab: &Vocab) -> f64 {
    let params = model.params();
    let variant = model.config().variant;
    let edges = edge_indices(graph);
    let mut h = ref_embed(params, graph, vocab);
    for _ in 0..model.config().iterations {
        h = ref_conv_step(params, variant, &h, &edges);
    }
    let times: Vec<f64> = graph.nodes.iter().map(|n| n.time / graph.window_t).collect();
    ref_mlp(params, &ref_readout(params, variant, &h, &times))
}

/// A vocabulary covering roughly half of the graph's node ids, so both
/// learned rows and the UNK row are exercised.
pub fn half_vocab(graph: &CascadeGraph) -> Vocab {
    Vocab::from_ids(graph.nodes.iter().step_by(2).map(|n| n.id.clone()).collect())
}
