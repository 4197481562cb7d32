//! Synthetic cascades from a timed branching process.
//!
//! Each arriving node `v` (the root arrives at `t = 0`) draws
//!
//! * a fresh influence `f ~ Pareto(x_m, influence_shape)` with `x_m` chosen
//!   so that `E[f] = 1`;
//! * a heritable base influence `b_v = f^(1 - direction_signal) * b_parent^direction_signal`
//!   (the root uses `b = f`), so influence keeps flowing down the adoption
//!   direction;
//! * a timing factor `m_v = exp(time_signal * (1 - 2 * min(t_v / window_t, 1)))`,
//!   so early adopters are more influential;
//! * `k ~ Poisson(base_rate * b_v * m_v)` children, each arriving after an
//!   `Exp(decay)` delay.
//!
//! Arrivals are processed in time order until the horizon
//! `window_t + delta_t` or `max_nodes` arrivals. Arrivals up to `window_t`
//! form the observed graph; arrivals in `(window_t, window_t + delta_t]`
//! are the growth label.
//!
//! Randomness: one `ChaCha8Rng` per cascade, seeded with `seed_from_u64`.
//! Draw order per processed node is `f`, `k`, then the `k` delays. Dataset
//! seeds are `splitmix64(seed + index * 0x9E3779B97F4A7C15)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Pareto, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{CascadeGraph, Edge, GrowthLabel, LabeledCascade, Node, NodeId, MIN_ADOPTION_TIME};

#[derive(Debug, Error, PartialEq)]
#[error("invalid generator config: {0}")]
pub struct GenConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    /// Expected children per unit of influence.
    pub base_rate: f64,
    /// Pareto tail exponent of fresh influence; must exceed 1.
    pub influence_shape: f64,
    /// Rate of the exponential child delay, per second.
    pub decay: f64,
    pub window_t: f64,
    pub delta_t: f64,
    /// Share of a node's base influence inherited from its parent.
    pub direction_signal: f64,
    /// Strength of the early-arrival influence boost.
    pub time_signal: f64,
    pub max_nodes: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            base_rate: 0.9,
            influence_shape: 2.5,
            decay: 1.0 / 7200.0,
            window_t: 10_800.0,
            delta_t: 75_600.0,
            direction_signal: 0.5,
            time_signal: 0.5,
            max_nodes: 300,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenConfigError> {
        let err = |m: &str| Err(GenConfigError(m.to_string()));
        if !(self.base_rate >= 0.0 && self.base_rate.is_finite()) {
            return err("base_rate must be finite and >= 0");
        }
        if !(self.influence_shape > 1.0 && self.influence_shape.is_finite()) {
            return err("influence_shape must be finite and > 1");
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return err("decay must be finite and > 0");
        }
        if !(self.window_t > 0.0 && self.window_t.is_finite()) {
            return err("window_t must be finite and > 0");
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return err("delta_t must be finite and > 0");
        }
        if !(0.0..=1.0).contains(&self.direction_signal) {
            return err("direction_signal must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.time_signal) {
            return err("time_signal must lie in [0, 1]");
        }
        if self.max_nodes < 1 {
            return err("max_nodes must be >= 1");
        }
        Ok(())
    }

    /// Pareto scale giving fresh influence unit mean.
    fn pareto_scale(&self) -> f64 {
        (self.influence_shape - 1.0) / self.influence_shape
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        (self.time_signal * (1.0 - 2.0 * (t / self.window_t).min(1.0))).exp()
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

#[derive(PartialEq)]
struct Pending {
    time: f64,
    seq: u64,
    parent: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, seq)
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One realized arrival of the branching process.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub parent: Option<usize>,
}

/// Runs the branching process and returns arrivals in time order.
pub fn simulate(config: &GenConfig, seed: u64) -> Result<Vec<Arrival>, GenConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pareto = Pareto::new(config.pareto_scale(), config.influence_shape)
        .map_err(|e| GenConfigError(e.to_string()))?;
    let delay = Exp::new(config.decay).map_err(|e| GenConfigError(e.to_string()))?;
    let horizon = config.window_t + config.delta_t;

    let mut arrivals: Vec<Arrival> = Vec::new();
    let mut base: Vec<f64> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Pending {
        time: 0.0,
        seq,
        parent: usize::MAX,
    });

    while let Some(p) = heap.pop() {
        if arrivals.len() >= config.max_nodes {
            break;
        }
        let v = arrivals.len();
        let parent = (p.parent != usize::MAX).then_some(p.parent);
        let fresh: f64 = pareto.sample(&mut rng);
        let b = match parent {
            None => fresh,
            Some(u) => {
                fresh.powf(1.0 - config.direction_signal) * base[u].powf(config.direction_signal)
            }
        };
        base.push(b);
        arrivals.push(Arrival {
            time: p.time,
            parent,
        });

        // clamp keeps Poisson sampling defined under extreme Pareto draws
        let mean = (config.base_rate * b * config.time_factor(p.time)).min(1e7);
        let children = if mean > 0.0 {
            let poisson = Poisson::new(mean).map_err(|e| GenConfigError(e.to_string()))?;
            (poisson.sample(&mut rng) as usize).min(config.max_nodes)
        } else {
            0
        };
        for _ in 0..children {
            let t = (p.time + delay.sample(&mut rng)).max(MIN_ADOPTION_TIME);
            if t <= horizon {
                seq += 1;
                heap.push(Pending {
                    time: t,
                    seq,
                    parent: v,
                });
            }
        }
    }
    Ok(arrivals)
}

/// Observed graph plus growth label from a realized arrival list.
pub fn cascade_from_arrivals(cascade_id: &str, config: &GenConfig, arrivals: &[Arrival]) -> LabeledCascade {
    let node_id = |i: usize| NodeId(format!("{cascade_id}/{i}"));
    let observed = arrivals.iter().take_while(|a| a.time <= config.window_t).count();
    let nodes = arrivals[..observed]
        .iter()
        .enumerate()
        .map(|(i, a)| Node {
            id: node_id(i),
            time: a.time,
        })
        .collect();
    let edges = arrivals[..observed]
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            a.parent.map(|p| Edge {
                src: node_id(p),
                dst: node_id(i),
            })
        })
        .collect();
    let horizon = config.window_t + config.delta_t;
    let growth = arrivals[observed..]
        .iter()
        .filter(|a| a.time > config.window_t && a.time <= horizon)
        .count();
    LabeledCascade::new(
        CascadeGraph {
            cascade_id: cascade_id.to_string(),
            window_t: config.window_t,
            nodes,
            edges,
        },
        GrowthLabel(growth as u64),
    )
}

pub fn generate_cascade(config: &GenConfig, seed: u64) -> Result<LabeledCascade, GenConfigError> {
    let arrivals = simulate(config, seed)?;
    Ok(cascade_from_arrivals(&format!("syn-{seed}"), config, &arrivals))
}

/// `n` cascades; cascade `i` uses `derive_seed(seed, i)` and is named
/// `syn-<seed>-<i>`.
pub fn generate_dataset(config: &GenConfig, n: usize, seed: u64) -> Result<Vec<LabeledCascade>, GenConfigError> {
    config.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let arrivals = simulate(config, derive_seed(seed, i as u64))?;
            Ok(cascade_from_arrivals(&format!("syn-{seed}-{i}"), config, &arrivals))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{filter_by_size, validate_cascade};

    #[test]
    fn zero_rate_gives_single_node() {
        let cfg = GenConfig {
            base_rate: 0.0,
            ..GenConfig::default()
        };
        let c = generate_cascade(&cfg, 7).unwrap();
        assert_eq!(c.graph.nodes.len(), 1);
        assert_eq!(c.label, Some(GrowthLabel(0)));
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = GenConfig::default();
        assert_eq!(generate_cascade(&cfg, 11).unwrap(), generate_cascade(&cfg, 11).unwrap());
        assert_eq!(
            generate_dataset(&cfg, 100, 3).unwrap(),
            generate_dataset(&cfg, 100, 3).unwrap()
        );
        assert!(generate_dataset(&cfg, 0, 3).unwrap().is_empty());
    }

    #[test]
    fn generated_cascades_validate() {
        let cfg = GenConfig {
            base_rate: 1.2,
            ..GenConfig::default()
        };
        for c in generate_dataset(&cfg, 200, 5).unwrap() {
            assert!(validate_cascade(&c.graph).is_empty(), "{}", c.graph.cascade_id);
            assert!(c.graph.nodes.iter().all(|n| n.time >= 0.0 && n.time <= cfg.window_t));
            assert!(c.graph.nodes.len() + c.label.unwrap().0 as usize <= cfg.max_nodes);
        }
    }

    #[test]
    fn cap_bounds_total_arrivals() {
        let cfg = GenConfig {
            base_rate: 3.0,
            max_nodes: 40,
            ..GenConfig::default()
        };
        let arrivals = simulate(&cfg, 1).unwrap();
        assert!(arrivals.len() <= 40);
        assert!(arrivals.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn retained_fraction_shrinks_with_threshold() {
        let cfg = GenConfig {
            base_rate: 1.1,
            ..GenConfig::default()
        };
        let data = generate_dataset(&cfg, 300, 9).unwrap();
        let sizes: Vec<usize> = [30, 60, 90].iter().map(|&m| filter_by_size(&data, m).len()).collect();
        assert!(sizes[0] >= sizes[1] && sizes[1] >= sizes[2], "{sizes:?}");
    }

    #[test]
    fn rejects_bad_config() {
        let bad = GenConfig {
            influence_shape: 1.0,
            ..GenConfig::default()
        };
        assert!(generate_cascade(&bad, 0).is_err());
        let bad = GenConfig {
            time_signal: 1.5,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
