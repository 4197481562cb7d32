//! Cascade-core and ingest invariants on random inputs.

mod common;

use std::collections::{HashMap, HashSet};

use casgcn_core::baselines::extract_features;
use casgcn_core::cascade::{build_adjacency, filter_by_size, growth_label, split_dataset, validate_cascade, DEFAULT_SPLIT_RATIOS};
use casgcn_core::ingest::{build_citation_cascade, parse_weibo_cascade, CitationRecord, WeiboRecord};
use casgcn_core::synth::{generate_dataset, GenConfig};
use casgcn_core::NodeId;
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn user(i: usize) -> NodeId {
    NodeId(format!("u{i}"))
}

/// A consistent retweet history: each user retweets once, chains name
/// earlier retweeters nearest hop first, and records arrive shuffled.
fn random_records(r: &mut impl Rng, count: usize) -> Vec<WeiboRecord> {
    let mut out: Vec<WeiboRecord> = Vec::new();
    for i in 0..count {
        let mut chain = Vec::new();
        if !out.is_empty() && r.random_bool(0.6) {
            let via = &out[r.random_range(0..out.len())];
            chain.push(via.author.clone());
            chain.extend(via.chain.iter().cloned());
        }
        out.push(WeiboRecord {
            author: user(i + 1),
            timestamp: 10.0 * (i + 1) as f64 + r.random_range(0.0..5.0),
            chain,
        });
    }
    out.shuffle(r);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn in_adjacency_is_out_adjacency_transposed(seed in any::<u64>(), n in 1usize..15) {
        let g = random_cascade(&mut rng(seed), n, "a");
        let adj = build_adjacency(&g).unwrap();
        prop_assert_eq!(adj.a_in, adj.a_out.transpose());
    }

    #[test]
    fn growth_label_grows_with_horizon(times in prop::collection::vec(0.0f64..1e5, 0..40), t in 1.0f64..5e4, d1 in 1.0f64..5e4, extra in 0.0f64..5e4) {
        let short = growth_label(&times, t, d1).unwrap();
        let long = growth_label(&times, t, d1 + extra).unwrap();
        prop_assert!(long.0 >= short.0);
    }

    #[test]
    fn thresholds_nest(seed in any::<u64>(), m1 in 0usize..10, gap in 0usize..10) {
        let data = generate_dataset(&GenConfig { base_rate: 1.2, ..GenConfig::default() }, 80, seed).unwrap();
        let loose = filter_by_size(&data, m1);
        let strict = filter_by_size(&data, m1 + gap);
        prop_assert!(strict.iter().all(|c| loose.contains(c)));
    }

    #[test]
    fn split_partitions_the_input(seed in any::<u64>(), n in 0usize..60) {
        let data = generate_dataset(&GenConfig::default(), n, seed).unwrap();
        let s = split_dataset(&data, DEFAULT_SPLIT_RATIOS, seed).unwrap();
        let ids = |v: &[casgcn_core::LabeledCascade]| -> HashSet<String> {
            v.iter().map(|c| c.graph.cascade_id.clone()).collect()
        };
        let (a, b, c) = (ids(&s.train), ids(&s.val), ids(&s.test));
        prop_assert_eq!(a.len() + b.len() + c.len(), n);
        prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        let all: HashSet<String> = a.union(&b).chain(c.iter()).cloned().collect();
        prop_assert_eq!(all, ids(&data));
    }

    #[test]
    fn weibo_cascades_validate_with_forward_edges(seed in any::<u64>(), count in 0usize..25) {
        let records = random_records(&mut rng(seed), count);
        let origin = user(0);
        let c = parse_weibo_cascade("w", &origin, &records, 1e6).unwrap();
        prop_assert!(validate_cascade(&c.graph).is_empty(), "{:?}", validate_cascade(&c.graph));
        let time: HashMap<&NodeId, f64> = c.graph.nodes.iter().map(|n| (&n.id, n.time)).collect();
        for e in &c.graph.edges {
            prop_assert!(time[&e.src] <= time[&e.dst]);
        }
    }

    #[test]
    fn citation_edges_never_point_back_in_time(seed in any::<u64>(), papers in 1usize..30) {
        let mut r = rng(seed);
        let corpus: Vec<CitationRecord> = (0..papers)
            .map(|i| CitationRecord {
                paper: NodeId(format!("p{i}")),
                year: 1990 + (i as i32) / 3,
                references: (0..i).filter(|_| r.random_bool(0.3)).map(|j| NodeId(format!("p{j}"))).collect(),
            })
            .collect();
        let year: HashMap<&NodeId, i32> = corpus.iter().map(|p| (&p.paper, p.year)).collect();
        for target in corpus.iter().map(|p| &p.paper) {
            let c = build_citation_cascade(target, &corpus, 5, 15).unwrap();
            prop_assert!(validate_cascade(&c.graph).is_empty());
            for e in &c.graph.edges {
                prop_assert!(year[&e.src] <= year[&e.dst]);
            }
        }
    }

    #[test]
    fn feature_maxima_dominate_averages(seed in any::<u64>(), n in 1usize..20) {
        let f = extract_features(&random_cascade(&mut rng(seed), n, "f"));
        prop_assert!(f.max_degree >= f.avg_degree);
        prop_assert!(f.max_path_len >= f.avg_path_len);
        prop_assert!(f.max_gap >= f.avg_gap);
    }
}
