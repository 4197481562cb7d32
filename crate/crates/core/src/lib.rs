//! Cascade growth prediction with bi-directional gated graph convolution.
//!
//! The crate covers the whole pipeline:
//!
//! - [`cascade`]: the cascade graph model, validation, labels and splits.
//! - [`ingest`]: the JSON-lines interchange format plus Weibo-style
//!   retweet chains and citation corpora.
//! - [`synth`]: a branching-process cascade generator.
//! - [`tensor`], [`params`], [`autodiff`]: dense tensors, named parameters
//!   and a reverse-mode tape.
//! - [`model`]: the CasGCN network and its ablation variants.
//! - [`baselines`]: hand-crafted features with linear and feed-forward
//!   regressors.
//! - [`train`], [`metrics`]: training loop, MSLE and significance testing.
//! - [`experiment`]: end-to-end fitting and comparison helpers.

pub mod autodiff;
pub mod baselines;
pub mod cascade;
pub mod experiment;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod params;
pub mod synth;
pub mod tensor;
pub mod train;

pub use autodiff::{grad_check, GradCheck, Tape, Var};
pub use cascade::{
    CascadeError, CascadeGraph, DatasetSplit, Edge, GrowthLabel, LabeledCascade, Node, NodeId,
};
pub use metrics::{compare_significance, msle, EvalReport};
pub use model::{CasGcn, Head, ModelConfig, Variant, Vocab};
pub use params::ParamSet;
pub use tensor::{Tensor, TensorError};
pub use train::{TrainConfig, TrainOutcome};
