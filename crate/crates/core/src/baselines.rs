//! Hand-crafted cascade features and the two feature baselines: ridge
//! linear regression and a small feed-forward network. Both predict in the
//! same log space as CasGCN's default head.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Tape, Var};
use crate::cascade::{CascadeGraph, LabeledCascade};
use crate::model::Head;
use crate::params::{CheckpointError, ParamSet};
use crate::tensor::{Tensor, TensorError};
use crate::train::{self, Example, Regressor, TrainConfig, TrainError, TrainOutcome};

pub const LINEAR_KIND: &str = "feature-linear";
pub const DEEP_KIND: &str = "feature-deep";
pub const NUM_FEATURES: usize = 8;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no training rows")]
    Empty,
    #[error("row {row} has {got} features, expected {expected}")]
    Width { row: usize, got: usize, expected: usize },
    #[error("{x_rows} feature rows but {y_len} targets")]
    Length { x_rows: usize, y_len: usize },
    #[error("normal equations are singular; raise ridge_lambda above {lambda}")]
    Singular { lambda: f64 },
    #[error("cascade {0} has no growth label")]
    MissingLabel(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Which edge endpoints count toward a node's degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    #[default]
    Total,
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HandFeatures {
    pub leaf_count: usize,
    pub avg_degree: f64,
    pub max_degree: f64,
    pub avg_path_len: f64,
    pub max_path_len: f64,
    pub avg_elapsed: f64,
    pub avg_gap: f64,
    pub max_gap: f64,
}

impl HandFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.leaf_count as f64,
            self.avg_degree,
            self.max_degree,
            self.avg_path_len,
            self.max_path_len,
            self.avg_elapsed,
            self.avg_gap,
            self.max_gap,
        ]
    }
}

pub fn extract_features(graph: &CascadeGraph) -> HandFeatures {
    extract_features_with(graph, DegreeMode::Total)
}

/// Structural and temporal features of one cascade.
///
/// Path length is the directed hop distance from the origin; nodes the
/// origin cannot reach are left out of the path averages. Gaps are taken
/// between consecutive adoptions after sorting all nodes by time.
pub fn extract_features_with(graph: &CascadeGraph, mode: DegreeMode) -> HandFeatures {
    let n = graph.nodes.len();
    if n == 0 {
        return HandFeatures::default();
    }
    let edges = graph.index_edges();
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(u, v) in &edges {
        outdeg[u] += 1;
        indeg[v] += 1;
        children[u].push(v);
    }
    let degree = |v: usize| match mode {
        DegreeMode::Total => indeg[v] + outdeg[v],
        DegreeMode::In => indeg[v],
        DegreeMode::Out => outdeg[v],
    } as f64;
    let leaf_count = outdeg.iter().filter(|&&d| d == 0).count();
    let avg_degree = (0..n).map(degree).sum::<f64>() / n as f64;
    let max_degree = (0..n).map(degree).fold(0.0, f64::max);

    let origin = graph.nodes.iter().position(|nd| nd.time == 0.0);
    let (mut depth_sum, mut depth_max, mut reached) = (0usize, 0usize, 0usize);
    if let Some(o) = origin {
        let mut depth: HashMap<usize, usize> = HashMap::from([(o, 0)]);
        let mut queue = VecDeque::from([o]);
        while let Some(u) = queue.pop_front() {
            let d = depth[&u];
            depth_sum += d;
            depth_max = depth_max.max(d);
            reached += 1;
            for &v in &children[u] {
                depth.entry(v).or_insert_with(|| {
                    queue.push_back(v);
                    d + 1
                });
            }
        }
    }
    let avg_path_len = if reached > 1 { depth_sum as f64 / reached as f64 } else { 0.0 };

    let mut times: Vec<f64> = graph.nodes.iter().map(|nd| nd.time).collect();
    times.sort_by(f64::total_cmp);
    let non_root: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
    let avg_elapsed = mean(&non_root);
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();

    HandFeatures {
        leaf_count,
        avg_degree,
        max_degree,
        avg_path_len,
        max_path_len: depth_max as f64,
        avg_elapsed,
        avg_gap: mean(&gaps),
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Per-column centering and scaling. Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self, BaselineError> {
        let width = check_matrix(x)?;
        let n = x.len() as f64;
        let mut mean = vec![0.0; width];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; width];
        for row in x {
            for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut std {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect()
    }

    fn push_params(&self, p: &mut ParamSet) {
        p.push("standardizer.mean", Tensor::row_vector(&self.mean));
        p.push("standardizer.std", Tensor::row_vector(&self.std));
    }

    fn from_params(p: &ParamSet) -> Result<Self, CheckpointError> {
        Ok(Self {
            mean: required(p, "standardizer.mean")?.data().to_vec(),
            std: required(p, "standardizer.std")?.data().to_vec(),
        })
    }
}

fn required<'a>(p: &'a ParamSet, name: &str) -> Result<&'a Tensor, CheckpointError> {
    p.by_name(name).ok_or_else(|| CheckpointError::Mismatch {
        name: name.into(),
        message: "missing".into(),
    })
}

fn check_matrix(x: &[Vec<f64>]) -> Result<usize, BaselineError> {
    let width = x.first().ok_or(BaselineError::Empty)?.len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != width {
            return Err(BaselineError::Width {
                row,
                got: r.len(),
                expected: width,
            });
        }
    }
    Ok(width)
}

/// Ridge regression on standardized features. `weights` and `intercept`
/// act on standardized inputs, so `intercept` is the prediction at the
/// feature means.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub ridge_lambda: f64,
    pub standardizer: Standardizer,
}

impl LinearModel {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let z = self.standardizer.apply(features);
        self.intercept + z.iter().zip(&self.weights).map(|(z, w)| z * w).sum::<f64>()
    }

    /// Weights acting on unstandardized features.
    pub fn raw_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.standardizer.std)
            .map(|(w, s)| w / s)
            .collect()
    }

    pub fn raw_intercept(&self) -> f64 {
        self.intercept
            - self
                .raw_weights()
                .iter()
                .zip(&self.standardizer.mean)
                .map(|(w, m)| w * m)
                .sum::<f64>()
    }

    pub fn to_params(&self) -> ParamSet {
        let mut p = ParamSet::new();
        self.standardizer.push_params(&mut p);
        p.push("linear.weights", Tensor::row_vector(&self.weights));
        p.push("linear.intercept", Tensor::scalar(self.intercept));
        p.push("linear.ridge_lambda", Tensor::scalar(self.ridge_lambda));
        p
    }

    pub fn from_params(p: &ParamSet) -> Result<Self, CheckpointError> {
        Ok(Self {
            standardizer: Standardizer::from_params(p)?,
            weights: required(p, "linear.weights")?.data().to_vec(),
            intercept: required(p, "linear.intercept")?.data()[0],
            ridge_lambda: required(p, "linear.ridge_lambda")?.data()[0],
        })
    }
}

/// Minimizes `‖Zw + b − y‖² + λ‖w‖²` over standardized features `Z`.
pub fn fit_linear(x: &[Vec<f64>], y: &[f64], ridge_lambda: f64) -> Result<LinearModel, BaselineError> {
    let width = check_matrix(x)?;
    if x.len() != y.len() {
        return Err(BaselineError::Length {
            x_rows: x.len(),
            y_len: y.len(),
        });
    }
    let standardizer = Standardizer::fit(x)?;
    let n = x.len();
    let z = DMatrix::from_fn(n, width, |i, j| standardizer.apply(&x[i])[j]);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    // Centered columns decouple the intercept from the weights.
    let mut gram = z.transpose() * &z;
    for j in 0..width {
        gram[(j, j)] += ridge_lambda;
    }
    let rhs = z.transpose() * yc;
    let singular = || BaselineError::Singular { lambda: ridge_lambda };
    let weights = gram.cholesky().ok_or_else(singular)?.solve(&rhs);
    if !weights.iter().all(|w| w.is_finite()) {
        return Err(singular());
    }
    Ok(LinearModel {
        weights: weights.iter().copied().collect(),
        intercept: y_mean,
        ridge_lambda,
        standardizer,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeepConfig {
    pub hidden: Vec<usize>,
}

impl Default for DeepConfig {
    fn default() -> Self {
        Self { hidden: vec![16, 16] }
    }
}

/// Feed-forward regressor over standardized features, relu hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepRegressor {
    pub standardizer: Standardizer,
    params: ParamSet,
    layers: Vec<(usize, usize)>,
}

impl DeepRegressor {
    pub fn new(standardizer: Standardizer, config: &DeepConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        standardizer.push_params(&mut params);
        let mut layers = Vec::new();
        let mut width = standardizer.width();
        for (l, &h) in config.hidden.iter().chain(std::iter::once(&1)).enumerate() {
            let bound = 1.0 / (width as f64).sqrt();
            let w = params.push(format!("mlp.{l}.weight"), ParamSet::uniform(h, width, bound, &mut rng));
            let b = params.push(format!("mlp.{l}.bias"), ParamSet::uniform(1, h, bound, &mut rng));
            layers.push((w, b));
            width = h;
        }
        Self {
            standardizer,
            params,
            layers,
        }
    }

    pub fn from_params(params: ParamSet) -> Result<Self, CheckpointError> {
        let standardizer = Standardizer::from_params(&params)?;
        let mut layers = Vec::new();
        while let (Some(w), Some(b)) = (
            params.index_of(&format!("mlp.{}.weight", layers.len())),
            params.index_of(&format!("mlp.{}.bias", layers.len())),
        ) {
            layers.push((w, b));
        }
        if layers.is_empty() {
            return Err(CheckpointError::Mismatch {
                name: "mlp.0.weight".into(),
                message: "missing".into(),
            });
        }
        Ok(Self {
            standardizer,
            params,
            layers,
        })
    }

    pub fn to_params(&self) -> &ParamSet {
        &self.params
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64, TensorError> {
        self.predict_output(&features.to_vec())
    }
}

impl Regressor for DeepRegressor {
    type Input = Vec<f64>;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn head(&self) -> Head {
        Head::Log
    }

    fn forward(&self, tape: &mut Tape, input: &Vec<f64>) -> Result<Var, TensorError> {
        let mut x = tape.constant(Tensor::row_vector(&self.standardizer.apply(input)));
        let last = self.layers.len() - 1;
        for (l, &(w, b)) in self.layers.iter().enumerate() {
            let w = tape.param(w);
            let b = tape.param(b);
            let y = tape.matmul_t(x, w)?;
            x = tape.add(y, b)?;
            if l < last {
                x = tape.relu(x);
            }
        }
        Ok(x)
    }
}

fn growth_examples(x: &[Vec<f64>], y_log: &[f64]) -> Result<Vec<Example<Vec<f64>>>, BaselineError> {
    if x.len() != y_log.len() {
        return Err(BaselineError::Length {
            x_rows: x.len(),
            y_len: y_log.len(),
        });
    }
    Ok(x.iter()
        .zip(y_log)
        .map(|(row, y)| Example {
            input: row.clone(),
            growth: y.exp_m1(),
        })
        .collect())
}

/// Trains a [`DeepRegressor`] on log-growth targets. Initialization uses
/// `train_config.seed`.
pub fn fit_deep(
    x: &[Vec<f64>],
    y_log: &[f64],
    val_x: &[Vec<f64>],
    val_y_log: &[f64],
    config: &DeepConfig,
    train_config: &TrainConfig,
) -> Result<(DeepRegressor, TrainOutcome), BaselineError> {
    let width = check_matrix(x)?;
    if let Some(row) = val_x.iter().position(|r| r.len() != width) {
        return Err(BaselineError::Width {
            row,
            got: val_x[row].len(),
            expected: width,
        });
    }
    let train_set = growth_examples(x, y_log)?;
    let val = growth_examples(val_x, val_y_log)?;
    let mut model = DeepRegressor::new(Standardizer::fit(x)?, config, train_config.seed);
    let outcome = train::train(&mut model, &train_set, &val, train_config)?;
    Ok((model, outcome))
}

/// A fitted baseline of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    Linear(LinearModel),
    Deep(DeepRegressor),
}

impl BaselineModel {
    pub fn kind(&self) -> &'static str {
        match self {
            BaselineModel::Linear(_) => LINEAR_KIND,
            BaselineModel::Deep(_) => DEEP_KIND,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        match self {
            BaselineModel::Linear(m) => m.to_params().write_checkpoint(LINEAR_KIND, path)?,
            BaselineModel::Deep(m) => m.to_params().write_checkpoint(DEEP_KIND, path)?,
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        let (kind, params) = ParamSet::read_checkpoint(path)?;
        match kind.as_str() {
            LINEAR_KIND => Ok(BaselineModel::Linear(LinearModel::from_params(&params)?)),
            DEEP_KIND => Ok(BaselineModel::Deep(DeepRegressor::from_params(params)?)),
            _ => Err(CheckpointError::Kind {
                expected: format!("{LINEAR_KIND} or {DEEP_KIND}"),
                found: kind,
            }
            .into()),
        }
    }
}

/// Predicted log-growth `ŷ`; growth is `max(0, exp(ŷ) − 1)`.
pub fn predict_baseline(model: &BaselineModel, features: &HandFeatures) -> Result<f64, BaselineError> {
    let x = features.to_vec();
    Ok(match model {
        BaselineModel::Linear(m) => m.predict(&x),
        BaselineModel::Deep(m) => m.predict(&x)?,
    })
}

/// Feature rows and log-growth targets for labeled cascades.
pub fn feature_matrix(cascades: &[LabeledCascade]) -> Result<(Vec<Vec<f64>>, Vec<f64>), BaselineError> {
    let mut x = Vec::with_capacity(cascades.len());
    let mut y = Vec::with_capacity(cascades.len());
    for c in cascades {
        let label = c
            .label
            .ok_or_else(|| BaselineError::MissingLabel(c.graph.cascade_id.clone()))?;
        x.push(extract_features(&c.graph).to_vec());
        y.push((label.0 as f64).ln_1p());
    }
    Ok((x, y))
}
