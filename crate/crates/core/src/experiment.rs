//! End-to-end fitting of CasGCN and the baselines on a dataset split, and
//! the comparison tables built from them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    self, feature_matrix, BaselineError, BaselineModel, DeepConfig, DeepRegressor, LinearModel,
    DEFAULT_RIDGE_LAMBDA,
};
use crate::cascade::{DatasetSplit, LabeledCascade};
use crate::metrics::{compare_significance, msle, significance_stars, EvalReport, MetricError};
use crate::model::{prepare_examples, CasGcn, ModelConfig, ModelError, Variant, Vocab};
use crate::train::{self, TrainConfig, TrainError, TrainOutcome};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub deep: DeepConfig,
    /// Training budget for Feature-deep; defaults to `train` when absent.
    pub deep_train: Option<TrainConfig>,
    pub ridge_lambda: f64,
    /// Node ids seen in fewer training cascades map to the UNK row.
    pub vocab_min_count: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            deep: DeepConfig::default(),
            deep_train: None,
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            vocab_min_count: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedCasGcn {
    pub model: CasGcn,
    pub vocab: Vocab,
    pub outcome: TrainOutcome,
}

/// Builds the vocabulary from `train_set`, initializes from
/// `train_config.seed` and trains with early stopping on `val`.
pub fn fit_casgcn(
    train_set: &[LabeledCascade],
    val: &[LabeledCascade],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    vocab_min_count: usize,
) -> Result<FittedCasGcn, ExperimentError> {
    let vocab = Vocab::build(train_set, vocab_min_count);
    let config = ModelConfig {
        vocab_size: vocab.len(),
        ..model_config.clone()
    };
    let mut model = CasGcn::new(config, train_config.seed)?;
    let train_examples = prepare_examples(train_set, &vocab)?;
    let val_examples = prepare_examples(val, &vocab)?;
    let outcome = train::train(&mut model, &train_examples, &val_examples, train_config)?;
    Ok(FittedCasGcn {
        model,
        vocab,
        outcome,
    })
}

pub fn evaluate_casgcn(
    model: &CasGcn,
    vocab: &Vocab,
    cascades: &[LabeledCascade],
) -> Result<EvalReport, ExperimentError> {
    let examples = prepare_examples(cascades, vocab)?;
    Ok(train::evaluate(model, &examples)?)
}

pub fn fit_linear_baseline(
    train_set: &[LabeledCascade],
    ridge_lambda: f64,
) -> Result<LinearModel, ExperimentError> {
    let (x, y) = feature_matrix(train_set)?;
    Ok(baselines::fit_linear(&x, &y, ridge_lambda)?)
}

pub fn fit_deep_baseline(
    train_set: &[LabeledCascade],
    val: &[LabeledCascade],
    config: &DeepConfig,
    train_config: &TrainConfig,
) -> Result<(DeepRegressor, TrainOutcome), ExperimentError> {
    let (x, y) = feature_matrix(train_set)?;
    let (vx, vy) = feature_matrix(val)?;
    Ok(baselines::fit_deep(&x, &y, &vx, &vy, config, train_config)?)
}

pub fn evaluate_baseline(
    model: &BaselineModel,
    cascades: &[LabeledCascade],
) -> Result<EvalReport, ExperimentError> {
    let (x, _) = feature_matrix(cascades)?;
    let mut predicted = Vec::with_capacity(x.len());
    for row in &x {
        let y = match model {
            BaselineModel::Linear(m) => m.predict(row),
            BaselineModel::Deep(m) => m.predict(row).map_err(BaselineError::from)?,
        };
        predicted.push(y.exp_m1().max(0.0));
    }
    let actual: Vec<f64> = cascades
        .iter()
        .map(|c| c.label.map_or(0.0, |l| l.0 as f64))
        .collect();
    Ok(msle(&predicted, &actual)?)
}

/// Validation and test scores of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelScore {
    pub name: String,
    pub val: EvalReport,
    pub test: EvalReport,
}

pub const LINEAR_NAME: &str = "Feature-linear";
pub const DEEP_NAME: &str = "Feature-deep";

/// Feature-linear, Feature-deep and CasGCN (in that order) on one split.
pub fn compare_models(split: &DatasetSplit, config: &ExperimentConfig) -> Result<Vec<ModelScore>, ExperimentError> {
    let linear = BaselineModel::Linear(fit_linear_baseline(&split.train, config.ridge_lambda)?);
    let deep_train = config.deep_train.as_ref().unwrap_or(&config.train);
    let (deep, _) = fit_deep_baseline(&split.train, &split.val, &config.deep, deep_train)?;
    let deep = BaselineModel::Deep(deep);
    let mut rows = Vec::new();
    for (name, m) in [(LINEAR_NAME, &linear), (DEEP_NAME, &deep)] {
        rows.push(ModelScore {
            name: name.into(),
            val: evaluate_baseline(m, &split.val)?,
            test: evaluate_baseline(m, &split.test)?,
        });
    }
    let model_config = ModelConfig {
        variant: Variant::Full,
        ..config.model.clone()
    };
    rows.push(score_casgcn(split, &model_config, config)?);
    Ok(rows)
}

/// Every model variant, full first, on one split.
pub fn ablate(split: &DatasetSplit, config: &ExperimentConfig) -> Result<Vec<ModelScore>, ExperimentError> {
    Variant::ALL
        .iter()
        .map(|&variant| {
            let model_config = ModelConfig {
                variant,
                ..config.model.clone()
            };
            score_casgcn(split, &model_config, config)
        })
        .collect()
}

fn score_casgcn(
    split: &DatasetSplit,
    model_config: &ModelConfig,
    config: &ExperimentConfig,
) -> Result<ModelScore, ExperimentError> {
    let fitted = fit_casgcn(
        &split.train,
        &split.val,
        model_config,
        &config.train,
        config.vocab_min_count,
    )?;
    Ok(ModelScore {
        name: model_config.variant.label().into(),
        val: evaluate_casgcn(&fitted.model, &fitted.vocab, &split.val)?,
        test: evaluate_casgcn(&fitted.model, &fitted.vocab, &split.test)?,
    })
}

/// Tab-separated table, one row per model, with a paired t-test of each
/// model's test SLE against the row named `reference`.
pub fn score_table(dataset: &str, rows: &[ModelScore], reference: &str) -> Result<String, ExperimentError> {
    let reference = rows.iter().find(|r| r.name == reference);
    let mut out = String::from("model\tdataset\tval_msle\ttest_msle\tp_value\tsignificance\n");
    for r in rows {
        let (p, stars) = match reference {
            Some(base) if base.name != r.name && r.test.n >= 2 => {
                let p = compare_significance(&r.test.per_cascade_sle, &base.test.per_cascade_sle)?;
                (p.to_string(), significance_stars(p))
            }
            _ => ("NA".to_string(), ""),
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.name, dataset, r.val.msle, r.test.msle, p, stars
        )
        .unwrap();
    }
    Ok(out)
}
