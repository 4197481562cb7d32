use std::fs;
use std::path::{Path, PathBuf};

use casgcn_core::cascade::{filter_by_size, split_dataset, DatasetSplit, LabeledCascade, NodeId, DEFAULT_SPLIT_RATIOS};
use casgcn_core::experiment::{self, ExperimentError};
use casgcn_core::ingest::{self, IngestError};
use casgcn_core::model::{CasGcn, ModelConfig, ModelError, Vocab};
use casgcn_core::synth::generate_dataset;
use casgcn_core::Variant;
use log::info;

use crate::config::{RunConfig, SplitName};
use crate::{CliError, Command};

const DATASET_FILE: &str = "dataset.jsonl";
const CHECKPOINT_FILE: &str = "model.ckpt";
const MODEL_CONFIG_FILE: &str = "model.toml";
const VOCAB_FILE: &str = "vocab.txt";
const HISTORY_FILE: &str = "history.tsv";

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(m) => m.into(),
            ExperimentError::Train(_) | ExperimentError::Baseline(_) => {
                CliError::Model(e.to_string())
            }
            ExperimentError::Metric(_) => CliError::Data(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn require_path<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    let path = path
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("{key} is required for this command")))?;
    if !path.exists() {
        return Err(CliError::Config(format!("{key}: {} does not exist", path.display())));
    }
    Ok(path)
}

/// Runs one command. Inputs are checked before the output directory is
/// created, so a bad config leaves nothing behind.
pub fn run(command: Command, config: &RunConfig) -> Result<(), CliError> {
    check_inputs(command, config)?;
    let dir = config.run_dir();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let manifest = format!("# command: {}\n{}", command.name(), config.to_toml());
    info!("resolved config:\n{manifest}");
    write_file(&dir.join(format!("{}.manifest.toml", command.name())), &manifest)?;
    match command {
        Command::Synth => synth(config, &dir),
        Command::IngestWeibo => ingest_weibo(config, &dir),
        Command::IngestCitations => ingest_citations(config, &dir),
        Command::Train => train(config, &dir),
        Command::Evaluate => evaluate(config, &dir),
        Command::Ablate => ablate(config, &dir),
        Command::Compare => compare(config, &dir),
    }
}

fn check_inputs(command: Command, config: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Synth => Ok(()),
        Command::IngestWeibo => require_path(&config.weibo.source, "weibo.source").map(drop),
        Command::IngestCitations => require_path(&config.citations.source, "citations.source").map(drop),
        Command::Train | Command::Ablate | Command::Compare => require_path(&config.data.dataset, "data.dataset").map(drop),
        Command::Evaluate => {
            require_path(&config.data.dataset, "data.dataset")?;
            let dir = model_dir(config);
            for file in [CHECKPOINT_FILE, MODEL_CONFIG_FILE, VOCAB_FILE] {
                if !dir.join(file).exists() {
                    return Err(CliError::Config(format!(
                        "no trained model in {} (missing {file}); run `train` first",
                        dir.display()
                    )));
                }
            }
            Ok(())
        }
    }
}

fn model_dir(config: &RunConfig) -> PathBuf {
    config.evaluate.model_dir.clone().unwrap_or_else(|| config.run_dir())
}

fn dataset_summary(cascades: &[LabeledCascade]) -> String {
    let nodes: usize = cascades.iter().map(LabeledCascade::node_count).sum();
    let growth: u64 = cascades.iter().filter_map(|c| c.label.map(|l| l.0)).sum();
    let n = cascades.len().max(1) as f64;
    format!(
        "cascades\tmean_nodes\tmean_growth\n{}\t{}\t{}\n",
        cascades.len(),
        nodes as f64 / n,
        growth as f64 / n
    )
}

fn write_dataset(cascades: &[LabeledCascade], dir: &Path) -> Result<(), CliError> {
    let path = dir.join(DATASET_FILE);
    ingest::write_cascades(cascades, &path)?;
    info!("wrote {} cascades to {}", cascades.len(), path.display());
    write_file(&dir.join("dataset_stats.tsv"), &dataset_summary(cascades))
}

fn synth(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let s = &config.synth;
    let cascades =
        generate_dataset(&s.generator, s.count, s.seed).map_err(|e| CliError::Config(e.to_string()))?;
    write_dataset(&cascades, dir)
}

fn ingest_weibo(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let w = &config.weibo;
    let source = require_path(&w.source, "weibo.source")?;
    let mut files: Vec<PathBuf> = if source.is_dir() {
        fs::read_dir(source)
            .map_err(io_err(source))?
            .map(|e| e.map(|e| e.path()).map_err(io_err(source)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|p| p.is_file())
            .collect()
    } else {
        vec![source.to_path_buf()]
    };
    files.sort();
    let mut cascades = Vec::with_capacity(files.len());
    for file in &files {
        let id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (origin, records) = ingest::read_weibo_source(file)?;
        let cascade = ingest::build_weibo_cascade(&id, &origin, &records, w.window_t, w.delta_t)
            .map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
        cascades.push(cascade);
    }
    write_dataset(&cascades, dir)
}

fn ingest_citations(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let c = &config.citations;
    let source = require_path(&c.source, "citations.source")?;
    let records = ingest::read_citation_source(source)?;
    let corpus = ingest::CitationCorpus::new(&records);
    let targets: Vec<NodeId> = if c.targets.is_empty() {
        corpus.papers().map(|r| r.paper.clone()).collect()
    } else {
        c.targets.iter().map(|t| NodeId::from(t.as_str())).collect()
    };
    let cascades = targets
        .iter()
        .map(|t| corpus.cascade(t, c.t_years, c.delta_t_years))
        .collect::<Result<Vec<_>, _>>()?;
    write_dataset(&cascades, dir)
}

fn load_split(config: &RunConfig) -> Result<DatasetSplit, CliError> {
    let path = require_path(&config.data.dataset, "data.dataset")?;
    let all = ingest::read_cascades(path)?;
    if let Some(c) = all.iter().find(|c| c.label.is_none()) {
        return Err(CliError::Data(format!("cascade {} has no growth label", c.graph.cascade_id)));
    }
    let kept = filter_by_size(&all, config.data.min_nodes);
    info!(
        "{} of {} cascades have more than {} nodes",
        kept.len(),
        all.len(),
        config.data.min_nodes
    );
    let split = split_dataset(&kept, DEFAULT_SPLIT_RATIOS, config.data.split_seed)
        .map_err(|e| CliError::Data(e.to_string()))?;
    if split.train.is_empty() {
        return Err(CliError::Data("training split is empty".into()));
    }
    Ok(split)
}

fn train(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let split = load_split(config)?;
    let e = &config.experiment;
    let fitted = experiment::fit_casgcn(&split.train, &split.val, &e.model, &e.train, e.vocab_min_count)?;
    fitted.model.save(&dir.join(CHECKPOINT_FILE))?;
    fitted.vocab.write(&dir.join(VOCAB_FILE))?;
    let model_config = toml::to_string(fitted.model.config()).expect("model config serializes");
    write_file(&dir.join(MODEL_CONFIG_FILE), &model_config)?;
    let history = dir.join(HISTORY_FILE);
    fitted
        .outcome
        .write_history(&history)
        .map_err(|err| CliError::Io(err.to_string()))?;
    info!(
        "best epoch {} of {}{}",
        fitted.outcome.best_epoch,
        fitted.outcome.history.len() - 1,
        if fitted.outcome.stopped_early { " (stopped early)" } else { "" }
    );
    Ok(())
}

fn evaluate(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let model_dir = model_dir(config);
    let model_config_path = model_dir.join(MODEL_CONFIG_FILE);
    let text = fs::read_to_string(&model_config_path).map_err(io_err(&model_config_path))?;
    let model_config: ModelConfig = toml::from_str(&text)
        .map_err(|e| CliError::Model(format!("{}: {e}", model_config_path.display())))?;
    let model = CasGcn::load(model_config, &model_dir.join(CHECKPOINT_FILE))?;
    let vocab = Vocab::read(&model_dir.join(VOCAB_FILE))?;
    let split = load_split(config)?;
    let name = config.evaluate.split;
    let cascades = match name {
        SplitName::Train => &split.train,
        SplitName::Val => &split.val,
        SplitName::Test => &split.test,
    };
    let report = experiment::evaluate_casgcn(&model, &vocab, cascades)?;
    let summary = format!("split\tn\tmsle\n{}\t{}\t{}\n", name.as_str(), report.n, report.msle);
    print!("{summary}");
    write_file(&dir.join(format!("eval_{}.tsv", name.as_str())), &summary)?;
    let mut per = String::from("cascade_id\tsle\n");
    for (c, sle) in cascades.iter().zip(&report.per_cascade_sle) {
        per.push_str(&format!("{}\t{sle}\n", c.graph.cascade_id));
    }
    write_file(&dir.join(format!("eval_{}_per_cascade.tsv", name.as_str())), &per)
}

fn dataset_label(config: &RunConfig) -> String {
    config
        .data
        .dataset
        .as_deref()
        .and_then(Path::file_stem)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.name.clone())
}

fn ablate(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let split = load_split(config)?;
    let rows = experiment::ablate(&split, &config.experiment)?;
    let table = experiment::score_table(&dataset_label(config), &rows, Variant::Full.label())?;
    print!("{table}");
    write_file(&dir.join("ablation.tsv"), &table)
}

fn compare(config: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let split = load_split(config)?;
    let rows = experiment::compare_models(&split, &config.experiment)?;
    let table = experiment::score_table(&dataset_label(config), &rows, Variant::Full.label())?;
    print!("{table}");
    write_file(&dir.join("comparison.tsv"), &table)
}
