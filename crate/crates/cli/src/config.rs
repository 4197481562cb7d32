//! Run configuration: a TOML file with one section per concern, plus
//! `key.path=value` overrides from the command line.
//!
//! Unknown keys anywhere in the file are rejected. Relative paths are
//! resolved against the working directory.

use std::path::{Path, PathBuf};

use casgcn_core::experiment::ExperimentConfig;
use casgcn_core::synth::GenConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Run name; artifacts go to `<output_root>/<name>/`.
    pub name: String,
    #[serde(default = "default_output_root")]
    pub output_root: PathBuf,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub weibo: WeiboSection,
    #[serde(default)]
    pub citations: CitationSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub evaluate: EvaluateSection,
}

fn default_output_root() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub count: usize,
    pub seed: u64,
    pub generator: GenConfig,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            count: 1000,
            seed: 0,
            generator: GenConfig::default(),
        }
    }
}

/// One retweet source file per cascade, or a directory of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeiboSection {
    pub source: Option<PathBuf>,
    pub window_t: f64,
    pub delta_t: f64,
}

impl Default for WeiboSection {
    fn default() -> Self {
        Self {
            source: None,
            window_t: 3.0 * 3600.0,
            delta_t: 21.0 * 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CitationSection {
    pub source: Option<PathBuf>,
    pub t_years: u32,
    pub delta_t_years: u32,
    /// Target papers; every paper in the corpus when empty.
    pub targets: Vec<String>,
}

impl Default for CitationSection {
    fn default() -> Self {
        Self {
            source: None,
            t_years: 5,
            delta_t_years: 15,
            targets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Interchange file used by train/evaluate/ablate/compare.
    pub dataset: Option<PathBuf>,
    /// Keep cascades with strictly more observed nodes than this.
    pub min_nodes: usize,
    pub split_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Val,
    #[default]
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Directory holding a trained model; the run directory when absent.
    pub model_dir: Option<PathBuf>,
    pub split: SplitName,
}

impl RunConfig {
    pub fn run_dir(&self) -> PathBuf {
        self.output_root.join(&self.name)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let name_ok = !self.name.is_empty()
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && self.name != "."
            && self.name != "..";
        if !name_ok {
            return Err(CliError::Config(format!(
                "name {:?} must be non-empty and use only [A-Za-z0-9._-]",
                self.name
            )));
        }
        self.synth
            .generator
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.experiment
            .model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.experiment
            .train
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Reads `path`, applies `overrides` (`a.b.c=value`) and deserializes.
pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    from_str(&text, overrides)
}

pub fn from_str(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string().trim().to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Sets one dotted key. The value is read as a TOML literal and falls back
/// to a bare string, so `--set name=demo` and `--set train.epochs=5` both
/// work.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} is malformed")));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part} is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = from_str("name = \"x\"", &[]).unwrap();
        assert_eq!(c.run_dir(), PathBuf::from("runs/x"));
        assert_eq!(c.synth.count, 1000);
        assert_eq!(c.experiment.vocab_min_count, 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = from_str("name = \"x\"\n[synth]\ncuont = 3\n", &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("cuont")), "{err}");
        let err = from_str("name = \"x\"\nbogus = 1\n", &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn overrides_take_precedence() {
        let c = from_str(
            "name = \"x\"\n[synth]\ncount = 5\n",
            &[
                "synth.count=7".into(),
                "experiment.train.learning_rate=0.5".into(),
                "name=renamed".into(),
                "synth.generator.base_rate=0".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.synth.count, 7);
        assert_eq!(c.experiment.train.learning_rate, 0.5);
        assert_eq!(c.name, "renamed");
        assert_eq!(c.synth.generator.base_rate, 0.0);
    }

    #[test]
    fn override_type_errors_surface() {
        let err = from_str("name = \"x\"", &["synth.count=many".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(from_str("name = \"x\"", &["nokey".into()]).is_err());
    }

    #[test]
    fn bad_names_are_rejected() {
        assert!(from_str("name = \"../escape\"", &[]).is_err());
        assert!(from_str("name = \"\"", &[]).is_err());
    }

    #[test]
    fn serialized_config_round_trips() {
        let c = from_str("name = \"x\"\n[data]\nmin_nodes = 3\n", &["experiment.deep.hidden=[4]".into()]).unwrap();
        let again = from_str(&c.to_toml(), &[]).unwrap();
        assert_eq!(again, c);
    }
}
