//! Pipeline configuration: one TOML file with a schema version, plus
//! `key=value` overrides addressed by dotted paths.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::{AttributionConfig, OutputFunction};
use crate::error::{Error, Result};
use crate::neural::{EncoderConfig, HeadSpec, LossConfig, TrainConfig};
use crate::weaklabel::LabelingConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Input and output locations. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// JSON Lines corpus.
    pub corpus: PathBuf,
    /// Taxonomy TOML; empty selects the bundled green-plastics scheme.
    pub taxonomy: PathBuf,
    /// Per-document labels written by `label`.
    pub labels: PathBuf,
    pub dataset_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub report_dir: PathBuf,
    /// Optional precomputed feature vectors replacing the toy encoder.
    pub embeddings: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "corpus.jsonl".into(),
            taxonomy: PathBuf::new(),
            labels: "out/labels.jsonl".into(),
            dataset_dir: "out/dataset".into(),
            checkpoint_dir: "out/model".into(),
            report_dir: "out/reports".into(),
            embeddings: PathBuf::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Probability at which a class is assigned.
    pub threshold: f64,
    /// Dataset split scored by `evaluate` and `curves`.
    pub split: String,
    /// Scope names (`whole`, `level<N>` or class codes); empty means the
    /// whole hierarchy, every level and every class.
    pub scopes: Vec<String>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            split: "test".into(),
            scopes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Riemann steps of integrated gradients.
    pub steps: usize,
    /// Class whose output is attributed.
    pub target_class: String,
    pub output: OutputFunction,
    /// Renderer name: html, ansi or csv.
    pub format: String,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        let a = AttributionConfig::default();
        Self {
            steps: a.steps,
            target_class: a.target_class,
            output: a.output,
            format: "html".into(),
        }
    }
}

impl ExplainConfig {
    pub fn attribution(&self) -> AttributionConfig {
        AttributionConfig {
            steps: self.steps,
            target_class: self.target_class.clone(),
            output: self.output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Seeds labeling, initialization, shuffling and dropout.
    pub seed: u64,
    pub paths: Paths,
    pub labeling: LabelingConfig,
    pub encoder: EncoderConfig,
    pub model: HeadSpec,
    pub training: TrainConfig,
    pub loss: LossConfig,
    pub evaluation: EvaluationConfig,
    pub explain: ExplainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 7,
            paths: Paths::default(),
            labeling: LabelingConfig::default(),
            encoder: EncoderConfig::default(),
            model: HeadSpec::default(),
            training: TrainConfig::default(),
            loss: LossConfig::default(),
            evaluation: EvaluationConfig::default(),
            explain: ExplainConfig::default(),
        }
    }
}

/// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{part}' in '{key}' is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_owned(), parse_value(value.trim()));
    Ok(())
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}

impl PipelineConfig {
    /// Parses TOML text, applies overrides, resolves relative paths against
    /// `base_dir` and validates.
    pub fn from_toml_str(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut root: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let mut cfg: Self = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.labeling.seed = cfg.seed;
        cfg.training.seed = cfg.seed;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path`, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                let text =
                    fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?;
                let base = p.parent().unwrap_or(Path::new(""));
                Self::from_toml_str(&text, overrides, base)
            }
            None => Self::from_toml_str("", overrides, Path::new("")),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        for path in [
            &mut p.corpus,
            &mut p.taxonomy,
            &mut p.labels,
            &mut p.dataset_dir,
            &mut p.checkpoint_dir,
            &mut p.report_dir,
            &mut p.embeddings,
        ] {
            if !path.as_os_str().is_empty() && path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.labeling.validate()?;
        self.encoder.validate()?;
        self.training.validate()?;
        if !(0.0..=1.0).contains(&self.evaluation.threshold) {
            return Err(Error::Config(
                "evaluation.threshold must be within [0, 1]".into(),
            ));
        }
        if !["train", "validation", "test"].contains(&self.evaluation.split.as_str()) {
            return Err(Error::Config(format!(
                "evaluation.split must be train, validation or test, got '{}'",
                self.evaluation.split
            )));
        }
        if self.explain.steps == 0 {
            return Err(Error::Config("explain.steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every key with its default value, in `key = value` form.
    pub fn default_keys() -> Vec<(String, String)> {
        let value = toml::Value::try_from(Self::default()).expect("config serializes");
        let mut out = Vec::new();
        flatten("", &value, &mut out);
        out
    }
}
