//! Run configuration files.
//!
//! The format is sectioned `key = value` text:
//!
//! ```text
//! # comment
//! include base.conf
//!
//! [train]
//! epochs = 40
//! learning_rate = 0.003
//!
//! [data]
//! path = data/synth.jsonl
//! ```
//!
//! Values are read as JSON when they parse as JSON (numbers, booleans,
//! quoted strings, arrays, objects) and as bare strings otherwise.
//! `include PATH` splices another file in place, resolved relative to the
//! including file; later assignments win. Unknown sections and keys are
//! errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::preprocess::{AugmentationConfig, NormalizationConfig};
use crate::rng::sha256_hex;
use crate::ssl::SslConfig;
use crate::training::TrainConfig;

const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    /// Seed of the stratified split and of label masking.
    pub seed: u64,
    /// Fraction of each class's training samples that keep their label.
    pub fraction: f64,
    /// Keep only the first `classes` classes of the file.
    pub classes: Option<usize>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            path: None,
            seed: 0,
            fraction: 1.0,
            classes: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub patience: usize,
    /// Seed of model initialization, shuffling and augmentation.
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            patience: d.patience,
            seed: d.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fsl,
    Ssl,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fsl => "fsl",
            Mode::Ssl => "ssl",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixSection {
    pub fractions: Vec<f64>,
    pub class_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    /// Cells run concurrently.
    pub workers: usize,
}

impl Default for MatrixSection {
    fn default() -> Self {
        MatrixSection {
            fractions: vec![0.01, 0.05, 0.10, 0.25, 0.50, 0.75],
            class_counts: vec![5, 20, 40, 60, 80, 100],
            seeds: vec![0, 1, 2],
            modes: vec![Mode::Fsl, Mode::Ssl],
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblateSection {
    pub mode: Mode,
}

impl Default for AblateSection {
    fn default() -> Self {
        AblateSection { mode: Mode::Ssl }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub augmentation: AugmentationConfig,
    pub normalization: NormalizationConfig,
    pub ssl: SslConfig,
    pub matrix: MatrixSection,
    pub ablate: AblateSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            seed: self.train.seed,
            patience: self.train.patience,
            augmentation: self.augmentation.clone(),
            normalization: self.normalization.clone(),
        }
    }

    /// Sets both the split seed and the training seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.data.seed = seed;
        self.train.seed = seed;
    }

    /// Checks everything that does not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if !(d.fraction > 0.0 && d.fraction <= 1.0) {
            return Err(Error::Config(format!(
                "data.fraction must be in (0, 1], got {}",
                d.fraction
            )));
        }
        if d.classes == Some(0) {
            return Err(Error::Config("data.classes must be at least 1".into()));
        }
        self.train_config().validate()?;
        self.ssl.validate()?;
        let m = &self.matrix;
        if m.fractions.is_empty() || m.class_counts.is_empty() || m.seeds.is_empty() || m.modes.is_empty() {
            return Err(Error::Config("matrix lists must be nonempty".into()));
        }
        if let Some(f) = m.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::Config(format!("matrix fraction {f} is outside (0, 1]")));
        }
        if m.class_counts.contains(&0) {
            return Err(Error::Config("matrix class counts must be at least 1".into()));
        }
        if m.workers == 0 {
            return Err(Error::Config("matrix.workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Model config for a dataset with `num_classes` classes.
    pub fn model_config(&self, num_classes: usize) -> Result<ModelConfig> {
        let mut m = self.model.clone();
        m.num_classes = num_classes;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Stable content hash of the resolved config.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().to_string().as_bytes())
    }
}

/// Raw `section → key → value` assignments, before typing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    sections: BTreeMap<String, Map<String, Value>>,
}

fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

impl RawConfig {
    pub fn parse_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut raw = RawConfig::default();
        raw.include(path.as_ref(), 0)?;
        Ok(raw)
    }

    /// Parses text with no file context; `include` resolves against the
    /// current directory.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        raw.merge_text(text, origin, Path::new("."), 0)?;
        Ok(raw)
    }

    fn include(&mut self, path: &Path, depth: usize) -> Result<()> {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(Error::Config(format!(
                "{}: includes nested deeper than {MAX_INCLUDE_DEPTH} (cycle?)",
                path.display()
            )));
        }
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        self.merge_text(&text, &path.display().to_string(), dir, depth)
    }

    fn merge_text(&mut self, text: &str, origin: &str, dir: &Path, depth: usize) -> Result<()> {
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            let at = |m: String| Error::Config(format!("{origin}:{}: {m}", i + 1));
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(format!("unterminated section header {line:?}")))?
                    .trim();
                if name.is_empty() {
                    return Err(at("empty section name".into()));
                }
                section = Some(name.to_string());
                continue;
            }
            if let Some(target) = line.strip_prefix("include ") {
                let target = target.trim().trim_matches('"');
                self.include(&dir.join(target), depth + 1)?;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got {line:?}")))?;
            let sec = section
                .as_ref()
                .ok_or_else(|| at(format!("assignment to {:?} outside a section", key.trim())))?;
            self.set(sec, key.trim(), parse_value(value.trim()));
        }
        Ok(())
    }

    fn set(&mut self, section: &str, key: &str, value: Value) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value);
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects section.key=value, got {spec:?}")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Usage(format!("--set key {path:?} needs a section prefix")))?;
        if section.is_empty() || key.is_empty() {
            return Err(Error::Usage(format!("--set key {path:?} is malformed")));
        }
        self.set(section, key, parse_value(value.trim()));
        Ok(())
    }

    pub fn contains(&self, section: &str, key: &str) -> bool {
        self.sections.get(section).map_or(false, |s| s.contains_key(key))
    }

    /// Types the assignments, filling defaults and rejecting unknown keys.
    pub fn resolve(&self) -> Result<RunConfig> {
        let object: Map<String, Value> = self
            .sections
            .iter()
            .map(|(k, v)| (k.clone(), Value::Object(v.clone())))
            .collect();
        let config: RunConfig = serde_json::from_value(Value::Object(object))
            .map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}
