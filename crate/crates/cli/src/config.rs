//! Pipeline configuration: one TOML file with a section per stage. Relative
//! paths in the file resolve against the file's directory.

use std::path::{Path, PathBuf};

use menet::corpus::InputFormat;
use menet::labels::LabelTask;
use menet::model::MenetConfig;
use menet::pipeline::{FeatureConfig, ViewKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw tweet records.
    pub input: Option<PathBuf>,
    pub workdir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            input: None,
            workdir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub format: InputFormat,
    /// `user_id<TAB>split` assignments; when absent users are split at
    /// random by the fractions below.
    pub split_file: Option<PathBuf>,
    /// `user_id<TAB>label` table overriding record labels.
    pub labels: Option<PathBuf>,
    pub train_fraction: f64,
    pub validation_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            format: InputFormat::Jsonl,
            split_file: None,
            labels: None,
            train_fraction: 0.8,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub task: LabelTask,
    /// Single-threaded, bitwise reproducible stochastic stages.
    pub deterministic: bool,
    /// Views to compute and train on.
    pub views: Vec<ViewKind>,
    pub paths: Paths,
    pub corpus: CorpusConfig,
    pub features: FeatureConfig,
    /// The model seed is always replaced by the top-level seed.
    pub model: MenetConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            task: LabelTask::default(),
            deterministic: false,
            views: ViewKind::ALL.to_vec(),
            paths: Paths::default(),
            corpus: CorpusConfig::default(),
            features: FeatureConfig::default(),
            model: MenetConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workdir: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub views: Option<Vec<ViewKind>>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative_to(dir);
        }
        Ok(cfg)
    }

    fn resolve_relative_to(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.paths.workdir);
        for p in [&mut self.paths.input, &mut self.corpus.split_file, &mut self.corpus.labels]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    /// Applies flag overrides, propagates the seed and normalizes the view
    /// list.
    pub fn finish(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(w) = &o.workdir {
            self.paths.workdir = w.clone();
        }
        if let Some(i) = &o.input {
            self.paths.input = Some(i.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        self.deterministic |= o.deterministic;
        if let Some(v) = &o.views {
            self.views = v.clone();
        }
        self.views.sort();
        self.views.dedup();
        if self.views.is_empty() {
            return Err(CliError::Config("no views selected".into()));
        }
        self.model.seed = self.seed;
        self.model.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn sections_and_overrides() {
        let cfg = PipelineConfig::from_toml(
            r#"
            seed = 3
            task = "region"
            views = ["timestamp", "tfidf"]
            [corpus]
            format = "geotext_tsv"
            [features]
            min_df = 2
            [features.node2vec]
            dim = 16
            [model]
            batch_size = 8
            "#,
        )
        .unwrap();
        assert_eq!(cfg.task, LabelTask::Region);
        assert_eq!(cfg.corpus.format, InputFormat::GeotextTsv);
        assert_eq!((cfg.features.min_df, cfg.features.node2vec.dim, cfg.model.batch_size), (2, 16, 8));
        let cfg = cfg
            .finish(&Overrides {
                seed: Some(9),
                ..Overrides::default()
            })
            .unwrap();
        assert_eq!((cfg.seed, cfg.model.seed), (9, 9));
        assert_eq!(cfg.views, vec![ViewKind::Tfidf, ViewKind::Timestamp]);
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_toml("[model]\nlearning_rat = 1.0").is_err());
        assert!(PipelineConfig::from_toml("views = [\"words\"]").is_err());
    }
}
