//! TOML run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use infostat_core::bridging::default_determiners;
use infostat_core::nn::TrainConfig;
use infostat_core::spangen::{default_pruning_lexicon, parse_lexicon, SpanGenConfig};
use serde::{Deserialize, Serialize};

use crate::backend::BackendConfig;
use crate::error::{Error, Result};

/// JSON schema describing [`RunConfig`] files.
pub const RUN_CONFIG_SCHEMA: &str = include_str!("../data/run_config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    /// Canonical corpus used for training and cross-validation.
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanSettings {
    pub max_train_span_len: usize,
    pub max_seq_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pruning_lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determiners: Option<PathBuf>,
}

impl Default for SpanSettings {
    fn default() -> Self {
        SpanSettings {
            max_train_span_len: 10,
            max_seq_len: 128,
            pruning_lexicon: None,
            determiners: None,
        }
    }
}

/// Overrides on top of a task's default training configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl TrainSettings {
    pub fn resolve(&self, base: TrainConfig, max_seq_len: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs.unwrap_or(base.epochs),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            seed: self.seed.unwrap_or(base.seed),
            max_seq_len,
            max_steps: self.max_steps.or(base.max_steps),
        }
    }

    fn validate(&self, section: &str) -> Result<()> {
        if self.epochs == Some(0) {
            return Err(Error::config(format!("{section}.epochs"), "must be at least 1"));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::config(format!("{section}.learning_rate"), "must be positive"));
            }
        }
        if self.batch_size == Some(0) {
            return Err(Error::config(format!("{section}.batch_size"), "must be at least 1"));
        }
        if self.max_steps == Some(0) {
            return Err(Error::config(format!("{section}.max_steps"), "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Assign categories to the gold mentions.
    GoldMentions,
    /// Extract mentions, then assign categories to the predictions.
    #[default]
    E2e,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub folds: usize,
    pub fold_seed: u64,
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_max_len: Option<usize>,
    pub mode: Mode,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            folds: 10,
            fold_seed: 1,
            heuristic: false,
            test_max_len: None,
            mode: Mode::E2e,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusPaths,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub spans: SpanSettings,
    #[serde(default)]
    pub mention: TrainSettings,
    #[serde(default)]
    pub is: TrainSettings,
    #[serde(default)]
    pub eval: EvalSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn read_word_list(path: &Path) -> Result<BTreeSet<String>> {
    Ok(parse_lexicon(&crate::error::read_to_string(path)?))
}

impl RunConfig {
    /// A configuration with every default and the given training corpus.
    pub fn with_corpus(train: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            corpus: CorpusPaths {
                train: train.into(),
                test: None,
            },
            backend: BackendConfig::default(),
            spans: SpanSettings::default(),
            mention: TrainSettings::default(),
            is: TrainSettings::default(),
            eval: EvalSettings::default(),
            output_dir: default_output_dir(),
        }
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<file>")
                .to_string();
            Error::config(field, e.to_string().trim())
        })
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut config = RunConfig::from_toml(&crate::error::read_to_string(path)?)?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus.train);
        if let Some(p) = self.corpus.test.as_mut() {
            fix(p);
        }
        if let Some(p) = self.spans.pruning_lexicon.as_mut() {
            fix(p);
        }
        if let Some(p) = self.spans.determiners.as_mut() {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let exists = |field: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::config(field, format!("{} does not exist", p.display())))
            }
        };
        exists("corpus.train", &self.corpus.train)?;
        if let Some(p) = &self.corpus.test {
            exists("corpus.test", p)?;
        }
        if let Some(p) = &self.spans.pruning_lexicon {
            exists("spans.pruning_lexicon", p)?;
        }
        if let Some(p) = &self.spans.determiners {
            exists("spans.determiners", p)?;
        }
        if self.spans.max_train_span_len == 0 {
            return Err(Error::config("spans.max_train_span_len", "must be at least 1"));
        }
        if self.spans.max_seq_len < 8 {
            return Err(Error::config("spans.max_seq_len", "must be at least 8"));
        }
        self.mention.validate("mention")?;
        self.is.validate("is")?;
        if self.eval.folds < 2 {
            return Err(Error::config("eval.folds", "must be at least 2"));
        }
        if self.eval.test_max_len == Some(0) {
            return Err(Error::config("eval.test_max_len", "must be at least 1"));
        }
        match &self.backend {
            BackendConfig::Reference(c) => c.validate().map_err(|e| Error::config("backend", e)),
            BackendConfig::Pretrained(c) if c.model.is_empty() => {
                Err(Error::config("backend.model", "must not be empty"))
            }
            BackendConfig::Pretrained(_) => Ok(()),
        }
    }

    pub fn span_config(&self) -> Result<SpanGenConfig> {
        let spans = SpanGenConfig {
            max_train_span_len: self.spans.max_train_span_len,
            max_seq_len: self.spans.max_seq_len,
            pruning_lexicon: match &self.spans.pruning_lexicon {
                Some(p) => read_word_list(p)?,
                None => default_pruning_lexicon(),
            },
            ..SpanGenConfig::default()
        };
        spans.validate().map_err(|e| Error::config("spans", e))?;
        Ok(spans)
    }

    pub fn mention_train(&self) -> TrainConfig {
        self.mention
            .resolve(TrainConfig::mention_default(), self.spans.max_seq_len)
    }

    pub fn is_train(&self) -> TrainConfig {
        self.is.resolve(TrainConfig::is_default(), self.spans.max_seq_len)
    }

    pub fn determiners(&self) -> Result<BTreeSet<String>> {
        match &self.spans.determiners {
            Some(p) => read_word_list(p),
            None => Ok(default_determiners()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_task_settings() {
        let c = RunConfig::from_toml("[corpus]\ntrain = \"x.jsonl\"\n").unwrap();
        let m = c.mention_train();
        assert_eq!((m.epochs, m.learning_rate, m.batch_size, m.max_seq_len), (1, 1e-5, 32, 128));
        let i = c.is_train();
        assert_eq!((i.epochs, i.learning_rate, i.batch_size), (3, 3e-5, 32));
        assert_eq!(c.eval.mode, Mode::E2e);
        assert_eq!(c.eval.folds, 10);
    }

    #[test]
    fn overrides_and_round_trip() {
        let text = "output_dir = \"out\"\n[corpus]\ntrain = \"x\"\n[spans]\nmax_seq_len = 256\n\
[is]\nlearning_rate = 0.01\nmax_steps = 300\n[eval]\nmode = \"gold-mentions\"\ntest_max_len = 10\n";
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.is_train().learning_rate, 0.01);
        assert_eq!(c.is_train().max_steps, Some(300));
        assert_eq!(c.mention_train().max_seq_len, 256);
        assert_eq!(c.eval.mode, Mode::GoldMentions);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::from_toml("[corpus]\ntrain = \"x\"\n[mention]\nlr = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "lr"), "{err}");

        let mut c = RunConfig::with_corpus("/nonexistent/corpus.jsonl");
        assert!(matches!(c.validate(), Err(Error::Config { ref field, .. }) if field == "corpus.train"));
        c.corpus.train = PathBuf::from(".");
        c.mention.learning_rate = Some(-1.0);
        assert!(
            matches!(c.validate(), Err(Error::Config { ref field, .. }) if field == "mention.learning_rate")
        );
        c.mention.learning_rate = None;
        c.eval.folds = 1;
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn schema_lists_every_key() {
        let schema: serde_json::Value = serde_json::from_str(RUN_CONFIG_SCHEMA).unwrap();
        let props = &schema["properties"];
        let top = serde_json::to_value(RunConfig::with_corpus("x")).unwrap();
        for (key, value) in top.as_object().unwrap() {
            assert!(props.get(key).is_some(), "schema lacks {key}");
            if let (Some(fields), Some(described)) = (value.as_object(), props[key].get("properties")) {
                for field in fields.keys() {
                    assert!(described.get(field).is_some(), "schema lacks {key}.{field}");
                }
            }
        }
        let train = &schema["$defs"]["train"]["properties"];
        for field in ["epochs", "learning_rate", "batch_size", "seed", "max_steps"] {
            assert!(train.get(field).is_some(), "schema lacks train.{field}");
        }
    }
}
