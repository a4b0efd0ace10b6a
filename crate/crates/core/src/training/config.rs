use std::fmt::Write;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelDims;

/// Hyperparameters and switches for one training run.
///
/// Defaults are the Donald Trump zero-shot configuration (hidden 80, stance
/// hidden 147, discriminator hidden 85, `lambda_tr` 0.1, `gamma` 14).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub embedding_dim: usize,
    /// LSTM hidden size per direction.
    pub hidden: usize,
    pub stance_hidden: usize,
    pub disc_hidden: usize,
    pub lambda_rec: f64,
    pub lambda_tr: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Base learning rate.
    pub lr: f64,
    pub max_epochs: usize,
    /// Epochs with fixed learning rate and no adversarial pressure.
    pub warmup_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub transformation: bool,
    pub transform_loss: bool,
    pub topic_rec: bool,
    pub doc_rec: bool,
    pub residual_topic: bool,
    pub unlabeled: bool,
    pub adversary: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 100,
            hidden: 80,
            stance_hidden: 147,
            disc_hidden: 85,
            lambda_rec: 1.0,
            lambda_tr: 0.1,
            gamma: 14.0,
            alpha: 10.0,
            beta: 0.25,
            lr: 0.001,
            max_epochs: 100,
            warmup_epochs: 50,
            patience: 10,
            batch_size: 32,
            seed: 0,
            transformation: true,
            transform_loss: true,
            topic_rec: true,
            doc_rec: true,
            residual_topic: true,
            unlabeled: true,
            adversary: true,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "embedding_dim",
    "hidden",
    "stance_hidden",
    "disc_hidden",
    "lambda_rec",
    "lambda_tr",
    "gamma",
    "alpha",
    "beta",
    "lr",
    "max_epochs",
    "warmup_epochs",
    "patience",
    "batch_size",
    "seed",
    "transformation",
    "transform_loss",
    "topic_rec",
    "doc_rec",
    "residual_topic",
    "unlabeled",
    "adversary",
];

fn parse<V: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {value:?} for {key}")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        for (name, v) in [
            ("lambda_rec", self.lambda_rec),
            ("lambda_tr", self.lambda_tr),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        self.model_dims(2).validate()
    }

    pub fn model_dims(&self, n_topics: usize) -> ModelDims {
        ModelDims {
            embedding_dim: self.embedding_dim,
            hidden: self.hidden,
            stance_hidden: self.stance_hidden,
            disc_hidden: self.disc_hidden,
            n_topics,
            transformation: self.transformation,
            residual_topic: self.residual_topic,
            adversary: self.adversary,
        }
    }

    /// Whether unlabeled zero-shot tweets enter the training pool. They only
    /// feed the discriminator's supervision, so they are dropped with it.
    pub fn uses_unlabeled(&self) -> bool {
        self.unlabeled && self.adversary
    }

    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "embedding_dim" => self.embedding_dim = parse(key, value, line)?,
            "hidden" => self.hidden = parse(key, value, line)?,
            "stance_hidden" => self.stance_hidden = parse(key, value, line)?,
            "disc_hidden" => self.disc_hidden = parse(key, value, line)?,
            "lambda_rec" => self.lambda_rec = parse(key, value, line)?,
            "lambda_tr" => self.lambda_tr = parse(key, value, line)?,
            "gamma" => self.gamma = parse(key, value, line)?,
            "alpha" => self.alpha = parse(key, value, line)?,
            "beta" => self.beta = parse(key, value, line)?,
            "lr" => self.lr = parse(key, value, line)?,
            "max_epochs" => self.max_epochs = parse(key, value, line)?,
            "warmup_epochs" => self.warmup_epochs = parse(key, value, line)?,
            "patience" => self.patience = parse(key, value, line)?,
            "batch_size" => self.batch_size = parse(key, value, line)?,
            "seed" => self.seed = parse(key, value, line)?,
            "transformation" => self.transformation = parse(key, value, line)?,
            "transform_loss" => self.transform_loss = parse(key, value, line)?,
            "topic_rec" => self.topic_rec = parse(key, value, line)?,
            "doc_rec" => self.doc_rec = parse(key, value, line)?,
            "residual_topic" => self.residual_topic = parse(key, value, line)?,
            "unlabeled" => self.unlabeled = parse(key, value, line)?,
            "adversary" => self.adversary = parse(key, value, line)?,
            _ => {
                return Err(Error::Config(format!(
                    "line {line}: unknown config key {key:?}"
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1))
            })?;
            cfg.set(key.trim(), value.trim(), i + 1)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_config_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "embedding_dim" => self.embedding_dim.to_string(),
            "hidden" => self.hidden.to_string(),
            "stance_hidden" => self.stance_hidden.to_string(),
            "disc_hidden" => self.disc_hidden.to_string(),
            "lambda_rec" => self.lambda_rec.to_string(),
            "lambda_tr" => self.lambda_tr.to_string(),
            "gamma" => self.gamma.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "lr" => self.lr.to_string(),
            "max_epochs" => self.max_epochs.to_string(),
            "warmup_epochs" => self.warmup_epochs.to_string(),
            "patience" => self.patience.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "seed" => self.seed.to_string(),
            "transformation" => self.transformation.to_string(),
            "transform_loss" => self.transform_loss.to_string(),
            "topic_rec" => self.topic_rec.to_string(),
            "doc_rec" => self.doc_rec.to_string(),
            "residual_topic" => self.residual_topic.to_string(),
            "unlabeled" => self.unlabeled.to_string(),
            "adversary" => self.adversary.to_string(),
            _ => return None,
        })
    }

    /// Serializes every field as `key = value`, readable by [`TrainConfig::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            writeln!(out, "{key} = {}", self.get(key).expect("known key")).unwrap();
        }
        out
    }
}
