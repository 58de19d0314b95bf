use serde::{Deserialize, Serialize};

use crate::corpus::{
    Caps, DEFAULT_MAX_EDUS, DEFAULT_MAX_WORDS, DEFAULT_MIN_FREQ, DEFAULT_VOCAB_CAP,
};
use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Which parameters a pass over the data updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Merge scorer only.
    Structure,
    /// Everything except the merge scorer.
    Representation,
}

impl Phase {
    pub fn other(self) -> Phase {
        match self {
            Phase::Structure => Phase::Representation,
            Phase::Representation => Phase::Structure,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Structure => "structure",
            Phase::Representation => "representation",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structure" => Ok(Phase::Structure),
            "representation" => Ok(Phase::Representation),
            _ => Err(Error::invalid(format!("unknown phase `{s}`"))),
        }
    }
}

/// Reconstruction objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Mean squared error between softmax-normalized vectors.
    MseSoftmax,
}

/// Every training hyper-parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub grad_clip_norm: f64,
    pub epochs: usize,
    pub hidden: usize,
    pub shared_levels: bool,
    pub tau_start: f64,
    pub tau_end: f64,
    pub tau_anneal_epochs: usize,
    pub gumbel_noise: bool,
    pub start_phase: Phase,
    pub loss: LossKind,
    pub embeddings_frozen: bool,
    pub max_edus: usize,
    pub max_words: usize,
    pub vocab_cap: usize,
    pub min_freq: usize,
    pub dev_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 20,
            dropout: 0.2,
            grad_clip_norm: 2.0,
            epochs: 40,
            hidden: 64,
            shared_levels: true,
            tau_start: 5.0,
            tau_end: 1.0,
            tau_anneal_epochs: 3,
            gumbel_noise: true,
            start_phase: Phase::Structure,
            loss: LossKind::MseSoftmax,
            embeddings_frozen: true,
            max_edus: DEFAULT_MAX_EDUS,
            max_words: DEFAULT_MAX_WORDS,
            vocab_cap: DEFAULT_VOCAB_CAP,
            min_freq: DEFAULT_MIN_FREQ,
            dev_size: 36,
            seed: 0,
        }
    }
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl TrainConfig {
    /// Names accepted by [`TrainConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "learning_rate",
        "adam_beta1",
        "adam_beta2",
        "adam_eps",
        "batch_size",
        "dropout",
        "grad_clip_norm",
        "epochs",
        "hidden",
        "shared_levels",
        "tau_start",
        "tau_end",
        "tau_anneal_epochs",
        "gumbel_noise",
        "start_phase",
        "loss",
        "embeddings_frozen",
        "max_edus",
        "max_words",
        "vocab_cap",
        "min_freq",
        "dev_size",
        "seed",
    ];

    pub fn caps(&self) -> Caps {
        Caps {
            max_edus: self.max_edus,
            max_words: self.max_words,
        }
    }

    pub fn model_config(&self, embed_dim: usize) -> ModelConfig {
        ModelConfig {
            embed_dim,
            hidden: self.hidden,
            shared_levels: self.shared_levels,
        }
    }

    /// Assigns one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| field_err(key, format!("cannot parse `{value}`")))
        }
        match key {
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "adam_beta1" => self.adam_beta1 = parse(key, value)?,
            "adam_beta2" => self.adam_beta2 = parse(key, value)?,
            "adam_eps" => self.adam_eps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "grad_clip_norm" => self.grad_clip_norm = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "shared_levels" => self.shared_levels = parse(key, value)?,
            "tau_start" => self.tau_start = parse(key, value)?,
            "tau_end" => self.tau_end = parse(key, value)?,
            "tau_anneal_epochs" => self.tau_anneal_epochs = parse(key, value)?,
            "gumbel_noise" => self.gumbel_noise = parse(key, value)?,
            "start_phase" => {
                self.start_phase = value
                    .trim()
                    .parse()
                    .map_err(|e: Error| field_err(key, e.to_string()))?
            }
            "loss" => {
                self.loss = match value.trim() {
                    "mse-softmax" => LossKind::MseSoftmax,
                    other => return Err(field_err(key, format!("unknown loss `{other}`"))),
                }
            }
            "embeddings_frozen" => self.embeddings_frozen = parse(key, value)?,
            "max_edus" => self.max_edus = parse(key, value)?,
            "max_words" => self.max_words = parse(key, value)?,
            "vocab_cap" => self.vocab_cap = parse(key, value)?,
            "min_freq" => self.min_freq = parse(key, value)?,
            "dev_size" => self.dev_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(field_err(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
            ("grad_clip_norm", self.grad_clip_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field_err(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(field_err(name, format!("must lie in [0, 1), got {v}")));
            }
        }
        let counts = [
            ("batch_size", self.batch_size),
            ("hidden", self.hidden),
            ("tau_anneal_epochs", self.tau_anneal_epochs),
            ("max_edus", self.max_edus),
            ("max_words", self.max_words),
            ("vocab_cap", self.vocab_cap),
            ("min_freq", self.min_freq),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(field_err(name, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(field_err(
                "dropout",
                format!("must lie in [0, 1), got {}", self.dropout),
            ));
        }
        if !(self.tau_end > 0.0 && self.tau_end.is_finite()) {
            return Err(field_err(
                "tau_end",
                format!("must be positive, got {}", self.tau_end),
            ));
        }
        if !(self.tau_start >= self.tau_end && self.tau_start.is_finite()) {
            return Err(field_err(
                "tau_start",
                format!(
                    "must be at least tau_end ({}), got {}",
                    self.tau_end, self.tau_start
                ),
            ));
        }
        if !self.embeddings_frozen {
            return Err(field_err(
                "embeddings_frozen",
                "word embeddings are always frozen",
            ));
        }
        Ok(())
    }
}

/// Temperature of structure epoch `k` (counted from zero): linear decay
/// from `tau_start` to `tau_end` over `tau_anneal_epochs`, then constant.
pub fn anneal_tau(structure_epoch: usize, cfg: &TrainConfig) -> f64 {
    let span = cfg.tau_anneal_epochs;
    let k = structure_epoch.min(span);
    // Interpolating endpoints keeps the rational points exact, e.g. 11/3.
    (cfg.tau_start * (span - k) as f64 + cfg.tau_end * k as f64) / span as f64
}

/// Phase of training epoch `epoch` (counted from zero); phases alternate.
pub fn phase_of_epoch(epoch: usize, cfg: &TrainConfig) -> Phase {
    if epoch.is_multiple_of(2) {
        cfg.start_phase
    } else {
        cfg.start_phase.other()
    }
}

/// Structure epochs that start before epoch `epoch`.
pub fn structure_epochs_before(epoch: usize, cfg: &TrainConfig) -> usize {
    match cfg.start_phase {
        Phase::Structure => epoch.div_ceil(2),
        Phase::Representation => epoch / 2,
    }
}

/// Temperature used in epoch `epoch`. Representation epochs keep the
/// temperature of the latest structure epoch.
pub fn tau_of_epoch(epoch: usize, cfg: &TrainConfig) -> f64 {
    let before = structure_epochs_before(epoch, cfg);
    match phase_of_epoch(epoch, cfg) {
        Phase::Structure => anneal_tau(before, cfg),
        Phase::Representation => anneal_tau(before.saturating_sub(1), cfg),
    }
}
