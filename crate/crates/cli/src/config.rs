//! Flat `key = value` run configuration.
//!
//! Training keys are bare (`learning_rate`), generator keys carry a `syn.`
//! prefix and probe keys a `probe.` prefix. Values from the command line
//! override the file, which overrides the defaults.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use tae::evaluation::ProbeConfig;
use tae::synthetic::SyntheticConfig;
use tae::training::TrainConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub synthetic: SyntheticConfig,
    pub probe: ProbeConfig,
}

/// Assigns `key` on a serializable struct, parsing `value` to the type of
/// the current field value.
fn set_field<T: Serialize + DeserializeOwned>(
    target: &mut T,
    prefix: &str,
    key: &str,
    value: &str,
) -> Result<()> {
    let full = format!("{prefix}{key}");
    let mut json = serde_json::to_value(&*target)?;
    let obj = json.as_object_mut().expect("configs serialize to objects");
    let Some(slot) = obj.get_mut(key) else {
        bail!(tae::Error::Config {
            field: full,
            message: "unknown key".into(),
        });
    };
    let parsed = match slot {
        Value::Bool(_) => value.parse::<bool>().ok().map(Value::Bool),
        Value::Number(n) if n.is_f64() => value
            .parse::<f64>()
            .ok()
            .and_then(|v| serde_json::Number::from_f64(v).map(Value::Number)),
        Value::Number(_) => value.parse::<u64>().ok().map(Value::from),
        Value::String(_) => Some(Value::String(value.to_string())),
        _ => None,
    };
    let Some(parsed) = parsed else {
        bail!(tae::Error::Config {
            field: full,
            message: format!("cannot parse `{value}`"),
        });
    };
    *slot = parsed;
    *target = serde_json::from_value(json).map_err(|e| tae::Error::Config {
        field: full,
        message: e.to_string(),
    })?;
    Ok(())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if let Some(k) = key.strip_prefix("syn.") {
            set_field(&mut self.synthetic, "syn.", k, value)
        } else if let Some(k) = key.strip_prefix("probe.") {
            set_field(&mut self.probe, "probe.", k, value)
        } else {
            Ok(self.train.set(key, value)?)
        }
    }

    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            bail!("expected key=value, got `{assignment}`");
        };
        self.set(k.trim(), v)
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line)
                .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        }
        Ok(())
    }

    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(p) = file {
            cfg.apply_file(p)?;
        }
        for o in overrides {
            cfg.apply_assignment(o)?;
        }
        cfg.train.validate()?;
        cfg.synthetic.validate()?;
        Ok(cfg)
    }
}
