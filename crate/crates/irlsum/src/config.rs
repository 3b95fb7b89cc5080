//! Training configuration files: flat JSON objects whose keys are
//! [`TrainConfig`] field names, overlaid on a named preset.

use std::fs;
use std::path::Path;

use irlsum_core::TrainConfig;
use serde_json::Value;

use crate::error::{io_err, Error, Result};

pub const PRESETS: [&str; 2] = ["desk-scale", "paper-scale"];

/// Overlays the keys of `overrides` (a JSON object) on `preset`. Unknown keys
/// and ill-typed values are errors.
pub fn overlay(preset: &str, overrides: &Value) -> Result<TrainConfig> {
    let base = TrainConfig::preset(preset)?;
    let Value::Object(extra) = overrides else {
        return Err(Error::Config("config file must hold a JSON object".into()));
    };
    let mut merged = serde_json::to_value(&base).expect("config serializes");
    let fields = merged.as_object_mut().expect("config is an object");
    for (k, v) in extra {
        fields.insert(k.clone(), v.clone());
    }
    let config: TrainConfig =
        serde_json::from_value(merged).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Preset values, overridden by the optional config file.
pub fn load_config(preset: &str, file: Option<&Path>) -> Result<TrainConfig> {
    let overrides = match file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.into(),
                source,
            })?
        }
        None => Value::Object(Default::default()),
    };
    overlay(preset, &overrides)
}
