//! Run-configuration file handling.
//!
//! A single JSON document can hold defaults for every subcommand. Values are
//! resolved in three layers: built-in defaults, then the config file, then
//! explicit command-line flags. File sections are merged field by field, so a
//! section only has to name the fields it wants to change.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Version tag written into every sidecar and accepted from config files.
pub const FORMAT_VERSION: u32 = 1;

/// Top-level shape of a `--config` JSON document. Every field is optional;
/// unknown keys anywhere in the document are rejected.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub format_version: Option<u32>,
    /// Seed applied to whichever subcommand runs, unless a flag overrides it.
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub two_neuron: Option<Value>,
    pub spike_timing: Option<Value>,
    pub gradcheck: Option<Value>,
}

/// Options of the `gradcheck` subcommand that can live in a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    /// Hidden-layer size of the randomly wired check network.
    pub neurons: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            neurons: 4,
            steps: 100,
            seed: 0,
        }
    }
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: RunConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(v) = file.format_version {
            if v != FORMAT_VERSION {
                return Err(CliError::Config(format!(
                    "unsupported format_version {v}, this build writes {FORMAT_VERSION}"
                )));
            }
        }
        Ok(file)
    }
}

/// Recursively overlay `patch` onto `base`; non-object values replace.
fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, other) => *slot = other.clone(),
    }
}

/// Overlay an optional config-file section onto a default-constructed config.
/// The merged document is re-parsed into `C`, so unknown or ill-typed keys in
/// the section fail with a config error.
pub fn resolve_section<C>(default: &C, section: Option<&Value>, name: &str) -> Result<C, CliError>
where
    C: Serialize + serde::de::DeserializeOwned,
{
    let mut doc = serde_json::to_value(default)
        .map_err(|e| CliError::Config(format!("serializing {name} defaults: {e}")))?;
    if let Some(patch) = section {
        merge(&mut doc, patch);
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config section {name}: {e}")))
}
