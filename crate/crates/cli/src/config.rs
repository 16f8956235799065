//! Run configuration: a JSON file merged with command-line overrides, and
//! the provenance records written next to every output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wmgf_core::pipeline::ExperimentConfig;

use crate::error::{CliError, CliResult};

/// Every parameter a command may need. The file format is the experiment
/// configuration plus an optional top-level `seed`; a provenance record
/// written by this tool is accepted too, in which case its `config` is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Flags that override configuration values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub taus: Option<Vec<f64>>,
    pub fwhms_mm: Option<Vec<f64>>,
    pub cheb_order: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    /// The configuration named phantom seeds itself, so no `seed` is needed.
    pub explicit_seeds: bool,
}

pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Loaded> {
    let mut explicit_seeds = false;
    let mut config = match path {
        None => RunConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::input(format!("cannot read config {}: {e}", p.display())))?;
            let mut value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("config {} is not valid JSON: {e}", p.display())))?;
            if value.get("command").is_some() {
                if let Some(inner) = value.get("config") {
                    value = inner.clone();
                }
            }
            explicit_seeds = value.get("seeds").is_some();
            serde_json::from_value(value)
                .map_err(|e| CliError::input(format!("config {}: {e}", p.display())))?
        }
    };
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    if let Some(t) = &overrides.taus {
        config.experiment.taus = t.clone();
    }
    if let Some(f) = &overrides.fwhms_mm {
        config.experiment.fwhms_mm = f.clone();
    }
    if let Some(k) = overrides.cheb_order {
        config.experiment.cheb_order = k;
    }
    Ok(Loaded {
        config,
        explicit_seeds,
    })
}

impl RunConfig {
    pub fn require_seed(&self, command: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::input(format!("`{command}` is stochastic and needs --seed (or `seed` in the config)")))
    }
}

/// Provenance record: what produced an output, with the effective config.
/// It holds nothing run-specific (no times, no output paths), so identical
/// runs write identical records.
pub fn provenance(command: &str, config: &RunConfig, inputs: Value) -> Value {
    json!({
        "tool": "wmgf",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "inputs": inputs,
    })
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Compute {
        kind: "schema",
        message: e.to_string(),
    })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::Input {
        kind: "io",
        message: format!("cannot write {}: {e}", path.display()),
    })
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Input {
        kind: "io",
        message: format!("cannot create {}: {e}", path.display()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"taus": [0.5], "cheb_order": 20, "seed": 3}"#).unwrap();
        let loaded = load(
            Some(&path),
            &Overrides {
                taus: Some(vec![1.0, 2.0]),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(loaded.config.experiment.taus, vec![1.0, 2.0]);
        assert_eq!(loaded.config.experiment.cheb_order, 20);
        assert_eq!(loaded.config.seed, Some(3));
        assert!(!loaded.explicit_seeds);
    }

    #[test]
    fn provenance_records_are_accepted_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let mut config = RunConfig::default();
        config.seed = Some(11);
        config.experiment.phantom.noise_sigma = 0.0;
        write_json(&path, &provenance("phantom", &config, json!({}))).unwrap();
        let loaded = load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(loaded.config, config);
    }

    #[test]
    fn bad_config_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, "{not json").unwrap();
        assert_eq!(load(Some(&path), &Overrides::default()).unwrap_err().exit_code(), 2);
        assert_eq!(
            load(Some(&dir.path().join("missing.json")), &Overrides::default())
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("a/g.grf")), PathBuf::from("a/g.grf.provenance.json"));
    }
}
