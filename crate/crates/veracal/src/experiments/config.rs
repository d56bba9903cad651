//! Experiment configuration, loadable from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::client::{HttpSettings, SimulatorProfile};
use crate::consistency::{MarginMode, Method};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::hybrid::{default_alpha_grid, SearchObjective};

/// Which completion backend drives the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Http {
        #[serde(flatten)]
        settings: HttpSettings,
    },
    Simulator {
        #[serde(flatten)]
        profile: SimulatorProfile,
    },
}

impl BackendConfig {
    pub fn model_id(&self) -> String {
        match self {
            BackendConfig::Http { settings } => settings.model.clone(),
            BackendConfig::Simulator { .. } => "simulated-classifier".into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BackendConfig::Http { .. } => "http",
            BackendConfig::Simulator { .. } => "simulator",
        }
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Simulator {
            profile: SimulatorProfile::default(),
        }
    }
}

/// Where the statements come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSource {
    /// A LIAR-format TSV file or a directory holding train/valid/test.tsv.
    pub path: PathBuf,
    #[serde(default = "default_split")]
    pub split: Split,
    /// Evaluate only the first `limit` records when set.
    #[serde(default)]
    pub limit: Option<usize>,
}

fn default_split() -> Split {
    Split::Test
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource {
            path: PathBuf::from("data"),
            split: Split::Test,
            limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub backend: BackendConfig,
    pub dataset: DatasetSource,
    /// Sample sizes for the k ablation; the largest also drives the
    /// single-condition runs.
    pub k_values: Vec<usize>,
    /// Temperatures for the ablation; the largest also drives the
    /// single-condition runs.
    pub temperatures: Vec<f64>,
    pub methods: Vec<Method>,
    pub m_bins: usize,
    pub alpha_grid: Vec<f64>,
    pub alpha_objective: SearchObjective,
    pub margin_mode: MarginMode,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Response cache location; defaults to `<out_dir>/cache.jsonl`.
    pub cache_path: Option<PathBuf>,
    pub concurrency: usize,
    pub max_tokens: u32,
    /// Directory of prompt override files (one per template name).
    pub template_dir: Option<PathBuf>,
    /// Model ids for the version-comparison run; defaults to the backend's
    /// own model.
    pub model_versions: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            backend: BackendConfig::default(),
            dataset: DatasetSource::default(),
            k_values: vec![2, 5, 10],
            temperatures: vec![0.0, 0.5, 1.0],
            methods: Method::ALL.to_vec(),
            m_bins: 10,
            alpha_grid: default_alpha_grid(),
            alpha_objective: SearchObjective::Ece,
            margin_mode: MarginMode::ValueRange,
            seed: 0,
            out_dir: PathBuf::from("out"),
            cache_path: None,
            concurrency: 4,
            max_tokens: 1024,
            template_dir: None,
            model_versions: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    /// Load from a `.toml` or `.json` file.
    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let config: ExperimentConfig = match ext {
            "toml" => toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            "json" => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            other => {
                return Err(Error::Config(format!(
                    "unsupported config extension {other:?} (expected toml or json)"
                )))
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::Config("k_values must be non-empty".into()));
        }
        if self.k_values.contains(&0) {
            return Err(Error::Config("k_values must be positive".into()));
        }
        if self.temperatures.is_empty() {
            return Err(Error::Config("temperatures must be non-empty".into()));
        }
        if self.temperatures.iter().any(|t| !(0.0..=2.0).contains(t)) {
            return Err(Error::Config("temperatures must lie in [0, 2]".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be non-empty".into()));
        }
        if self.m_bins < 2 {
            return Err(Error::Config("m_bins must be at least 2".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("concurrency must be positive".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be positive".into()));
        }
        if let BackendConfig::Simulator { profile } = &self.backend {
            profile.validate()?;
        }
        Ok(())
    }

    /// Largest configured sample size: the sampling budget per record.
    pub fn k_max(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(1)
    }

    /// Largest configured temperature: the stochastic sampling condition.
    pub fn t_max(&self) -> f64 {
        self.temperatures.iter().copied().fold(0.0, f64::max)
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache.jsonl"))
    }

    pub fn model_versions(&self) -> Vec<String> {
        if self.model_versions.is_empty() {
            vec![self.backend.model_id()]
        } else {
            self.model_versions.clone()
        }
    }
}
