//! Run configuration, read from a TOML file.
//!
//! Every section is optional; commands check for the sections they need.
//! Unknown keys are rejected so that typos surface as validation errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use expert_km::kernels::KernelShape;
use expert_km::simulation::{
    BandwidthChoice, DisabilityScenario, HeatmapSpec, McStudyConfig, StudyExpert,
};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub bandwidth: Option<BandwidthConfig>,
    #[serde(default)]
    pub expert: ExpertConfig,
    pub query: Option<QueryConfig>,
    pub bias: Option<BiasConfig>,
    pub integral_difference: Option<IntegralDifferenceConfig>,
    pub simulation: Option<SimulationConfig>,
    pub study: Option<StudyConfig>,
    pub loan: Option<LoanConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    /// Covariate columns used for smoothing, by header name; all when absent.
    pub covariates: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub shape: KernelShape,
}

/// Exactly one way of fixing the bandwidth.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthConfig {
    Explicit {
        values: Vec<f64>,
    },
    Schedule {
        rho: f64,
    },
    Cv {
        /// Per-coordinate candidates for a grid search.
        candidates: Option<Vec<Vec<f64>>>,
        /// Starting point of a coordinate descent.
        initial: Option<Vec<f64>>,
        #[serde(default = "default_shrink")]
        shrink: f64,
        #[serde(default = "default_grow")]
        grow: f64,
        #[serde(default = "default_iterations")]
        max_iterations: usize,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        /// Time grid of the functional score; observed event times when absent.
        t_grid: Option<Vec<f64>>,
        /// `w(t) = exp(−decay · t)`; `0` gives `w ≡ 1`.
        #[serde(default)]
        weight_decay: f64,
        /// Subset of `"H"`, `"H1"`.
        targets: Option<Vec<String>>,
    },
}

fn default_shrink() -> f64 {
    0.7
}
fn default_grow() -> f64 {
    1.4
}
fn default_iterations() -> usize {
    20
}
fn default_tolerance() -> f64 {
    0.01
}

/// Source of the expert judgments `η`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertConfig {
    /// `η = δ`.
    #[default]
    Naive,
    /// The `eta` column of the dataset.
    Precomputed,
    /// Every observed event accepted with probability `c`.
    UniformCensor { c: f64 },
    /// Events accepted with probability `c` where covariate `covariate`
    /// (header name) is at most `threshold`, and always elsewhere.
    ThresholdCensor {
        c: f64,
        covariate: String,
        threshold: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub points: Vec<Vec<f64>>,
    pub t_max: f64,
    /// Extra evaluation times for the curve tables.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PHatConfig {
    Constant {
        value: f64,
    },
    /// Disability-model probability at the query age with a fixed number
    /// of reportings.
    Disability {
        #[serde(default)]
        reportings: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    pub p0: Vec<f64>,
    pub p_hat: PHatConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralDifferenceConfig {
    pub upper: f64,
    /// One axis of covariate values per smoothing covariate.
    pub axes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub scenario: DisabilityScenario,
    /// Adds an `eta` column drawn by this expert.
    pub expert: Option<StudyExpert>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: Option<DisabilityScenario>,
    pub replications: Option<usize>,
    pub bandwidth: Option<BandwidthChoice>,
    pub z_points: Option<Vec<f64>>,
    pub t_points: Option<Vec<f64>>,
    pub experts: Option<Vec<StudyExpert>>,
    pub heatmap: Option<HeatmapSpec>,
    #[serde(default = "default_true")]
    pub emit_heatmap: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoanConfig {
    /// Observation cut-off, `YYYY-MM-DD`.
    pub cutoff: String,
    pub input: Option<PathBuf>,
    pub n: Option<usize>,
}

impl StudyConfig {
    /// Overlays the configured fields on `base`.
    pub fn apply(&self, mut base: McStudyConfig) -> McStudyConfig {
        if let Some(s) = &self.scenario {
            base.scenario = s.clone();
        }
        if let Some(r) = self.replications {
            base.replications = r;
        }
        if let Some(b) = &self.bandwidth {
            base.bandwidth = b.clone();
        }
        if let Some(z) = &self.z_points {
            base.z_points = z.clone();
        }
        if let Some(t) = &self.t_points {
            base.t_points = t.clone();
        }
        if let Some(e) = &self.experts {
            base.experts = e.clone();
        }
        if let Some(h) = &self.heatmap {
            base.heatmap = Some(h.clone());
        }
        if !self.emit_heatmap {
            base.heatmap = None;
        }
        base
    }
}

/// A parsed configuration with the hash of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sha256: String,
    /// Directory of the config file; relative data paths resolve against it.
    pub base_dir: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig =
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

pub fn load(path: Option<&Path>) -> Result<LoadedConfig, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Validation(format!("cannot read config {}: {e}", p.display()))
            })?;
            Ok(LoadedConfig {
                config: parse(&text)?,
                sha256: sha256_hex(text.as_bytes()),
                base_dir: p.parent().map(Path::to_path_buf).unwrap_or_default(),
            })
        }
        None => Ok(LoadedConfig {
            config: RunConfig::default(),
            sha256: sha256_hex(b""),
            base_dir: PathBuf::new(),
        }),
    }
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if let Some(q) = &self.query {
            if !(q.t_max > 0.0) {
                return bad(format!("query.t_max must be positive, got {}", q.t_max));
            }
            if q.points.is_empty() {
                return bad("query.points is empty".into());
            }
            if !(0.0..1.0).contains(&q.level) {
                return bad(format!("query.level must lie in [0, 1), got {}", q.level));
            }
        }
        if let Some(BandwidthConfig::Cv {
            candidates,
            initial,
            ..
        }) = &self.bandwidth
        {
            if candidates.is_some() == initial.is_some() {
                return bad(
                    "bandwidth.mode = \"cv\" needs exactly one of `candidates` or `initial`".into(),
                );
            }
        }
        if let Some(b) = &self.bias {
            if b.p0.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad("bias.p0 values must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    pub fn query(&self) -> Result<&QueryConfig, CliError> {
        self.query
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [query] section".into()))
    }

    pub fn data(&self) -> Result<&DataConfig, CliError> {
        self.data
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [data] section".into()))
    }

    pub fn bandwidth(&self) -> Result<&BandwidthConfig, CliError> {
        self.bandwidth
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [bandwidth] section".into()))
    }
}
