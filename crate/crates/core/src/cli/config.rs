use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::HistogramSpec;
use crate::error::{Error, Result};
use crate::resampling::Resampler;
use crate::samplers::{Algorithm, SamplerConfig};
use crate::srn::{PathRecord, ReactionNetwork};
use crate::transport::Preconditioner;

/// Where a reaction-network dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// A dataset written by `etais simulate`.
    File(PathBuf),
    /// Simulate on the fly; rates default to the reference rates.
    Simulate {
        t_end: f64,
        #[serde(default = "default_data_seed")]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rates: Option<Vec<f64>>,
    },
}

fn default_data_seed() -> u64 {
    1
}

impl Default for DataSource {
    fn default() -> Self {
        Self::Simulate {
            t_end: 100.0,
            seed: 1,
            rates: None,
        }
    }
}

/// Target selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[derive(Default)]
pub enum ProblemConfig {
    #[default]
    Rosenbrock,
    SrnFull {
        #[serde(default)]
        data: DataSource,
    },
    SrnQea {
        #[serde(default)]
        data: DataSource,
    },
    SrnCma {
        #[serde(default)]
        data: DataSource,
    },
    Grn {
        #[serde(default = "default_grn_data")]
        data: DataSource,
    },
    /// A density described by a [`CustomDensity`] file.
    Custom { density: PathBuf },
}

fn default_grn_data() -> DataSource {
    DataSource::Simulate {
        t_end: 500.0,
        seed: 1,
        rates: None,
    }
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Rosenbrock => "rosenbrock",
            Self::SrnFull { .. } => "srn-full",
            Self::SrnQea { .. } => "srn-qea",
            Self::SrnCma { .. } => "srn-cma",
            Self::Grn { .. } => "grn",
            Self::Custom { .. } => "custom",
        }
    }

    pub fn data(&self) -> Option<&DataSource> {
        match self {
            Self::SrnFull { data }
            | Self::SrnQea { data }
            | Self::SrnCma { data }
            | Self::Grn { data } => Some(data),
            _ => None,
        }
    }

    pub fn is_two_species(&self) -> bool {
        matches!(
            self,
            Self::SrnFull { .. } | Self::SrnQea { .. } | Self::SrnCma { .. }
        )
    }
}

/// Contents of a custom density file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CustomDensity {
    Gaussian {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    /// A fully observed path of any mass-action network, with Gamma priors
    /// on its rates.
    ReactionPath {
        network: ReactionNetwork,
        path: PathRecord,
        prior_shapes: Vec<f64>,
        prior_rates: Vec<f64>,
    },
}

impl CustomDensity {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Which metrics to compute from the sample logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Histogram for the relative L² error (needs an analytic target).
    pub histogram: Option<HistogramSpec>,
    pub mahalanobis: bool,
    /// Checkpoints per decade of sample count.
    pub per_decade: usize,
    /// Iterations dropped before metrics; defaults to the sampler's burn-in.
    pub burn_in: Option<usize>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            histogram: None,
            mahalanobis: true,
            per_decade: 20,
            burn_in: None,
        }
    }
}

/// Pilot runs used by `etais tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub grid: Vec<f64>,
    pub pilot_iterations: usize,
    /// Acceptance rate the MH samplers are tuned towards.
    pub target_acceptance: f64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            grid: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5],
            pilot_iterations: 500,
            target_acceptance: 0.234,
        }
    }
}

/// One experiment: problem, sampler, metrics and repeat orchestration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    /// Sampler settings; its `seed` is replaced by `seed + repeat`.
    pub sampler: SamplerConfig,
    /// Centre of the initial draws when the problem has no prior.
    pub start: Option<Vec<f64>>,
    pub diagnostics: DiagnosticsConfig,
    pub tune: TuneConfig,
    pub repeats: usize,
    pub output: PathBuf,
    pub seed: u64,
    /// Upper bound on `M N` per repeat.
    pub budget: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            sampler: SamplerConfig::default(),
            start: None,
            diagnostics: DiagnosticsConfig::default(),
            tune: TuneConfig::default(),
            repeats: 32,
            output: PathBuf::from("out"),
            seed: 0,
            budget: 2_000_000_000,
        }
    }
}

pub const PRESETS: [&str; 5] = ["rosenbrock", "srn-full", "srn-qea", "srn-cma", "grn"];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Desk-scale settings for the built-in case studies.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self {
            repeats: 8,
            ..Self::default()
        };
        let srn_sampler = SamplerConfig {
            algorithm: Algorithm::Tetais2,
            ensemble_size: 500,
            iterations: 200,
            beta: 0.5,
            preconditioner: Preconditioner::Logarithmic,
            map_update_interval: 10,
            adapt_covariance: true,
            burn_in_fraction: 0.2,
            ..SamplerConfig::default()
        };
        let config = match name {
            "rosenbrock" => Self {
                problem: ProblemConfig::Rosenbrock,
                sampler: SamplerConfig {
                    algorithm: Algorithm::Tetais2,
                    ensemble_size: 150,
                    iterations: 2000,
                    beta: 0.2,
                    resampler: Resampler::Mt,
                    ..SamplerConfig::default()
                },
                diagnostics: DiagnosticsConfig {
                    histogram: Some(HistogramSpec::new(
                        vec![-2.0, -1.0],
                        vec![3.0, 8.0],
                        vec![100, 100],
                    )?),
                    ..DiagnosticsConfig::default()
                },
                ..base
            },
            "srn-full" => Self {
                problem: ProblemConfig::SrnFull {
                    data: DataSource::default(),
                },
                sampler: SamplerConfig {
                    algorithm: Algorithm::Etais,
                    beta: 1.0,
                    iterations: 400,
                    ..srn_sampler
                },
                ..base
            },
            "srn-qea" => Self {
                problem: ProblemConfig::SrnQea {
                    data: DataSource::default(),
                },
                sampler: srn_sampler,
                ..base
            },
            "srn-cma" => Self {
                problem: ProblemConfig::SrnCma {
                    data: DataSource::default(),
                },
                sampler: srn_sampler,
                ..base
            },
            "grn" => Self {
                problem: ProblemConfig::Grn {
                    data: default_grn_data(),
                },
                sampler: SamplerConfig {
                    ensemble_size: 400,
                    iterations: 300,
                    beta: 0.5,
                    ..srn_sampler
                },
                repeats: 4,
                ..base
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; expected one of {PRESETS:?}"
                )))
            }
        };
        Ok(config)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be positive".into()));
        }
        let m = if self.sampler.algorithm.is_ensemble() {
            self.sampler.ensemble_size as u64
        } else {
            1
        };
        let cost = m.saturating_mul(self.sampler.iterations as u64);
        if cost > self.budget {
            return Err(Error::Config(format!(
                "M N = {cost} exceeds the budget {}",
                self.budget
            )));
        }
        match &self.problem {
            ProblemConfig::Custom { density } if !density.exists() => {
                return Err(Error::Config(format!(
                    "density file {} does not exist",
                    density.display()
                )))
            }
            _ => {}
        }
        if let Some(data) = self.problem.data() {
            match data {
                DataSource::File(path) if !path.exists() => {
                    return Err(Error::Config(format!(
                        "dataset {} does not exist",
                        path.display()
                    )))
                }
                DataSource::Simulate { t_end, .. } if !(*t_end > 0.0 && t_end.is_finite()) => {
                    return Err(Error::Config(format!("simulation end time {t_end}")))
                }
                _ => {}
            }
        }
        if self.tune.pilot_iterations == 0 {
            return Err(Error::Config("pilot_iterations must be positive".into()));
        }
        if self.tune.grid.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::Config("tuning grid values must be positive".into()));
        }
        Ok(())
    }

    /// Seed of repeat `r`.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(c, back);
        }
        assert!(ExperimentConfig::preset("nope").is_err());
    }

    #[test]
    fn minimal_document_takes_defaults() {
        let c = ExperimentConfig::from_json(r#"{"problem": {"kind": "srn-cma"}}"#).unwrap();
        assert_eq!(c.problem.data(), Some(&DataSource::default()));
        assert_eq!(c.repeats, 32);
        assert_eq!(ExperimentConfig::preset("srn-cma").unwrap().repeats, 8);
        assert!(ExperimentConfig::from_json(r#"{"repeat": 3}"#).is_err());
    }

    #[test]
    fn zero_end_time_and_budget_rejected() {
        let c = ExperimentConfig::from_json(
            r#"{"problem": {"kind": "srn-full", "data": {"simulate": {"t_end": 0}}}}"#,
        )
        .unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            budget: 10,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_files_rejected() {
        let c = ExperimentConfig {
            problem: ProblemConfig::Custom {
                density: "/nonexistent/density.json".into(),
            },
            ..ExperimentConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
