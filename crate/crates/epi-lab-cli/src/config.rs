//! Experiment configuration: one JSON document per experiment.

use epi_lab_core::distributions::{Atom, DensityFamily, MixedDistribution};
use epi_lab_core::geom::BoxDomain;
use epi_lab_core::quadrature::QuadratureConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

/// Distribution spec as it appears in config files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Pyramid {
        scale: Vec<f64>,
        center: Vec<f64>,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DistSpec>,
    },
    PiecewiseConstant {
        cells: Vec<CellSpec>,
        heights: Vec<f64>,
    },
    #[serde(rename = "atoms+density")]
    AtomsDensity {
        atoms: Vec<AtomSpec>,
        #[serde(default)]
        density: Option<Box<DistSpec>>,
        #[serde(default)]
        density_mass: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub location: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DistSpec {
    pub fn to_density(&self, field: &str) -> Result<DensityFamily, CliError> {
        let bad = |e: epi_lab_core::Error| CliError::Config {
            field: field.to_string(),
            reason: e.to_string(),
        };
        match self {
            Self::Gaussian { mean, cov } => {
                DensityFamily::gaussian(mean.clone(), cov).map_err(bad)
            }
            Self::UniformBox { lo, hi } => {
                DensityFamily::uniform_box(lo.clone(), hi.clone()).map_err(bad)
            }
            Self::Pyramid { scale, center } => {
                DensityFamily::pyramid(scale.clone(), center.clone()).map_err(bad)
            }
            Self::Mixture {
                weights,
                components,
            } => {
                let comps: Result<Vec<_>, _> = components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.to_density(&format!("{field}.components[{i}]")))
                    .collect();
                DensityFamily::finite_mixture(weights.clone(), comps?).map_err(bad)
            }
            Self::PiecewiseConstant { cells, heights } => {
                let boxes: Result<Vec<_>, _> = cells
                    .iter()
                    .map(|c| BoxDomain::new(c.lo.clone(), c.hi.clone()))
                    .collect();
                DensityFamily::piecewise_constant(boxes.map_err(bad)?, heights.clone())
                    .map_err(bad)
            }
            Self::AtomsDensity { .. } => Err(CliError::Config {
                field: field.to_string(),
                reason: "a law with atoms is not a pure density".into(),
            }),
        }
    }

    pub fn to_mixed(&self, field: &str) -> Result<MixedDistribution, CliError> {
        let bad = |e: epi_lab_core::Error| CliError::Config {
            field: field.to_string(),
            reason: e.to_string(),
        };
        match self {
            Self::AtomsDensity {
                atoms,
                density,
                density_mass,
            } => {
                let atoms: Result<Vec<_>, _> = atoms
                    .iter()
                    .map(|a| Atom::new(a.location.clone(), a.mass))
                    .collect();
                let density = match density {
                    Some(d) => Some(d.to_density(&format!("{field}.density"))?),
                    None => None,
                };
                MixedDistribution::new(atoms.map_err(bad)?, density, *density_mass).map_err(bad)
            }
            _ => Ok(MixedDistribution::from_density(self.to_density(field)?)),
        }
    }
}

/// Gamma grid: either an explicit list or a log-spaced description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GammaGridSpec {
    List(Vec<f64>),
    Log {
        min: f64,
        max: f64,
        #[serde(rename = "pointsPerDecade", alias = "points_per_decade")]
        points_per_decade: usize,
    },
}

impl GammaGridSpec {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        let grid = match self {
            Self::List(v) => v.clone(),
            Self::Log {
                min,
                max,
                points_per_decade,
            } => {
                if !(min > &0.0 && max > min && *points_per_decade >= 1) {
                    return Err(CliError::Config {
                        field: "gamma_grid".into(),
                        reason: "need 0 < min < max and pointsPerDecade >= 1".into(),
                    });
                }
                epi_lab_core::log_grid(*min, *max, *points_per_decade)
            }
        };
        if grid.is_empty() || grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(CliError::Config {
                field: "gamma_grid".into(),
                reason: "gammas must be positive and finite".into(),
            });
        }
        Ok(grid)
    }
}

/// Quadrature fields embedded in the experiment config; all optional.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct QuadratureSpec {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub truncation_radius: Option<f64>,
    pub mc_samples: Option<usize>,
}

impl QuadratureSpec {
    pub fn to_config(&self, seed: u64) -> Result<QuadratureConfig, CliError> {
        let mut cfg = QuadratureConfig {
            abs_tol: self.abs_tol.unwrap_or(1e-8),
            rel_tol: self.rel_tol.unwrap_or(1e-8),
            mc_seed: seed,
            ..Default::default()
        };
        if let Some(m) = self.max_subdivisions {
            cfg.max_subdivisions = m;
        }
        if let Some(r) = self.truncation_radius {
            cfg.truncation_radius = r;
        }
        if let Some(n) = self.mc_samples {
            cfg.mc_samples = n;
        }
        cfg.validate().map_err(|e| CliError::Config {
            field: "quadrature".into(),
            reason: e.to_string(),
        })?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Entropy,
    MiSweep,
    MmseSweep,
    Debruijn,
    LimitHigh,
    LimitLow,
    RateFit,
    Epi,
    PyramidJ,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::MiSweep => "mi_sweep",
            Self::MmseSweep => "mmse_sweep",
            Self::Debruijn => "debruijn",
            Self::LimitHigh => "limit_high",
            Self::LimitLow => "limit_low",
            Self::RateFit => "rate_fit",
            Self::Epi => "epi",
            Self::PyramidJ => "pyramid_j",
        }
    }
}

/// One experiment, one JSON document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub signal: Option<DistSpec>,
    /// Second signal for the EPI pair; defaults to `signal`.
    #[serde(default)]
    pub signal2: Option<DistSpec>,
    #[serde(default)]
    pub noise: Option<DistSpec>,
    #[serde(default)]
    pub gamma_grid: Option<GammaGridSpec>,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<String>,
    /// Log-gamma step of the centered finite difference (debruijn).
    #[serde(default)]
    pub fd_step: Option<f64>,
    /// Rotation angle for the Lieb and MMSE forms (epi).
    #[serde(default)]
    pub theta: Option<f64>,
    /// Upper integration limit for the MMSE entropy representation (entropy).
    #[serde(default)]
    pub gamma_max: Option<f64>,
    /// Random points per (gamma, scale) case (pyramid_j).
    #[serde(default)]
    pub probe_points: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config {
            field: "<document>".into(),
            reason: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn require_signal(&self) -> Result<&DistSpec, CliError> {
        self.signal.as_ref().ok_or_else(|| CliError::Config {
            field: "signal".into(),
            reason: "this experiment needs a signal law".into(),
        })
    }

    pub fn require_noise(&self) -> Result<&DistSpec, CliError> {
        self.noise.as_ref().ok_or_else(|| CliError::Config {
            field: "noise".into(),
            reason: "this experiment needs a noise law".into(),
        })
    }

    pub fn grid_or(&self, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        match &self.gamma_grid {
            Some(g) => g.resolve(),
            None => Ok(default),
        }
    }

    pub fn quadrature_config(&self, seed: u64) -> Result<QuadratureConfig, CliError> {
        self.quadrature
            .clone()
            .unwrap_or_default()
            .to_config(seed)
    }
}
