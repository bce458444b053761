//! Effective run configuration: flags over config file over defaults.

use crate::error::{CliError, CliResult};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Spatial dimension (2 or 3).
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Highest harmonic degree analysed.
    #[arg(long)]
    pub mmax: Option<usize>,
    /// Bessel zeros tested per degree.
    #[arg(long)]
    pub zeros: Option<usize>,
    /// Dirichlet eigenfunctions per mode.
    #[arg(long)]
    pub eigs: Option<usize>,
    #[arg(long = "t-samples")]
    pub t_samples: Option<usize>,
    /// Angular resolution (circle nodes for n = 2, polar nodes for n = 3).
    #[arg(long)]
    pub angular: Option<usize>,
    /// Spherical-mean evaluation: `zonal` or `quadrature`.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<smrt::MeanMethod>,
    /// Sphere quadrature resolution for `--method quadrature` (defaults to `--angular`).
    #[arg(long)]
    pub quad: Option<usize>,
    /// Range-test tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// JSON configuration file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write tidy CSV tables for external plotting.
    #[arg(long = "emit-plot-data")]
    pub emit_plot_data: bool,
}

/// Contents of a `--config` file; every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dimension: Option<usize>,
    pub m_max: Option<usize>,
    pub zeros: Option<usize>,
    pub eigs: Option<usize>,
    pub t_samples: Option<usize>,
    pub t_max: Option<f64>,
    pub angular: Option<usize>,
    pub method: Option<smrt::MeanMethod>,
    pub quad: Option<usize>,
    pub r_samples: Option<usize>,
    pub tol: Option<f64>,
    pub extension_tol: Option<f64>,
    pub k_max: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dimension: usize,
    pub m_max: usize,
    pub zeros: usize,
    pub eigs: usize,
    pub t_samples: usize,
    pub t_max: f64,
    pub angular: usize,
    pub method: smrt::MeanMethod,
    pub quad: usize,
    pub r_samples: usize,
    pub tol: f64,
    pub extension_tol: f64,
    pub k_max: usize,
    pub samples: usize,
    pub seed: u64,
}

pub fn default_angular(n: usize) -> usize {
    if n == 3 {
        32
    } else {
        256
    }
}

impl RunConfig {
    /// Merges flags, the optional config file and defaults. `dimension` is a
    /// fallback used when neither flags nor file set one (e.g. taken from a phantom).
    pub fn resolve(args: &CommonArgs, dimension: Option<usize>) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let ext = smrt::darboux::ExtensionConfig::default();
        let n = args.dimension.or(file.dimension).or(dimension).unwrap_or(2);
        let angular = args.angular.or(file.angular).unwrap_or(default_angular(n));
        let cfg = Self {
            dimension: n,
            m_max: args.mmax.or(file.m_max).unwrap_or(ext.m_max),
            zeros: args.zeros.or(file.zeros).unwrap_or(ext.q_max),
            eigs: args.eigs.or(file.eigs).unwrap_or(ext.eigs),
            t_samples: args.t_samples.or(file.t_samples).unwrap_or(smrt::TGrid::default().samples),
            t_max: file.t_max.unwrap_or(smrt::TGrid::default().t_max),
            angular,
            method: args.method.or(file.method).unwrap_or_default(),
            quad: args.quad.or(file.quad).unwrap_or(angular),
            r_samples: file.r_samples.unwrap_or(ext.profile_samples),
            tol: args.tol.or(file.tol).unwrap_or(ext.range_tolerance),
            extension_tol: file.extension_tol.unwrap_or(ext.tolerance),
            k_max: file.k_max.unwrap_or(3),
            samples: file.samples.unwrap_or(ext.samples),
            seed: file.seed.unwrap_or(ext.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !smrt::SUPPORTED_DIMENSIONS.contains(&self.dimension) {
            return Err(CliError::Unsupported(format!("dimension n = {}; supported: 2, 3", self.dimension)));
        }
        for (name, v) in [
            ("zeros", self.zeros),
            ("eigs", self.eigs),
            ("t-samples", self.t_samples),
            ("angular", self.angular),
            ("quad", self.quad),
            ("r-samples", self.r_samples),
            ("samples", self.samples),
        ] {
            if v == 0 {
                return Err(CliError::Input(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("tol", self.tol), ("extension-tol", self.extension_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::Input(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(CliError::Input(format!("t_max must be positive, got {}", self.t_max)));
        }
        Ok(())
    }

    pub fn t_grid(&self) -> CliResult<smrt::TGrid> {
        Ok(smrt::TGrid::new(self.t_samples, self.t_max)?)
    }

    pub fn extension(&self) -> smrt::darboux::ExtensionConfig {
        smrt::darboux::ExtensionConfig {
            m_max: self.m_max,
            eigs: self.eigs,
            q_max: self.zeros,
            range_tolerance: self.tol,
            tolerance: self.extension_tol,
            samples: self.samples,
            seed: self.seed,
            profile_samples: self.r_samples,
            method: self.method,
            ..Default::default()
        }
    }
}

fn read_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_method(s: &str) -> Result<smrt::MeanMethod, String> {
    match s {
        "zonal" => Ok(smrt::MeanMethod::Zonal),
        "quadrature" => Ok(smrt::MeanMethod::Quadrature),
        _ => Err(format!("expected `zonal` or `quadrature`, got `{s}`")),
    }
}
