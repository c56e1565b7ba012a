//! Configuration file: TOML with one optional table per command. Command
//! line flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sparsecls::datagen::{LabelModel, TruthModel};

use crate::error::{io_error, CliError, CliResult};
use crate::method::Method;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "SPARSECLS_OUT";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub gen: GenConfig,
    pub fit: FitConfig,
    pub sweep: SweepConfig,
    pub theory: TheoryConfig,
    pub cv: CvConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub out: Option<PathBuf>,
    pub n: usize,
    pub p: usize,
    pub k_true: usize,
    pub rho: f64,
    pub snr: f64,
    pub label_model: LabelModel,
    pub truth_model: TruthModel,
    pub sigma2: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            out: None,
            n: 200,
            p: 50,
            k_true: 5,
            rho: 0.0,
            snr: f64::INFINITY,
            label_model: LabelModel::Logistic,
            truth_model: TruthModel::Pm1,
            sigma2: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub standardize: bool,
    pub method: Method,
    pub k: Option<usize>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_cuts: usize,
    pub lambda_count: usize,
    pub timing: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            out: None,
            data: None,
            standardize: false,
            method: Method::SparseLogistic,
            k: None,
            gamma: None,
            lambda: None,
            tol: None,
            max_cuts: 1000,
            lambda_count: 100,
            timing: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Sparse methods use `k`; the lasso uses the largest path support not
    /// exceeding `k`.
    Fixed,
    /// `k` (sparse) or `lambda` (lasso) chosen on a validation split.
    Cv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub out: Option<PathBuf>,
    pub p: usize,
    pub k_true: usize,
    pub rho: f64,
    pub snr: f64,
    pub label_model: LabelModel,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub selection: Selection,
    /// Fixed support size; defaults to `k_true`.
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
    /// Ridge parameter for every sparse method; per-loss defaults otherwise.
    pub gamma: Option<f64>,
    pub max_cuts: usize,
    pub tol: Option<f64>,
    pub n_test: usize,
    pub lambda_count: usize,
    pub train_fraction: f64,
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            out: None,
            p: 200,
            k_true: 10,
            rho: 0.3,
            snr: f64::INFINITY,
            label_model: LabelModel::Logistic,
            n_grid: vec![100, 200, 300, 400, 500, 600],
            replications: 10,
            seed: 0,
            methods: vec![Method::SparseLogistic, Method::LassoLogistic],
            selection: Selection::Fixed,
            k: None,
            k_grid: Vec::new(),
            gamma: None,
            max_cuts: 200,
            tol: None,
            n_test: 1000,
            lambda_count: 50,
            train_fraction: 0.8,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Monte Carlo draws per closed form (orthant rows use ten times more).
    pub samples: usize,
    pub k: usize,
    pub p: usize,
    pub sigma2: Vec<f64>,
    /// Sample sizes for the large-deviation comparison.
    pub n_grid: Vec<usize>,
    /// Offsets above `n0` for the failure-tail comparison.
    pub n_offsets: Vec<u64>,
    pub trials: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            out: None,
            seed: 0,
            samples: 1_000_000,
            k: 2,
            p: 6,
            sigma2: vec![0.0, 0.25, 1.0],
            n_grid: vec![5, 10, 20, 40, 80],
            n_offsets: vec![0, 100, 200],
            trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub standardize: bool,
    pub method: Method,
    pub k_grid: Vec<usize>,
    pub gamma_grid: Vec<f64>,
    pub lambda_count: usize,
    pub train_fraction: f64,
    pub max_cuts: usize,
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            out: None,
            data: None,
            standardize: false,
            method: Method::SparseLogistic,
            k_grid: (1..=10).collect(),
            gamma_grid: Vec::new(),
            lambda_count: 30,
            train_fraction: 0.8,
            max_cuts: 1000,
            tol: None,
            seed: 0,
        }
    }
}

pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Flag, then environment, then file, then `default`.
pub fn output_dir(flag: Option<&Path>, file: Option<&Path>, default: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    file.map_or_else(|| PathBuf::from(default), Path::to_path_buf)
}
