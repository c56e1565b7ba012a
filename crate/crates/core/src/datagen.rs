//! Synthetic instances: AR(1) Gaussian designs, planted sparse truths and
//! logistic or sign labels.

use ndarray::{Array2, ShapeBuilder};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{standardize_columns, Dataset};
use crate::error::{invalid, Result};
use crate::losses::sigmoid;

const STREAM_FEATURES: u64 = 1;
const STREAM_TRUTH: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_LABELS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelModel {
    Logistic,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthModel {
    /// Nonzeros drawn uniformly from `{-1, +1}`, standardized design,
    /// noise rescaled to the requested SNR.
    Pm1,
    /// Nonzeros all `+1`, raw design, noise `N(0, sigma2)`.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub p: usize,
    pub k_true: usize,
    pub rho: f64,
    /// Squared ratio `|X w|^2 / |eps|^2`; `f64::INFINITY` means no noise.
    pub snr: f64,
    pub label_model: LabelModel,
    pub truth_model: TruthModel,
    pub sigma2: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n: usize, p: usize, k_true: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            k_true,
            rho: 0.0,
            snr: f64::INFINITY,
            label_model: LabelModel::Logistic,
            truth_model: TruthModel::Pm1,
            sigma2: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.p < 1 {
            return invalid("n and p must be positive");
        }
        if self.k_true > self.p {
            return invalid(format!("k_true={} exceeds p={}", self.k_true, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return invalid(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.snr > 0.0) {
            return invalid("snr must be positive (use infinity for noiseless labels)");
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return invalid("sigma2 must be finite and nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub data: Dataset,
    pub w_true: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub achieved_snr: f64,
    /// All labels fell in one class; fitting will reject this instance.
    pub one_class: bool,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn raw_features(n: usize, p: usize, rho: f64, seed: u64) -> Array2<f64> {
    let mut r = rng(seed, STREAM_FEATURES);
    let c = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p).f());
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = r.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + c * z };
            x[[i, j]] = v;
            prev = v;
        }
    }
    x
}

/// Rows from `N(0, Sigma)` with `Sigma_ij = rho^|i-j|`, columns then
/// standardized to mean 0 and variance 1.
pub fn gen_features(n: usize, p: usize, rho: f64, seed: u64) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return invalid(format!("rho must lie in [0, 1), got {rho}"));
    }
    let mut x = raw_features(n, p, rho, seed);
    standardize_columns(&mut x);
    Ok(x)
}

/// Exactly `k_true` nonzeros at uniformly random positions.
pub fn gen_truth(p: usize, k_true: usize, model: TruthModel, seed: u64) -> Result<Vec<f64>> {
    if k_true > p {
        return invalid(format!("k_true={k_true} exceeds p={p}"));
    }
    let mut r = rng(seed, STREAM_TRUTH);
    let mut w = vec![0.0; p];
    let mut idx = sample(&mut r, p, k_true).into_vec();
    idx.sort_unstable();
    for j in idx {
        w[j] = match model {
            TruthModel::Binary => 1.0,
            TruthModel::Pm1 => {
                if r.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        };
    }
    Ok(w)
}

/// `+1` for positive arguments, `-1` otherwise (including zero).
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn margins(x: &Array2<f64>, w: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; x.nrows()];
    for (j, &wj) in w.iter().enumerate() {
        if wj != 0.0 {
            for (mi, xij) in m.iter_mut().zip(x.column(j)) {
                *mi += wj * xij;
            }
        }
    }
    m
}

/// Labels and the noise vector used to produce them.
pub fn gen_labels(x: &Array2<f64>, w_true: &[f64], config: &SyntheticConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.ncols() != w_true.len() {
        return invalid(format!("{} columns but {} weights", x.ncols(), w_true.len()));
    }
    let n = x.nrows();
    let signal = margins(x, w_true);
    let mut noise_rng = rng(config.seed, STREAM_NOISE);
    let epsilon: Vec<f64> = match config.truth_model {
        TruthModel::Binary => {
            let sd = config.sigma2.sqrt();
            (0..n).map(|_| sd * noise_rng.sample::<f64, _>(StandardNormal)).collect()
        }
        TruthModel::Pm1 if config.snr.is_infinite() => vec![0.0; n],
        TruthModel::Pm1 => {
            let z: Vec<f64> = (0..n).map(|_| noise_rng.sample(StandardNormal)).collect();
            let zn = norm(&z);
            let scale = if zn > 0.0 { norm(&signal) / (config.snr.sqrt() * zn) } else { 0.0 };
            z.into_iter().map(|v| v * scale).collect()
        }
    };
    let mut label_rng = rng(config.seed, STREAM_LABELS);
    let y = signal
        .iter()
        .zip(&epsilon)
        .map(|(s, e)| {
            let m = s + e;
            match config.label_model {
                LabelModel::Sign => sign(m),
                LabelModel::Logistic => {
                    let u: f64 = label_rng.random();
                    if u < sigmoid(m) {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        })
        .collect();
    Ok((y, epsilon))
}

/// Draws a full instance from `config`.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticInstance> {
    config.validate()?;
    let x = match config.truth_model {
        TruthModel::Pm1 => gen_features(config.n, config.p, config.rho, config.seed)?,
        TruthModel::Binary => raw_features(config.n, config.p, config.rho, config.seed),
    };
    let w_true = gen_truth(config.p, config.k_true, config.truth_model, config.seed)?;
    let (y, epsilon) = gen_labels(&x, &w_true, config)?;
    let en = norm(&epsilon);
    let achieved_snr = if en > 0.0 { (norm(&margins(&x, &w_true)) / en).powi(2) } else { f64::INFINITY };
    let names = (0..config.p).map(|j| format!("x{}", j + 1)).collect();
    let data = Dataset::new(x, y)?.with_names(names)?;
    let one_class = !data.has_both_classes();
    Ok(SyntheticInstance { data, w_true, epsilon, achieved_snr, one_class })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let mut c = SyntheticConfig::new(30, 8, 3, 7);
        c.snr = 4.0;
        c.rho = 0.5;
        assert_eq!(generate(&c).unwrap(), generate(&c).unwrap());
        let mut d = c.clone();
        d.seed = 8;
        assert_ne!(generate(&c).unwrap().data, generate(&d).unwrap().data);
    }

    #[test]
    fn snr_is_exact() {
        let mut c = SyntheticConfig::new(50, 10, 4, 3);
        c.snr = 2.5;
        let inst = generate(&c).unwrap();
        assert!((inst.achieved_snr - 2.5).abs() < 1e-12);
        c.snr = f64::INFINITY;
        let inst = generate(&c).unwrap();
        assert!(inst.epsilon.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn binary_truth_all_ones() {
        assert_eq!(gen_truth(5, 5, TruthModel::Binary, 1).unwrap(), vec![1.0; 5]);
        assert!(gen_truth(3, 4, TruthModel::Pm1, 1).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = SyntheticConfig::new(10, 4, 2, 0);
        c.rho = 1.0;
        assert!(generate(&c).is_err());
        c.rho = 0.0;
        c.snr = 0.0;
        assert!(generate(&c).is_err());
    }
}
