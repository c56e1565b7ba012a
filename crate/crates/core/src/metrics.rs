//! Support recovery and predictive metrics, plus single-split
//! cross-validation over `k` (or `lambda`) and `gamma`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::Dataset;
use crate::datagen::sign;
use crate::error::{invalid, Error, Result};
use crate::lasso::{lambda_grid_for, lasso_path, LassoOptions, SUPPORT_THRESHOLD};
use crate::losses::LossKind;
use crate::oa::{fit_sparse, FitOptions};
use crate::par::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecoveryReport {
    /// Selected features that are truly relevant, `A(w)`.
    pub accuracy_count: usize,
    /// Selected features that are irrelevant, `F(w)`.
    pub false_count: usize,
    pub support_size: usize,
    /// All relevant features found and nothing else.
    pub perfect: bool,
}

fn nonzero_mask(w: &[f64]) -> Vec<bool> {
    let m = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    w.iter().map(|v| m > 0.0 && v.abs() > SUPPORT_THRESHOLD * m).collect()
}

pub fn recovery(w: &[f64], w_true: &[f64]) -> Result<RecoveryReport> {
    if w.len() != w_true.len() {
        return invalid(format!("{} coefficients against {} true ones", w.len(), w_true.len()));
    }
    let sel = nonzero_mask(w);
    let truth = nonzero_mask(w_true);
    let accuracy_count = sel.iter().zip(&truth).filter(|(s, t)| **s && **t).count();
    let false_count = sel.iter().zip(&truth).filter(|(s, t)| **s && !**t).count();
    let k_true = truth.iter().filter(|t| **t).count();
    Ok(RecoveryReport {
        accuracy_count,
        false_count,
        support_size: accuracy_count + false_count,
        perfect: accuracy_count == k_true && false_count == 0,
    })
}

/// Mann-Whitney estimate of `P(score_+ > score_-)`, ties counted one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return invalid("scores and labels differ in length");
    }
    if scores.iter().any(|s| s.is_nan()) {
        return invalid("scores contain NaN");
    }
    let n_pos = labels.iter().filter(|&&l| l > 0.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of average ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] > 0.0 {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

pub fn misclass_rate(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return invalid("predictions and labels differ in length");
    }
    if labels.is_empty() {
        return Err(Error::UndefinedMetric("no samples".into()));
    }
    let wrong = predictions.iter().zip(labels).filter(|(p, l)| p != l).count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// `sign(score)` with ties sent to `-1`.
pub fn predict(scores: &[f64]) -> Vec<f64> {
    scores.iter().map(|&s| sign(s)).collect()
}

/// Seven log-spaced values over `[1e-3, 1e3] / n`.
pub fn default_gamma_grid(n: usize) -> Vec<f64> {
    (0..7).map(|i| 10f64.powi(i - 3) / n as f64).collect()
}

/// Stratified random split: each class contributes `round(train_fraction
/// * class size)` samples to the training side. Indices are returned sorted.
pub fn stratified_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return invalid(format!("train fraction must lie in (0, 1), got {train_fraction}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..data.n()).filter(|&i| data.y()[i] == class).collect();
        idx.shuffle(&mut rng);
        let cut = (train_fraction * idx.len() as f64).round() as usize;
        if cut < 1 || cut >= idx.len() {
            return invalid(format!(
                "split leaves an empty side for class {class:+} ({} samples)",
                idx.len()
            ));
        }
        train.extend_from_slice(&idx[..cut]);
        val.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMethod {
    Sparse,
    Lasso,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub method: CvMethod,
    pub kind: LossKind,
    pub k_grid: Vec<usize>,
    /// Empty means [`default_gamma_grid`] on the training size.
    pub gamma_grid: Vec<f64>,
    /// Number of lambdas for the lasso path.
    pub lambda_count: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// Template for the sparse fits; `gamma` is overwritten per grid point.
    pub fit: FitOptions,
    pub lasso: LassoOptions,
}

impl CvOptions {
    pub fn new(method: CvMethod, kind: LossKind, k_grid: Vec<usize>, seed: u64) -> Self {
        Self {
            method,
            kind,
            k_grid,
            gamma_grid: Vec::new(),
            lambda_count: 30,
            train_fraction: 0.8,
            seed,
            fit: FitOptions::new(1.0, kind),
            lasso: LassoOptions::default(),
        }
    }
}

/// Validation metrics for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvRow {
    pub k: Option<usize>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub support_size: usize,
    pub val_auc: f64,
    pub val_misclass: f64,
    pub certified: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub k_star: Option<usize>,
    pub gamma_star: Option<f64>,
    pub lambda_star: Option<f64>,
    pub table: Vec<CvRow>,
}

fn validation_metrics(val: &Dataset, w: &[f64], b: f64) -> Result<(f64, f64)> {
    let s = val.scores(w, b);
    Ok((auc(&s, val.y())?, misclass_rate(&predict(&s), val.y())?))
}

/// Fits every grid point on the training part of one stratified split and
/// selects the best validation AUC. Ties go to the smaller `k`, then the
/// larger `gamma`; for the lasso, to the larger `lambda`.
pub fn cross_validate(data: &Dataset, opts: &CvOptions) -> Result<CvResult> {
    let (tr, va) = stratified_split(data, opts.train_fraction, opts.seed)?;
    let train = data.subset(&tr);
    let val = data.subset(&va);
    match opts.method {
        CvMethod::Sparse => cv_sparse(&train, &val, opts),
        CvMethod::Lasso => cv_lasso(&train, &val, opts),
    }
}

fn cv_sparse(train: &Dataset, val: &Dataset, opts: &CvOptions) -> Result<CvResult> {
    if opts.k_grid.is_empty() {
        return invalid("empty k grid");
    }
    if let Some(&k) = opts.k_grid.iter().find(|&&k| k < 1 || k > train.p()) {
        return invalid(format!("k={k} outside 1..={}", train.p()));
    }
    let gammas = if opts.gamma_grid.is_empty() {
        default_gamma_grid(train.n())
    } else {
        opts.gamma_grid.clone()
    };
    let points: Vec<(usize, f64)> = opts
        .k_grid
        .iter()
        .flat_map(|&k| gammas.iter().map(move |&g| (k, g)))
        .collect();
    let table: Vec<CvRow> = par_map(&points, |&(k, gamma)| {
        let fo = FitOptions { gamma, ..opts.fit };
        let mut row = CvRow {
            k: Some(k),
            gamma: Some(gamma),
            lambda: None,
            support_size: 0,
            val_auc: f64::NAN,
            val_misclass: f64::NAN,
            certified: None,
            error: None,
        };
        match fit_sparse(train, k, &fo).and_then(|f| {
            let m = validation_metrics(val, &f.w, f.b)?;
            Ok((f, m))
        }) {
            Ok((f, (a, m))) => {
                row.support_size = f.s.count();
                row.val_auc = a;
                row.val_misclass = m;
                row.certified = Some(f.certified);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    });
    let best = table
        .iter()
        .filter(|r| r.error.is_none())
        .max_by(|a, b| {
            a.val_auc
                .total_cmp(&b.val_auc)
                .then(b.k.cmp(&a.k))
                .then(a.gamma.unwrap().total_cmp(&b.gamma.unwrap()))
        })
        .ok_or_else(|| Error::InvalidInput("every grid point failed".into()))?;
    Ok(CvResult { k_star: best.k, gamma_star: best.gamma, lambda_star: None, table: table.clone() })
}

fn cv_lasso(train: &Dataset, val: &Dataset, opts: &CvOptions) -> Result<CvResult> {
    let lambdas = lambda_grid_for(train, opts.lambda_count.max(2), opts.kind)?;
    let fit = lasso_path(train, &lambdas, opts.kind, &opts.lasso)?;
    let path = fit.path.unwrap_or_default();
    let mut table = Vec::with_capacity(path.len());
    for pt in &path {
        let (a, m) = validation_metrics(val, &pt.w, pt.b)?;
        table.push(CvRow {
            k: None,
            gamma: None,
            lambda: Some(pt.lambda),
            support_size: pt.support_size,
            val_auc: a,
            val_misclass: m,
            certified: None,
            error: None,
        });
    }
    let best = table
        .iter()
        .max_by(|a, b| {
            a.val_auc
                .total_cmp(&b.val_auc)
                .then(a.lambda.unwrap().total_cmp(&b.lambda.unwrap()))
        })
        .expect("nonempty path");
    Ok(CvResult { k_star: None, gamma_star: None, lambda_star: best.lambda, table: table.clone() })
}
