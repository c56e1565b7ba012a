//! Browser bindings. Each exported function takes plain numbers and returns
//! a JSON string; the `*_json` twins do the work and are tested natively.

use serde::Serialize;
use sparsecls::datagen::{generate, LabelModel, SyntheticConfig};
use sparsecls::metrics::recovery;
use sparsecls::oa::{fit_sparse_logged, IterationRecord};
use sparsecls::theory::{
    disagreement_prob, exact_mean_z, failure_tail, mean_z_lower_bound, n0_threshold, orthant2, q_of_ell, TheoryParams,
};
use sparsecls::{Error, FitOptions, LossKind};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
struct ErrorOut {
    error: String,
}

fn to_json<T: Serialize>(r: Result<T, Error>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => serde_json::to_string(&ErrorOut { error: e.to_string() }).expect("serializable"),
    }
}

#[derive(Debug, Serialize)]
pub struct EllPoint {
    pub ell: usize,
    pub q: f64,
    pub mean_z: Option<f64>,
    pub mean_z_lower: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct TailPoint {
    pub n: u64,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct TheoryCurves {
    pub k: usize,
    pub p: usize,
    pub sigma2: f64,
    pub n0: u64,
    pub ell: Vec<EllPoint>,
    pub tail: Vec<TailPoint>,
}

/// `q(ell)` and the mean gap of `Z` for every `ell <= k`, plus the
/// failure-tail bound on 40 sample sizes from `n0` to `3 n0`.
pub fn theory_curves_json(k: usize, p: usize, sigma2: f64) -> String {
    to_json(theory_curves(k, p, sigma2))
}

fn theory_curves(k: usize, p: usize, sigma2: f64) -> Result<TheoryCurves, Error> {
    let n0 = n0_threshold(k, p, sigma2)?;
    let ell = (0..=k)
        .map(|l| {
            let t = TheoryParams::new(k, p, sigma2, l)?;
            Ok(EllPoint {
                ell: l,
                q: q_of_ell(&t),
                mean_z: (l < k).then(|| exact_mean_z(&t)),
                mean_z_lower: if l < k { Some(mean_z_lower_bound(&t)?) } else { None },
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let span = (2 * n0).max(40);
    let tail = (0..40u64)
        .map(|i| {
            let n = n0 + i * span / 39;
            Ok(TailPoint { n, bound: failure_tail(n, k, p, sigma2)? })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(TheoryCurves { k, p, sigma2, n0, ell, tail })
}

#[derive(Debug, Serialize)]
pub struct DemoStep {
    pub iteration: usize,
    pub eta: f64,
    pub lower_bound: f64,
    pub c_s: f64,
    pub best: f64,
    pub support: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct DemoFit {
    pub truth: Vec<usize>,
    pub support: Vec<usize>,
    pub w: Vec<f64>,
    pub objective: f64,
    pub certified: bool,
    pub cuts_used: usize,
    pub accuracy: usize,
    pub false_discoveries: usize,
    pub steps: Vec<DemoStep>,
}

/// Generates a logistic-label instance and fits it, returning the outer
/// approximation trace.
#[allow(clippy::too_many_arguments)]
pub fn fit_demo_json(
    n: usize,
    p: usize,
    k_true: usize,
    k: usize,
    gamma: f64,
    hinge: bool,
    rho: f64,
    seed: u64,
) -> String {
    to_json(fit_demo(n, p, k_true, k, gamma, hinge, rho, seed))
}

#[allow(clippy::too_many_arguments)]
fn fit_demo(n: usize, p: usize, k_true: usize, k: usize, gamma: f64, hinge: bool, rho: f64, seed: u64) -> Result<DemoFit, Error> {
    let mut cfg = SyntheticConfig::new(n, p, k_true, seed);
    cfg.rho = rho;
    cfg.label_model = LabelModel::Logistic;
    let inst = generate(&cfg)?;
    let kind = if hinge { LossKind::Hinge } else { LossKind::Logistic };
    let opts = FitOptions::new(gamma, kind).with_max_cuts(300);
    let mut steps = Vec::new();
    let fit = fit_sparse_logged(&inst.data, k, &opts, &mut |r: &IterationRecord| {
        steps.push(DemoStep {
            iteration: r.iteration,
            eta: r.eta,
            lower_bound: r.lower_bound,
            c_s: r.c_s,
            best: r.best,
            support: r.support.clone(),
        })
    })?;
    let rec = recovery(&fit.w, &inst.w_true)?;
    Ok(DemoFit {
        truth: (0..p).filter(|&j| inst.w_true[j] != 0.0).collect(),
        support: fit.s.indices(),
        objective: fit.objective,
        certified: fit.certified,
        cuts_used: fit.cuts_used,
        accuracy: rec.accuracy_count,
        false_discoveries: rec.false_count,
        w: fit.w,
        steps,
    })
}

#[derive(Debug, Serialize)]
pub struct Disagreement {
    pub probability: f64,
    pub orthant_at_cosine: f64,
}

/// `P(sign(x'w) != sign(x'w' + sigma e))` for standard normal `x, e`, with the
/// matching bivariate orthant probability.
pub fn disagreement_json(w: &[f64], w_prime: &[f64], sigma: f64) -> String {
    to_json(disagreement(w, w_prime, sigma))
}

fn disagreement(w: &[f64], w_prime: &[f64], sigma: f64) -> Result<Disagreement, Error> {
    let probability = disagreement_prob(w, w_prime, sigma)?;
    let dot: f64 = w.iter().zip(w_prime).map(|(a, b)| a * b).sum();
    let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = (w_prime.iter().map(|a| a * a).sum::<f64>() + sigma * sigma).sqrt();
    let rho = (dot / (nw * nv)).clamp(-1.0, 1.0);
    Ok(Disagreement { probability, orthant_at_cosine: orthant2(rho)? })
}

#[wasm_bindgen]
pub fn theory_curves_js(k: usize, p: usize, sigma2: f64) -> String {
    theory_curves_json(k, p, sigma2)
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn fit_demo_js(n: usize, p: usize, k_true: usize, k: usize, gamma: f64, hinge: bool, rho: f64, seed: u32) -> String {
    fit_demo_json(n, p, k_true, k, gamma, hinge, rho, seed as u64)
}

#[wasm_bindgen]
pub fn disagreement_js(w: Vec<f64>, w_prime: Vec<f64>, sigma: f64) -> String {
    disagreement_json(&w, &w_prime, sigma)
}
