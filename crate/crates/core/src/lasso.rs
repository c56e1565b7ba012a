//! L1-penalized baselines: logistic lasso and a Huber-smoothed L1-SVM,
//! both solved by proximal gradient with Barzilai-Borwein steps and
//! backtracking. The intercept is never penalized.

use serde::Serialize;

use crate::data::Dataset;
use crate::dual::best_intercept;
use crate::error::{invalid, Error, Result};
use crate::losses::{sigmoid, softplus, LossKind};

/// Relative threshold below which a coefficient counts as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Final smoothing level of the L1-SVM continuation.
pub const SVM_MU_FINAL: f64 = 1e-4;

const MU_SCHEDULE: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, SVM_MU_FINAL];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub w: Vec<f64>,
    pub b: f64,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoFit {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    pub support_size: usize,
    pub path: Option<Vec<PathPoint>>,
    /// Unpenalized loss plus `lambda * |w|_1`, with the exact (unsmoothed)
    /// hinge for the SVM.
    pub objective: f64,
    /// First-order residual of the last solved subproblem.
    pub residual: f64,
    pub iterations: usize,
    /// Huber smoothing level of the last subproblem (SVM only).
    pub mu: Option<f64>,
    /// Penalized objective after every accepted step of the last subproblem.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100_000 }
    }
}

/// Number of entries with `|w_j| > 1e-8 * max|w|`.
pub fn support_size(w: &[f64]) -> usize {
    let m = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0;
    }
    w.iter().filter(|v| v.abs() > SUPPORT_THRESHOLD * m).count()
}

#[derive(Debug, Clone, Copy)]
enum Smooth {
    Logistic,
    /// Hinge with a quadratic zone of width `mu` near the kink.
    Huber(f64),
}

impl Smooth {
    /// Loss value and derivative in the score.
    #[inline]
    fn eval(self, y: f64, u: f64) -> (f64, f64) {
        match self {
            Smooth::Logistic => (softplus(-y * u), -y * sigmoid(-y * u)),
            Smooth::Huber(mu) => {
                let m = 1.0 - y * u;
                if m <= 0.0 {
                    (0.0, 0.0)
                } else if m < mu {
                    (m * m / (2.0 * mu), -y * m / mu)
                } else {
                    (m - 0.5 * mu, -y)
                }
            }
        }
    }
}

/// Soft thresholding; values within rounding of the threshold map to zero.
fn soft(v: f64, t: f64) -> f64 {
    if v.abs() <= t * (1.0 + 16.0 * f64::EPSILON) {
        0.0
    } else if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

struct Problem<'a> {
    data: &'a Dataset,
    lambda: f64,
    loss: Smooth,
}

impl Problem<'_> {
    fn smooth_value(&self, w: &[f64], b: f64) -> f64 {
        let u = self.data.scores(w, b);
        u.iter().zip(self.data.y()).map(|(&ui, &yi)| self.loss.eval(yi, ui).0).sum()
    }

    /// Smooth value, feature gradient and intercept gradient.
    fn value_grad(&self, w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
        let u = self.data.scores(w, b);
        let mut f = 0.0;
        let mut du = vec![0.0; u.len()];
        for (i, (&ui, &yi)) in u.iter().zip(self.data.y()).enumerate() {
            let (v, d) = self.loss.eval(yi, ui);
            f += v;
            du[i] = d;
        }
        let g = (0..self.data.p())
            .map(|j| self.data.col(j).iter().zip(&du).map(|(x, d)| x * d).sum())
            .collect();
        (f, g, du.iter().sum())
    }

    fn residual(&self, w: &[f64], g: &[f64], gb: f64) -> f64 {
        w.iter()
            .zip(g)
            .map(|(&wj, &gj)| (wj - soft(wj - gj, self.lambda)).abs())
            .fold(gb.abs(), f64::max)
    }
}

struct Solve {
    w: Vec<f64>,
    b: f64,
    residual: f64,
    iterations: usize,
    trace: Vec<f64>,
    converged: bool,
}

fn prox_gradient(prob: &Problem<'_>, mut w: Vec<f64>, mut b: f64, opts: &LassoOptions) -> Solve {
    let lambda = prob.lambda;
    let (mut f, mut g, mut gb) = prob.value_grad(&w, b);
    let mut obj = f + lambda * l1(&w);
    let mut trace = vec![obj];
    let mut step = 1.0 / (prob.data.n() as f64).max(1.0);
    let mut prev: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
    let mut residual = prob.residual(&w, &g, gb);
    let mut iterations = 0;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        if let Some((pw, pb, pg, pgb)) = &prev {
            let mut ss = (b - pb).powi(2);
            let mut sy = (b - pb) * (gb - pgb);
            for j in 0..w.len() {
                let s = w[j] - pw[j];
                ss += s * s;
                sy += s * (g[j] - pg[j]);
            }
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-12, 1e12);
            }
        }
        let mut accepted = None;
        while step > 1e-20 {
            let nw: Vec<f64> = w.iter().zip(&g).map(|(wj, gj)| soft(wj - step * gj, step * lambda)).collect();
            let nb = b - step * gb;
            let mut lin = (nb - b) * gb;
            let mut sq = (nb - b).powi(2);
            for j in 0..w.len() {
                let d = nw[j] - w[j];
                lin += d * g[j];
                sq += d * d;
            }
            let nf = prob.smooth_value(&nw, nb);
            let nobj = nf + lambda * l1(&nw);
            // A few ulps of slack so progress below rounding level is not
            // mistaken for a failed step.
            let slack = 8.0 * f64::EPSILON * obj.abs().max(f.abs());
            if nf <= f + lin + sq / (2.0 * step) + slack && nobj <= obj + slack {
                accepted = Some((nw, nb, nobj));
                break;
            }
            step *= 0.5;
        }
        let Some((nw, nb, nobj)) = accepted else {
            break;
        };
        let (nf, ng, ngb) = prob.value_grad(&nw, nb);
        prev = Some((std::mem::replace(&mut w, nw), b, std::mem::replace(&mut g, ng), gb));
        b = nb;
        gb = ngb;
        f = nf;
        obj = nobj;
        trace.push(obj);
        residual = prob.residual(&w, &g, gb);
    }
    let converged = residual <= opts.tol;
    if converged {
        // Coordinates the prox step would zero and that are already within
        // tolerance of zero are exactly zero at the limit point.
        for (wj, &gj) in w.iter_mut().zip(&g) {
            if wj.abs() <= opts.tol && soft(*wj - gj, lambda) == 0.0 {
                *wj = 0.0;
            }
        }
    }
    Solve { w, b, residual, iterations, trace, converged }
}

fn check(data: &Dataset, lambda: f64, opts: &LassoOptions) -> Result<()> {
    data.require_both_classes()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("lambda must be a finite nonnegative number, got {lambda}"));
    }
    if !(opts.tol > 0.0) {
        return invalid("tol must be positive");
    }
    Ok(())
}

fn exact_objective(data: &Dataset, w: &[f64], b: f64, lambda: f64, kind: LossKind) -> f64 {
    let u = data.scores(w, b);
    let loss: f64 = u
        .iter()
        .zip(data.y())
        .map(|(&ui, &yi)| kind.value_unchecked(yi, ui))
        .sum();
    loss + lambda * l1(w)
}

fn finish(data: &Dataset, lambda: f64, kind: LossKind, s: Solve, iterations: usize, mu: Option<f64>) -> Result<LassoFit> {
    let fit = LassoFit {
        objective: exact_objective(data, &s.w, s.b, lambda, kind),
        support_size: support_size(&s.w),
        w: s.w,
        b: s.b,
        lambda,
        path: None,
        residual: s.residual,
        iterations,
        mu,
        objective_trace: s.trace,
    };
    if s.converged {
        Ok(fit)
    } else {
        Err(Error::LassoBudget(Box::new(fit)))
    }
}

fn start(data: &Dataset, warm: Option<(&[f64], f64)>, kind: LossKind) -> (Vec<f64>, f64) {
    match warm {
        Some((w, b)) => (w.to_vec(), b),
        None => (vec![0.0; data.p()], best_intercept(data.y(), &vec![0.0; data.n()], kind)),
    }
}

/// Minimizes `sum_i log(1 + exp(-y_i (w'x_i + b))) + lambda |w|_1`.
pub fn fit_lasso_logistic(data: &Dataset, lambda: f64, tol: f64) -> Result<LassoFit> {
    fit_lasso_logistic_with(data, lambda, &LassoOptions { tol, ..Default::default() }, None)
}

pub fn fit_lasso_logistic_with(
    data: &Dataset,
    lambda: f64,
    opts: &LassoOptions,
    warm: Option<(&[f64], f64)>,
) -> Result<LassoFit> {
    check(data, lambda, opts)?;
    let (w, b) = start(data, warm, LossKind::Logistic);
    let prob = Problem { data, lambda, loss: Smooth::Logistic };
    let s = prox_gradient(&prob, w, b, opts);
    let it = s.iterations;
    finish(data, lambda, LossKind::Logistic, s, it, None)
}

/// Minimizes `sum_i max(0, 1 - y_i (w'x_i + b)) + lambda |w|_1` through a
/// sequence of Huber-smoothed problems with `mu = 1, 0.1, ..., 1e-4`, each
/// warm-started from the previous one.
pub fn fit_lasso_svm(data: &Dataset, lambda: f64, tol: f64) -> Result<LassoFit> {
    fit_lasso_svm_with(data, lambda, &LassoOptions { tol, ..Default::default() }, None)
}

pub fn fit_lasso_svm_with(
    data: &Dataset,
    lambda: f64,
    opts: &LassoOptions,
    warm: Option<(&[f64], f64)>,
) -> Result<LassoFit> {
    check(data, lambda, opts)?;
    let (mut w, mut b) = start(data, warm, LossKind::Hinge);
    let mut total = 0;
    for (stage, &mu) in MU_SCHEDULE.iter().enumerate() {
        let prob = Problem { data, lambda, loss: Smooth::Huber(mu) };
        let s = prox_gradient(&prob, w, b, opts);
        total += s.iterations;
        if stage + 1 == MU_SCHEDULE.len() || !s.converged {
            return finish(data, lambda, LossKind::Hinge, s, total, Some(mu));
        }
        w = s.w;
        b = s.b;
    }
    unreachable!("schedule is nonempty")
}

/// Smallest `lambda` for which `w = 0` is optimal, computed from the
/// gradient at the intercept-only optimum.
pub fn lambda_max(data: &Dataset, kind: LossKind) -> f64 {
    let (loss, b) = match kind {
        LossKind::Logistic => (Smooth::Logistic, best_intercept(data.y(), &vec![0.0; data.n()], kind)),
        _ => {
            let loss = Smooth::Huber(SVM_MU_FINAL);
            (loss, smooth_intercept(data.y(), loss))
        }
    };
    let du: Vec<f64> = data.y().iter().map(|&y| loss.eval(y, b).1).collect();
    (0..data.p())
        .map(|j| data.col(j).iter().zip(&du).map(|(x, d)| x * d).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Minimizer over `b` of `sum_i loss(y_i, b)` by bisection on the
/// nondecreasing derivative.
fn smooth_intercept(y: &[f64], loss: Smooth) -> f64 {
    let slope = |b: f64| y.iter().map(|&yi| loss.eval(yi, b).1).sum::<f64>();
    let (mut lo, mut hi) = (-2.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * 4.0 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `count` values decreasing geometrically from `lambda_max` to
/// `1e-4 * lambda_max`.
pub fn lambda_grid(data: &Dataset, count: usize) -> Result<Vec<f64>> {
    lambda_grid_for(data, count, LossKind::Logistic)
}

pub fn lambda_grid_for(data: &Dataset, count: usize, kind: LossKind) -> Result<Vec<f64>> {
    if count < 2 {
        return invalid("lambda grid needs at least two points");
    }
    let top = lambda_max(data, kind);
    if !(top > 0.0) {
        return invalid("lambda_max is zero; every column is orthogonal to the residual");
    }
    let ratio = 1e-4f64;
    Ok((0..count)
        .map(|i| top * ratio.powf(i as f64 / (count - 1) as f64))
        .collect())
}

/// Fits every `lambda` in order, warm-starting each fit from the previous
/// one. The returned fit is the last one, carrying the whole path.
pub fn lasso_path(data: &Dataset, lambdas: &[f64], kind: LossKind, opts: &LassoOptions) -> Result<LassoFit> {
    if lambdas.is_empty() {
        return invalid("empty lambda sequence");
    }
    let mut path = Vec::with_capacity(lambdas.len());
    let mut last: Option<LassoFit> = None;
    for &lambda in lambdas {
        let warm = last.as_ref().map(|f| (f.w.as_slice(), f.b));
        let fit = match kind {
            LossKind::Logistic => fit_lasso_logistic_with(data, lambda, opts, warm),
            _ => fit_lasso_svm_with(data, lambda, opts, warm),
        };
        let fit = match fit {
            Ok(f) => f,
            Err(Error::LassoBudget(f)) => *f,
            Err(e) => return Err(e),
        };
        path.push(PathPoint { lambda, w: fit.w.clone(), b: fit.b, support_size: fit.support_size });
        last = Some(fit);
    }
    let mut fit = last.expect("nonempty path");
    fit.path = Some(path);
    Ok(fit)
}

/// Path point with the largest support not exceeding `k`; ties go to the
/// larger `lambda`.
pub fn select_for_size(path: &[PathPoint], k: usize) -> Option<&PathPoint> {
    let mut best: Option<&PathPoint> = None;
    for pt in path {
        if pt.support_size <= k && best.map_or(true, |b| pt.support_size > b.support_size) {
            best = Some(pt);
        }
    }
    best
}
