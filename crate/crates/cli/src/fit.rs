use std::path::{Path, PathBuf};

use serde::Serialize;
use sparsecls::io::load_csv;
use sparsecls::lasso::{
    fit_lasso_logistic_with, fit_lasso_svm_with, lambda_grid_for, lasso_path, select_for_size, LassoFit, LassoOptions,
};
use sparsecls::oa::{fit_sparse_logged, IterationRecord};
use sparsecls::{Dataset, Error, FitOptions};

use crate::config::{output_dir, FitConfig};
use crate::error::{usage, CliResult, EXIT_BUDGET, EXIT_OK};
use crate::method::Method;
use crate::output::{ensure_dir, write_json, write_rows, SCHEMA_VERSION};
use crate::Common;

#[derive(Debug, Serialize)]
struct FitReport {
    schema_version: u32,
    method: Method,
    data: String,
    n: usize,
    p: usize,
    k: Option<usize>,
    gamma: Option<f64>,
    lambda: Option<f64>,
    support: Vec<usize>,
    w: Vec<f64>,
    b: f64,
    objective: f64,
    lower_bound: Option<f64>,
    cuts_used: Option<usize>,
    iterations: usize,
    certified: bool,
    mu: Option<f64>,
    wall_time_s: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    schema_version: u32,
    iteration: usize,
    eta: f64,
    lower_bound: f64,
    c_s: f64,
    best: f64,
    support_hash: String,
    master_nodes: usize,
}

pub fn dataset_path(flag: Option<&Path>, file: Option<&Path>) -> CliResult<PathBuf> {
    match flag.or(file) {
        Some(p) => Ok(p.to_path_buf()),
        None => usage("no dataset given (use --data or set `data` in the config)"),
    }
}

pub fn run(common: &Common, cfg: &FitConfig) -> CliResult<i32> {
    let path = dataset_path(common.data.as_deref(), cfg.data.as_deref())?;
    let data = load_csv(&path, cfg.standardize)?;
    let method = common.method.unwrap_or(cfg.method);
    let k = common.k.or(cfg.k);
    let tol = common.tol.or(cfg.tol);
    let out = output_dir(common.out.as_deref(), cfg.out.as_deref(), "out");

    let report = if method.is_sparse() {
        let Some(k) = k else {
            return usage("sparse methods need --k");
        };
        let gamma = common.gamma.or(cfg.gamma).unwrap_or(method.default_gamma());
        let mut opts = FitOptions::new(gamma, method.kind()).with_max_cuts(cfg.max_cuts);
        if let Some(t) = tol {
            opts.epsilon = t;
        }
        let mut trace = Vec::new();
        let fit = fit_sparse_logged(&data, k, &opts, &mut |r: &IterationRecord| {
            trace.push(TraceRow {
                schema_version: SCHEMA_VERSION,
                iteration: r.iteration,
                eta: r.eta,
                lower_bound: r.lower_bound,
                c_s: r.c_s,
                best: r.best,
                support_hash: format!("{:016x}", r.support_hash),
                master_nodes: r.master_nodes,
            })
        })?;
        ensure_dir(&out)?;
        write_rows(&out.join("fit_trace.csv"), &trace)?;
        FitReport {
            schema_version: SCHEMA_VERSION,
            method,
            data: path.display().to_string(),
            n: data.n(),
            p: data.p(),
            k: Some(k),
            gamma: Some(gamma),
            lambda: None,
            support: fit.s.indices(),
            w: fit.w,
            b: fit.b,
            objective: fit.objective,
            lower_bound: Some(fit.lower_bound),
            cuts_used: Some(fit.cuts_used),
            iterations: fit.iterations,
            certified: fit.certified,
            mu: None,
            wall_time_s: cfg.timing.then(|| fit.wall_time.as_secs_f64()),
        }
    } else {
        let lambda = common.lambda.or(cfg.lambda);
        let opts = LassoOptions { tol: tol.unwrap_or(LassoOptions::default().tol), ..LassoOptions::default() };
        let (fit, converged) = match (lambda, k) {
            (Some(l), _) => lasso_at(&data, method, l, &opts, None)?,
            (None, Some(k)) => lasso_for_size(&data, method, k, cfg.lambda_count, &opts)?,
            (None, None) => return usage("lasso methods need --lambda or --k"),
        };
        ensure_dir(&out)?;
        let support = (0..data.p())
            .filter(|&j| fit.w[j] != 0.0 && fit.w[j].abs() > sparsecls::lasso::SUPPORT_THRESHOLD * max_abs(&fit.w))
            .collect();
        FitReport {
            schema_version: SCHEMA_VERSION,
            method,
            data: path.display().to_string(),
            n: data.n(),
            p: data.p(),
            k,
            gamma: None,
            lambda: Some(fit.lambda),
            support,
            w: fit.w,
            b: fit.b,
            objective: fit.objective,
            lower_bound: None,
            cuts_used: None,
            iterations: fit.iterations,
            certified: converged,
            mu: fit.mu,
            wall_time_s: None,
        }
    };
    write_json(&out.join("fit.json"), &report)?;
    println!(
        "{method}: support {:?} objective {} {}",
        report.support,
        report.objective,
        if report.certified { "certified" } else { "NOT certified (budget exhausted)" }
    );
    Ok(if report.certified { EXIT_OK } else { EXIT_BUDGET })
}

fn max_abs(w: &[f64]) -> f64 {
    w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Lasso fit at one `lambda`; a budget stop returns the last iterate.
pub fn lasso_at(
    data: &Dataset,
    method: Method,
    lambda: f64,
    opts: &LassoOptions,
    warm: Option<(&[f64], f64)>,
) -> CliResult<(LassoFit, bool)> {
    let res = match method {
        Method::LassoLogistic => fit_lasso_logistic_with(data, lambda, opts, warm),
        _ => fit_lasso_svm_with(data, lambda, opts, warm),
    };
    match res {
        Ok(f) => Ok((f, true)),
        Err(Error::LassoBudget(f)) => Ok((*f, false)),
        Err(e) => Err(e.into()),
    }
}

/// Path point with the largest support of size at most `k`.
pub fn lasso_for_size(
    data: &Dataset,
    method: Method,
    k: usize,
    count: usize,
    opts: &LassoOptions,
) -> CliResult<(LassoFit, bool)> {
    let lambdas = lambda_grid_for(data, count, method.kind())?;
    let path_fit = lasso_path(data, &lambdas, method.kind(), opts)?;
    let path = path_fit.path.clone().unwrap_or_default();
    let Some(pt) = select_for_size(&path, k) else {
        return usage(format!("no path point has at most {k} features"));
    };
    // Re-solve from the path point so the result carries its own objective.
    lasso_at(data, method, pt.lambda, opts, Some((&pt.w, pt.b)))
}
