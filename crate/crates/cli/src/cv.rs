use serde::Serialize;
use sparsecls::io::load_csv;
use sparsecls::lasso::LassoOptions;
use sparsecls::metrics::{cross_validate, CvMethod, CvOptions};
use sparsecls::FitOptions;

use crate::config::{output_dir, CvConfig};
use crate::error::{usage, CliResult, EXIT_OK};
use crate::fit::dataset_path;
use crate::output::{ensure_dir, write_rows, SCHEMA_VERSION};
use crate::Common;

#[derive(Debug, Serialize)]
struct CvOut {
    schema_version: u32,
    method: String,
    k: Option<usize>,
    gamma: Option<f64>,
    lambda: Option<f64>,
    support_size: usize,
    val_auc: f64,
    val_misclass: f64,
    certified: Option<bool>,
    selected: bool,
    error: Option<String>,
}

pub fn run(common: &Common, cfg: &CvConfig) -> CliResult<i32> {
    let path = dataset_path(common.data.as_deref(), cfg.data.as_deref())?;
    let data = load_csv(&path, cfg.standardize)?;
    let method = common.method.unwrap_or(cfg.method);
    let seed = common.seed.unwrap_or(cfg.seed);
    let tol = common.tol.or(cfg.tol);
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return usage("train_fraction must lie in (0, 1)");
    }

    let (cv_method, grid) = if method.is_sparse() {
        let grid = match common.k {
            Some(k) => vec![k],
            None => cfg.k_grid.clone(),
        };
        if grid.is_empty() {
            return usage("empty k grid");
        }
        (CvMethod::Sparse, grid)
    } else {
        (CvMethod::Lasso, Vec::new())
    };
    let mut opts = CvOptions::new(cv_method, method.kind(), grid, seed);
    if let Some(g) = common.gamma {
        opts.gamma_grid = vec![g];
    } else if !cfg.gamma_grid.is_empty() {
        opts.gamma_grid = cfg.gamma_grid.clone();
    }
    opts.lambda_count = cfg.lambda_count;
    opts.train_fraction = cfg.train_fraction;
    opts.fit = FitOptions::new(method.default_gamma(), method.kind()).with_max_cuts(cfg.max_cuts);
    if let Some(t) = tol {
        opts.fit.epsilon = t;
        opts.lasso = LassoOptions { tol: t, ..LassoOptions::default() };
    }
    let res = cross_validate(&data, &opts)?;

    let rows: Vec<CvOut> = res
        .table
        .iter()
        .map(|r| {
            let selected = if method.is_sparse() {
                r.k == res.k_star && r.gamma == res.gamma_star
            } else {
                r.lambda == res.lambda_star
            };
            CvOut {
                schema_version: SCHEMA_VERSION,
                method: method.name().into(),
                k: r.k,
                gamma: r.gamma,
                lambda: r.lambda,
                support_size: r.support_size,
                val_auc: r.val_auc,
                val_misclass: r.val_misclass,
                certified: r.certified,
                selected: selected && r.error.is_none(),
                error: r.error.clone(),
            }
        })
        .collect();
    let out = output_dir(common.out.as_deref(), cfg.out.as_deref(), "out");
    ensure_dir(&out)?;
    write_rows(&out.join("cv.csv"), &rows)?;
    match (res.k_star, res.gamma_star, res.lambda_star) {
        (Some(k), g, _) if method.is_sparse() => println!("selected k={k} gamma={}", g.unwrap_or(f64::NAN)),
        (_, _, Some(l)) => println!("selected lambda={l}"),
        _ => println!("no grid point succeeded"),
    }
    Ok(EXIT_OK)
}
