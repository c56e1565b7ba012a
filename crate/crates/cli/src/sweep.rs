use rayon::prelude::*;
use serde::Serialize;
use sparsecls::datagen::{generate, SyntheticConfig, TruthModel};
use sparsecls::lasso::LassoOptions;
use sparsecls::metrics::{auc, cross_validate, misclass_rate, predict, recovery, CvMethod, CvOptions};
use std::time::Instant;
use sparsecls::{fit_sparse, Dataset, FitOptions};

use crate::config::{output_dir, Selection, SweepConfig};
use crate::error::{usage, CliError, CliResult, EXIT_OK};
use crate::fit::{lasso_at, lasso_for_size};
use crate::method::Method;
use crate::output::{ensure_dir, write_rows, SCHEMA_VERSION};
use crate::Common;

/// One fitted method on one replication.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub method: String,
    pub n: usize,
    pub seed: u64,
    pub selection: String,
    pub k: Option<usize>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub accuracy: Option<usize>,
    pub false_discoveries: Option<usize>,
    pub support_size: Option<usize>,
    pub test_auc: Option<f64>,
    pub test_misclass: Option<f64>,
    pub cuts_used: Option<usize>,
    pub certified: Option<bool>,
    pub objective: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub error: Option<String>,
}

struct Fitted {
    w: Vec<f64>,
    b: f64,
    k: Option<usize>,
    gamma: Option<f64>,
    lambda: Option<f64>,
    cuts_used: Option<usize>,
    certified: bool,
    objective: f64,
}

pub fn run(common: &Common, cfg: &SweepConfig) -> CliResult<i32> {
    let mut cfg = cfg.clone();
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(m) = common.method {
        cfg.methods = vec![m];
    }
    if let Some(k) = common.k {
        cfg.k = Some(k);
    }
    if let Some(g) = common.gamma {
        cfg.gamma = Some(g);
    }
    if let Some(t) = common.tol {
        cfg.tol = Some(t);
    }
    if cfg.replications < 1 || cfg.n_grid.is_empty() || cfg.methods.is_empty() {
        return usage("sweep needs at least one replication, grid point and method");
    }
    let out = output_dir(common.out.as_deref(), cfg.out.as_deref(), "out");
    ensure_dir(&out)?;

    let tasks: Vec<(usize, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications as u64).map(move |r| (n, r)))
        .collect();
    let rows: Vec<SweepRow> = tasks
        .par_iter()
        .flat_map_iter(|&(n, r)| replication(&cfg, n, cfg.seed + r))
        .collect();
    let path = out.join("sweep.csv");
    write_rows(&path, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("wrote {} ({} rows, {failed} failed)", path.display(), rows.len());
    Ok(EXIT_OK)
}

/// All configured methods on one instance; failures become rows.
pub fn replication(cfg: &SweepConfig, n: usize, seed: u64) -> Vec<SweepRow> {
    let base = SweepRow {
        schema_version: SCHEMA_VERSION,
        n,
        seed,
        selection: match cfg.selection {
            Selection::Fixed => "fixed".into(),
            Selection::Cv => "cv".into(),
        },
        ..SweepRow::default()
    };
    let synth = SyntheticConfig {
        n: n + cfg.n_test,
        p: cfg.p,
        k_true: cfg.k_true,
        rho: cfg.rho,
        snr: cfg.snr,
        label_model: cfg.label_model,
        truth_model: TruthModel::Pm1,
        sigma2: 0.0,
        seed,
    };
    let inst = match generate(&synth) {
        Ok(i) => i,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|m| SweepRow { method: m.name().into(), error: Some(e.to_string()), ..base.clone() })
                .collect()
        }
    };
    let train = inst.data.subset(&(0..n).collect::<Vec<_>>());
    let test = (cfg.n_test > 0).then(|| inst.data.subset(&(n..n + cfg.n_test).collect::<Vec<_>>()));

    cfg.methods
        .iter()
        .map(|&m| {
            let mut row = SweepRow { method: m.name().into(), ..base.clone() };
            let clock = Instant::now();
            match fit_method(cfg, m, &train, seed) {
                Ok(f) => {
                    if cfg.timing {
                        row.wall_time_s = Some(clock.elapsed().as_secs_f64());
                    }
                    let rec = recovery(&f.w, &inst.w_true).expect("conformal vectors");
                    row.accuracy = Some(rec.accuracy_count);
                    row.false_discoveries = Some(rec.false_count);
                    row.support_size = Some(rec.support_size);
                    if let Some(t) = &test {
                        let s = t.scores(&f.w, f.b);
                        row.test_auc = auc(&s, t.y()).ok();
                        row.test_misclass = misclass_rate(&predict(&s), t.y()).ok();
                    }
                    row.k = f.k;
                    row.gamma = f.gamma;
                    row.lambda = f.lambda;
                    row.cuts_used = f.cuts_used;
                    row.certified = Some(f.certified);
                    row.objective = Some(f.objective);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

fn fit_method(cfg: &SweepConfig, method: Method, train: &Dataset, seed: u64) -> CliResult<Fitted> {
    let kind = method.kind();
    let k_fixed = cfg.k.unwrap_or(cfg.k_true);
    let lasso_opts = LassoOptions { tol: cfg.tol.unwrap_or(LassoOptions::default().tol), ..LassoOptions::default() };
    if method.is_sparse() {
        let gamma = cfg.gamma.unwrap_or(method.default_gamma());
        let mut opts = FitOptions::new(gamma, kind).with_max_cuts(cfg.max_cuts);
        if let Some(t) = cfg.tol {
            opts.epsilon = t;
        }
        let k = match cfg.selection {
            Selection::Fixed => k_fixed,
            Selection::Cv => {
                let grid = if cfg.k_grid.is_empty() { (1..=2 * cfg.k_true).collect() } else { cfg.k_grid.clone() };
                let mut cv = CvOptions::new(CvMethod::Sparse, kind, grid, seed);
                cv.gamma_grid = vec![gamma];
                cv.train_fraction = cfg.train_fraction;
                cv.fit = opts;
                cross_validate(train, &cv)?.k_star.ok_or_else(|| CliError::Usage("no k selected".into()))?
            }
        };
        let fit = fit_sparse(train, k, &opts)?;
        Ok(Fitted {
            w: fit.w,
            b: fit.b,
            k: Some(k),
            gamma: Some(gamma),
            lambda: None,
            cuts_used: Some(fit.cuts_used),
            certified: fit.certified,
            objective: fit.objective,
        })
    } else {
        let (fit, ok) = match cfg.selection {
            Selection::Fixed => lasso_for_size(train, method, k_fixed, cfg.lambda_count, &lasso_opts)?,
            Selection::Cv => {
                let mut cv = CvOptions::new(CvMethod::Lasso, kind, Vec::new(), seed);
                cv.lambda_count = cfg.lambda_count;
                cv.train_fraction = cfg.train_fraction;
                cv.lasso = lasso_opts;
                let lambda = cross_validate(train, &cv)?.lambda_star.expect("lasso selects lambda");
                lasso_at(train, method, lambda, &lasso_opts, None)?
            }
        };
        Ok(Fitted {
            k: matches!(cfg.selection, Selection::Fixed).then_some(k_fixed),
            gamma: None,
            lambda: Some(fit.lambda),
            cuts_used: None,
            certified: ok,
            objective: fit.objective,
            w: fit.w,
            b: fit.b,
        })
    }
}
