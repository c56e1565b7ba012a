use serde::Serialize;
use sparsecls::theory::{
    empirical_failure, empirical_large_dev, failure_tail, large_dev_bound, n0_threshold, validation_grid, TheoryParams,
};

use crate::config::{output_dir, TheoryConfig};
use crate::error::{usage, CliResult, EXIT_OK};
use crate::output::{ensure_dir, write_rows, SCHEMA_VERSION};
use crate::Common;

/// Agreement threshold in standard errors.
pub const Z: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct ValidationOut {
    pub schema_version: u32,
    pub quantity: String,
    pub params: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub z: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub schema_version: u32,
    pub bound_kind: String,
    pub k: usize,
    pub p: usize,
    pub sigma2: f64,
    pub ell: Option<usize>,
    pub n: u64,
    pub n0: u64,
    pub bound: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub trials: usize,
    pub dominated: bool,
}

/// `empirical <= bound` up to `Z` binomial standard errors at the bound.
pub fn dominated(bound: f64, empirical: f64, trials: usize) -> bool {
    let b = bound.clamp(0.0, 1.0);
    empirical <= bound + Z * (b * (1.0 - b) / trials as f64).sqrt()
}

pub fn run(common: &Common, cfg: &TheoryConfig) -> CliResult<i32> {
    let seed = common.seed.unwrap_or(cfg.seed);
    if cfg.samples < 2 || cfg.trials < 1 {
        return usage("theory needs samples >= 2 and trials >= 1");
    }
    let out = output_dir(common.out.as_deref(), cfg.out.as_deref(), "out");
    ensure_dir(&out)?;

    let validation = validation_rows(cfg.samples, seed)?;
    let bounds = bound_rows(cfg, seed)?;
    write_rows(&out.join("theory_validation.csv"), &validation)?;
    write_rows(&out.join("theory_bounds.csv"), &bounds)?;
    let bad_v = validation.iter().filter(|r| !r.within).count();
    let bad_b = bounds.iter().filter(|r| !r.dominated).count();
    println!(
        "closed forms: {}/{} within {Z} se; bounds: {}/{} dominate",
        validation.len() - bad_v,
        validation.len(),
        bounds.len() - bad_b,
        bounds.len()
    );
    Ok(EXIT_OK)
}

pub fn validation_rows(samples: usize, seed: u64) -> CliResult<Vec<ValidationOut>> {
    Ok(validation_grid(samples, seed)?
        .into_iter()
        .map(|r| ValidationOut {
            schema_version: SCHEMA_VERSION,
            quantity: r.quantity.to_string(),
            params: r.params.clone(),
            closed_form: r.closed_form,
            estimate: r.estimate,
            stderr: r.stderr,
            samples: r.samples,
            z: if r.stderr > 0.0 { (r.closed_form - r.estimate).abs() / r.stderr } else { 0.0 },
            within: r.within(Z),
        })
        .collect())
}

pub fn bound_rows(cfg: &TheoryConfig, seed: u64) -> CliResult<Vec<BoundRow>> {
    let (k, p, trials) = (cfg.k, cfg.p, cfg.trials);
    let mut rows = Vec::new();
    let mut stream = 0u64;
    let mut next_seed = || {
        stream += 1;
        seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    };
    for &sigma2 in &cfg.sigma2 {
        let n0 = n0_threshold(k, p, sigma2)?;
        for ell in 0..k {
            let params = TheoryParams::new(k, p, sigma2, ell)?;
            for &n in &cfg.n_grid {
                let bound = large_dev_bound(n, &params)?;
                let e = empirical_large_dev(n, &params, trials, next_seed())?;
                rows.push(BoundRow {
                    schema_version: SCHEMA_VERSION,
                    bound_kind: "large_dev".into(),
                    k,
                    p,
                    sigma2,
                    ell: Some(ell),
                    n: n as u64,
                    n0,
                    bound,
                    empirical: e.estimate,
                    stderr: e.stderr,
                    trials,
                    dominated: dominated(bound, e.estimate, trials),
                });
            }
        }
        for &off in &cfg.n_offsets {
            let n = n0 + off;
            let bound = failure_tail(n, k, p, sigma2)?;
            let e = empirical_failure(n as usize, k, p, sigma2, trials, next_seed())?;
            rows.push(BoundRow {
                schema_version: SCHEMA_VERSION,
                bound_kind: "failure_tail".into(),
                k,
                p,
                sigma2,
                ell: None,
                n,
                n0,
                bound,
                empirical: e.estimate,
                stderr: e.stderr,
                trials,
                dominated: dominated(bound, e.estimate, trials),
            });
        }
    }
    Ok(rows)
}
