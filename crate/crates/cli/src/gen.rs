use sparsecls::datagen::{generate, SyntheticConfig};
use sparsecls::io::{dataset_to_csv, truth_to_csv};

use crate::config::{output_dir, GenConfig};
use crate::error::{io_error, CliResult, EXIT_OK};
use crate::output::ensure_dir;
use crate::Common;

pub fn run(common: &Common, cfg: &GenConfig) -> CliResult<i32> {
    let config = SyntheticConfig {
        n: cfg.n,
        p: cfg.p,
        k_true: cfg.k_true,
        rho: cfg.rho,
        snr: cfg.snr,
        label_model: cfg.label_model,
        truth_model: cfg.truth_model,
        sigma2: cfg.sigma2,
        seed: common.seed.unwrap_or(cfg.seed),
    };
    let inst = generate(&config)?;
    let out = output_dir(common.out.as_deref(), cfg.out.as_deref(), "out");
    ensure_dir(&out)?;
    let data_path = out.join("data.csv");
    std::fs::write(&data_path, dataset_to_csv(&inst.data)).map_err(|e| io_error(&data_path, e))?;
    let truth_path = out.join("truth.csv");
    std::fs::write(&truth_path, truth_to_csv(&inst.w_true)).map_err(|e| io_error(&truth_path, e))?;

    let (pos, neg) = inst.data.class_counts();
    println!("wrote {} and {}", data_path.display(), truth_path.display());
    println!(
        "n={} p={} k_true={} positives={pos} negatives={neg} achieved_snr={}",
        config.n, config.p, config.k_true, inst.achieved_snr
    );
    if inst.one_class {
        println!("warning: every label is in one class");
    }
    Ok(EXIT_OK)
}
