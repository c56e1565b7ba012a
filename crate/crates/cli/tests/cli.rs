use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparsecls::io::load_csv;
use sparsecls::lasso::lambda_max;
use sparsecls::theory::n0_threshold;
use sparsecls::{evaluate_support, LossKind, SupportMask};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sparsecls"));
    c.env_remove("SPARSECLS_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

fn gen(dir: &Path, cfg: &str, seed: u64) -> PathBuf {
    let c = write_config(dir, cfg);
    let out = dir.join(format!("gen{seed}"));
    let o = run(&["gen", "--config", c.to_str().unwrap(), "--seed", &seed.to_string(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn headers(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(String::from).collect()
}

fn col(path: &Path, name: &str) -> usize {
    headers(path).iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn gen_writes_header_labels_and_truth() {
    let dir = TempDir::new().unwrap();
    let out = gen(dir.path(), "[gen]\nn = 30\np = 4\nk_true = 2\n", 5);
    let data = out.join("data.csv");
    assert_eq!(headers(&data), vec!["x1", "x2", "x3", "x4", "label"]);
    let r = rows(&data);
    assert_eq!(r.len(), 30);
    assert!(r.iter().all(|row| row[4] == *"1" || row[4] == *"-1"));
    let truth = rows(&out.join("truth.csv"));
    assert_eq!(truth.len(), 4);
    let nonzero = truth.iter().filter(|t| t[1].parse::<f64>().unwrap() != 0.0).count();
    assert_eq!(nonzero, 2);
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = "[gen]\nn = 50\np = 8\nk_true = 3\nrho = 0.4\nsnr = 2.0\n";
    let a = gen(dir.path(), cfg, 9);
    let b_dir = TempDir::new().unwrap();
    let b = gen(b_dir.path(), cfg, 9);
    for f in ["data.csv", "truth.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = gen(dir.path(), cfg, 10);
    assert_ne!(fs::read(a.join("data.csv")).unwrap(), fs::read(c.join("data.csv")).unwrap());
}

#[test]
fn sparse_fit_matches_enumeration() {
    let dir = TempDir::new().unwrap();
    let out = gen(dir.path(), "[gen]\nn = 40\np = 6\nk_true = 2\n", 2);
    let data_path = out.join("data.csv");
    let fit_dir = dir.path().join("fit");
    let o = run(&[
        "fit",
        "--data",
        data_path.to_str().unwrap(),
        "--method",
        "sparse-logistic",
        "--k",
        "2",
        "--gamma",
        "0.5",
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    let objective = report["objective"].as_f64().unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["certified"], true);

    let data = load_csv(&data_path, false).unwrap();
    let mut best = (f64::INFINITY, Vec::new());
    for i in 0..6 {
        for j in i..6 {
            let idx: Vec<usize> = if i == j { vec![i] } else { vec![i, j] };
            let s = SupportMask::from_indices(6, 2, &idx).unwrap();
            let c = evaluate_support(&data, &s, 0.5, LossKind::Logistic, 1e-10).unwrap().objective;
            if c < best.0 {
                best = (c, idx);
            }
        }
    }
    assert!((objective - best.0).abs() <= 1e-6 * (1.0 + best.0.abs()), "{objective} vs {}", best.0);
    let support: Vec<usize> = report["support"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert_eq!(support, best.1);
    let trace = fit_dir.join("fit_trace.csv");
    assert!(rows(&trace).len() as u64 >= report["iterations"].as_u64().unwrap());
}

#[test]
fn lasso_above_lambda_max_is_empty() {
    let dir = TempDir::new().unwrap();
    let out = gen(dir.path(), "[gen]\nn = 60\np = 5\nk_true = 2\n", 4);
    let data_path = out.join("data.csv");
    let data = load_csv(&data_path, false).unwrap();
    for (method, kind) in [("lasso-logistic", LossKind::Logistic), ("lasso-svm", LossKind::Hinge)] {
        let lambda = lambda_max(&data, kind) * 1.001;
        let fit_dir = dir.path().join(method);
        let o = run(&[
            "fit",
            "--data",
            data_path.to_str().unwrap(),
            "--method",
            method,
            "--lambda",
            &lambda.to_string(),
            "--out",
            fit_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
        assert_eq!(report["support"].as_array().unwrap().len(), 0, "{method}");
        assert!(report["w"].as_array().unwrap().iter().all(|v| v.as_f64() == Some(0.0)));
    }
}

#[test]
fn usage_errors_exit_two() {
    let o = run(&["fit", "--method", "ridge", "--data", "x.csv"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sparse-logistic") && err.contains("lasso-svm"), "{err}");

    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["fit", "--k", "many"])), 2);
    // No dataset given.
    assert_eq!(code(&run(&["fit", "--k", "2"])), 2);

    let dir = TempDir::new().unwrap();
    let c = write_config(dir.path(), "[gen]\nwidth = 3\n");
    let o = run(&["gen", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));

    let out = gen(dir.path(), "[gen]\nn = 20\np = 3\nk_true = 1\n", 1);
    let data = out.join("data.csv");
    let o = run(&["fit", "--data", data.to_str().unwrap(), "--method", "sparse-svm"]);
    assert_eq!(code(&o), 2, "sparse fit without k");
}

#[test]
fn input_errors_carry_location() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,label\n1,2,1\n3,,-1\n").unwrap();
    let o = run(&["fit", "--data", bad.to_str().unwrap(), "--k", "1"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3, column 2"), "{err}");

    let missing = dir.path().join("nope.csv");
    let o = run(&["fit", "--data", missing.to_str().unwrap(), "--k", "1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));

    let one_class = dir.path().join("one.csv");
    fs::write(&one_class, "a,label\n1,1\n2,1\n3,1\n").unwrap();
    assert_eq!(code(&run(&["fit", "--data", one_class.to_str().unwrap(), "--k", "1"])), 2);
}

#[test]
fn budget_exhaustion_exits_three_with_report() {
    let dir = TempDir::new().unwrap();
    let out = gen(dir.path(), "[gen]\nn = 80\np = 40\nk_true = 5\n", 3);
    let c = write_config(dir.path(), "[fit]\nmax_cuts = 1\n");
    let fit_dir = dir.path().join("fit");
    let o = run(&[
        "fit",
        "--config",
        c.to_str().unwrap(),
        "--data",
        out.join("data.csv").to_str().unwrap(),
        "--k",
        "5",
        "--gamma",
        "10",
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(report["certified"], false);
    assert_eq!(report["support"].as_array().unwrap().len(), 5);
}

#[test]
fn output_dir_precedence() {
    let dir = TempDir::new().unwrap();
    let from_file = dir.path().join("file_out");
    let from_env = dir.path().join("env_out");
    let from_flag = dir.path().join("flag_out");
    let c = write_config(dir.path(), &format!("[gen]\nn = 10\np = 2\nk_true = 1\nout = {:?}\n", from_file));
    let cfg = c.to_str().unwrap();

    assert_eq!(code(&run(&["gen", "--config", cfg])), 0);
    assert!(from_file.join("data.csv").exists());

    let o = bin().args(["gen", "--config", cfg]).env("SPARSECLS_OUT", &from_env).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(from_env.join("data.csv").exists());

    let o = bin()
        .args(["gen", "--config", cfg, "--out", from_flag.to_str().unwrap()])
        .env("SPARSECLS_OUT", &from_env)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(from_flag.join("data.csv").exists());
}

#[test]
fn one_point_sweep_has_one_row_per_method() {
    let dir = TempDir::new().unwrap();
    let c = write_config(
        dir.path(),
        "[sweep]\np = 20\nk_true = 3\nn_grid = [120]\nreplications = 1\nn_test = 100\n\
         methods = [\"sparse-logistic\", \"sparse-svm\", \"lasso-logistic\"]\n",
    );
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path = out.join("sweep.csv");
    let r = rows(&path);
    assert_eq!(r.len(), 3);
    let (m, a, f, s, e) = (
        col(&path, "method"),
        col(&path, "accuracy"),
        col(&path, "false_discoveries"),
        col(&path, "support_size"),
        col(&path, "error"),
    );
    let methods: Vec<&str> = r.iter().map(|row| &row[m]).collect();
    assert_eq!(methods, vec!["sparse-logistic", "sparse-svm", "lasso-logistic"]);
    for row in &r {
        assert_eq!(&row[e], "");
        let (a, f, s): (usize, usize, usize) = (row[a].parse().unwrap(), row[f].parse().unwrap(), row[s].parse().unwrap());
        assert_eq!(a + f, s);
        assert!(s <= 3);
    }
    let auc = col(&path, "test_auc");
    assert!(r.iter().all(|row| (0.0..=1.0).contains(&row[auc].parse::<f64>().unwrap())));
}

#[test]
fn sweep_records_failures_per_row() {
    let dir = TempDir::new().unwrap();
    // k larger than p makes every sparse fit fail; the lasso rows still run.
    let c = write_config(
        dir.path(),
        "[sweep]\np = 4\nk_true = 2\nk = 9\nn_grid = [40, 60]\nreplications = 1\nn_test = 0\n\
         methods = [\"sparse-logistic\", \"lasso-logistic\"]\n",
    );
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let path = out.join("sweep.csv");
    let r = rows(&path);
    assert_eq!(r.len(), 4);
    let e = col(&path, "error");
    assert!(!r[0][e].is_empty() && r[1][e].is_empty());
    assert!(!r[2][e].is_empty() && r[3][e].is_empty());
}

#[test]
fn theory_tables() {
    let dir = TempDir::new().unwrap();
    let c = write_config(dir.path(), "[theory]\nsamples = 200000\ntrials = 400\nn_grid = [5, 20]\nn_offsets = [0, 50]\n");
    let out = dir.path().join("theory");
    let o = run(&["theory", "--config", c.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let v = out.join("theory_validation.csv");
    let within = col(&v, "within");
    let rv = rows(&v);
    assert!(rv.len() >= 20);
    assert!(rv.iter().all(|r| &r[within] == "true"));

    let b = out.join("theory_bounds.csv");
    let rb = rows(&b);
    // 3 noise levels x (2 ells x 2 sizes + 2 offsets).
    assert_eq!(rb.len(), 18);
    let (s2, n0, emp, dom) = (col(&b, "sigma2"), col(&b, "n0"), col(&b, "empirical"), col(&b, "dominated"));
    for r in &rb {
        let sigma2: f64 = r[s2].parse().unwrap();
        assert_eq!(r[n0].parse::<u64>().unwrap(), n0_threshold(2, 6, sigma2).unwrap());
        let e: f64 = r[emp].parse().unwrap();
        assert!((0.0..=1.0).contains(&e));
        assert_eq!(&r[dom], "true");
    }
}

#[test]
fn cv_marks_one_selected_row() {
    let dir = TempDir::new().unwrap();
    let out = gen(dir.path(), "[gen]\nn = 150\np = 12\nk_true = 3\nlabel_model = \"sign\"\n", 8);
    let data = out.join("data.csv");
    for method in ["sparse-logistic", "lasso-logistic"] {
        let c = write_config(dir.path(), "[cv]\nk_grid = [1, 2, 3, 4, 6]\ngamma_grid = [0.1]\nlambda_count = 15\n");
        let cv_out = dir.path().join(method);
        let o = run(&[
            "cv",
            "--config",
            c.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--method",
            method,
            "--out",
            cv_out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let path = cv_out.join("cv.csv");
        let r = rows(&path);
        let sel = col(&path, "selected");
        assert_eq!(r.iter().filter(|row| &row[sel] == "true").count(), 1, "{method}");
        assert!(String::from_utf8_lossy(&o.stdout).contains("selected"));
    }
}

#[test]
fn csv_outputs_round_trip() {
    let dir = TempDir::new().unwrap();
    let out = gen(dir.path(), "[gen]\nn = 25\np = 3\nk_true = 1\n", 6);
    let data = load_csv(&out.join("data.csv"), false).unwrap();
    assert_eq!((data.n(), data.p()), (25, 3));
    let truth = rows(&out.join("truth.csv"));
    assert_eq!(truth.iter().map(|r| r[0].parse::<usize>().unwrap()).collect::<Vec<_>>(), vec![0, 1, 2]);
}
