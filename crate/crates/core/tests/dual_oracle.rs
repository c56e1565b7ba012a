mod common;

use common::*;
use proptest::prelude::*;
use sparsecls::dual::{
    dual_objective, evaluate, make_cut, primal_objective, project_box_hyperplane, recover_primal,
};
use sparsecls::{evaluate_support, Dataset, Error, InnerSolver, LossKind, OracleOptions, SupportMask};

fn toy4() -> Dataset {
    Dataset::from_rows(
        &[vec![0.5, -1.0], vec![1.5, 0.3], vec![-0.2, 0.8], vec![0.1, -0.4]],
        vec![1.0, 1.0, -1.0, 1.0],
    )
    .unwrap()
}

#[test]
fn intercept_only_matches_grid_search() {
    let d = toy4();
    let s = SupportMask::empty(2, 2);
    let sol = evaluate_support(&d, &s, 1.0, LossKind::Logistic, 1e-10).unwrap();
    // Golden-section search on the 1-D intercept problem.
    let f = |b: f64| d.y().iter().map(|&y| loss(LossKind::Logistic, y, b)).sum::<f64>();
    let (mut lo, mut hi) = (-20.0f64, 20.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let best = f(0.5 * (lo + hi));
    assert!((sol.objective - best).abs() < 1e-9, "{} vs {best}", sol.objective);
    // Three positives, one negative: b* = ln 3.
    assert!((sol.b - 3f64.ln()).abs() < 1e-6);
    assert!(sol.w.iter().all(|&w| w == 0.0));
}

#[test]
fn hinge_tiny_matches_grid_search() {
    let d = Dataset::from_rows(&[vec![1.0, 0.2], vec![-0.5, 1.0], vec![0.3, -0.7]], vec![1.0, -1.0, -1.0]).unwrap();
    let s = mask(2, 2, &[0]);
    let sol = evaluate_support(&d, &s, 1.0, LossKind::Hinge, 1e-10).unwrap();
    let mut best = f64::INFINITY;
    let steps = 1200;
    for a in 0..=steps {
        let w = -3.0 + 6.0 * a as f64 / steps as f64;
        for c in 0..=steps {
            let b = -3.0 + 6.0 * c as f64 / steps as f64;
            best = best.min(primal(&d, &[0], &[w], b, 1.0, LossKind::Hinge));
        }
    }
    assert!(sol.objective <= best + 1e-9);
    assert!(best - sol.objective < 1e-3, "{} vs grid {best}", sol.objective);
}

#[test]
fn duplicate_columns_share_gradient() {
    for kind in LossKind::ALL {
        let base = random_dataset(20, 3, 5);
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![base.col(0)[i], base.col(1)[i], base.col(0)[i], base.col(2)[i]]).collect();
        let d = Dataset::from_rows(&rows, base.y().to_vec()).unwrap();
        let sol = evaluate_support(&d, &mask(4, 4, &[0, 1, 2]), 0.5, kind, 1e-9).unwrap();
        assert!((sol.grad[0] - sol.grad[2]).abs() <= 1e-12 * (1.0 + sol.grad[0].abs()), "{kind}");
    }
}

#[test]
fn projection_examples() {
    let p = project_box_hyperplane(&[-0.5, 0.1], &[-1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert!((p[0] + 0.3).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12, "{p:?}");
    let v = [-0.2, 0.5, -0.3];
    assert_eq!(project_box_hyperplane(&v, &[-1.0, 0.0, -1.0], &[0.0, 1.0, 0.0]).unwrap(), v.to_vec());
    assert_eq!(project_box_hyperplane(&[3.0, -2.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    assert!(matches!(
        project_box_hyperplane(&[0.0, 0.0], &[0.5, 0.0], &[1.0, 1.0]),
        Err(Error::Infeasible(_))
    ));
}

proptest! {
    #[test]
    fn projection_is_optimal(
        v in prop::collection::vec(-3.0f64..3.0, 2..12),
        signs in prop::collection::vec(any::<bool>(), 12),
        probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), 8),
    ) {
        let n = v.len();
        let mut signs = signs[..n].to_vec();
        signs[0] = true;
        signs[1] = false;
        let lower: Vec<f64> = signs.iter().map(|&s| if s { -1.0 } else { 0.0 }).collect();
        let upper: Vec<f64> = signs.iter().map(|&s| if s { 0.0 } else { 1.0 }).collect();
        let a = project_box_hyperplane(&v, &lower, &upper).unwrap();
        prop_assert!(a.iter().sum::<f64>().abs() < 1e-10);
        for i in 0..n {
            prop_assert!(a[i] >= lower[i] && a[i] <= upper[i]);
        }
        // Variational inequality against feasible points built by projecting
        // random box points.
        for pr in &probes {
            let z0: Vec<f64> = (0..n).map(|i| lower[i] + pr[i] * (upper[i] - lower[i])).collect();
            let z = project_box_hyperplane(&z0, &lower, &upper).unwrap();
            let ip: f64 = (0..n).map(|i| (v[i] - a[i]) * (z[i] - a[i])).sum();
            prop_assert!(ip <= 1e-9, "inner product {}", ip);
        }
    }
}

#[test]
fn recover_primal_linearity() {
    let d = random_dataset(15, 4, 2);
    let s = mask(4, 4, &[0, 2, 3]);
    let (w0, _) = recover_primal(&d, &s, &vec![0.0; 15], 2.0, LossKind::Logistic);
    assert!(w0.iter().all(|&v| v == 0.0));
    let sol = evaluate_support(&d, &s, 2.0, LossKind::Logistic, 1e-9).unwrap();
    let scaled: Vec<f64> = sol.alpha.iter().map(|a| 0.5 * a).collect();
    let (w1, _) = recover_primal(&d, &s, &sol.alpha, 2.0, LossKind::Logistic);
    let (w2, _) = recover_primal(&d, &s, &scaled, 2.0, LossKind::Logistic);
    for j in 0..4 {
        assert!((0.5 * w1[j] - w2[j]).abs() <= 1e-12 * (1.0 + w1[j].abs()));
    }
    assert_eq!(w1[1], 0.0);
}

fn check_solution(d: &Dataset, s: &SupportMask, gamma: f64, kind: LossKind, tol: f64) {
    let sol = evaluate_support(d, s, gamma, kind, tol).unwrap();
    let n = d.n() as f64;
    assert!(sol.alpha.iter().sum::<f64>().abs() <= 1e-8 * n);
    for (&a, &y) in sol.alpha.iter().zip(d.y()) {
        let (lo, hi) = kind.conjugate_interval(y);
        assert!(a >= lo && a <= hi);
    }
    assert!(sol.grad.iter().all(|&g| g <= 0.0));
    for j in 0..d.p() {
        if !s.contains(j) {
            assert_eq!(sol.w[j], 0.0);
        } else {
            let xa: f64 = d.col(j).iter().zip(&sol.alpha).map(|(x, a)| x * a).sum();
            assert!((sol.w[j] + gamma * xa).abs() <= 1e-12 * (1.0 + sol.w[j].abs()));
            assert!((sol.grad[j] + 0.5 * gamma * xa * xa).abs() <= 1e-12 * (1.0 + sol.grad[j].abs()));
        }
    }
    let f = dual_objective(d, &s.weights(), &sol.alpha, gamma, kind);
    assert!((f - sol.objective).abs() <= 1e-12 * (1.0 + f.abs()));
    let pval = primal_objective(d, &sol.w, sol.b, gamma, kind);
    assert!(pval >= sol.objective - 1e-9 * (1.0 + pval.abs()));
    assert!(pval - sol.objective <= tol * (1.0 + sol.objective.abs()) * 1.000001, "{kind}: gap {}", pval - sol.objective);
}

#[test]
fn solutions_satisfy_invariants() {
    for seed in 0..10 {
        let d = random_dataset(25, 6, seed);
        let s = mask(6, 3, &[(seed as usize) % 6, (seed as usize + 2) % 6]);
        for kind in LossKind::ALL {
            check_solution(&d, &s, 0.7, kind, 1e-8);
        }
    }
}

#[test]
fn smooth_values_match_newton_oracle() {
    for seed in 0..10 {
        let d = random_dataset(30, 5, 100 + seed);
        let idx = [0, 3];
        for kind in [LossKind::Logistic, LossKind::SquaredHinge] {
            let sol = evaluate_support(&d, &mask(5, 2, &idx), 0.8, kind, 1e-10).unwrap();
            let (_, _, best) = newton_primal(&d, &idx, 0.8, kind);
            assert!((sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()), "{kind}: {} vs {best}", sol.objective);
        }
    }
}

#[test]
fn solvers_agree() {
    let d = random_dataset(30, 5, 9);
    let w = mask(5, 5, &[1, 2, 4]).weights();
    for kind in LossKind::ALL {
        let reference = evaluate(&d, &w, &OracleOptions::new(0.5, kind).with_tol(1e-10), None).unwrap().objective;
        let mut solvers = vec![InnerSolver::ProjectedGradient];
        if kind != LossKind::Logistic {
            solvers.push(InnerSolver::Pairwise);
        }
        for solver in solvers {
            let opts = OracleOptions::new(0.5, kind).with_tol(1e-8).with_solver(solver);
            let v = evaluate(&d, &w, &opts, None).unwrap().objective;
            assert!((v - reference).abs() <= 1e-6 * (1.0 + v.abs()), "{kind} {solver:?}: {v} vs {reference}");
        }
    }
}

#[test]
fn rejects_bad_input() {
    let d = random_dataset(10, 3, 1);
    let s = mask(3, 2, &[0]);
    assert!(matches!(evaluate_support(&d, &s, 0.0, LossKind::Logistic, 1e-8), Err(Error::InvalidInput(_))));
    assert!(matches!(evaluate_support(&d, &s, -1.0, LossKind::Hinge, 1e-8), Err(Error::InvalidInput(_))));
    let one = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![1.0, 1.0]).unwrap();
    assert!(evaluate_support(&one, &mask(1, 1, &[0]), 1.0, LossKind::Logistic, 1e-8).is_err());
}

#[test]
fn budget_error_carries_feasible_iterate() {
    let d = random_dataset(40, 6, 3);
    let opts = OracleOptions { max_iter: 2, ..OracleOptions::new(1.0, LossKind::Hinge).with_tol(1e-14) };
    match evaluate(&d, &[1.0; 6], &opts, None) {
        Err(Error::OracleBudget(sol)) => {
            assert!(sol.alpha.iter().sum::<f64>().abs() < 1e-8 * 40.0);
            assert!(sol.objective.is_finite());
        }
        other => panic!("expected a budget error, got {other:?}"),
    }
}

#[test]
fn cut_examples() {
    let d = random_dataset(20, 5, 4);
    let s = mask(5, 3, &[1, 3]);
    let sol = evaluate_support(&d, &s, 1.0, LossKind::Logistic, 1e-10).unwrap();
    let cut = make_cut(&sol, &s);
    assert!((cut.eval(&s) - sol.objective).abs() <= 1e-10 * (1.0 + sol.objective.abs()));
    assert!(cut.coeffs.iter().all(|&g| g <= 0.0));
    let empty = SupportMask::empty(5, 3);
    let sol0 = evaluate_support(&d, &empty, 1.0, LossKind::Logistic, 1e-10).unwrap();
    let cut0 = make_cut(&sol0, &empty);
    assert_eq!(cut0.intercept, sol0.objective);
}

#[test]
fn cuts_are_global_minorants() {
    for kind in LossKind::ALL {
        let d = random_dataset(25, 6, 11);
        let s = mask(6, 3, &[0, 4]);
        let cut = make_cut(&evaluate_support(&d, &s, 1.5, kind, 1e-9).unwrap(), &s);
        let mut r = rng(3);
        for _ in 0..20 {
            let idx: Vec<usize> = (0..6).filter(|_| rand::Rng::random_bool(&mut r, 0.5)).collect();
            let other = mask(6, 6, &idx);
            let c = evaluate_support(&d, &other, 1.5, kind, 1e-9).unwrap().objective;
            assert!(cut.eval(&other) <= c + 1e-7 * (1.0 + c.abs()), "{kind}");
        }
    }
}

#[test]
fn finite_differences_match_gradient() {
    let d = random_dataset(30, 5, 21);
    let opts = OracleOptions::new(0.6, LossKind::Logistic).with_tol(1e-13);
    let base = vec![0.5, 0.9, 0.3, 0.0, 0.8];
    let sol = evaluate(&d, &base, &opts, None).unwrap();
    let delta = 1e-5;
    for j in 0..5 {
        let mut s2 = base.clone();
        s2[j] += delta;
        let c2 = evaluate(&d, &s2, &opts, Some(&sol.alpha)).unwrap().objective;
        let fd = (c2 - sol.objective) / delta;
        let tol = 1e-4f64.max(1e-2 * sol.grad[j].abs());
        assert!((fd - sol.grad[j]).abs() <= tol, "j={j}: fd {fd} vs grad {}", sol.grad[j]);
    }
    assert!(evaluate(&d, &[0.5, 1.2, 0.0, 0.0, 0.0], &opts, None).is_err());
}

#[test]
fn nested_supports_are_monotone() {
    for kind in LossKind::ALL {
        for seed in 0..5 {
            let d = random_dataset(25, 6, 200 + seed);
            let mut prev = f64::INFINITY;
            let mut idx = Vec::new();
            for j in [seed as usize % 6, (seed as usize + 3) % 6, (seed as usize + 1) % 6, (seed as usize + 5) % 6] {
                idx.push(j);
                let c = evaluate_support(&d, &mask(6, 6, &idx), 0.9, kind, 1e-9).unwrap().objective;
                assert!(c <= prev + 1e-7 * (1.0 + c.abs()), "{kind}: {c} > {prev}");
                prev = c;
            }
        }
    }
}
