//! Outer approximation: alternate the dual oracle and the exact master
//! until the master's lower bound meets the best oracle value.

use serde::Serialize;
use std::collections::HashSet;
use std::time::Duration;

use crate::data::{Dataset, SupportMask};
use crate::dual::{self, make_cut, DualSolution, InnerSolver, OracleOptions};
use crate::error::{invalid, Error, Result};
use crate::losses::LossKind;
use crate::master::{CutPool, MasterOptions, MasterSolution, MasterTree};
use crate::timing::Stopwatch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub gamma: f64,
    pub kind: LossKind,
    /// Relative termination tolerance: stop once the master bound is within
    /// `epsilon * (1 + |c|)` of the best oracle value `c`.
    pub epsilon: f64,
    pub max_cuts: usize,
    pub inner_tol: f64,
    pub solver: InnerSolver,
    pub master: MasterOptions,
    /// Start each oracle call from the previous dual point.
    pub warm_dual: bool,
    /// Rebuild the master search tree every iteration instead of resuming
    /// the previous frontier. Both give the same iterates.
    pub fresh_master: bool,
}

impl FitOptions {
    pub fn new(gamma: f64, kind: LossKind) -> Self {
        Self {
            gamma,
            kind,
            epsilon: 1e-6,
            max_cuts: 1000,
            inner_tol: 1e-8,
            solver: InnerSolver::Auto,
            master: MasterOptions::default(),
            warm_dual: true,
            fresh_master: false,
        }
    }

    pub fn with_max_cuts(mut self, max_cuts: usize) -> Self {
        self.max_cuts = max_cuts;
        self
    }

    fn oracle(&self) -> OracleOptions {
        OracleOptions {
            gamma: self.gamma,
            kind: self.kind,
            tol: self.inner_tol,
            max_iter: 100_000,
            solver: self.solver,
        }
    }
}

/// One record per outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Master value after adding this iteration's cut.
    pub eta: f64,
    /// Certified master lower bound (equals `eta` when the master is exact).
    pub lower_bound: f64,
    /// Oracle value at the support evaluated this iteration.
    pub c_s: f64,
    /// Best oracle value so far.
    pub best: f64,
    pub support_hash: u64,
    pub support: Vec<usize>,
    pub master_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub s: SupportMask,
    pub w: Vec<f64>,
    pub b: f64,
    /// `c(s)` at the returned support.
    pub objective: f64,
    pub lower_bound: f64,
    pub cuts_used: usize,
    pub iterations: usize,
    pub wall_time: Duration,
    pub certified: bool,
    pub master_nodes: usize,
}

/// Indices of the `k` largest absolute label correlations of the
/// standardized columns; lower index wins ties.
pub fn warm_start(data: &Dataset, k: usize) -> Result<SupportMask> {
    let p = data.p();
    if k > p {
        return invalid(format!("k={k} exceeds p={p}"));
    }
    let n = data.n() as f64;
    let y = data.y();
    let mut scores: Vec<(f64, usize)> = (0..p)
        .map(|j| {
            let c = data.col(j);
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let cov: f64 = c.iter().zip(y).map(|(v, yi)| (v - mean) * yi).sum();
            let score = if var > 0.0 { (cov / var.sqrt()).abs() } else { 0.0 };
            (score, j)
        })
        .collect();
    scores.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let idx: Vec<usize> = scores[..k].iter().map(|s| s.1).collect();
    SupportMask::from_indices(p, k, &idx)
}

/// Exact sparse classifier with at most `k` features.
pub fn fit_sparse(data: &Dataset, k: usize, opts: &FitOptions) -> Result<FitResult> {
    fit_sparse_logged(data, k, opts, &mut |_| {})
}

/// As [`fit_sparse`], streaming one [`IterationRecord`] per outer iteration.
pub fn fit_sparse_logged(
    data: &Dataset,
    k: usize,
    opts: &FitOptions,
    sink: &mut dyn FnMut(&IterationRecord),
) -> Result<FitResult> {
    data.require_both_classes()?;
    let p = data.p();
    if k < 1 || k > p {
        return invalid(format!("k must lie in 1..={p}, got {k}"));
    }
    if !(opts.gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    if !(opts.epsilon > 0.0) || opts.max_cuts < 1 {
        return invalid("epsilon must be positive and max_cuts at least one");
    }

    let clock = Stopwatch::start();
    let oracle = opts.oracle();
    let mut s = warm_start(data, k)?;
    let mut pool = CutPool::new(p);
    let mut tree = MasterTree::new(p, k);
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    let mut best: Option<(SupportMask, DualSolution)> = None;
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut prev_alpha: Option<Vec<f64>> = None;
    let mut master_nodes = 0usize;
    let mut certified = false;
    let mut iterations = 0usize;

    while iterations < opts.max_cuts {
        iterations += 1;
        let warm = if opts.warm_dual { prev_alpha.as_deref() } else { None };
        let sol = match dual::evaluate(data, &s.weights(), &oracle, warm) {
            Ok(sol) => sol,
            // A suboptimal dual point still defines a valid minorant.
            Err(Error::OracleBudget(sol)) => *sol,
            Err(e) => return Err(e),
        };
        let c = sol.objective;
        pool.push(make_cut(&sol, &s))?;
        visited.insert(s.indices());
        prev_alpha = Some(sol.alpha.clone());
        if c < upper {
            upper = c;
            best = Some((s.clone(), sol));
        }

        let incumbent = best.as_ref().map(|(bs, _)| MasterSolution {
            s: bs.clone(),
            eta: upper,
            nodes_explored: 0,
            proof_gap: 0.0,
            lower_bound: f64::NEG_INFINITY,
        });
        if opts.fresh_master {
            tree = MasterTree::new(p, k);
        }
        let master = match tree.solve(&pool, incumbent.as_ref(), &opts.master, None) {
            Ok(m) => m,
            Err(Error::MasterBudget(m)) => *m,
            Err(e) => return Err(e),
        };
        master_nodes += master.nodes_explored;
        lower = lower.max(master.lower_bound);

        sink(&IterationRecord {
            iteration: iterations,
            eta: master.eta,
            lower_bound: master.lower_bound,
            c_s: c,
            best: upper,
            support_hash: s.fingerprint(),
            support: s.indices(),
            master_nodes: master.nodes_explored,
        });

        if lower >= upper - opts.epsilon * (1.0 + upper.abs()) {
            certified = true;
            break;
        }
        let next = master.s;
        if visited.contains(&next.indices()) {
            // Only reachable when the master stopped early or the oracle is
            // inexact; the loop cannot make further progress.
            break;
        }
        s = next;
    }

    let (s, sol) = best.expect("at least one oracle call");
    Ok(FitResult {
        s,
        w: sol.w,
        b: sol.b,
        objective: sol.objective,
        lower_bound: lower,
        cuts_used: iterations,
        iterations,
        wall_time: clock.elapsed(),
        certified,
        master_nodes,
    })
}
