//! Inner dual problem for a fixed support.
//!
//! For a support `s` (binary, or fractional for relaxation checks) the
//! oracle maximizes
//!
//! ```text
//! f(a, s) = -sum_i l*(y_i, a_i) - (gamma/2) sum_j s_j (X_j' a)^2
//!    s.t. sum_i a_i = 0,  a_i in dom l*(y_i, .)
//! ```
//!
//! whose optimal value is `c(s)`. Because `f` is linear in `s`, the
//! partial derivatives `-(gamma/2) (X_j' a)^2` at any feasible `a` define an
//! affine function that lies below `c` everywhere on `[0,1]^p` and touches
//! it at `s` when `a` is optimal.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::{Dataset, SupportMask};
use crate::error::{invalid, Error, Result};
use crate::losses::LossKind;

/// Distance kept from the endpoints of the logistic conjugate domain, where
/// its derivative is unbounded.
const LOGISTIC_EDGE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Primal Newton mapped to the dual for smooth losses, pairwise ascent
    /// for the hinge. Falls back to projected gradient if certification fails.
    Auto,
    /// Projected gradient ascent with Armijo backtracking and
    /// Barzilai-Borwein steps over the box-plus-hyperplane set.
    ProjectedGradient,
    /// Two-coordinate ascent along `e_i - e_j` (hinge and squared hinge).
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub gamma: f64,
    pub kind: LossKind,
    /// Bound on the certified relative duality gap
    /// `(P - D) / (1 + |D|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: InnerSolver,
}

impl OracleOptions {
    pub fn new(gamma: f64, kind: LossKind) -> Self {
        Self {
            gamma,
            kind,
            tol: 1e-8,
            max_iter: 100_000,
            solver: InnerSolver::Auto,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_solver(mut self, solver: InnerSolver) -> Self {
        self.solver = solver;
        self
    }
}

/// Output of one oracle call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// `f(alpha, s)`, a lower bound on `c(s)` that is tight at optimality.
    pub objective: f64,
    /// `-(gamma/2) (X_j' alpha)^2` for every feature `j`.
    pub grad: Vec<f64>,
    pub w: Vec<f64>,
    pub b: f64,
    /// Duality gap `P(w, b) - f(alpha, s)` of the recovered primal point,
    /// with the primal penalty `sum_j w_j^2 / (2 gamma s_j)`.
    pub gap: f64,
    pub iterations: usize,
}

/// Affine minorant `a + g's` of `c` over `[0,1]^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cut {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    pub origin: SupportMask,
}

impl Cut {
    pub fn p(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval_bits(&self, bits: &[bool]) -> f64 {
        self.intercept
            + self
                .coeffs
                .iter()
                .zip(bits)
                .filter(|(_, &b)| b)
                .map(|(g, _)| g)
                .sum::<f64>()
    }

    pub fn eval(&self, s: &SupportMask) -> f64 {
        self.eval_bits(s.bits())
    }

    pub fn eval_weights(&self, s: &[f64]) -> f64 {
        self.intercept + self.coeffs.iter().zip(s).map(|(g, v)| g * v).sum::<f64>()
    }
}

/// Solves the inner dual for a binary support with default settings.
pub fn evaluate_support(
    data: &Dataset,
    s: &SupportMask,
    gamma: f64,
    kind: LossKind,
    tol: f64,
) -> Result<DualSolution> {
    let opts = OracleOptions::new(gamma, kind).with_tol(tol);
    evaluate(data, &s.weights(), &opts, None)
}

/// Solves the inner dual for weights `s` in `[0,1]^p`.
///
/// `warm` may hold any dual-feasible point (for instance the solution at a
/// neighbouring support) and is used as the starting iterate.
pub fn evaluate(
    data: &Dataset,
    weights: &[f64],
    opts: &OracleOptions,
    warm: Option<&[f64]>,
) -> Result<DualSolution> {
    if !(opts.gamma > 0.0) || !opts.gamma.is_finite() {
        return invalid(format!("gamma must be positive, got {}", opts.gamma));
    }
    if weights.len() != data.p() {
        return invalid(format!("support has length {} for p={}", weights.len(), data.p()));
    }
    if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
        return invalid("support weights must lie in [0, 1]");
    }
    if !(opts.tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    data.require_both_classes()?;

    let problem = DualProblem::new(data, weights, opts.gamma, opts.kind);
    let warm = warm.and_then(|a| {
        (a.len() == data.n())
            .then(|| problem.project(a).ok())
            .flatten()
    });

    let (alpha, iterations) = match (opts.solver, opts.kind) {
        (InnerSolver::Auto, LossKind::Hinge) | (InnerSolver::Pairwise, _) => {
            if opts.kind == LossKind::Logistic {
                return invalid("pairwise ascent supports hinge and squared hinge only");
            }
            let start = warm.unwrap_or_else(|| vec![0.0; data.n()]);
            pairwise_ascent(&problem, start, opts.tol, opts.max_iter)
        }
        (InnerSolver::Auto, _) => {
            let (alpha, it) = primal_newton(&problem, warm.as_deref())?;
            if problem.rel_gap(&alpha) <= opts.tol {
                (alpha, it)
            } else {
                let (a, more) = projected_gradient(&problem, alpha, opts.tol, opts.max_iter);
                (a, it + more)
            }
        }
        (InnerSolver::ProjectedGradient, _) => {
            let start = match warm {
                Some(a) => a,
                None => problem.interior_start(),
            };
            projected_gradient(&problem, start, opts.tol, opts.max_iter)
        }
    };

    let sol = problem.finish(alpha, iterations);
    if sol.gap <= opts.tol * (1.0 + sol.objective.abs()) {
        Ok(sol)
    } else {
        Err(Error::OracleBudget(Box::new(sol)))
    }
}

/// Dual objective `f(alpha, s)`; `-inf` when `alpha` is outside the
/// conjugate domain.
pub fn dual_objective(data: &Dataset, weights: &[f64], alpha: &[f64], gamma: f64, kind: LossKind) -> f64 {
    let mut conj = 0.0;
    for (&y, &a) in data.y().iter().zip(alpha) {
        match kind.conjugate(y, a).finite() {
            Some(v) => conj += v,
            None => return f64::NEG_INFINITY,
        }
    }
    let quad: f64 = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(j, &w)| w * dot(data.col(j), alpha).powi(2))
        .sum();
    -conj - 0.5 * gamma * quad
}

/// `sum_i l(y_i, w'x_i + b) + ||w||^2 / (2 gamma)`.
pub fn primal_objective(data: &Dataset, w: &[f64], b: f64, gamma: f64, kind: LossKind) -> f64 {
    let z = data.scores(w, b);
    let loss: f64 = data
        .y()
        .iter()
        .zip(&z)
        .map(|(&y, &u)| kind.value_unchecked(y, u))
        .sum();
    loss + w.iter().map(|v| v * v).sum::<f64>() / (2.0 * gamma)
}

/// Maps a dual point back to a classifier: `w_s = -gamma X_s' alpha` and `b`
/// minimizing the loss with `w` held fixed.
pub fn recover_primal(
    data: &Dataset,
    s: &SupportMask,
    alpha: &[f64],
    gamma: f64,
    kind: LossKind,
) -> (Vec<f64>, f64) {
    recover_primal_weights(data, &s.weights(), alpha, gamma, kind)
}

pub(crate) fn recover_primal_weights(
    data: &Dataset,
    weights: &[f64],
    alpha: &[f64],
    gamma: f64,
    kind: LossKind,
) -> (Vec<f64>, f64) {
    let w: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(j, &sj)| if sj > 0.0 { -gamma * sj * dot(data.col(j), alpha) } else { 0.0 })
        .collect();
    let base = data.scores(&w, 0.0);
    let b = best_intercept(data.y(), &base, kind);
    (w, b)
}

/// Minimizer over `b` of `sum_i l(y_i, base_i + b)` by bisection on the
/// (sub)derivative, which is nondecreasing in `b`.
pub fn best_intercept(y: &[f64], base: &[f64], kind: LossKind) -> f64 {
    let slope = |b: f64| -> f64 {
        y.iter()
            .zip(base)
            .map(|(&yi, &r)| kind.derivative(yi, r + b))
            .sum()
    };
    let (pos, neg) = y.iter().fold((0usize, 0usize), |(p, n), &v| {
        if v > 0.0 {
            (p + 1, n)
        } else {
            (p, n + 1)
        }
    });
    if pos == 0 || neg == 0 {
        // Unbounded below for the logistic loss; any large-margin offset
        // attains the infimum of the margin losses.
        let r = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b = r + 1.0 + (y.len() as f64).ln().max(0.0) + 40.0;
        return if pos > 0 { b } else { -b };
    }
    let r = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut lo = -(r + 2.0);
    let mut hi = r + 2.0;
    while slope(lo) > 0.0 && lo > -1e12 {
        lo *= 2.0;
    }
    while slope(hi) < 0.0 && hi < 1e12 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    let lo_v = intercept_loss(y, base, kind, lo);
    let hi_v = intercept_loss(y, base, kind, hi);
    if lo_v < hi_v {
        lo
    } else {
        hi
    }
}

fn intercept_loss(y: &[f64], base: &[f64], kind: LossKind, b: f64) -> f64 {
    y.iter()
        .zip(base)
        .map(|(&yi, &r)| kind.value_unchecked(yi, r + b))
        .sum()
}

/// Builds the affine minorant from an oracle solution at `s`.
pub fn make_cut(sol: &DualSolution, s: &SupportMask) -> Cut {
    let intercept = sol.objective
        - sol
            .grad
            .iter()
            .zip(s.bits())
            .filter(|(_, &b)| b)
            .map(|(g, _)| g)
            .sum::<f64>();
    Cut {
        intercept,
        coeffs: sol.grad.clone(),
        origin: s.clone(),
    }
}

/// Euclidean projection of `v` onto `{a : sum a = 0, lower <= a <= upper}`.
///
/// The multiplier `tau` of the hyperplane satisfies
/// `sum clamp(v - tau, lower, upper) = 0`; it is bracketed by bisection and
/// then solved exactly on the final linear piece.
pub fn project_box_hyperplane(v: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    if lower.len() != n || upper.len() != n {
        return invalid("box bounds do not match vector length");
    }
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Err(Error::Infeasible("empty box".into()));
    }
    let sum_lo: f64 = lower.iter().sum();
    let sum_hi: f64 = upper.iter().sum();
    if sum_lo > 0.0 || sum_hi < 0.0 {
        return Err(Error::Infeasible(format!(
            "hyperplane sum=0 misses box with sum range [{sum_lo}, {sum_hi}]"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let apply = |tau: f64| -> f64 {
        v.iter()
            .zip(lower.iter().zip(upper))
            .map(|(&vi, (&l, &u))| (vi - tau).clamp(l, u))
            .sum()
    };

    // phi(tau) is nonincreasing; bracket its root.
    let vmax = v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let vmin = v.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let bmax = lower
        .iter()
        .chain(upper)
        .filter(|x| x.is_finite())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let mut lo = vmin - bmax - 1.0;
    let mut hi = vmax + bmax + 1.0;
    while apply(lo) < 0.0 {
        lo = lo - (hi - lo);
    }
    while apply(hi) > 0.0 {
        hi = hi + (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if apply(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Exact solve on the piece containing the bracket midpoint.
    let mid = 0.5 * (lo + hi);
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut fixed_sum = 0.0;
    for ((&vi, &l), &u) in v.iter().zip(lower).zip(upper) {
        let t = vi - mid;
        if t <= l {
            fixed_sum += l;
        } else if t >= u {
            fixed_sum += u;
        } else {
            free_sum += vi;
            free_count += 1;
        }
    }
    let tau = if free_count > 0 {
        let t = (free_sum + fixed_sum) / free_count as f64;
        if t >= lo && t <= hi {
            t
        } else {
            mid
        }
    } else {
        mid
    };
    let mut out: Vec<f64> = v
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&vi, (&l, &u))| (vi - tau).clamp(l, u))
        .collect();

    // Remove the last rounding residue on coordinates strictly inside the box.
    let excess: f64 = out.iter().sum();
    if excess != 0.0 {
        let inner: Vec<usize> = (0..n)
            .filter(|&i| out[i] > lower[i] && out[i] < upper[i])
            .collect();
        if !inner.is_empty() {
            let shift = excess / inner.len() as f64;
            for &i in &inner {
                out[i] = (out[i] - shift).clamp(lower[i], upper[i]);
            }
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dual problem data for one support.
struct DualProblem<'a> {
    data: &'a Dataset,
    /// Active features and their weights.
    active: Vec<(usize, f64)>,
    weights: &'a [f64],
    gamma: f64,
    kind: LossKind,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> DualProblem<'a> {
    fn new(data: &'a Dataset, weights: &'a [f64], gamma: f64, kind: LossKind) -> Self {
        let active = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, &w)| (j, w))
            .collect();
        let (lower, upper) = data
            .y()
            .iter()
            .map(|&y| {
                let (l, u) = kind.conjugate_interval(y);
                if kind == LossKind::Logistic {
                    (l + LOGISTIC_EDGE, u - LOGISTIC_EDGE)
                } else {
                    (l, u)
                }
            })
            .unzip();
        Self { data, active, weights, gamma, kind, lower, upper }
    }

    fn n(&self) -> usize {
        self.data.n()
    }

    fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        project_box_hyperplane(v, &self.lower, &self.upper)
    }

    /// A strictly interior feasible point: `y_i a_i = -m / (2 n_class(i))`.
    fn interior_start(&self) -> Vec<f64> {
        let (pos, neg) = self.data.class_counts();
        let m = pos.min(neg) as f64;
        self.data
            .y()
            .iter()
            .map(|&y| {
                let nc = if y > 0.0 { pos } else { neg } as f64;
                -y * 0.5 * m / nc
            })
            .collect()
    }

    /// `u_m = X_m' alpha` for active features.
    fn products(&self, alpha: &[f64]) -> Vec<f64> {
        self.active
            .iter()
            .map(|&(j, _)| dot(self.data.col(j), alpha))
            .collect()
    }

    fn value(&self, alpha: &[f64]) -> f64 {
        let mut conj = 0.0;
        for (&y, &a) in self.data.y().iter().zip(alpha) {
            match self.kind.conjugate(y, a).finite() {
                Some(v) => conj += v,
                None => return f64::NEG_INFINITY,
            }
        }
        let u = self.products(alpha);
        let quad: f64 = self.active.iter().zip(&u).map(|(&(_, w), &uj)| w * uj * uj).sum();
        -conj - 0.5 * self.gamma * quad
    }

    fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let u = self.products(alpha);
        let mut g: Vec<f64> = self
            .data
            .y()
            .iter()
            .zip(alpha)
            .map(|(&y, &a)| -self.kind.conjugate_derivative(y, a))
            .collect();
        for (&(j, w), &uj) in self.active.iter().zip(&u) {
            let c = self.gamma * w * uj;
            for (gi, xij) in g.iter_mut().zip(self.data.col(j)) {
                *gi -= c * xij;
            }
        }
        g
    }

    /// Absolute duality gap, the recovered `(w, b)` and the dual value.
    fn gap(&self, alpha: &[f64]) -> (f64, Vec<f64>, f64, f64) {
        let dual = self.value(alpha);
        let (w, b) = recover_primal_weights(self.data, self.weights, alpha, self.gamma, self.kind);
        let z = self.data.scores(&w, b);
        let loss: f64 = self
            .data
            .y()
            .iter()
            .zip(&z)
            .map(|(&y, &u)| self.kind.value_unchecked(y, u))
            .sum();
        let penalty: f64 = self
            .active
            .iter()
            .map(|&(j, sj)| w[j] * w[j] / (2.0 * self.gamma * sj))
            .sum();
        let hyper = alpha.iter().sum::<f64>().abs();
        let gap = if hyper > 1e-9 * (1.0 + alpha.iter().map(|a| a.abs()).sum::<f64>()) {
            f64::INFINITY
        } else {
            (loss + penalty - dual).max(0.0)
        };
        (gap, w, b, dual)
    }

    fn rel_gap(&self, alpha: &[f64]) -> f64 {
        let (gap, _, _, dual) = self.gap(alpha);
        gap / (1.0 + dual.abs())
    }

    fn finish(&self, alpha: Vec<f64>, iterations: usize) -> DualSolution {
        let grad: Vec<f64> = (0..self.data.p())
            .map(|j| -0.5 * self.gamma * dot(self.data.col(j), &alpha).powi(2))
            .collect();
        let (gap, w, b, objective) = self.gap(&alpha);
        DualSolution { alpha, objective, grad, w, b, gap, iterations }
    }
}

/// Newton's method on the restricted primal in `(v, b)` with features
/// scaled by `sqrt(s_j)`; the dual point is `a_i = l'(y_i, z_i)`, projected
/// onto the feasible set to remove rounding in `sum a = 0`.
fn primal_newton(problem: &DualProblem<'_>, warm: Option<&[f64]>) -> Result<(Vec<f64>, usize)> {
    let data = problem.data;
    let kind = problem.kind;
    let gamma = problem.gamma;
    let n = data.n();
    let m = problem.active.len();
    let y = data.y();
    let scale: Vec<f64> = problem.active.iter().map(|&(_, w)| w.sqrt()).collect();
    let col = |c: usize| data.col(problem.active[c].0);

    let mut v = vec![0.0; m];
    let mut b = 0.0;
    if let Some(a) = warm {
        for c in 0..m {
            v[c] = -gamma * scale[c] * dot(col(c), a);
        }
        let base = scores(&v, &scale, problem, 0.0);
        b = best_intercept(y, &base, kind);
    } else if kind == LossKind::Logistic {
        let (pos, neg) = data.class_counts();
        b = (pos as f64 / neg as f64).ln();
    }

    let objective = |v: &[f64], b: f64| -> f64 {
        let z = scores(v, &scale, problem, b);
        let loss: f64 = y.iter().zip(&z).map(|(&yi, &zi)| kind.value_unchecked(yi, zi)).sum();
        loss + v.iter().map(|x| x * x).sum::<f64>() / (2.0 * gamma)
    };

    let mut iterations = 0;
    let mut current = objective(&v, b);
    for _ in 0..200 {
        iterations += 1;
        let z = scores(&v, &scale, problem, b);
        let d: Vec<f64> = y.iter().zip(&z).map(|(&yi, &zi)| kind.derivative(yi, zi)).collect();
        let h: Vec<f64> = y
            .iter()
            .zip(&z)
            .map(|(&yi, &zi)| kind.second_derivative(yi, zi))
            .collect();

        let mut grad = DVector::zeros(m + 1);
        for c in 0..m {
            grad[c] = scale[c] * dot(col(c), &d) + v[c] / gamma;
        }
        grad[m] = d.iter().sum();
        let gnorm = grad.amax();
        if gnorm <= 1e-12 * (1.0 + n as f64) {
            break;
        }

        let mut hess = DMatrix::zeros(m + 1, m + 1);
        let weighted: Vec<Vec<f64>> = (0..m)
            .map(|c| col(c).iter().zip(&h).map(|(x, hi)| scale[c] * x * hi).collect())
            .collect();
        for a in 0..m {
            for c in a..m {
                let v = scale[c] * dot(&weighted[a], col(c));
                hess[(a, c)] = v;
                hess[(c, a)] = v;
            }
            hess[(a, a)] += 1.0 / gamma;
            let v = weighted[a].iter().sum::<f64>();
            hess[(a, m)] = v;
            hess[(m, a)] = v;
        }
        hess[(m, m)] = h.iter().sum::<f64>();

        let step = solve_damped(hess, &grad);
        let slope = -grad.dot(&step);
        if !(slope < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let nv: Vec<f64> = v.iter().enumerate().map(|(c, x)| x - t * step[c]).collect();
            let nb = b - t * step[m];
            let val = objective(&nv, nb);
            if val <= current + 1e-4 * t * slope {
                v = nv;
                b = nb;
                current = val;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let z = scores(&v, &scale, problem, b);
    let alpha: Vec<f64> = y.iter().zip(&z).map(|(&yi, &zi)| kind.derivative(yi, zi)).collect();
    let alpha = problem.project(&alpha)?;
    Ok((alpha, iterations))
}

fn scores(v: &[f64], scale: &[f64], problem: &DualProblem<'_>, b: f64) -> Vec<f64> {
    let mut z = vec![b; problem.n()];
    for (c, &(j, _)) in problem.active.iter().enumerate() {
        let coef = v[c] * scale[c];
        if coef != 0.0 {
            for (zi, xij) in z.iter_mut().zip(problem.data.col(j)) {
                *zi += coef * xij;
            }
        }
    }
    z
}

/// Solves `H x = g` for symmetric positive semidefinite `H`, adding a ridge
/// when the Cholesky factorization fails.
fn solve_damped(hess: DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let scale = hess.diagonal().amax().max(1.0);
    let mut ridge = 0.0;
    for _ in 0..30 {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += ridge;
        }
        if let Some(ch) = h.cholesky() {
            return ch.solve(grad);
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 10.0 };
    }
    grad.clone() / scale
}

/// Newton step on the face of free coordinates: maximizes the concave
/// quadratic over `alpha_F` with `sum alpha_F` fixed, then moves as far
/// along that step as the box allows. Kept only if the objective improves;
/// returns true when the step improved but was cut short by the box.
fn polish_face(problem: &DualProblem<'_>, alpha: &mut [f64], grad: &[f64], diag_curv: f64) -> bool {
    const MAX_FREE: usize = 200;
    let free: Vec<usize> = (0..alpha.len())
        .filter(|&l| alpha[l] > problem.lower[l] && alpha[l] < problem.upper[l])
        .collect();
    let m = free.len();
    if m < 2 || m > MAX_FREE {
        return false;
    }
    let data = problem.data;
    let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
    for &(j, w) in &problem.active {
        let c = data.col(j);
        for (r, &a) in free.iter().enumerate() {
            let xa = problem.gamma * w * c[a];
            for (q, &b) in free.iter().enumerate().skip(r) {
                kkt[(r, q)] += xa * c[b];
            }
        }
    }
    for r in 0..m {
        kkt[(r, r)] += diag_curv;
        for q in 0..r {
            kkt[(r, q)] = kkt[(q, r)];
        }
        kkt[(r, m)] = 1.0;
        kkt[(m, r)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    for (r, &a) in free.iter().enumerate() {
        rhs[r] = grad[a];
    }
    let svd = kkt.svd(true, true);
    let Ok(sol) = svd.solve(&rhs, 1e-12) else {
        return false;
    };
    let step = |from: &[f64], dir: &[f64], cap: f64| -> f64 {
        let mut tau = cap;
        for (r, &a) in free.iter().enumerate() {
            let d = dir[r];
            if d > 0.0 {
                tau = tau.min((problem.upper[a] - from[a]) / d);
            } else if d < 0.0 {
                tau = tau.min((problem.lower[a] - from[a]) / d);
            }
        }
        tau
    };
    let newton: Vec<f64> = sol.iter().take(m).copied().collect();
    let tau = step(alpha, &newton, 1.0);
    if !(tau >= 0.0) {
        return false;
    }
    let mut trial = alpha.to_vec();
    for (r, &a) in free.iter().enumerate() {
        trial[a] = (alpha[a] + tau * newton[r]).clamp(problem.lower[a], problem.upper[a]);
    }
    // Flat directions of the face (`H d = 0`, `sum d = 0`) change the
    // objective linearly, so ascent along them runs to the box.
    let mut blocked = tau < 1.0;
    if let Some(vt) = &svd.v_t {
        let top = svd.singular_values.max();
        let mut flat = vec![0.0; m];
        for (i, &sv) in svd.singular_values.iter().enumerate() {
            if sv <= 1e-10 * top {
                let v = vt.row(i);
                let rate: f64 = (0..m).map(|r| v[r] * rhs[r]).sum();
                for r in 0..m {
                    flat[r] += rate * v[r];
                }
            }
        }
        let norm = flat.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm > 1e-14 {
            let t = step(&trial, &flat, f64::INFINITY);
            if t.is_finite() && t > 0.0 {
                for (r, &a) in free.iter().enumerate() {
                    trial[a] = (trial[a] + t * flat[r]).clamp(problem.lower[a], problem.upper[a]);
                }
                blocked = true;
            }
        }
    }
    // Clamping can break `sum alpha = 0` by rounding; restore it on the
    // coordinate with the most room.
    let drift: f64 = free.iter().map(|&a| trial[a] - alpha[a]).sum();
    if drift != 0.0 {
        let &fix = free
            .iter()
            .max_by(|&&a, &&b| {
                let ra = (trial[a] - problem.lower[a]).min(problem.upper[a] - trial[a]);
                let rb = (trial[b] - problem.lower[b]).min(problem.upper[b] - trial[b]);
                ra.total_cmp(&rb)
            })
            .expect("nonempty");
        trial[fix] = (trial[fix] - drift).clamp(problem.lower[fix], problem.upper[fix]);
    }
    if problem.value(&trial) > problem.value(alpha) {
        alpha.copy_from_slice(&trial);
        blocked
    } else {
        false
    }
}

/// Projected gradient ascent with Barzilai-Borwein trial steps and Armijo
/// backtracking along the projection arc's chord.
fn projected_gradient(
    problem: &DualProblem<'_>,
    mut alpha: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let curvature_bound: f64 = problem
        .active
        .iter()
        .map(|&(j, w)| w * problem.data.col(j).iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        * problem.gamma;
    let base_curv = match problem.kind {
        LossKind::Logistic => 4.0,
        LossKind::SquaredHinge => 1.0,
        LossKind::Hinge => 0.0,
    };
    let mut step = 1.0 / (base_curv + curvature_bound).max(1e-12);
    let mut value = problem.value(&alpha);
    let mut grad = problem.gradient(&alpha);
    let mut it = 0;
    while it < max_iter {
        it += 1;
        if it % 20 == 1 && problem.rel_gap(&alpha) <= tol {
            break;
        }
        let trial: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
        let target = match problem.project(&trial) {
            Ok(t) => t,
            Err(_) => break,
        };
        let dir: Vec<f64> = target.iter().zip(&alpha).map(|(t, a)| t - a).collect();
        let slope = dot(&grad, &dir);
        if !(slope > 0.0) {
            if problem.rel_gap(&alpha) <= tol {
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                break;
            }
            continue;
        }
        let mut theta = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand: Vec<f64> = alpha.iter().zip(&dir).map(|(a, d)| a + theta * d).collect();
            let v = problem.value(&cand);
            if v >= value + 1e-4 * theta * slope {
                next = Some((cand, v));
                break;
            }
            theta *= 0.5;
        }
        let Some((cand, v)) = next else { break };
        let new_grad = problem.gradient(&cand);
        let s: Vec<f64> = cand.iter().zip(&alpha).map(|(a, b)| a - b).collect();
        let r: Vec<f64> = grad.iter().zip(&new_grad).map(|(g0, g1)| g0 - g1).collect();
        let sr = dot(&s, &r);
        if sr > 0.0 {
            step = (dot(&s, &s) / sr).clamp(1e-12, 1e12);
        }
        alpha = cand;
        value = v;
        grad = new_grad;
    }
    (alpha, it)
}

/// Two-coordinate ascent for quadratic conjugates: each step moves along
/// `e_i - e_j`, so `sum a = 0` is preserved exactly. The working pair uses
/// the maximal violating `i` and a second-order choice of `j`.
fn pairwise_ascent(
    problem: &DualProblem<'_>,
    mut alpha: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let data = problem.data;
    let n = data.n();
    let gamma = problem.gamma;
    let diag_curv = match problem.kind {
        LossKind::SquaredHinge => 1.0,
        _ => 0.0,
    };
    // Row norms K_ii = sum_m w_m X_mi^2.
    let mut kdiag = vec![0.0; n];
    for &(j, w) in &problem.active {
        for (k, x) in kdiag.iter_mut().zip(data.col(j)) {
            *k += w * x * x;
        }
    }
    let mut grad = problem.gradient(&alpha);
    let mut u = problem.products(&alpha);
    let mut kernel_row = vec![0.0; n];
    let mut target = tol;
    let mut it = 0;

    while it < max_iter {
        it += 1;
        let mut i_up = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for l in 0..n {
            if alpha[l] < problem.upper[l] && grad[l] > g_max {
                g_max = grad[l];
                i_up = l;
            }
            if alpha[l] > problem.lower[l] && grad[l] < g_min {
                g_min = grad[l];
            }
        }
        if i_up == usize::MAX || g_max - g_min <= target {
            if problem.rel_gap(&alpha) <= tol || target < 1e-15 {
                break;
            }
            target *= 0.1;
            continue;
        }
        let i = i_up;

        kernel_row.iter_mut().for_each(|k| *k = 0.0);
        for &(j, w) in &problem.active {
            let c = data.col(j);
            let xi = w * c[i];
            if xi != 0.0 {
                for (k, x) in kernel_row.iter_mut().zip(c) {
                    *k += xi * x;
                }
            }
        }

        let mut best_j = usize::MAX;
        let mut best_gain = 0.0;
        for l in 0..n {
            if alpha[l] > problem.lower[l] && grad[l] < g_max {
                let b = g_max - grad[l];
                let a = gamma * (kdiag[i] + kdiag[l] - 2.0 * kernel_row[l]) + 2.0 * diag_curv;
                let gain = if a > 1e-12 { b * b / a } else { b * 1e12 };
                if gain > best_gain {
                    best_gain = gain;
                    best_j = l;
                }
            }
        }
        if best_j == usize::MAX {
            break;
        }
        let j = best_j;
        let b = grad[i] - grad[j];
        let a = gamma * (kdiag[i] + kdiag[j] - 2.0 * kernel_row[j]) + 2.0 * diag_curv;
        let room = (problem.upper[i] - alpha[i]).min(alpha[j] - problem.lower[j]);
        let mut delta = if a > 1e-12 { b / a } else { f64::INFINITY };
        delta = delta.min(room);
        if !(delta > 0.0) || !delta.is_finite() {
            break;
        }
        alpha[i] += delta;
        alpha[j] -= delta;
        if alpha[i] > problem.upper[i] {
            alpha[i] = problem.upper[i];
        }
        if alpha[j] < problem.lower[j] {
            alpha[j] = problem.lower[j];
        }

        for (c, &(col, w)) in problem.active.iter().enumerate() {
            let x = data.col(col);
            let du = delta * (x[i] - x[j]);
            if du == 0.0 {
                continue;
            }
            u[c] += du;
            let coef = gamma * w * du;
            for (g, xl) in grad.iter_mut().zip(x) {
                *g -= coef * xl;
            }
        }
        if diag_curv > 0.0 {
            grad[i] -= delta;
            grad[j] += delta;
        }
        // Periodic refresh bounds drift from incremental updates; the face
        // step removes the slow zigzag among free coordinates.
        if it % 1000 == 0 {
            grad = problem.gradient(&alpha);
            // A blocked step pins one coordinate; retry on the smaller face.
            for _ in 0..20 {
                let again = polish_face(problem, &mut alpha, &grad, diag_curv);
                grad = problem.gradient(&alpha);
                if !again {
                    break;
                }
            }
            u = problem.products(&alpha);
        }
    }
    (alpha, it)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_fixed_point() {
        let v = [-0.2, 0.5, -0.3];
        let p = project_box_hyperplane(&v, &[-1.0, 0.0, -1.0], &[0.0, 1.0, 0.0]).unwrap();
        for (a, b) in p.iter().zip(&v) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_two_dimensional() {
        let p = project_box_hyperplane(&[-0.5, 0.1], &[-1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p[0], -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.3, epsilon = 1e-12);
    }

    #[test]
    fn projection_degenerate_box() {
        let p = project_box_hyperplane(&[3.0, -2.0, 7.0], &[0.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(p, vec![0.0; 3]);
    }

    #[test]
    fn projection_infeasible() {
        let err = project_box_hyperplane(&[0.0, 0.0], &[0.5, 0.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn projection_half_infinite_boxes() {
        let lo = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        let hi = [0.0, f64::INFINITY, 0.0];
        let p = project_box_hyperplane(&[5.0, 1.0, -4.0], &lo, &hi).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        assert!(p[0] <= 0.0 && p[1] >= 0.0 && p[2] <= 0.0);
    }

    #[test]
    fn cut_from_zero_gradient_is_constant() {
        let sol = DualSolution {
            alpha: vec![0.0; 2],
            objective: 3.5,
            grad: vec![0.0; 3],
            w: vec![0.0; 3],
            b: 0.0,
            gap: 0.0,
            iterations: 0,
        };
        let s = SupportMask::from_indices(3, 2, &[0, 2]).unwrap();
        let cut = make_cut(&sol, &s);
        assert_eq!(cut.intercept, 3.5);
        assert_eq!(cut.eval(&SupportMask::from_indices(3, 2, &[1]).unwrap()), 3.5);
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let d = Dataset::from_rows(&[vec![1.0], vec![-1.0]], vec![1.0, -1.0]).unwrap();
        let s = SupportMask::full(1);
        assert!(evaluate_support(&d, &s, 0.0, LossKind::Logistic, 1e-8).is_err());
        assert!(evaluate_support(&d, &s, -1.0, LossKind::Hinge, 1e-8).is_err());
    }

    #[test]
    fn intercept_minimizer_logistic() {
        // Three positives, one negative, no features: b = ln 3.
        let y = [1.0, 1.0, 1.0, -1.0];
        let b = best_intercept(&y, &[0.0; 4], LossKind::Logistic);
        assert_abs_diff_eq!(b, 3f64.ln(), epsilon = 1e-10);
    }
}
