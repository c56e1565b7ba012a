//! Master problem: `min_s max_i (a_i + g_i's)` over `s in {0,1}^p`,
//! `sum s <= k`, solved exactly by best-first branch-and-bound.
//!
//! Every cut coefficient is nonpositive, so each cut is nonincreasing in `s`
//! and some optimum always uses the full budget. Node bounds come from the
//! Lagrangian `max_{lambda in simplex} min_s sum_i lambda_i cut_i(s)`, whose
//! inner minimum is a greedy top-k selection.

use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::data::SupportMask;
use crate::dual::Cut;
use crate::error::{invalid, Error, Result};

/// Append-only collection of cuts sharing a dimension.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    p: usize,
    cuts: Vec<Cut>,
    /// Row-major copy of all coefficients, `cuts.len() x p`.
    coeffs: Vec<f64>,
}

impl CutPool {
    pub fn new(p: usize) -> Self {
        Self { p, cuts: Vec::new(), coeffs: Vec::new() }
    }

    pub fn push(&mut self, cut: Cut) -> Result<()> {
        if cut.p() != self.p {
            return invalid(format!("cut of dimension {} in pool of dimension {}", cut.p(), self.p));
        }
        if cut.coeffs.iter().any(|&g| !(g <= 0.0)) {
            return invalid("cut coefficients must be nonpositive");
        }
        self.coeffs.extend_from_slice(&cut.coeffs);
        self.cuts.push(cut);
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.p..(i + 1) * self.p]
    }

    /// `max_i cut_i(s)` for `s` given by its active indices.
    pub fn value_at(&self, idx: &[usize]) -> f64 {
        (0..self.len())
            .map(|i| {
                let g = self.row(i);
                self.cuts[i].intercept + idx.iter().map(|&j| g[j]).sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn value(&self, s: &SupportMask) -> f64 {
        self.value_at(&s.indices())
    }
}

/// A subproblem of the search tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BnbNode {
    pub fixed_one: Vec<usize>,
    pub fixed_zero: Vec<usize>,
    pub lower_bound: f64,
    pub depth: usize,
}

impl BnbNode {
    pub fn root() -> Self {
        Self {
            fixed_one: Vec::new(),
            fixed_zero: Vec::new(),
            lower_bound: f64::NEG_INFINITY,
            depth: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterSolution {
    pub s: SupportMask,
    /// `max_i cut_i(s)`.
    pub eta: f64,
    pub nodes_explored: usize,
    /// `eta` minus the certified global lower bound.
    pub proof_gap: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// Absolute optimality tolerance on `eta`.
    pub tol: f64,
    pub node_limit: usize,
    /// Subgradient steps per node bound.
    pub lagrange_iters: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self { tol: 1e-9, node_limit: 200_000, lagrange_iters: 50 }
    }
}

/// One line of the optional search trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    pub depth: usize,
    pub fixed_one: usize,
    pub fixed_zero: usize,
    pub bound: f64,
    pub incumbent: f64,
}

/// Exact minimum of `a + g's` over `s` with `sum s <= k` under fixings.
pub fn single_cut_min(cut: &Cut, k: usize, fixed_one: &[usize], fixed_zero: &[usize]) -> f64 {
    let p = cut.p();
    let mut state = vec![0i8; p];
    for &j in fixed_zero {
        state[j] = -1;
    }
    for &j in fixed_one {
        state[j] = 1;
    }
    let mut total = cut.intercept;
    let mut free = Vec::with_capacity(p);
    let mut ones = 0;
    for j in 0..p {
        match state[j] {
            1 => {
                total += cut.coeffs[j];
                ones += 1;
            }
            0 => free.push(cut.coeffs[j]),
            _ => {}
        }
    }
    let r = k.saturating_sub(ones).min(free.len());
    if r > 0 {
        if r < free.len() {
            free.select_nth_unstable_by(r - 1, |a, b| a.total_cmp(b));
        }
        total += free[..r].iter().filter(|&&g| g < 0.0).sum::<f64>();
    }
    total
}

/// Valid lower bound on the node optimum: the best of the single-cut bounds
/// and `budget` projected-subgradient steps on the Lagrangian multipliers,
/// starting from uniform weights.
pub fn node_lower_bound(pool: &CutPool, node: &BnbNode, k: usize, budget: usize) -> f64 {
    if pool.is_empty() {
        return f64::NEG_INFINITY;
    }
    let ctx = NodeContext::new(pool, &node.fixed_one, &node.fixed_zero, k);
    let uniform = vec![1.0 / pool.len() as f64; pool.len()];
    let out = ctx.lagrangian(uniform, budget, f64::INFINITY, 0.0);
    out.bound
}

/// Solves the master problem to absolute tolerance `tol`.
pub fn solve_master(
    pool: &CutPool,
    k: usize,
    incumbent: Option<&MasterSolution>,
    tol: f64,
) -> Result<MasterSolution> {
    let opts = MasterOptions { tol, ..MasterOptions::default() };
    solve_master_with(pool, k, incumbent, &opts, None)
}

pub fn solve_master_with(
    pool: &CutPool,
    k: usize,
    incumbent: Option<&MasterSolution>,
    opts: &MasterOptions,
    trace: Option<&mut dyn FnMut(&NodeRecord)>,
) -> Result<MasterSolution> {
    MasterTree::new(pool.p(), k).solve(pool, incumbent, opts, trace)
}

/// Search tree kept alive across solves over a growing cut pool.
///
/// Adding cuts can only raise `max_i cut_i(s)`, so every bound computed
/// earlier remains valid. The tree keeps its frontier (open and pruned
/// nodes, which together partition the feasible set) and each solve resumes
/// from it instead of starting again at the root.
#[derive(Debug, Clone)]
pub struct MasterTree {
    p: usize,
    k: usize,
    frontier: Vec<Open>,
    next_id: usize,
}

impl MasterTree {
    pub fn new(p: usize, k: usize) -> Self {
        Self { p, k, frontier: Vec::new(), next_id: 0 }
    }

    /// Number of nodes on the frontier.
    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Solves the master for the current pool. The pool must extend the one
    /// used by earlier calls on this tree.
    pub fn solve(
        &mut self,
        pool: &CutPool,
        incumbent: Option<&MasterSolution>,
        opts: &MasterOptions,
        mut trace: Option<&mut dyn FnMut(&NodeRecord)>,
    ) -> Result<MasterSolution> {
        if pool.is_empty() {
            return invalid("master problem needs at least one cut");
        }
        let (p, k) = (self.p, self.k);
        if pool.p() != p {
            return invalid(format!("pool dimension {} differs from tree dimension {p}", pool.p()));
        }
        if k > p {
            return invalid(format!("budget k={k} exceeds p={p}"));
        }

        let mut best_idx: Vec<usize>;
        let mut best_val: f64;
        match incumbent {
            Some(inc) if inc.s.p() == p && inc.s.count() <= k => {
                best_idx = inc.s.indices();
                best_val = pool.value_at(&best_idx);
            }
            _ => {
                best_idx = Vec::new();
                best_val = f64::INFINITY;
            }
        }

        let m = pool.len();
        if self.next_id == 0 {
            self.frontier.push(Open {
                key: NodeKey { bound: f64::NEG_INFINITY, depth: 0, id: 0 },
                node: BnbNode::root(),
                lambda: vec![1.0 / m as f64; m],
            });
            self.next_id = 1;
        }
        let mut heap: BinaryHeap<Open> = self.frontier.drain(..).collect();
        let mut parked: Vec<Open> = Vec::new();
        let mut explored = 0usize;

        while let Some(mut open) = heap.pop() {
            if open.key.bound >= best_val - opts.tol {
                // Best-first: everything left is at least as bad.
                parked.push(open);
                parked.extend(heap.drain());
                break;
            }
            if explored >= opts.node_limit {
                heap.push(open);
                self.frontier = parked;
                self.frontier.extend(heap.drain());
                let lb = self.lower_bound(best_val);
                return Err(Error::MasterBudget(Box::new(finish(pool, k, best_idx, explored, lb))));
            }
            explored += 1;
            let ctx = NodeContext::new(pool, &open.node.fixed_one, &open.node.fixed_zero, k);

            // Leaves: the budget is exhausted by fixed ones, or every free
            // coordinate fits and taking all of them is optimal.
            if let Some(leaf) = ctx.leaf() {
                let v = pool.value_at(&leaf);
                if v < best_val {
                    best_val = v;
                    best_idx = leaf;
                }
                emit(&mut trace, open.key.id, &open.node, v, best_val);
                open.key.bound = v;
                open.node.lower_bound = v;
                parked.push(open);
                continue;
            }

            open.lambda.resize(m, 0.0);
            let start = std::mem::take(&mut open.lambda);
            let out = ctx.lagrangian(start, opts.lagrange_iters, best_val, opts.tol);
            if out.best_value < best_val {
                best_val = out.best_value;
                best_idx = out.best_support.clone();
            }
            let bound = out.bound.max(open.key.bound);
            emit(&mut trace, open.key.id, &open.node, bound, best_val);
            if bound >= best_val - opts.tol {
                open.key.bound = bound;
                open.node.lower_bound = bound;
                open.lambda = out.lambda;
                parked.push(open);
                continue;
            }

            let j = ctx.branching_coordinate(&out.bound_support);
            let node = open.node;
            let mut one = node.clone();
            one.fixed_one.push(j);
            one.depth += 1;
            one.lower_bound = bound;
            let mut zero = node;
            zero.fixed_zero.push(j);
            zero.depth += 1;
            zero.lower_bound = bound;
            for child in [one, zero] {
                heap.push(Open {
                    key: NodeKey { bound, depth: child.depth, id: self.next_id },
                    node: child,
                    lambda: out.lambda.clone(),
                });
                self.next_id += 1;
            }
        }

        self.frontier = parked;
        let lb = self.lower_bound(best_val);
        Ok(finish(pool, k, best_idx, explored, lb))
    }

    fn lower_bound(&self, best_val: f64) -> f64 {
        self.frontier.iter().map(|o| o.key.bound).fold(best_val, f64::min)
    }
}

fn finish(pool: &CutPool, k: usize, idx: Vec<usize>, explored: usize, lower_bound: f64) -> MasterSolution {
    let s = SupportMask::from_indices(pool.p(), k, &idx).expect("incumbent respects the budget");
    let eta = pool.value(&s);
    MasterSolution {
        s,
        eta,
        nodes_explored: explored,
        proof_gap: (eta - lower_bound).max(0.0),
        lower_bound,
    }
}

fn emit(
    trace: &mut Option<&mut dyn FnMut(&NodeRecord)>,
    id: usize,
    node: &BnbNode,
    bound: f64,
    incumbent: f64,
) {
    if let Some(f) = trace.as_mut() {
        f(&NodeRecord {
            id,
            depth: node.depth,
            fixed_one: node.fixed_one.len(),
            fixed_zero: node.fixed_zero.len(),
            bound,
            incumbent,
        });
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeKey {
    bound: f64,
    depth: usize,
    id: usize,
}

impl PartialEq for NodeKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for NodeKey {}

impl PartialOrd for NodeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeKey {
    /// Max-heap order: smallest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

#[derive(Debug, Clone)]
struct Open {
    key: NodeKey,
    node: BnbNode,
    lambda: Vec<f64>,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

struct LagrangeOutcome {
    bound: f64,
    /// Greedy minimizer at the multipliers achieving `bound`.
    bound_support: Vec<usize>,
    lambda: Vec<f64>,
    /// Best exact `max_i cut_i(s)` among all greedy supports visited.
    best_value: f64,
    best_support: Vec<usize>,
}

/// Per-node view of the pool: fixed contributions folded into offsets.
struct NodeContext<'a> {
    pool: &'a CutPool,
    fixed_one: &'a [usize],
    free: Vec<usize>,
    /// `a_i + sum_{j fixed to one} g_ij`.
    offsets: Vec<f64>,
    /// Number of free coordinates to select.
    room: usize,
}

impl<'a> NodeContext<'a> {
    fn new(pool: &'a CutPool, fixed_one: &'a [usize], fixed_zero: &[usize], k: usize) -> Self {
        let p = pool.p();
        let mut state = vec![0i8; p];
        for &j in fixed_zero {
            state[j] = -1;
        }
        for &j in fixed_one {
            state[j] = 1;
        }
        let free: Vec<usize> = (0..p).filter(|&j| state[j] == 0).collect();
        let offsets = (0..pool.len())
            .map(|i| {
                let g = pool.row(i);
                pool.cuts[i].intercept + fixed_one.iter().map(|&j| g[j]).sum::<f64>()
            })
            .collect();
        let room = k.saturating_sub(fixed_one.len()).min(free.len());
        Self { pool, fixed_one, free, offsets, room }
    }

    fn leaf(&self) -> Option<Vec<usize>> {
        if self.room == 0 || self.room == self.free.len() {
            let mut s: Vec<usize> = self.fixed_one.to_vec();
            if self.room > 0 {
                s.extend_from_slice(&self.free);
            }
            s.sort_unstable();
            Some(s)
        } else {
            None
        }
    }

    /// Value and minimizer of `min_s sum_i lambda_i cut_i(s)`; also the
    /// subgradient `h_i = cut_i(s)`.
    fn evaluate(&self, lambda: &[f64], combined: &mut Vec<(f64, usize)>) -> (f64, Vec<usize>, Vec<f64>) {
        combined.clear();
        combined.extend(self.free.iter().map(|&j| (0.0, j)));
        let mut constant = 0.0;
        for (i, &l) in lambda.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            constant += l * self.offsets[i];
            let g = self.pool.row(i);
            for c in combined.iter_mut() {
                c.0 += l * g[c.1];
            }
        }
        let r = self.room;
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if r < combined.len() && r > 0 {
            combined.select_nth_unstable_by(r - 1, order);
        }
        let chosen = &combined[..r];
        let value = constant + chosen.iter().map(|c| c.0).sum::<f64>();
        let picks: Vec<usize> = chosen.iter().map(|c| c.1).collect();
        let h: Vec<f64> = (0..self.pool.len())
            .map(|i| {
                let g = self.pool.row(i);
                self.offsets[i] + picks.iter().map(|&j| g[j]).sum::<f64>()
            })
            .collect();
        let mut support: Vec<usize> = self.fixed_one.iter().copied().chain(picks).collect();
        support.sort_unstable();
        (value, support, h)
    }

    fn lagrangian(&self, start: Vec<f64>, budget: usize, incumbent: f64, tol: f64) -> LagrangeOutcome {
        let m = self.pool.len();
        let mut combined = Vec::with_capacity(self.free.len());

        // Single-cut bounds are the Lagrangian at the simplex vertices.
        let mut bound = f64::NEG_INFINITY;
        let mut bound_support;
        let mut bound_lambda;
        let mut best_value;
        let mut best_support;
        let mut best_vertex = 0;
        let mut scratch: Vec<f64> = Vec::with_capacity(self.free.len());
        for i in 0..m {
            let g = self.pool.row(i);
            scratch.clear();
            scratch.extend(self.free.iter().map(|&j| g[j]));
            let r = self.room;
            if r > 0 && r < scratch.len() {
                scratch.select_nth_unstable_by(r - 1, |a, b| a.total_cmp(b));
            }
            let v = self.offsets[i] + scratch[..r].iter().sum::<f64>();
            if v > bound {
                bound = v;
                best_vertex = i;
            }
        }
        {
            let mut e = vec![0.0; m];
            e[best_vertex] = 1.0;
            let (v, s, h) = self.evaluate(&e, &mut combined);
            best_value = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            best_support = s.clone();
            bound = bound.max(v);
            bound_support = s;
            bound_lambda = e;
        }

        let mut lambda = start;
        for t in 1..=budget {
            if bound >= incumbent.min(best_value) - tol {
                break;
            }
            let (v, s, h) = self.evaluate(&lambda, &mut combined);
            let exact = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if exact < best_value {
                best_value = exact;
                best_support = s.clone();
            }
            if v > bound {
                bound = v;
                bound_support = s;
                bound_lambda = lambda.clone();
            }
            let mean = h.iter().sum::<f64>() / m as f64;
            let norm = h.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                break;
            }
            let step = 1.0 / (t as f64).sqrt() / norm;
            for (l, hi) in lambda.iter_mut().zip(&h) {
                *l += step * (hi - mean);
            }
            project_simplex(&mut lambda);
        }
        LagrangeOutcome {
            bound,
            bound_support,
            lambda: bound_lambda,
            best_value,
            best_support,
        }
    }

    /// Free coordinate with the largest summed `|g|` over the cuts attaining
    /// the maximum at `support`; lowest index on ties.
    fn branching_coordinate(&self, support: &[usize]) -> usize {
        let values: Vec<f64> = (0..self.pool.len())
            .map(|i| {
                let g = self.pool.row(i);
                self.pool.cuts[i].intercept + support.iter().map(|&j| g[j]).sum::<f64>()
            })
            .collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-9 * (1.0 + top.abs());
        let active: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= top - slack).collect();
        let mut best = self.free[0];
        let mut best_score = f64::NEG_INFINITY;
        for &j in &self.free {
            let score: f64 = active.iter().map(|&i| self.pool.row(i)[j].abs()).sum();
            if score > best_score {
                best_score = score;
                best = j;
            }
        }
        best
    }
}

/// In-place Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cut(a: f64, g: &[f64]) -> Cut {
        Cut {
            intercept: a,
            coeffs: g.to_vec(),
            origin: SupportMask::empty(g.len(), g.len()),
        }
    }

    #[test]
    fn single_cut_examples() {
        let c = cut(5.0, &[-3.0, -1.0, -2.0, 0.0]);
        assert_eq!(single_cut_min(&c, 2, &[], &[]), 0.0);
        assert_eq!(single_cut_min(&cut(2.5, &[0.0; 4]), 2, &[], &[]), 2.5);
        assert_eq!(single_cut_min(&c, 4, &[], &[]), -1.0);
        // Fixing the best coordinate to zero forces the next two.
        assert_eq!(single_cut_min(&c, 2, &[], &[0]), 2.0);
        assert_eq!(single_cut_min(&c, 2, &[3], &[]), 2.0);
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5, 0.5];
        project_simplex(&mut v);
        for x in &v {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
        let mut w = vec![2.0, 0.0, -1.0];
        project_simplex(&mut w);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn one_cut_pool_matches_greedy() {
        let mut pool = CutPool::new(4);
        pool.push(cut(5.0, &[-3.0, -1.0, -2.0, 0.0])).unwrap();
        let sol = solve_master(&pool, 2, None, 1e-9).unwrap();
        assert_eq!(sol.s.indices(), vec![0, 2]);
        assert_eq!(sol.eta, 0.0);
        assert!(sol.proof_gap <= 1e-9);
    }

    #[test]
    fn rejects_positive_coefficients_and_dimension_mismatch() {
        let mut pool = CutPool::new(3);
        assert!(pool.push(cut(0.0, &[0.1, 0.0, 0.0])).is_err());
        assert!(pool.push(cut(0.0, &[0.0, 0.0])).is_err());
        assert!(solve_master(&pool, 1, None, 1e-9).is_err());
    }

    #[test]
    fn node_order_prefers_low_bound_then_depth() {
        let a = NodeKey { bound: 1.0, depth: 0, id: 0 };
        let b = NodeKey { bound: 0.5, depth: 0, id: 1 };
        let c = NodeKey { bound: 0.5, depth: 3, id: 2 };
        let mut heap = BinaryHeap::from(vec![a, b, c]);
        assert_eq!(heap.pop().unwrap().id, 2);
        assert_eq!(heap.pop().unwrap().id, 1);
        assert_eq!(heap.pop().unwrap().id, 0);
    }
}
