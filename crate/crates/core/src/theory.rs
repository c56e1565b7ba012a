//! Support-recovery theory for the binary-truth sign model
//! `y = sign(x'w* + eps)`, `x ~ N(0, I)`, `eps ~ N(0, sigma2)`,
//! `w* in {0,1}^p` with `k` ones.
//!
//! Closed forms for orthant and disagreement probabilities, the
//! concentration bounds on the empirical misclassification gap, the sample
//! size threshold `n0`, and Monte Carlo estimators to check all of them.
//! Logarithms are natural.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::data::{Dataset, SupportMask};
use crate::datagen::{generate, sign, LabelModel, SyntheticConfig, TruthModel};
use crate::error::{invalid, Result};
use crate::par::par_map;

/// Largest number of supports [`brute_force_min`] will enumerate.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

const BATCH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryParams {
    pub k: usize,
    pub p: usize,
    pub sigma2: f64,
    /// Number of true features among the `k` selected, `0..=k`.
    pub ell: usize,
}

impl TheoryParams {
    pub fn new(k: usize, p: usize, sigma2: f64, ell: usize) -> Result<Self> {
        if k < 1 || k > p {
            return invalid(format!("need 1 <= k <= p, got k={k}, p={p}"));
        }
        if ell > k {
            return invalid(format!("ell={ell} exceeds k={k}"));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return invalid("sigma2 must be finite and nonnegative");
        }
        Ok(Self { k, p, sigma2, ell })
    }

    fn kk(&self) -> f64 {
        let k = self.k as f64;
        k * (k + self.sigma2)
    }
}

fn check_corr(r: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&r) {
        return invalid(format!("correlation {r} outside [-1, 1]"));
    }
    Ok(())
}

/// `P(Z1 > 0, Z2 > 0)` for a standard bivariate normal with correlation `rho`.
pub fn orthant2(rho: f64) -> Result<f64> {
    check_corr(rho)?;
    Ok((PI / 2.0 + rho.asin()) / (2.0 * PI))
}

fn check_psd3(r12: f64, r13: f64, r23: f64) -> Result<()> {
    for r in [r12, r13, r23] {
        check_corr(r)?;
    }
    let det = 1.0 + 2.0 * r12 * r13 * r23 - r12 * r12 - r13 * r13 - r23 * r23;
    if det < -1e-12 {
        return invalid("correlations do not form a positive semidefinite matrix");
    }
    Ok(())
}

/// `P(Z1 > 0, Z2 > 0, Z3 > 0)` for a standard trivariate normal.
pub fn orthant3(r12: f64, r13: f64, r23: f64) -> Result<f64> {
    check_psd3(r12, r13, r23)?;
    Ok((PI / 2.0 + r12.asin() + r13.asin() + r23.asin()) / (4.0 * PI))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `P(sign(x'w) != sign(x'w' + eps))` for `x ~ N(0, I)`, `eps ~ N(0, sigma^2)`.
pub fn disagreement_prob(w: &[f64], w_prime: &[f64], sigma: f64) -> Result<f64> {
    if w.len() != w_prime.len() {
        return invalid("vectors differ in length");
    }
    if !(sigma >= 0.0) {
        return invalid("sigma must be nonnegative");
    }
    let nw = norm2(w).sqrt();
    if nw == 0.0 {
        return invalid("w = 0 has no direction");
    }
    let denom = nw * (norm2(w_prime) + sigma * sigma).sqrt();
    if denom == 0.0 {
        return invalid("w' = 0 with sigma = 0 gives constant labels");
    }
    // Angle via atan2, with the sine side from Lagrange's identity, so that
    // nearly parallel vectors keep full precision.
    let dot: f64 = w.iter().zip(w_prime).map(|(a, b)| a * b).sum();
    let mut cross = norm2(w) * sigma * sigma;
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            cross += (w[i] * w_prime[j] - w[j] * w_prime[i]).powi(2);
        }
    }
    Ok(cross.sqrt().atan2(dot) / PI)
}

/// Disagreement probability of a binary classifier with `ell` correct
/// features out of `k` against the noisy truth.
pub fn q_of_ell(params: &TheoryParams) -> f64 {
    (params.ell as f64 / params.kk().sqrt()).clamp(-1.0, 1.0).acos() / PI
}

/// `E[Z_i]` for `Z_i = 1(yhat_i(w) != y_i) - 1(yhat_i(w*) != y_i)`.
pub fn exact_mean_z(params: &TheoryParams) -> f64 {
    let r = params.kk().sqrt();
    let k = params.k as f64;
    ((params.ell as f64 / r).clamp(-1.0, 1.0).acos() - (k / r).clamp(-1.0, 1.0).acos()) / PI
}

/// `(1/pi) (k - ell) / sqrt(k (k + sigma2) - ell^2)`, a lower bound on
/// [`exact_mean_z`] for `ell < k`.
pub fn mean_z_lower_bound(params: &TheoryParams) -> Result<f64> {
    if params.ell >= params.k {
        return invalid("the bound needs ell < k");
    }
    let (k, l) = (params.k as f64, params.ell as f64);
    Ok((k - l) / (params.kk() - l * l).sqrt() / PI)
}

/// Bound on `P(Delta(w, w*) <= 0)` over `n` samples for a classifier with
/// `ell < k` correct features.
pub fn large_dev_bound(n: usize, params: &TheoryParams) -> Result<f64> {
    if params.ell >= params.k {
        return invalid("the bound needs ell < k");
    }
    let (k, l) = (params.k as f64, params.ell as f64);
    Ok((-(n as f64) * (k - l).powi(2) / (2.0 * PI * PI * (params.kk() - l * l))).exp())
}

fn check_np(k: usize, p: usize, sigma2: f64) -> Result<()> {
    if k < 1 || p < 2 * k {
        return invalid(format!("the threshold needs k >= 1 and p >= 2k, got k={k}, p={p}"));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return invalid("sigma2 must be finite and nonnegative");
    }
    Ok(())
}

/// Unrounded `6 pi^2 (2 + sigma2) k ln(p - k)`.
pub fn n0_value(k: usize, p: usize, sigma2: f64) -> Result<f64> {
    check_np(k, p, sigma2)?;
    Ok(6.0 * PI * PI * (2.0 + sigma2) * k as f64 * ((p - k) as f64).ln())
}

/// Sample size beyond which brute-force misclassification minimization
/// recovers the support with high probability: `ceil(n0_value)`.
pub fn n0_threshold(k: usize, p: usize, sigma2: f64) -> Result<u64> {
    Ok(n0_value(k, p, sigma2)?.ceil() as u64)
}

/// `exp(-(n - n0) / (2 pi^2 k (sigma2 + 2)))`, bounding the probability that
/// brute force fails to recover the support with `n >= n0` samples.
pub fn failure_tail(n: u64, k: usize, p: usize, sigma2: f64) -> Result<f64> {
    let n0 = n0_threshold(k, p, sigma2)?;
    if n < n0 {
        return invalid(format!("the tail bound only holds for n >= n0 = {n0}"));
    }
    Ok((-((n - n0) as f64) / (2.0 * PI * PI * k as f64 * (sigma2 + 2.0))).exp())
}

fn binomial(p: usize, k: usize) -> u64 {
    let k = k.min(p - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (p - i) as u128 / (i + 1) as u128;
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// Minimizer of the empirical misclassification of `sign(x'w)` over binary
/// `w` with exactly `k` ones. Supports are enumerated in lexicographic
/// order and the first minimizer wins.
pub fn brute_force_min(data: &Dataset, k: usize) -> Result<SupportMask> {
    let p = data.p();
    if k < 1 || k > p {
        return invalid(format!("k must lie in 1..={p}, got {k}"));
    }
    let count = binomial(p, k);
    if count > ENUMERATION_LIMIT {
        return invalid(format!("C({p},{k}) = {count} supports exceeds the limit {ENUMERATION_LIMIT}"));
    }
    let n = data.n();
    let y = data.y();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = (usize::MAX, idx.clone());
    let mut s = vec![0.0; n];
    loop {
        s.iter_mut().for_each(|v| *v = 0.0);
        for &j in &idx {
            for (si, x) in s.iter_mut().zip(data.col(j)) {
                *si += x;
            }
        }
        let errors = s.iter().zip(y).filter(|(si, yi)| sign(**si) != **yi).count();
        if errors < best.0 {
            best = (errors, idx.clone());
        }
        // Next combination in lexicographic order.
        let mut i = k;
        while i > 0 && idx[i - 1] == p - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for t in i..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
    SupportMask::from_indices(p, k, &best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaStat {
    /// `(1/n) sum_i Z_i`.
    pub value: f64,
    /// Counts of `Z_i = -1, 0, +1`.
    pub z_counts: [usize; 3],
}

/// Difference in empirical misclassification between `sign(x'w1)` and
/// `sign(x'w2)`.
pub fn delta_stat(data: &Dataset, w1: &[f64], w2: &[f64]) -> Result<DeltaStat> {
    if w1.len() != data.p() || w2.len() != data.p() {
        return invalid("classifier length differs from p");
    }
    let s1 = data.scores(w1, 0.0);
    let s2 = data.scores(w2, 0.0);
    let mut z_counts = [0usize; 3];
    for ((a, b), &y) in s1.iter().zip(&s2).zip(data.y()) {
        let z = (sign(*a) != y) as i32 - (sign(*b) != y) as i32;
        z_counts[(z + 1) as usize] += 1;
    }
    let value = (z_counts[2] as f64 - z_counts[0] as f64) / data.n() as f64;
    Ok(DeltaStat { value, z_counts })
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_sums(sum: f64, sumsq: f64, samples: usize) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        let stderr = if samples > 1 { (var * n / (n - 1.0) / n).sqrt() } else { f64::INFINITY };
        Self { estimate: mean, stderr, samples }
    }

    /// `|estimate - value| <= z * stderr`.
    pub fn agrees(&self, value: f64, z: f64) -> bool {
        (self.estimate - value).abs() <= z * self.stderr
    }
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(batch);
    r
}

/// Mean of `draw` over `samples` draws, split into independently seeded
/// batches whose sums are combined.
fn monte_carlo<F>(samples: usize, seed: u64, draw: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let batches: Vec<(u64, usize)> = (0..samples.div_ceil(BATCH))
        .map(|b| (b as u64, BATCH.min(samples - b * BATCH)))
        .collect();
    let sums = par_map(&batches, |&(b, m)| {
        let mut rng = batch_rng(seed, b);
        let (mut s, mut q) = (0.0, 0.0);
        for _ in 0..m {
            let v = draw(&mut rng);
            s += v;
            q += v * v;
        }
        (s, q)
    });
    let (s, q) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Estimate::from_sums(s, q, samples)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn mc_orthant2(rho: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_corr(rho)?;
    let c = (1.0 - rho * rho).sqrt();
    Ok(monte_carlo(samples, seed, |r| {
        let a = normal(r);
        let b = rho * a + c * normal(r);
        (a > 0.0 && b > 0.0) as u8 as f64
    }))
}

pub fn mc_orthant3(r12: f64, r13: f64, r23: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_psd3(r12, r13, r23)?;
    // Cholesky factor of the correlation matrix, tolerating singularity.
    let l22 = (1.0 - r12 * r12).max(0.0).sqrt();
    let l32 = if l22 > 0.0 { (r23 - r12 * r13) / l22 } else { 0.0 };
    let l33 = (1.0 - r13 * r13 - l32 * l32).max(0.0).sqrt();
    Ok(monte_carlo(samples, seed, |r| {
        let (a, b, c) = (normal(r), normal(r), normal(r));
        let z2 = r12 * a + l22 * b;
        let z3 = r13 * a + l32 * b + l33 * c;
        (a > 0.0 && z2 > 0.0 && z3 > 0.0) as u8 as f64
    }))
}

pub fn mc_disagreement(w: &[f64], w_prime: &[f64], sigma: f64, samples: usize, seed: u64) -> Result<Estimate> {
    disagreement_prob(w, w_prime, sigma)?;
    let p = w.len();
    Ok(monte_carlo(samples, seed, |r| {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..p {
            let x = normal(r);
            a += w[j] * x;
            b += w_prime[j] * x;
        }
        b += sigma * normal(r);
        (sign(a) != sign(b)) as u8 as f64
    }))
}

/// Draws `(x'w, x'w*, eps)` for a classifier sharing `ell` of its `k`
/// features with the truth, using the sums over shared and unshared blocks.
fn draw_pair(params: &TheoryParams, r: &mut ChaCha8Rng) -> (f64, f64) {
    let l = params.ell as f64;
    let rest = (params.k - params.ell) as f64;
    let shared = l.sqrt() * normal(r);
    let truth_only = rest.sqrt() * normal(r);
    let mine_only = rest.sqrt() * normal(r);
    let eps = params.sigma2.sqrt() * normal(r);
    let y = sign(shared + truth_only + eps);
    let mine = sign(shared + mine_only);
    let truth = sign(shared + truth_only);
    ((mine != y) as u8 as f64, (truth != y) as u8 as f64)
}

/// Estimates [`exact_mean_z`].
pub fn mc_mean_z(params: &TheoryParams, samples: usize, seed: u64) -> Estimate {
    monte_carlo(samples, seed, |r| {
        let (a, b) = draw_pair(params, r);
        a - b
    })
}

/// Estimates [`q_of_ell`]: the misclassification rate of a classifier with
/// `ell` correct features.
pub fn mc_q_of_ell(params: &TheoryParams, samples: usize, seed: u64) -> Estimate {
    monte_carlo(samples, seed, |r| draw_pair(params, r).0)
}

/// Deterministic per-trial seed.
fn mix(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A binary-truth sign-model dataset and its truth vector.
pub fn theory_dataset(n: usize, k: usize, p: usize, sigma2: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    let mut c = SyntheticConfig::new(n, p, k, seed);
    c.label_model = LabelModel::Sign;
    c.truth_model = TruthModel::Binary;
    c.sigma2 = sigma2;
    let inst = generate(&c)?;
    Ok((inst.data, inst.w_true))
}

/// Classifier with the first `ell` true features and `k - ell` false ones.
fn partial_classifier(w_true: &[f64], params: &TheoryParams) -> Result<Vec<f64>> {
    let truth: Vec<usize> = (0..w_true.len()).filter(|&j| w_true[j] != 0.0).collect();
    let other: Vec<usize> = (0..w_true.len()).filter(|&j| w_true[j] == 0.0).collect();
    let wrong = params.k - params.ell;
    if other.len() < wrong {
        return invalid("p too small for the requested number of false features");
    }
    let mut w = vec![0.0; w_true.len()];
    for &j in truth.iter().take(params.ell).chain(other.iter().take(wrong)) {
        w[j] = 1.0;
    }
    Ok(w)
}

/// Frequency over `trials` simulated datasets of `Delta(w, w*) <= 0`, the
/// event bounded by [`large_dev_bound`].
pub fn empirical_large_dev(n: usize, params: &TheoryParams, trials: usize, seed: u64) -> Result<Estimate> {
    let seeds: Vec<u64> = (0..trials as u64).map(|t| mix(seed, t)).collect();
    let hits = par_map(&seeds, |&s| -> Result<f64> {
        let (data, w_true) = theory_dataset(n, params.k, params.p, params.sigma2, s)?;
        let w = partial_classifier(&w_true, params)?;
        Ok((delta_stat(&data, &w, &w_true)?.value <= 0.0) as u8 as f64)
    });
    let hits = hits.into_iter().collect::<Result<Vec<f64>>>()?;
    let s: f64 = hits.iter().sum();
    Ok(Estimate::from_sums(s, s, trials))
}

/// Frequency over `trials` simulated datasets with which
/// [`brute_force_min`] misses the true support.
pub fn empirical_failure(n: usize, k: usize, p: usize, sigma2: f64, trials: usize, seed: u64) -> Result<Estimate> {
    let seeds: Vec<u64> = (0..trials as u64).map(|t| mix(seed, t)).collect();
    let misses = par_map(&seeds, |&s| -> Result<f64> {
        let (data, w_true) = theory_dataset(n, k, p, sigma2, s)?;
        let found = brute_force_min(&data, k)?;
        Ok((found.weights() != w_true) as u8 as f64)
    });
    let misses = misses.into_iter().collect::<Result<Vec<f64>>>()?;
    let s: f64 = misses.iter().sum();
    Ok(Estimate::from_sums(s, s, trials))
}

/// One closed form against its Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub quantity: &'static str,
    pub params: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl ValidationRow {
    fn new(quantity: &'static str, params: String, closed_form: f64, e: Estimate) -> Self {
        Self { quantity, params, closed_form, estimate: e.estimate, stderr: e.stderr, samples: e.samples }
    }

    pub fn within(&self, z: f64) -> bool {
        (self.closed_form - self.estimate).abs() <= z * self.stderr
    }
}

/// The standard validation grid: every closed form at a few parameter
/// points, each estimated with `samples` draws (orthant probabilities use
/// ten times as many).
pub fn validation_grid(samples: usize, seed: u64) -> Result<Vec<ValidationRow>> {
    let mut rows = Vec::new();
    let mut stream = 0u64;
    let mut next_seed = || {
        stream += 1;
        mix(seed, stream)
    };
    for rho in [-0.6, 0.0, 0.3, 0.9] {
        let e = mc_orthant2(rho, 10 * samples, next_seed())?;
        rows.push(ValidationRow::new("orthant2", format!("rho={rho}"), orthant2(rho)?, e));
    }
    for (a, b, c) in [(0.0, 0.0, 0.0), (0.3, 0.2, 0.1), (0.5, -0.2, 0.4), (0.8, 0.6, 0.5)] {
        let e = mc_orthant3(a, b, c, 10 * samples, next_seed())?;
        rows.push(ValidationRow::new("orthant3", format!("rho12={a};rho13={b};rho23={c}"), orthant3(a, b, c)?, e));
    }
    let pairs: [(&[f64], &[f64], f64); 4] = [
        (&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0], 0.0),
        (&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0], 0.7),
        (&[0.5, -1.0, 2.0, 0.0], &[1.0, -1.0, 1.5, 0.3], 1.0),
        (&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], 0.5),
    ];
    for (w, wp, sigma) in pairs {
        let e = mc_disagreement(w, wp, sigma, samples, next_seed())?;
        rows.push(ValidationRow::new(
            "disagreement_prob",
            format!("w={w:?};w_prime={wp:?};sigma={sigma}"),
            disagreement_prob(w, wp, sigma)?,
            e,
        ));
    }
    for (k, sigma2) in [(5usize, 0.0), (5, 1.0), (30, 1.0)] {
        for ell in [0, k / 2, k - 1] {
            let t = TheoryParams::new(k, 2 * k, sigma2, ell)?;
            let label = format!("k={k};ell={ell};sigma2={sigma2}");
            rows.push(ValidationRow::new("q_of_ell", label.clone(), q_of_ell(&t), mc_q_of_ell(&t, samples, next_seed())));
            rows.push(ValidationRow::new("exact_mean_z", label, exact_mean_z(&t), mc_mean_z(&t, samples, next_seed())));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(orthant2(0.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(orthant2(1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(orthant3(0.0, 0.0, 0.0).unwrap(), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(orthant3(1.0, 0.0, 0.0).unwrap(), 0.25, epsilon = 1e-15);
        assert!(orthant3(0.9, 0.9, -0.9).is_err());
        assert!(orthant2(1.5).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(n0_threshold(30, 1000, 0.0).unwrap(), 24436);
        assert_eq!(n0_threshold(1, 2, 0.0).unwrap(), 0);
        assert!(n0_threshold(3, 5, 0.0).is_err());
        let n0 = n0_threshold(2, 6, 0.25).unwrap();
        assert_eq!(failure_tail(n0, 2, 6, 0.25).unwrap(), 1.0);
        assert!(failure_tail(n0 - 1, 2, 6, 0.25).is_err());
    }

    #[test]
    fn q_examples() {
        let t = TheoryParams::new(30, 60, 1.0, 15).unwrap();
        assert_abs_diff_eq!(q_of_ell(&t), 0.3363, epsilon = 1e-4);
        let t = TheoryParams::new(4, 8, 0.0, 4).unwrap();
        assert_abs_diff_eq!(q_of_ell(&t), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(exact_mean_z(&t), 0.0, epsilon = 1e-12);
        assert!(mean_z_lower_bound(&t).is_err());
        let t = TheoryParams::new(4, 8, 0.0, 0).unwrap();
        assert_abs_diff_eq!(mean_z_lower_bound(&t).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert_eq!(large_dev_bound(0, &t).unwrap(), 1.0);
    }

    #[test]
    fn enumeration_order_and_guard() {
        let rows = vec![vec![1.0, 1.0, 1.0], vec![-1.0, -1.0, -1.0]];
        let d = Dataset::from_rows(&rows, vec![1.0, -1.0]).unwrap();
        // Every support classifies perfectly; the first in order wins.
        assert_eq!(brute_force_min(&d, 2).unwrap().indices(), vec![0, 1]);
        assert_eq!(brute_force_min(&d, 3).unwrap().indices(), vec![0, 1, 2]);
        assert_eq!(binomial(40, 20), 137846528820);
        let wide = Dataset::from_rows(&[vec![0.0; 40], vec![1.0; 40]], vec![1.0, -1.0]).unwrap();
        assert!(brute_force_min(&wide, 20).is_err());
    }

    #[test]
    fn delta_bookkeeping() {
        let (d, w) = theory_dataset(50, 2, 6, 0.5, 4).unwrap();
        let other = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let a = delta_stat(&d, &other, &w).unwrap();
        let b = delta_stat(&d, &w, &other).unwrap();
        assert_abs_diff_eq!(a.value, -b.value, epsilon = 1e-15);
        assert_eq!(a.z_counts.iter().sum::<usize>(), 50);
        assert_eq!(delta_stat(&d, &w, &w).unwrap().value, 0.0);
    }
}
