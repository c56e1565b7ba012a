#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparsecls::{Dataset, LossKind, SupportMask};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Gaussian design with logistic labels from a planted dense direction,
/// retried until both classes appear.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    loop {
        let w: Vec<f64> = (0..p).map(|_| normal(&mut r)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| normal(&mut r)).collect()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|x| {
                let m: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                if r.random::<f64>() < 1.0 / (1.0 + (-m).exp()) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        if y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0) {
            return Dataset::from_rows(&rows, y).unwrap();
        }
    }
}

/// All index sets of size exactly `k` in lexicographic order.
pub fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > p {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + p - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All index sets of size at most `k`, including the empty set.
pub fn subsets_up_to(p: usize, k: usize) -> Vec<Vec<usize>> {
    (0..=k).flat_map(|m| if m == 0 { vec![vec![]] } else { combinations(p, m) }).collect()
}

pub fn mask(p: usize, k: usize, idx: &[usize]) -> SupportMask {
    SupportMask::from_indices(p, k, idx).unwrap()
}

pub fn loss(kind: LossKind, y: f64, u: f64) -> f64 {
    let m = 1.0 - y * u;
    match kind {
        LossKind::Logistic => {
            let z = -y * u;
            if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            }
        }
        LossKind::Hinge => m.max(0.0),
        LossKind::SquaredHinge => 0.5 * m.max(0.0).powi(2),
    }
}

/// `sum_i l(y_i, w'x_i + b) + |w|^2 / (2 gamma)` with `w` given on `idx`.
pub fn primal(data: &Dataset, idx: &[usize], w: &[f64], b: f64, gamma: f64, kind: LossKind) -> f64 {
    let mut total = w.iter().map(|v| v * v).sum::<f64>() / (2.0 * gamma);
    for i in 0..data.n() {
        let u = b + idx.iter().zip(w).map(|(&j, wj)| wj * data.col(j)[i]).sum::<f64>();
        total += loss(kind, data.y()[i], u);
    }
    total
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let m = rhs.len();
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        rhs.swap(c, piv);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for q in c..m {
                a[r][q] -= f * a[c][q];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut x = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|q| a[c][q] * x[q]).sum();
        x[c] = (rhs[c] - s) / a[c][c];
    }
    x
}

/// Damped Newton on `(w_idx, b)` for a smooth loss; `gamma = inf` drops the
/// ridge term. Returns `(w, b, objective)`.
pub fn newton_primal(data: &Dataset, idx: &[usize], gamma: f64, kind: LossKind) -> (Vec<f64>, f64, f64) {
    assert!(kind != LossKind::Hinge);
    let m = idx.len() + 1;
    let n = data.n();
    let feat = |i: usize, q: usize| if q < idx.len() { data.col(idx[q])[i] } else { 1.0 };
    let ridge = if gamma.is_finite() { 1.0 / gamma } else { 0.0 };
    let obj = |theta: &[f64]| {
        let g = if gamma.is_finite() { gamma } else { f64::INFINITY };
        primal(data, idx, &theta[..idx.len()], theta[idx.len()], g, kind)
    };
    let mut theta = vec![0.0; m];
    for _ in 0..200 {
        let mut grad = vec![0.0; m];
        let mut hess = vec![vec![0.0; m]; m];
        for q in 0..idx.len() {
            grad[q] += ridge * theta[q];
            hess[q][q] += ridge;
        }
        for i in 0..n {
            let y = data.y()[i];
            let u: f64 = (0..m).map(|q| theta[q] * feat(i, q)).sum();
            let (d1, d2) = match kind {
                LossKind::Logistic => {
                    let s = 1.0 / (1.0 + (y * u).exp());
                    (-y * s, s * (1.0 - s))
                }
                _ => {
                    let r = 1.0 - y * u;
                    if r > 0.0 {
                        (-y * r, 1.0)
                    } else {
                        (0.0, 0.0)
                    }
                }
            };
            for q in 0..m {
                grad[q] += d1 * feat(i, q);
                for t in 0..m {
                    hess[q][t] += d2 * feat(i, q) * feat(i, t);
                }
            }
        }
        for q in 0..m {
            hess[q][q] += 1e-12;
        }
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-11 {
            break;
        }
        let step = solve_dense(hess, grad.clone());
        let f0 = obj(&theta);
        let slope: f64 = grad.iter().zip(&step).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, d)| a - t * d).collect();
            if obj(&cand) <= f0 - 1e-4 * t * slope || t < 1e-12 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    let f = obj(&theta);
    (theta[..idx.len()].to_vec(), theta[idx.len()], f)
}
