//! Independent reference implementations for the integration tests.
//! Plain loops over `Vec`s, no shared code with the library.
#![allow(dead_code)]

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| StandardNormal.sample(rng))
}

pub fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-300, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

/// Least squares `y ~= W x + b` through the normal equations of the
/// design `[x, 1]`. Returns `W` as rows (one per output) and `b`.
pub fn normal_equations_affine(x: &[Vec<f64>], y: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (n, p, q) = (x.len(), x[0].len(), y[0].len());
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(1.0);
            r
        })
        .collect();
    let mut ztz = vec![vec![0.0; p + 1]; p + 1];
    for i in 0..=p {
        for j in 0..=p {
            ztz[i][j] = (0..n).map(|s| z[s][i] * z[s][j]).sum();
        }
    }
    let mut w = vec![vec![0.0; p]; q];
    let mut b = vec![0.0; q];
    for out in 0..q {
        let rhs: Vec<f64> = (0..=p).map(|i| (0..n).map(|s| z[s][i] * y[s][out]).sum()).collect();
        let beta = solve(ztz.clone(), rhs);
        w[out].copy_from_slice(&beta[..p]);
        b[out] = beta[p];
    }
    (w, b)
}

pub fn mean_rows(x: &[Vec<f64>]) -> Vec<f64> {
    let d = x[0].len();
    (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / x.len() as f64).collect()
}

/// Regularised logistic loss with unpenalised intercept, by direct sums.
pub fn logistic_objective(x: &[Vec<f64>], y: &[u8], c: &[f64], lambda: f64, w: &[f64], b: f64) -> f64 {
    let mut j = 0.0;
    for i in 0..x.len() {
        let z: f64 = x[i].iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let t = if y[i] == 1 { 1.0 } else { 0.0 };
        // log(1 + e^z) - t z, stable for both signs.
        let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        j += c[i] * (sp - t * z);
    }
    j + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Dense Newton iterations on the logistic objective; returns `(w, b)`.
pub fn newton_logistic(x: &[Vec<f64>], y: &[u8], lambda: f64) -> (Vec<f64>, f64) {
    let (n, d) = (x.len(), x[0].len());
    let mut beta = vec![0.0; d + 1];
    for _ in 0..100 {
        let mut g = vec![0.0; d + 1];
        let mut h = vec![vec![0.0; d + 1]; d + 1];
        for i in 0..n {
            let mut zi = x[i].clone();
            zi.push(1.0);
            let z: f64 = zi.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-z).exp());
            let t = if y[i] == 1 { 1.0 } else { 0.0 };
            for a in 0..=d {
                g[a] += (p - t) * zi[a];
                for c in 0..=d {
                    h[a][c] += p * (1.0 - p) * zi[a] * zi[c];
                }
            }
        }
        for a in 0..d {
            g[a] += lambda * beta[a];
            h[a][a] += lambda;
        }
        let step = solve(h, g.clone());
        for a in 0..=d {
            beta[a] -= step[a];
        }
        if g.iter().fold(0f64, |m, v| m.max(v.abs())) < 1e-13 {
            break;
        }
    }
    let b = beta[d];
    beta.truncate(d);
    (beta, b)
}

/// Mean pairwise cosine distance by nested loops.
pub fn diversity_loops(x: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in 0..n {
            if j <= i {
                continue;
            }
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for k in 0..x[i].len() {
                dot += x[i][k] * x[j][k];
                na += x[i][k] * x[i][k];
                nb += x[j][k] * x[j][k];
            }
            total += 1.0 - dot / (na.sqrt() * nb.sqrt());
            pairs += 1;
        }
    }
    total / pairs as f64
}
