//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use esn_dr::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn random_matrix(rows: usize, cols: usize, label: &str) -> DMatrix<f64> {
    let mut rng = stream(11, label);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform(n: usize, label: &str) -> Vec<f64> {
    let mut rng = stream(42, label);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Doubling-map orbit built from a random bit string: `x_k` is the binary
/// fraction `0.b_k b_{k+1} ...`, so `x_{k+1} = 2 x_k mod 1` holds without the
/// float collapse of iterating the map directly.
pub fn doubling_map(n: usize) -> Vec<f64> {
    let mut rng = stream(9, "bits");
    let bits: Vec<u8> = (0..n + 64).map(|_| rng.random_range(0..2u8)).collect();
    (0..n)
        .map(|k| {
            (0..52)
                .map(|i| f64::from(bits[k + i]) * 0.5f64.powi(i as i32 + 1))
                .sum()
        })
        .collect()
}

/// Plain gradient descent on `1/2 ||S w - y||^2 + lambda/2 ||w||^2`.
pub fn ridge_gradient_descent(
    s: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    iters: usize,
) -> DVector<f64> {
    let y = DVector::from_column_slice(y);
    // Frobenius norm bounds the largest eigenvalue of S^T S
    let step = 1.0 / (s.norm_squared() + lambda);
    let mut w = DVector::zeros(s.ncols());
    for _ in 0..iters {
        let grad = s.transpose() * (s * &w - &y) + lambda * &w;
        w -= step * grad;
    }
    w
}

/// Euclidean projection of `z` onto `{0 <= v <= upper, sum v = total}`,
/// found by bisection on the shift.
fn project_capped_simplex(z: &[f64], upper: f64, total: f64) -> Vec<f64> {
    let clip = |tau: f64| -> Vec<f64> { z.iter().map(|v| (v - tau).clamp(0.0, upper)).collect() };
    let (mut lo, mut hi) = (
        z.iter().cloned().fold(f64::INFINITY, f64::min) - upper - 1.0,
        z.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0,
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clip(mid).iter().sum::<f64>() > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the nu-SVR dual
/// `min 1/2 b^T K b - y^T b`, `b = a - a*`, `0 <= a, a* <= c/l`,
/// `sum a = sum a* = c nu / 2`. Returns `b` and the objective.
pub fn nu_svr_dual_oracle(
    k: &DMatrix<f64>,
    y: &[f64],
    c: f64,
    nu: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let l = y.len();
    let upper = c / l as f64;
    let half = c * nu / 2.0;
    let objective = |a: &[f64], s: &[f64]| {
        let b = DVector::from_iterator(l, a.iter().zip(s).map(|(p, q)| p - q));
        0.5 * b.dot(&(k * &b)) - b.iter().zip(y).map(|(b, y)| b * y).sum::<f64>()
    };
    let lip = 2.0 * k.trace();
    let start = vec![half / l as f64; l];
    let (mut a, mut s) = (start.clone(), start);
    let (mut ya, mut ys) = (a.clone(), s.clone());
    let mut t = 1.0f64;
    for _ in 0..iters {
        let b = DVector::from_iterator(l, ya.iter().zip(&ys).map(|(p, q)| p - q));
        let g: Vec<f64> = (k * b).iter().zip(y).map(|(kb, y)| kb - y).collect();
        let za: Vec<f64> = ya.iter().zip(&g).map(|(v, g)| v - g / lip).collect();
        let zs: Vec<f64> = ys.iter().zip(&g).map(|(v, g)| v + g / lip).collect();
        let na = project_capped_simplex(&za, upper, half);
        let ns = project_capped_simplex(&zs, upper, half);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        ya = na.iter().zip(&a).map(|(n, o)| n + mom * (n - o)).collect();
        ys = ns.iter().zip(&s).map(|(n, o)| n + mom * (n - o)).collect();
        a = na;
        s = ns;
        t = t_next;
    }
    let obj = objective(&a, &s);
    (a.iter().zip(&s).map(|(p, q)| p - q).collect(), obj)
}

/// The NARMA recursion written out term by term from its definition, with
/// `x` and `y` zero before time 0.
pub fn narma_oracle(x: &[f64], r: usize) -> Vec<f64> {
    let y_at = |y: &[f64], t: isize| if t < 0 { 0.0 } else { y[t as usize] };
    let x_at = |t: isize| if t < 0 { 0.0 } else { x[t as usize] };
    let mut y = vec![0.0];
    for t in 0..x.len() as isize {
        let mut sum = 0.0;
        for i in 0..=r as isize {
            if t - i >= 0 {
                sum += y_at(&y, t - i);
            }
        }
        let yt = y_at(&y, t);
        let next = 0.3 * yt + 0.05 * yt * sum + 1.5 * x_at(t - r as isize) * x_at(t) + 0.1;
        y.push(next.tanh());
    }
    y.remove(0);
    y
}

// ---------------------------------------------------------------------------
// Property measurements shared by the property tests and the acceptance run.
// Each returns the measured deviation; callers hold the tolerances.

use esn_dr::dimred::{fit_kpca_with, fit_pca};
use esn_dr::readout::train_nu_svr;
use esn_dr::readout::train_ridge;
use esn_dr::reservoir::{as_input_matrix, drive, init_weights, EsnConfig};
use esn_dr::tsa::{
    correlation_sum, delay_embed, epsilon_grid, estimate_d2, lle_divergence, EpsilonGrid,
};

pub fn covariance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let t = m.nrows() as f64;
    let mean = m.row_mean();
    let c = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mean[j]);
    c.transpose() * c / (t - 1.0)
}

/// State gap after 1000 steps of the same input from opposite initial
/// states, spectral radius 0.9.
pub fn esp_gap() -> f64 {
    let config = EsnConfig {
        n_reservoir: 100,
        spectral_radius: 0.9,
        rng_seed: 4,
        ..Default::default()
    };
    let w = init_weights(&config, 1, 1).unwrap();
    let u = as_input_matrix(&uniform(1000, "esp-input"));
    let a = drive(&w, &config, &u, &DVector::from_element(100, 0.9)).unwrap();
    let b = drive(&w, &config, &u, &DVector::from_element(100, -0.9)).unwrap();
    (a.row(999) - b.row(999)).norm()
}

/// `(orthonormality error, variance-sum error, score-variance error)`.
pub fn pca_errors() -> (f64, f64, f64) {
    let x = random_matrix(300, 6, "pca") * random_matrix(6, 6, "mix");
    let full = fit_pca(&x, 6).unwrap();
    let orth = (full.basis.transpose() * &full.basis - DMatrix::identity(6, 6))
        .abs()
        .max();
    let total = covariance(&x).trace();
    let sum = (full.eigvals.sum() - total).abs() / total.max(1.0);
    let p = fit_pca(&x, 3).unwrap();
    let cov = covariance(&p.project_rows(&x).unwrap());
    let var = (0..3)
        .map(|i| (cov[(i, i)] - p.eigvals[i]).abs())
        .fold(0.0, f64::max);
    (orth, sum, var)
}

/// Largest gap between in-sample and out-of-sample kernel PCA projections
/// of the training states, with and without centering.
pub fn kpca_gap() -> f64 {
    let x = random_matrix(80, 5, "kpca");
    [false, true]
        .into_iter()
        .map(|center| {
            let m = fit_kpca_with(&x, 4, 0.3, center).unwrap();
            (m.in_sample_projection() - m.project_rows(&x).unwrap())
                .abs()
                .max()
        })
        .fold(0.0, f64::max)
}

/// Largest weight gap between the closed-form ridge solution and gradient
/// descent, over several regularisation strengths.
pub fn ridge_gap() -> f64 {
    let s = random_matrix(50, 4, "ridge-s");
    let y = uniform(50, "ridge-y");
    [0.1, 1.0, 10.0]
        .into_iter()
        .map(|lambda| {
            let m = train_ridge(&s, &y, lambda).unwrap();
            (&m.weights - ridge_gradient_descent(&s, &y, lambda, 200_000))
                .abs()
                .max()
        })
        .fold(0.0, f64::max)
}

/// `(largest dual constraint violation, largest objective gap to the QP
/// oracle)` on a 10-point toy problem.
pub fn svr_errors() -> (f64, f64) {
    let n = 10;
    let s = random_matrix(n, 2, "svr-s");
    let y: Vec<f64> = (0..n)
        .map(|i| (s[(i, 0)] * 2.0).sin() + 0.3 * s[(i, 1)])
        .collect();
    let gamma = 0.7;
    let k = DMatrix::from_fn(n, n, |i, j| {
        (-gamma * (s.row(i) - s.row(j)).norm_squared()).exp()
    });
    let (mut feas, mut gap) = (0.0f64, 0.0f64);
    for (c, nu) in [(1.0, 0.5), (5.0, 0.3), (20.0, 0.8)] {
        let m = train_nu_svr(&s, &y, c, nu, gamma).unwrap();
        let box_excess = m
            .coeffs
            .iter()
            .map(|b| b.abs() - c / n as f64)
            .fold(0.0, f64::max);
        let sum_excess = (m.coeffs.abs().sum() - c * nu).max(0.0);
        feas = feas
            .max(m.coeffs.sum().abs())
            .max(box_excess)
            .max(sum_excess);
        let (_, oracle) = nu_svr_dual_oracle(&k, &y, c, nu, 20_000);
        gap = gap.max((m.dual_objective - oracle).abs());
    }
    (feas, gap)
}

/// `(NRMSE of a perfect prediction, |NRMSE of the target mean - 1|)`.
pub fn nrmse_identity_errors() -> (f64, f64) {
    let y: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).sin()).collect();
    let zero = esn_dr::hyperopt::nrmse(&y, &y).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let one = esn_dr::hyperopt::nrmse(&vec![mean; y.len()], &y).unwrap();
    (zero, (one - 1.0).abs())
}

/// Whether 1000 NARMA-20 outputs equal the oracle bit for bit.
pub fn narma_exact() -> bool {
    let s =
        esn_dr::signals::gen_narma(1000, 20, 7, esn_dr::signals::NarmaVariant::Saturated).unwrap();
    s.targets == narma_oracle(&s.inputs, 20)
}

/// Whether `delay_embed` returns `n - (m - 1) tau` rows over a grid of
/// shapes, and an error when that count is not positive.
pub fn embedding_rows_exact() -> bool {
    let x: Vec<f64> = (0..60).map(f64::from).collect();
    (1..6).all(|m| {
        (1..8).all(|tau| {
            (1..=60).all(|n| match delay_embed(&x[..n], m, tau) {
                Ok(e) => e.len() == n - (m - 1) * tau,
                Err(_) => n <= (m - 1) * tau,
            })
        })
    })
}

/// Correlation dimension of i.i.d. uniform points on a segment.
pub fn segment_d2() -> f64 {
    let x = uniform(2000, "segment");
    let e = delay_embed(&x, 1, 1).unwrap();
    let eps = epsilon_grid(&e, 0, &EpsilonGrid::default()).unwrap();
    estimate_d2(&correlation_sum(&e, &eps, 0).unwrap())
        .unwrap()
        .d2
}

/// Largest Lyapunov exponent estimated on a doubling-map orbit.
pub fn doubling_lle() -> f64 {
    let x = doubling_map(5000);
    let e = delay_embed(&x, 1, 1).unwrap();
    lle_divergence(&e, 1.0, 30, 1).unwrap().lle
}
