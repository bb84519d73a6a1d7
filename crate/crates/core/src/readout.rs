//! Memory-less readouts: ridge regression and nu-SVR with a Gaussian kernel.

use nalgebra::{DMatrix, DVector};

use crate::dimred::gaussian_kernel_matrix;
use crate::error::{Error, Result};

/// Linear readout `y = w^T s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub weights: DVector<f64>,
    pub lambda: f64,
}

/// Solves `(S^T S + lambda I) w = S^T y` by Cholesky factorisation.
pub fn train_ridge(s: &DMatrix<f64>, targets: &[f64], lambda: f64) -> Result<RidgeModel> {
    if s.nrows() == 0 {
        return Err(Error::invalid("s", "needs at least one row"));
    }
    if s.nrows() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: s.nrows(),
            got: targets.len(),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(
            "lambda",
            format!("must be positive, got {lambda}"),
        ));
    }
    if s.iter().chain(targets).any(|v| !v.is_finite()) || !lambda.is_finite() {
        return Err(Error::NonFinite("ridge input"));
    }
    let y = DVector::from_column_slice(targets);
    let st = s.transpose();
    let mut a = &st * s;
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    let b = st * y;
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::invalid("lambda", "normal matrix is not positive definite"))?;
    let weights = chol.solve(&b);
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge solution"));
    }
    Ok(RidgeModel { weights, lambda })
}

impl RidgeModel {
    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: s.len(),
            });
        }
        Ok(self.weights.iter().zip(s).map(|(w, x)| w * x).sum())
    }

    /// `1/2 ||S w - y||^2 + lambda/2 ||w||^2` for arbitrary `w`.
    pub fn objective(s: &DMatrix<f64>, targets: &[f64], w: &DVector<f64>, lambda: f64) -> f64 {
        let r = s * w - DVector::from_column_slice(targets);
        0.5 * r.norm_squared() + 0.5 * lambda * w.norm_squared()
    }
}

/// Trained nu-SVR: `y = sum_i coeffs_i K(s_i, s) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub support_states: DMatrix<f64>,
    /// `alpha_i - alpha_i^*` of each stored support row.
    pub coeffs: DVector<f64>,
    pub bias: f64,
    pub gamma_r: f64,
    pub c: f64,
    pub nu: f64,
    /// Width of the insensitive tube found by the solver.
    pub epsilon: f64,
    /// Dual objective `1/2 b^T K b - y^T b` at the returned solution.
    pub dual_objective: f64,
    pub iterations: usize,
    pub n_train: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrSolverOptions {
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvrSolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 2_000_000,
        }
    }
}

/// Coefficients below this magnitude are not stored as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

pub fn train_nu_svr(
    s: &DMatrix<f64>,
    targets: &[f64],
    c: f64,
    nu: f64,
    gamma_r: f64,
) -> Result<SvrModel> {
    train_nu_svr_with(s, targets, c, nu, gamma_r, SvrSolverOptions::default())
}

/// Solves the nu-SVR dual
///
/// ```text
/// min 1/2 (a - a*)^T K (a - a*) - y^T (a - a*)
/// s.t. 1^T (a - a*) = 0,  1^T (a + a*) <= c nu,  0 <= a, a* <= c / T
/// ```
///
/// with pairwise (SMO) updates that keep both sums fixed, and recovers the
/// bias from the free variables.
pub fn train_nu_svr_with(
    s: &DMatrix<f64>,
    targets: &[f64],
    c: f64,
    nu: f64,
    gamma_r: f64,
    opts: SvrSolverOptions,
) -> Result<SvrModel> {
    let l = s.nrows();
    if l < 2 {
        return Err(Error::invalid("s", "nu-SVR needs at least two rows"));
    }
    if l != targets.len() {
        return Err(Error::LengthMismatch {
            expected: l,
            got: targets.len(),
        });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid("c", format!("must be positive, got {c}")));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::invalid(
            "nu",
            format!("must lie in (0, 1], got {nu}"),
        ));
    }
    if !(gamma_r > 0.0) || !gamma_r.is_finite() {
        return Err(Error::invalid(
            "gamma_r",
            format!("must be positive, got {gamma_r}"),
        ));
    }
    if s.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nu-SVR input"));
    }

    let k = gaussian_kernel_matrix(s, s, gamma_r);
    let sol = NuSolver::new(&k, targets, c / l as f64, c * nu / 2.0).solve(opts)?;

    let beta: Vec<f64> = (0..l).map(|i| sol.alpha[i] - sol.alpha[i + l]).collect();
    let kb = &k * DVector::from_column_slice(&beta);
    let dual_objective = 0.5 * beta.iter().zip(kb.iter()).map(|(b, v)| b * v).sum::<f64>()
        - beta.iter().zip(targets).map(|(b, y)| b * y).sum::<f64>();

    let support: Vec<usize> = (0..l)
        .filter(|&i| beta[i].abs() > SUPPORT_THRESHOLD)
        .collect();
    let support_states = DMatrix::from_fn(support.len(), s.ncols(), |r, col| s[(support[r], col)]);
    let coeffs = DVector::from_iterator(support.len(), support.iter().map(|&i| beta[i]));
    Ok(SvrModel {
        support_states,
        coeffs,
        bias: -sol.rho,
        gamma_r,
        c,
        nu,
        epsilon: sol.epsilon,
        dual_objective,
        iterations: sol.iterations,
        n_train: l,
    })
}

impl SvrModel {
    pub fn input_dim(&self) -> usize {
        self.support_states.ncols()
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.support_states.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.support_states.ncols(),
                got: s.len(),
            });
        }
        let mut acc = self.bias;
        for (row, coef) in self.support_states.row_iter().zip(self.coeffs.iter()) {
            let d2: f64 = row.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
            acc += coef * (-self.gamma_r * d2).exp();
        }
        Ok(acc)
    }

    pub fn predict_rows(&self, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
        if rows.ncols() != self.support_states.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.support_states.ncols(),
                got: rows.ncols(),
            });
        }
        if self.coeffs.is_empty() {
            return Ok(vec![self.bias; rows.nrows()]);
        }
        let k = gaussian_kernel_matrix(rows, &self.support_states, self.gamma_r);
        Ok((k * &self.coeffs).iter().map(|v| v + self.bias).collect())
    }
}

struct NuSolution {
    alpha: Vec<f64>,
    rho: f64,
    epsilon: f64,
    iterations: usize,
}

/// Pairwise solver over the doubled variable vector `a = (alpha, alpha*)`,
/// with labels `+1` for `alpha` and `-1` for `alpha*`.
struct NuSolver<'a> {
    k: &'a DMatrix<f64>,
    y: &'a [f64],
    l: usize,
    upper: f64,
    alpha: Vec<f64>,
    /// `K (alpha - alpha*)`; the gradient is rebuilt from it on the fly.
    /// Entries outside `active` go stale until `reconstruct`.
    k_beta: Vec<f64>,
    /// Samples still considered by the working-set selection.
    active: Vec<usize>,
    unshrunk: bool,
}

const TAU: f64 = 1e-12;

impl<'a> NuSolver<'a> {
    fn new(k: &'a DMatrix<f64>, y: &'a [f64], upper: f64, half_sum: f64) -> Self {
        let l = y.len();
        let mut alpha = vec![0.0; 2 * l];
        let mut remaining = half_sum;
        for i in 0..l {
            let v = remaining.min(upper);
            alpha[i] = v;
            alpha[i + l] = v;
            remaining -= v;
        }
        // alpha == alpha* initially, so K beta is zero.
        Self {
            k,
            y,
            l,
            upper,
            alpha,
            k_beta: vec![0.0; l],
            active: (0..l).collect(),
            unshrunk: false,
        }
    }

    #[inline]
    fn label(&self, t: usize) -> f64 {
        if t < self.l {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn grad(&self, t: usize) -> f64 {
        if t < self.l {
            self.k_beta[t] - self.y[t]
        } else {
            let i = t - self.l;
            -self.k_beta[i] + self.y[i]
        }
    }

    #[inline]
    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.upper
    }

    #[inline]
    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    #[inline]
    fn kernel(&self, t: usize, u: usize) -> f64 {
        self.k[(t % self.l, u % self.l)]
    }

    fn column(&self, t: usize) -> &[f64] {
        let i = t % self.l;
        &self.k.as_slice()[i * self.l..(i + 1) * self.l]
    }

    /// Second-order working-set selection restricted to same-label pairs.
    /// Returns `None` once the maximal violation is below `tol`, together
    /// with the violation itself.
    fn select(&self, tol: f64) -> (Option<(usize, usize)>, f64) {
        let l = self.l;
        let (alpha_p, alpha_n) = self.alpha.split_at(l);
        let (mut gmaxp, mut gmaxp_idx) = (f64::NEG_INFINITY, usize::MAX);
        let (mut gmaxn, mut gmaxn_idx) = (f64::NEG_INFINITY, usize::MAX);
        for &i in &self.active {
            let g = self.k_beta[i] - self.y[i];
            // label +1 variable has gradient g, label -1 variable has -g
            if alpha_p[i] < self.upper && -g >= gmaxp {
                gmaxp = -g;
                gmaxp_idx = i;
            }
            if alpha_n[i] > 0.0 && -g >= gmaxn {
                gmaxn = -g;
                gmaxn_idx = i + l;
            }
        }

        let kp = (gmaxp_idx != usize::MAX).then(|| self.column(gmaxp_idx));
        let kn = (gmaxn_idx != usize::MAX).then(|| self.column(gmaxn_idx));
        let mut gmaxp2 = f64::NEG_INFINITY;
        let mut gmaxn2 = f64::NEG_INFINITY;
        let mut best = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for &i in &self.active {
            let g = self.k_beta[i] - self.y[i];
            if alpha_p[i] > 0.0 {
                gmaxp2 = gmaxp2.max(g);
                let diff = gmaxp + g;
                if let (Some(col), true) = (kp, diff > 0.0) {
                    let quad = (2.0 - 2.0 * col[i]).max(TAU);
                    let obj = -diff * diff / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        best = i;
                    }
                }
            }
            if alpha_n[i] < self.upper {
                gmaxn2 = gmaxn2.max(g);
                let diff = gmaxn + g;
                if let (Some(col), true) = (kn, diff > 0.0) {
                    let quad = (2.0 - 2.0 * col[i]).max(TAU);
                    let obj = -diff * diff / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        best = i + l;
                    }
                }
            }
        }
        let violation = (gmaxp + gmaxp2).max(gmaxn + gmaxn2);
        if violation < tol || best == usize::MAX {
            return (None, violation.max(0.0));
        }
        let first = if self.label(best) > 0.0 {
            gmaxp_idx
        } else {
            gmaxn_idx
        };
        (Some((first, best)), violation)
    }

    fn update(&mut self, i: usize, j: usize) {
        let (gi, gj) = (self.grad(i), self.grad(j));
        let mut quad = 2.0 - 2.0 * self.kernel(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (gi - gj) / quad;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let sum = old_i + old_j;
        let ub = self.upper;
        let mut ai = old_i - delta;
        let mut aj = old_j + delta;
        if sum > ub {
            if ai > ub {
                ai = ub;
                aj = sum - ub;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > ub {
            if aj > ub {
                aj = ub;
                ai = sum - ub;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;

        let sign = self.label(i);
        let (si, sj) = (i % self.l, j % self.l);
        let dbi = sign * (ai - old_i);
        let dbj = sign * (aj - old_j);
        let data = self.k.as_slice();
        let ci = &data[si * self.l..(si + 1) * self.l];
        let cj = &data[sj * self.l..(sj + 1) * self.l];
        if self.active.len() == self.l {
            for ((kb, a), b) in self.k_beta.iter_mut().zip(ci).zip(cj) {
                *kb += a * dbi + b * dbj;
            }
        } else {
            for &r in &self.active {
                self.k_beta[r] += ci[r] * dbi + cj[r] * dbj;
            }
        }
    }

    /// Recomputes `K beta` everywhere and reactivates every sample.
    fn reconstruct(&mut self) {
        let l = self.l;
        let beta: Vec<(usize, f64)> = (0..l)
            .map(|i| (i, self.alpha[i] - self.alpha[i + l]))
            .filter(|(_, b)| *b != 0.0)
            .collect();
        let data = self.k.as_slice();
        self.k_beta.iter_mut().for_each(|v| *v = 0.0);
        for (j, b) in beta {
            let col = &data[j * l..(j + 1) * l];
            for (kb, k) in self.k_beta.iter_mut().zip(col) {
                *kb += k * b;
            }
        }
        self.active = (0..l).collect();
    }

    /// Drops samples whose two variables sit at a bound and would be pushed
    /// further into it. Near convergence everything is reactivated once.
    fn shrink(&mut self, tol: f64) {
        let l = self.l;
        let (mut g1, mut g2, mut g3, mut g4) = (
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for &i in &self.active {
            let g = self.k_beta[i] - self.y[i];
            if self.alpha[i] < self.upper {
                g1 = g1.max(-g);
            }
            if self.alpha[i] > 0.0 {
                g2 = g2.max(g);
            }
            // the alpha* variable has gradient -g
            if self.alpha[i + l] < self.upper {
                g4 = g4.max(g);
            }
            if self.alpha[i + l] > 0.0 {
                g3 = g3.max(-g);
            }
        }
        if !self.unshrunk && (g1 + g2).max(g3 + g4) <= 10.0 * tol {
            self.unshrunk = true;
            self.reconstruct();
        }
        let (upper, alpha, k_beta, y) = (self.upper, &self.alpha, &self.k_beta, self.y);
        let stuck = |t: usize, g: f64, plus: bool| {
            if alpha[t] >= upper {
                if plus {
                    -g > g1
                } else {
                    -g > g4
                }
            } else if alpha[t] <= 0.0 {
                if plus {
                    g > g2
                } else {
                    g > g3
                }
            } else {
                false
            }
        };
        self.active.retain(|&i| {
            let g = k_beta[i] - y[i];
            !(stuck(i, g, true) && stuck(i + l, -g, false))
        });
    }

    fn solve(mut self, opts: SvrSolverOptions) -> Result<NuSolution> {
        let mut iterations = 0;
        let period = self.l.min(1000);
        let mut countdown = period;
        loop {
            countdown -= 1;
            if countdown == 0 {
                countdown = period;
                self.shrink(opts.tolerance);
            }
            let (pair, violation) = self.select(opts.tolerance);
            let Some((i, j)) = pair else {
                if self.active.len() < self.l {
                    // converged on the active set; confirm on all samples
                    self.reconstruct();
                    countdown = period;
                    continue;
                }
                break;
            };
            if iterations >= opts.max_iterations {
                return Err(Error::SolverNotConverged {
                    iterations,
                    violation,
                });
            }
            self.update(i, j);
            iterations += 1;
        }
        let (rho, r) = self.rho();
        Ok(NuSolution {
            alpha: self.alpha,
            rho,
            epsilon: -r,
            iterations,
        })
    }

    /// Offsets of the two label groups from their free variables (or the
    /// midpoint of the feasible interval when none is free).
    fn rho(&self) -> (f64, f64) {
        let mut groups = [(0usize, 0.0f64, f64::INFINITY, f64::NEG_INFINITY); 2];
        for t in 0..2 * self.l {
            let g = self.grad(t);
            let grp = &mut groups[usize::from(t >= self.l)];
            if self.at_upper(t) {
                grp.3 = grp.3.max(g);
            } else if self.at_lower(t) {
                grp.2 = grp.2.min(g);
            } else {
                grp.0 += 1;
                grp.1 += g;
            }
        }
        let r_of = |(n, sum, ub, lb): (usize, f64, f64, f64)| {
            if n > 0 {
                sum / n as f64
            } else {
                (ub + lb) / 2.0
            }
        };
        let r1 = r_of(groups[0]);
        let r2 = r_of(groups[1]);
        ((r1 - r2) / 2.0, (r1 + r2) / 2.0)
    }
}

/// Trained readout of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ReadoutModel {
    Ridge(RidgeModel),
    NuSvr(SvrModel),
}

impl ReadoutModel {
    pub fn input_dim(&self) -> usize {
        match self {
            ReadoutModel::Ridge(m) => m.input_dim(),
            ReadoutModel::NuSvr(m) => m.input_dim(),
        }
    }

    pub fn predict(&self, s: &[f64]) -> Result<f64> {
        match self {
            ReadoutModel::Ridge(m) => m.predict(s),
            ReadoutModel::NuSvr(m) => m.predict(s),
        }
    }

    pub fn predict_rows(&self, rows: &DMatrix<f64>) -> Result<Vec<f64>> {
        match self {
            ReadoutModel::Ridge(m) => {
                if rows.ncols() != m.weights.len() {
                    return Err(Error::DimensionMismatch {
                        expected: m.weights.len(),
                        got: rows.ncols(),
                    });
                }
                Ok((rows * &m.weights).iter().copied().collect())
            }
            ReadoutModel::NuSvr(m) => m.predict_rows(rows),
        }
    }
}

pub fn predict(model: &ReadoutModel, s: &[f64]) -> Result<f64> {
    model.predict(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn ridge_identity_small_lambda() {
        let s = DMatrix::identity(3, 3);
        let m = train_ridge(&s, &[1.0, 2.0, 3.0], 1e-12).unwrap();
        for (w, t) in m.weights.iter().zip([1.0, 2.0, 3.0]) {
            assert!((w - t).abs() < 1e-9);
        }
    }

    #[test]
    fn ridge_heavy_lambda_shrinks() {
        let mut rng = rng_from_seed(1);
        let s = DMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sty = s.tr_mul(&DVector::from_column_slice(&y)).norm();
        let m = train_ridge(&s, &y, 1e9).unwrap();
        // ||w|| <= ||S^T y|| / lambda for lambda dominating S^T S
        assert!(m.weights.norm() <= sty / 1e9 * (1.0 + 1e-6));
    }

    #[test]
    fn ridge_normal_equation_residual() {
        let mut rng = rng_from_seed(2);
        let s = DMatrix::from_fn(40, 6, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = train_ridge(&s, &y, 0.3).unwrap();
        let yv = DVector::from_column_slice(&y);
        let lhs = (s.tr_mul(&s) + DMatrix::identity(6, 6) * 0.3) * &m.weights;
        let rhs = s.tr_mul(&yv);
        assert!((lhs - &rhs).norm() < 1e-6 * rhs.norm());
    }

    #[test]
    fn ridge_rejects_non_finite() {
        let s = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(matches!(
            train_ridge(&s, &[1.0, 2.0], 0.1),
            Err(Error::NonFinite(_))
        ));
        let s = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(train_ridge(&s, &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn ridge_predict_unit_weight() {
        let m = RidgeModel {
            weights: DVector::from_vec(vec![0.0, 1.0, 0.0]),
            lambda: 1.0,
        };
        assert_eq!(m.predict(&[4.0, 5.0, 6.0]).unwrap(), 5.0);
        assert!(matches!(
            m.predict(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn svr_constant_targets() {
        let s = DMatrix::from_fn(10, 2, |i, j| (i * 2 + j) as f64 * 0.1);
        let m = train_nu_svr(&s, &[0.7; 10], 1.0, 0.5, 0.5).unwrap();
        assert_eq!(m.coeffs.len(), 0);
        assert!((m.bias - 0.7).abs() < 1e-12);
        assert!((m.predict(&[3.0, -1.0]).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn svr_single_support_kernel_identity() {
        let m = SvrModel {
            support_states: DMatrix::from_row_slice(1, 2, &[0.5, -0.5]),
            coeffs: DVector::from_vec(vec![1.0]),
            bias: 0.0,
            gamma_r: 0.3,
            c: 1.0,
            nu: 0.5,
            epsilon: 0.0,
            dual_objective: 0.0,
            iterations: 0,
            n_train: 1,
        };
        assert_eq!(m.predict(&[0.5, -0.5]).unwrap(), 1.0);
    }

    #[test]
    fn svr_feasibility_on_sine() {
        let n = 60;
        let s = DMatrix::from_fn(n, 1, |i, _| i as f64 / 10.0);
        let y: Vec<f64> = (0..n).map(|i| (i as f64 / 10.0).sin()).collect();
        let (c, nu) = (5.0, 0.4);
        let m = train_nu_svr(&s, &y, c, nu, 0.5).unwrap();
        assert!(m.coeffs.sum().abs() < 1e-6);
        for v in m.coeffs.iter() {
            assert!(v.abs() <= c / n as f64 + 1e-9);
        }
        assert!(m.coeffs.abs().sum() <= c * nu + 1e-6);
        // rows outside the tube carry bounded coefficients; the fit tracks the shape
        let pred = m.predict_rows(&s).unwrap();
        let single: Vec<f64> = (0..n)
            .map(|i| m.predict(&[i as f64 / 10.0]).unwrap())
            .collect();
        for (a, b) in pred.iter().zip(&single) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn svr_rejects_bad_parameters() {
        let s = DMatrix::from_fn(4, 1, |i, _| i as f64);
        let y = [0.0, 1.0, 0.0, 1.0];
        assert!(train_nu_svr(&s, &y, 1.0, 0.0, 1.0).is_err());
        assert!(train_nu_svr(&s, &y, 1.0, 1.5, 1.0).is_err());
        assert!(train_nu_svr(&s, &y, -1.0, 0.5, 1.0).is_err());
        assert!(train_nu_svr(&s, &y[..3], 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn svr_iteration_cap_reports_violation() {
        let n = 30;
        let s = DMatrix::from_fn(n, 1, |i, _| i as f64 / 5.0);
        let y: Vec<f64> = (0..n).map(|i| (i as f64 / 5.0).sin()).collect();
        let opts = SvrSolverOptions {
            tolerance: 1e-12,
            max_iterations: 2,
        };
        match train_nu_svr_with(&s, &y, 5.0, 0.5, 1.0, opts) {
            Err(Error::SolverNotConverged {
                iterations,
                violation,
            }) => {
                assert_eq!(iterations, 2);
                assert!(violation > 0.0);
            }
            other => panic!("expected SolverNotConverged, got {other:?}"),
        }
    }
}
