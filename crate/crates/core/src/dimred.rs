//! Linear PCA and Gaussian-kernel PCA on reservoir states, with out-of-sample
//! projection of states that were not part of the fit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, symmetric_eigen_desc};

/// Eigenvalues at or below this are treated as numerically zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// `exp(-gamma * ||a - b||^2)`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok((-gamma * squared_distance(a, b)).exp())
}

/// Gaussian kernel between every row of `a` and every row of `b`.
pub(crate) fn gaussian_kernel_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    gamma: f64,
) -> DMatrix<f64> {
    let na: Vec<f64> = a.row_iter().map(|r| r.norm_squared()).collect();
    let nb: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
    let mut k = a * b.transpose();
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            let d2 = (na[i] + nb[j] - 2.0 * k[(i, j)]).max(0.0);
            k[(i, j)] = (-gamma * d2).exp();
        }
    }
    k
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Principal subspace of the state covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `N_r x d`, orthonormal columns ordered by decreasing variance.
    pub basis: DMatrix<f64>,
    pub eigvals: DVector<f64>,
    /// Set when the smallest retained eigenvalue is negligible relative to the
    /// largest one.
    pub rank_deficient: bool,
}

/// Fits PCA on the rows of `states` and keeps `d` components.
///
/// The covariance uses the unbiased `1/(T-1)` normalisation.
pub fn fit_pca(states: &DMatrix<f64>, d: usize) -> Result<PcaModel> {
    let (t, n) = states.shape();
    if t < 2 {
        return Err(Error::invalid("states", "PCA needs at least two samples"));
    }
    if d == 0 || d > n.min(t) {
        return Err(Error::invalid(
            "d",
            format!("must lie in 1..={}, got {d}", n.min(t)),
        ));
    }
    if states.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input"));
    }
    let mean = states.row_mean().transpose();
    let mut centered = states.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    // an explicit transpose lets the product run through the blocked gemm
    let cov = centered.transpose() * &centered / (t as f64 - 1.0);
    let (vals, vecs) = symmetric_eigen_desc(cov);
    let eigvals = DVector::from_iterator(
        d,
        vals.iter().take(d).map(|&v| if v < 0.0 { 0.0 } else { v }),
    );
    let basis = vecs.columns(0, d).clone_owned();
    let rank_deficient = eigvals[d - 1] < EIGEN_FLOOR * eigvals[0].max(f64::MIN_POSITIVE);
    if rank_deficient {
        log::warn!(
            "PCA: retained eigenvalue {:e} is negligible; subspace is rank deficient",
            eigvals[d - 1]
        );
    }
    Ok(PcaModel {
        mean,
        basis,
        eigvals,
        rank_deficient,
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `basis^T (h - mean)`.
    pub fn project(&self, h: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), h.len())?;
        let centered =
            DVector::from_iterator(h.len(), h.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        Ok(self.basis.tr_mul(&centered))
    }

    /// Projects every row of `states`.
    pub fn project_rows(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.input_dim(), states.ncols())?;
        let mut centered = states.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        Ok(centered * &self.basis)
    }

    /// `mean + basis * scores`.
    pub fn reconstruct(&self, scores: &DVector<f64>) -> DVector<f64> {
        &self.mean + &self.basis * scores
    }
}

pub fn project_pca(model: &PcaModel, h: &[f64]) -> Result<DVector<f64>> {
    model.project(h)
}

/// Feature-space centring statistics of the training kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCentering {
    pub column_means: DVector<f64>,
    pub grand_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    /// Retained for the Nystrom expansion, `N x N_r`.
    pub training_states: DMatrix<f64>,
    pub gamma: f64,
    /// `N x d`.
    pub eigvecs: DMatrix<f64>,
    pub eigvals: DVector<f64>,
    /// `None` for the plain (uncentred) kernel.
    pub centering: Option<KernelCentering>,
}

/// Kernel PCA on the uncentred Gaussian kernel matrix.
pub fn fit_kpca(states: &DMatrix<f64>, d: usize, gamma: f64) -> Result<KpcaModel> {
    fit_kpca_with(states, d, gamma, false)
}

/// Kernel PCA, optionally centring the kernel matrix in feature space.
pub fn fit_kpca_with(
    states: &DMatrix<f64>,
    d: usize,
    gamma: f64,
    center: bool,
) -> Result<KpcaModel> {
    let n = states.nrows();
    if n == 0 || d == 0 || d > n {
        return Err(Error::invalid("d", format!("must lie in 1..={n}, got {d}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    if states.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kPCA input"));
    }
    let mut k = gaussian_kernel_matrix(states, states, gamma);
    let centering = if center {
        let column_means = k.row_mean().transpose();
        let grand_mean = column_means.mean();
        for j in 0..n {
            for i in 0..n {
                k[(i, j)] += grand_mean - column_means[i] - column_means[j];
            }
        }
        Some(KernelCentering {
            column_means,
            grand_mean,
        })
    } else {
        None
    };
    let (vals, vecs) = symmetric_eigen_desc(k);
    let available = vals.iter().filter(|&&v| v > EIGEN_FLOOR).count();
    if available < d {
        return Err(Error::InsufficientPositiveEigenvalues {
            requested: d,
            available,
        });
    }
    Ok(KpcaModel {
        training_states: states.clone(),
        gamma,
        eigvecs: vecs.columns(0, d).clone_owned(),
        eigvals: vals.rows(0, d).clone_owned(),
        centering,
    })
}

impl KpcaModel {
    pub fn input_dim(&self) -> usize {
        self.training_states.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.eigvecs.ncols()
    }

    /// In-sample projection `E * Lambda^{1/2}`, one row per training state.
    pub fn in_sample_projection(&self) -> DMatrix<f64> {
        let mut out = self.eigvecs.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col *= self.eigvals[j].sqrt();
        }
        out
    }

    fn center_row(&self, k: &mut [f64]) {
        if let Some(c) = &self.centering {
            let row_mean = k.iter().sum::<f64>() / k.len() as f64;
            for (v, cm) in k.iter_mut().zip(c.column_means.iter()) {
                *v += c.grand_mean - cm - row_mean;
            }
        }
    }

    fn scale_components(&self, raw: &mut DMatrix<f64>) {
        for (j, mut col) in raw.column_iter_mut().enumerate() {
            col /= self.eigvals[j].sqrt();
        }
    }

    /// Nystrom projection: component `l` is
    /// `lambda_l^{-1/2} * sum_i e_l(i) K(h_i, h)`.
    pub fn project(&self, h: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), h.len())?;
        let mut k: Vec<f64> = self
            .training_states
            .row_iter()
            .map(|row| {
                let d2: f64 = row.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            })
            .collect();
        self.center_row(&mut k);
        let kv = DVector::from_vec(k);
        let mut out = self.eigvecs.tr_mul(&kv);
        for (j, v) in out.iter_mut().enumerate() {
            *v /= self.eigvals[j].sqrt();
        }
        Ok(out)
    }

    pub fn project_rows(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.input_dim(), states.ncols())?;
        let mut k = gaussian_kernel_matrix(states, &self.training_states, self.gamma);
        if self.centering.is_some() {
            for i in 0..k.nrows() {
                let mut row: Vec<f64> = k.row(i).iter().copied().collect();
                self.center_row(&mut row);
                for (j, v) in row.into_iter().enumerate() {
                    k[(i, j)] = v;
                }
            }
        }
        let mut out = k * &self.eigvecs;
        self.scale_components(&mut out);
        Ok(out)
    }
}

pub fn project_kpca(model: &KpcaModel, h: &[f64]) -> Result<DVector<f64>> {
    model.project(h)
}

/// Fitted map from reservoir states to the readout's state features.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    /// No reduction; states pass through unchanged.
    Identity {
        dim: usize,
    },
    Pca(PcaModel),
    Kpca(KpcaModel),
}

impl Projector {
    pub fn input_dim(&self) -> usize {
        match self {
            Projector::Identity { dim } => *dim,
            Projector::Pca(m) => m.input_dim(),
            Projector::Kpca(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Projector::Identity { dim } => *dim,
            Projector::Pca(m) => m.output_dim(),
            Projector::Kpca(m) => m.output_dim(),
        }
    }

    pub fn project(&self, h: &[f64]) -> Result<DVector<f64>> {
        match self {
            Projector::Identity { dim } => {
                check_dim(*dim, h.len())?;
                Ok(DVector::from_column_slice(h))
            }
            Projector::Pca(m) => m.project(h),
            Projector::Kpca(m) => m.project(h),
        }
    }

    pub fn project_rows(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Projector::Identity { dim } => {
                check_dim(*dim, states.ncols())?;
                Ok(states.clone())
            }
            Projector::Pca(m) => m.project_rows(states),
            Projector::Kpca(m) => m.project_rows(states),
        }
    }
}
