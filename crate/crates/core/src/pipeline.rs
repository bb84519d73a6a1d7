//! End-to-end wiring: reservoir, projector and readout fitted on a training
//! segment and run closed loop on the following segments.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dimred::{fit_kpca_with, fit_pca, Projector};
use crate::error::{Error, Result};
use crate::hyperopt::Hyperparameters;
use crate::linalg::spectral_radius;
use crate::readout::{train_nu_svr, train_ridge, ReadoutModel};
use crate::reservoir::{
    as_input_matrix, harvest_states, init_weights_with_raw_radius, run_prediction, sample_weights,
    EsnConfig, PredictionRun, ReservoirState, WeightSet,
};
use crate::signals::Segment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    Ridge,
    Svr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimredKind {
    None,
    Pca,
    Kpca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineKind {
    pub readout: ReadoutKind,
    pub dimred: DimredKind,
}

impl PipelineKind {
    pub const fn new(readout: ReadoutKind, dimred: DimredKind) -> Self {
        Self { readout, dimred }
    }

    pub fn all() -> [PipelineKind; 6] {
        use DimredKind::*;
        use ReadoutKind::*;
        [
            Self::new(Ridge, None),
            Self::new(Ridge, Pca),
            Self::new(Ridge, Kpca),
            Self::new(Svr, None),
            Self::new(Svr, Pca),
            Self::new(Svr, Kpca),
        ]
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = match self.readout {
            ReadoutKind::Ridge => "ridge",
            ReadoutKind::Svr => "svr",
        };
        let d = match self.dimred {
            DimredKind::None => "none",
            DimredKind::Pca => "pca",
            DimredKind::Kpca => "kpca",
        };
        write!(f, "{r}/{d}")
    }
}

impl FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (r, d) = s.split_once(['/', '+', '-']).ok_or_else(|| {
            Error::Config(format!("pipeline {s:?} should look like readout/dimred"))
        })?;
        let readout = match r.trim().to_ascii_lowercase().as_str() {
            "ridge" => ReadoutKind::Ridge,
            "svr" => ReadoutKind::Svr,
            other => {
                return Err(Error::Config(format!(
                    "unknown readout {other:?} (ridge, svr)"
                )))
            }
        };
        let dimred = match d.trim().to_ascii_lowercase().as_str() {
            "none" => DimredKind::None,
            "pca" => DimredKind::Pca,
            "kpca" => DimredKind::Kpca,
            other => {
                return Err(Error::Config(format!(
                    "unknown dimred {other:?} (none, pca, kpca)"
                )))
            }
        };
        Ok(Self { readout, dimred })
    }
}

/// Settings that are not searched by the GA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub washout: usize,
    /// Training rows used by the nu-SVR (evenly spaced when subsampled).
    pub svr_max_samples: usize,
    /// Training states used to fit kernel PCA.
    pub kpca_max_samples: usize,
    pub kpca_center: bool,
    /// Forces the reduced dimension instead of `theta_d * N_r`.
    pub fixed_dim: Option<usize>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            washout: 100,
            svr_max_samples: 1000,
            kpca_max_samples: 500,
            kpca_center: false,
            fixed_dim: None,
        }
    }
}

/// Spectral radius of the raw recurrent matrix per `(seed, N_r)`; the raw
/// matrix depends on nothing else, so repeated fits skip the eigensolve.
#[derive(Debug, Default)]
pub struct RadiusCache {
    inner: Mutex<HashMap<(u64, usize), f64>>,
}

impl RadiusCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw_radius(&self, seed: u64, n_reservoir: usize, w: &WeightSet) -> f64 {
        if let Some(r) = self
            .inner
            .lock()
            .ok()
            .and_then(|m| m.get(&(seed, n_reservoir)).copied())
        {
            return r;
        }
        let r = spectral_radius(&w.w_res);
        if let Ok(mut m) = self.inner.lock() {
            m.insert((seed, n_reservoir), r);
        }
        r
    }
}

/// Evenly spaced indices `0..n`, at most `cap` of them.
pub fn even_subsample(n: usize, cap: usize) -> Vec<usize> {
    if cap == 0 || n <= cap {
        return (0..n).collect();
    }
    (0..cap).map(|k| k * n / cap).collect()
}

fn rows_of(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}

pub fn esn_config(theta: &Hyperparameters, washout: usize, seed: u64) -> EsnConfig {
    EsnConfig {
        n_reservoir: theta.reservoir_size(),
        spectral_radius: theta.spectral_radius,
        noise_level: theta.noise,
        input_scaling: theta.input_scaling,
        teacher_scaling: theta.teacher_scaling,
        feedback_scaling: theta.feedback_scaling,
        washout,
        rng_seed: seed,
    }
}

/// A fitted network together with its state at the end of training.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub kind: PipelineKind,
    pub config: EsnConfig,
    pub weights: WeightSet,
    pub projector: Projector,
    pub readout: ReadoutModel,
    pub train_state: ReservoirState,
    /// Teacher-forced in-sample predictions on the post-washout rows.
    pub train_predictions: Vec<f64>,
    pub train_targets: Vec<f64>,
}

/// Closed-loop predictions for one segment.
#[derive(Debug, Clone)]
pub struct SegmentRun {
    pub predictions: Vec<f64>,
    pub projected: DMatrix<f64>,
    pub final_state: ReservoirState,
}

pub fn fit_pipeline(
    theta: &Hyperparameters,
    kind: PipelineKind,
    settings: &PipelineSettings,
    train: &Segment,
    seed: u64,
    cache: Option<&RadiusCache>,
) -> Result<FittedPipeline> {
    let config = esn_config(theta, settings.washout, seed);
    config.validate()?;
    let raw = sample_weights(config.n_reservoir, 1, 1, seed);
    let radius = match cache {
        Some(c) => c.raw_radius(seed, config.n_reservoir, &raw),
        None => spectral_radius(&raw.w_res),
    };
    let weights = init_weights_with_raw_radius(&config, 1, 1, radius)?;

    let sm = harvest_states(
        &weights,
        &config,
        &as_input_matrix(&train.inputs),
        &train.targets,
    )?;
    let targets = &train.targets[config.washout..];
    let states = sm.states();
    let n_r = config.n_reservoir;
    let d = settings
        .fixed_dim
        .unwrap_or_else(|| theta.reduced_dim())
        .min(n_r);

    let projector = match kind.dimred {
        DimredKind::None => Projector::Identity { dim: n_r },
        DimredKind::Pca => Projector::Pca(fit_pca(&states, d)?),
        DimredKind::Kpca => {
            let idx = even_subsample(states.nrows(), settings.kpca_max_samples);
            let sample = rows_of(&states, &idx);
            Projector::Kpca(fit_kpca_with(
                &sample,
                d,
                theta.kernel_gamma,
                settings.kpca_center,
            )?)
        }
    };

    // feature rows [x, h_bar]; only the rows the readout will see are projected
    let rows: Vec<usize> = match kind.readout {
        ReadoutKind::Ridge => (0..states.nrows()).collect(),
        ReadoutKind::Svr => even_subsample(states.nrows(), settings.svr_max_samples),
    };
    let sub_states = if rows.len() == states.nrows() {
        states
    } else {
        rows_of(&states, &rows)
    };
    let projected = projector.project_rows(&sub_states)?;
    let dim = projected.ncols();
    let mut features = DMatrix::zeros(rows.len(), 1 + dim);
    for (r, &i) in rows.iter().enumerate() {
        features[(r, 0)] = sm.rows[(i, 0)];
    }
    features.columns_mut(1, dim).copy_from(&projected);
    let y: Vec<f64> = rows.iter().map(|&i| targets[i]).collect();

    let readout = match kind.readout {
        ReadoutKind::Ridge => ReadoutModel::Ridge(train_ridge(&features, &y, theta.ridge_lambda)?),
        // the searched C is a per-sample bound; the solver's box is c / T
        ReadoutKind::Svr => ReadoutModel::NuSvr(train_nu_svr(
            &features,
            &y,
            theta.svr_c * y.len() as f64,
            theta.svr_nu,
            theta.kernel_gamma,
        )?),
    };
    let train_predictions = readout.predict_rows(&features)?;
    Ok(FittedPipeline {
        kind,
        config,
        weights,
        projector,
        readout,
        train_state: sm.final_state,
        train_predictions,
        train_targets: y,
    })
}

impl FittedPipeline {
    /// Runs closed loop over `segment.lead_in` followed by `segment.inputs`,
    /// starting from `state`; only the segment's own inputs are reported.
    pub fn run_segment(&self, segment: &Segment, state: &ReservoirState) -> Result<SegmentRun> {
        let mut inputs = segment.lead_in.clone();
        inputs.extend_from_slice(&segment.inputs);
        let PredictionRun {
            outputs,
            projected,
            final_state,
        } = run_prediction(
            &self.weights,
            &self.config,
            &self.projector,
            &self.readout,
            &as_input_matrix(&inputs),
            state,
        )?;
        let skip = segment.lead_in.len();
        Ok(SegmentRun {
            predictions: outputs[skip..].to_vec(),
            projected: projected.rows(skip, projected.nrows() - skip).clone_owned(),
            final_state,
        })
    }
}
