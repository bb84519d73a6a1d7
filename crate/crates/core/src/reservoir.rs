//! Echo state network reservoir: weight initialisation, spectral radius
//! control, teacher-forced state harvesting and closed-loop prediction.
//!
//! State update:
//!
//! ```text
//! h[k] = tanh(W_res h[k-1] + W_in (w_i x[k]) + w_f W_fb (w_o y[k-1]) + xi[k])
//! ```
//!
//! where `y[k-1]` is the teacher signal while harvesting and the network's
//! own previous prediction afterwards, and `xi[k]` is uniform on
//! `[-noise_level, noise_level]` per component.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dimred::Projector;
use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::readout::ReadoutModel;
use crate::rng::{derive_seed, rng_from_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnConfig {
    pub n_reservoir: usize,
    pub spectral_radius: f64,
    pub noise_level: f64,
    pub input_scaling: f64,
    pub teacher_scaling: f64,
    pub feedback_scaling: f64,
    pub washout: usize,
    pub rng_seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            n_reservoir: 100,
            spectral_radius: 0.9,
            noise_level: 0.0,
            input_scaling: 0.5,
            teacher_scaling: 0.5,
            feedback_scaling: 0.0,
            washout: 100,
            rng_seed: 0,
        }
    }
}

impl EsnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reservoir == 0 {
            return Err(Error::invalid("n_reservoir", "must be at least 1"));
        }
        if !(self.spectral_radius > 0.0) || !self.spectral_radius.is_finite() {
            return Err(Error::invalid(
                "spectral_radius",
                format!("must be positive, got {}", self.spectral_radius),
            ));
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return Err(Error::invalid(
                "noise_level",
                format!("must be non-negative, got {}", self.noise_level),
            ));
        }
        for (name, v) in [
            ("input_scaling", self.input_scaling),
            ("teacher_scaling", self.teacher_scaling),
            ("feedback_scaling", self.feedback_scaling),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// The three fixed random matrices of a reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    /// `N_r x N_r`
    pub w_res: DMatrix<f64>,
    /// `N_r x N_i`
    pub w_in: DMatrix<f64>,
    /// `N_r x N_o`
    pub w_fb: DMatrix<f64>,
}

impl WeightSet {
    pub fn n_reservoir(&self) -> usize {
        self.w_res.nrows()
    }

    pub fn n_input(&self) -> usize {
        self.w_in.ncols()
    }
}

/// Dense matrices with i.i.d. entries uniform on `[-1, 1]`, before any
/// spectral rescaling.
pub fn sample_weights(n_reservoir: usize, n_input: usize, n_output: usize, seed: u64) -> WeightSet {
    let mut rng = stream(seed, "reservoir-weights");
    let mut draw = |r, c| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0));
    let w_res = draw(n_reservoir, n_reservoir);
    let w_in = draw(n_reservoir, n_input);
    let w_fb = draw(n_reservoir, n_output);
    WeightSet { w_res, w_in, w_fb }
}

/// Samples the weights for `config` and rescales the recurrent matrix to the
/// configured spectral radius.
pub fn init_weights(config: &EsnConfig, n_input: usize, n_output: usize) -> Result<WeightSet> {
    config.validate()?;
    if n_input == 0 || n_output == 0 {
        return Err(Error::invalid("n_input/n_output", "must be at least 1"));
    }
    let mut w = sample_weights(config.n_reservoir, n_input, n_output, config.rng_seed);
    w.w_res = rescale_spectral_radius(&w.w_res, config.spectral_radius)?;
    Ok(w)
}

/// Like [`init_weights`] when the spectral radius of the raw recurrent matrix
/// is already known (it only depends on the seed and the sizes).
pub fn init_weights_with_raw_radius(
    config: &EsnConfig,
    n_input: usize,
    n_output: usize,
    raw_radius: f64,
) -> Result<WeightSet> {
    config.validate()?;
    if raw_radius < 1e-14 {
        return Err(Error::ZeroSpectralRadius(raw_radius));
    }
    let mut w = sample_weights(config.n_reservoir, n_input, n_output, config.rng_seed);
    w.w_res *= config.spectral_radius / raw_radius;
    Ok(w)
}

/// `m * target / rho(m)`.
pub fn rescale_spectral_radius(m: &DMatrix<f64>, target: f64) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let rho = spectral_radius(m);
    if rho < 1e-14 {
        return Err(Error::ZeroSpectralRadius(rho));
    }
    Ok(m * (target / rho))
}

/// Reservoir state carried across a phase boundary: the last activation and
/// the last value that went into the feedback channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub h: DVector<f64>,
    pub last_output: f64,
}

impl ReservoirState {
    pub fn zeros(n_reservoir: usize) -> Self {
        Self {
            h: DVector::zeros(n_reservoir),
            last_output: 0.0,
        }
    }
}

/// Harvested states, one row `[x[k]^T, h[k]^T]` per post-washout step.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub rows: DMatrix<f64>,
    pub n_input: usize,
    pub n_reservoir: usize,
    /// State after the last input, including washed-out runs.
    pub final_state: ReservoirState,
}

impl StateMatrix {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// The reservoir part `h`, `T x N_r`.
    pub fn states(&self) -> DMatrix<f64> {
        self.rows
            .columns(self.n_input, self.n_reservoir)
            .clone_owned()
    }

    /// The input part `x`, `T x N_i`.
    pub fn inputs(&self) -> DMatrix<f64> {
        self.rows.columns(0, self.n_input).clone_owned()
    }
}

/// Column vector helper for scalar input sequences.
pub fn as_input_matrix(xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(xs.len(), 1, xs)
}

struct Stepper<'a> {
    weights: &'a WeightSet,
    config: &'a EsnConfig,
    pre: DVector<f64>,
    noise: crate::rng::Rng,
}

impl<'a> Stepper<'a> {
    fn new(weights: &'a WeightSet, config: &'a EsnConfig, noise_label: &str) -> Self {
        Self {
            weights,
            config,
            pre: DVector::zeros(weights.n_reservoir()),
            noise: rng_from_seed(derive_seed(config.rng_seed, noise_label, 0)),
        }
    }

    /// Advances `h` in place given the current input row and the previous
    /// feedback value.
    fn step(&mut self, h: &mut DVector<f64>, x: impl Iterator<Item = f64>, y_prev: f64) {
        let c = self.config;
        self.pre.fill(0.0);
        for (j, xv) in x.enumerate() {
            self.pre
                .axpy(c.input_scaling * xv, &self.weights.w_in.column(j), 1.0);
        }
        let fb = c.feedback_scaling * c.teacher_scaling * y_prev;
        if fb != 0.0 {
            self.pre.axpy(fb, &self.weights.w_fb.column(0), 1.0);
        }
        self.pre.gemv(1.0, &self.weights.w_res, h, 1.0);
        if c.noise_level > 0.0 {
            let xi = c.noise_level;
            for v in self.pre.iter_mut() {
                *v += self.noise.random_range(-xi..=xi);
            }
        }
        for (hv, p) in h.iter_mut().zip(self.pre.iter()) {
            *hv = p.tanh();
        }
    }
}

fn check_weights(weights: &WeightSet, config: &EsnConfig, n_input: usize) -> Result<()> {
    config.validate()?;
    if weights.n_reservoir() != config.n_reservoir {
        return Err(Error::DimensionMismatch {
            expected: config.n_reservoir,
            got: weights.n_reservoir(),
        });
    }
    if weights.n_input() != n_input {
        return Err(Error::DimensionMismatch {
            expected: weights.n_input(),
            got: n_input,
        });
    }
    if weights.w_fb.ncols() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: weights.w_fb.ncols(),
        });
    }
    Ok(())
}

/// Teacher-forced state harvesting from a zero initial state.
///
/// `inputs` is `T x N_i`; `teacher[k]` is the desired output for step `k`, and
/// step `k` is fed `teacher[k-1]` (zero for the first step). The first
/// `config.washout` rows are discarded.
pub fn harvest_states(
    weights: &WeightSet,
    config: &EsnConfig,
    inputs: &DMatrix<f64>,
    teacher: &[f64],
) -> Result<StateMatrix> {
    let init = ReservoirState::zeros(config.n_reservoir);
    harvest_states_from(weights, config, inputs, teacher, &init, config.washout)
}

/// Teacher-forced harvesting continuing from `init`, discarding `washout` rows.
pub fn harvest_states_from(
    weights: &WeightSet,
    config: &EsnConfig,
    inputs: &DMatrix<f64>,
    teacher: &[f64],
    init: &ReservoirState,
    washout: usize,
) -> Result<StateMatrix> {
    let t = inputs.nrows();
    if teacher.len() != t {
        return Err(Error::LengthMismatch {
            expected: t,
            got: teacher.len(),
        });
    }
    let n_in = inputs.ncols();
    check_weights(weights, config, n_in)?;
    if washout >= t {
        return Err(Error::SegmentTooShort {
            segment: "harvest",
            len: t,
            min: washout,
        });
    }
    if init.h.len() != config.n_reservoir {
        return Err(Error::DimensionMismatch {
            expected: config.n_reservoir,
            got: init.h.len(),
        });
    }
    let n_r = config.n_reservoir;
    let mut rows = DMatrix::zeros(t - washout, n_in + n_r);
    let mut stepper = Stepper::new(weights, config, "harvest-noise");
    let mut h = init.h.clone();
    let mut y_prev = init.last_output;
    for k in 0..t {
        stepper.step(&mut h, inputs.row(k).iter().copied(), y_prev);
        if k >= washout {
            let r = k - washout;
            for j in 0..n_in {
                rows[(r, j)] = inputs[(k, j)];
            }
            for (i, v) in h.iter().enumerate() {
                rows[(r, n_in + i)] = *v;
            }
        }
        y_prev = teacher[k];
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reservoir state"));
    }
    Ok(StateMatrix {
        rows,
        n_input: n_in,
        n_reservoir: n_r,
        final_state: ReservoirState {
            h,
            last_output: y_prev,
        },
    })
}

/// Output of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRun {
    pub outputs: Vec<f64>,
    /// Projected state `h_bar[k]`, one row per step.
    pub projected: DMatrix<f64>,
    pub final_state: ReservoirState,
}

/// Drives the reservoir with `inputs`, feeding back its own predictions, and
/// applies projector and readout at every step.
pub fn run_prediction(
    weights: &WeightSet,
    config: &EsnConfig,
    projector: &Projector,
    readout: &ReadoutModel,
    inputs: &DMatrix<f64>,
    init: &ReservoirState,
) -> Result<PredictionRun> {
    let n_in = inputs.ncols();
    check_weights(weights, config, n_in)?;
    if projector.input_dim() != config.n_reservoir {
        return Err(Error::DimensionMismatch {
            expected: config.n_reservoir,
            got: projector.input_dim(),
        });
    }
    let d = projector.output_dim();
    if readout.input_dim() != n_in + d {
        return Err(Error::DimensionMismatch {
            expected: n_in + d,
            got: readout.input_dim(),
        });
    }
    let t = inputs.nrows();
    let mut outputs = Vec::with_capacity(t);
    let mut projected = DMatrix::zeros(t, d);
    let mut stepper = Stepper::new(weights, config, "predict-noise");
    let mut h = init.h.clone();
    let mut y_prev = init.last_output;
    let mut features = vec![0.0; n_in + d];
    for k in 0..t {
        stepper.step(&mut h, inputs.row(k).iter().copied(), y_prev);
        let hbar = projector.project(h.as_slice())?;
        for j in 0..n_in {
            features[j] = inputs[(k, j)];
        }
        for (i, v) in hbar.iter().enumerate() {
            features[n_in + i] = *v;
            projected[(k, i)] = *v;
        }
        let y = readout.predict(&features)?;
        if !y.is_finite() {
            return Err(Error::NonFinite("prediction"));
        }
        outputs.push(y);
        y_prev = y;
    }
    Ok(PredictionRun {
        outputs,
        projected,
        final_state: ReservoirState {
            h,
            last_output: y_prev,
        },
    })
}

/// Runs the reservoir open loop from `init` (no readout, zero feedback) and
/// returns every state; used for echo-state probes.
pub fn drive(
    weights: &WeightSet,
    config: &EsnConfig,
    inputs: &DMatrix<f64>,
    init: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    check_weights(weights, config, inputs.ncols())?;
    let mut stepper = Stepper::new(weights, config, "drive-noise");
    let mut h = init.clone();
    let mut out = DMatrix::zeros(inputs.nrows(), config.n_reservoir);
    for k in 0..inputs.nrows() {
        stepper.step(&mut h, inputs.row(k).iter().copied(), 0.0);
        out.set_row(k, &h.transpose());
    }
    Ok(out)
}
