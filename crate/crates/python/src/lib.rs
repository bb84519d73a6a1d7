//! Python bindings. Series are plain lists of floats and matrices are lists
//! of rows; configs and results cross the boundary as JSON or TOML text.

use esn_dr::dimred::{fit_kpca, fit_pca, KpcaModel, PcaModel};
use esn_dr::hyperopt::Hyperparameters;
use esn_dr::pipeline::{fit_pipeline, FittedPipeline, PipelineKind, PipelineSettings};
use esn_dr::signals::{MackeyGlassParams, NarmaVariant, Segment};
use esn_dr::tsa::{Embedding, InvariantConfig};
use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(esn_dr, EsnDrError, PyException);

fn py_err(e: esn_dr::Error) -> PyErr {
    EsnDrError::new_err(format!("{}: {e}", e.kind()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    EsnDrError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(EsnDrError::new_err("rows must all have the same length"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

/// Hyperparameters of one network and its readout.
#[pyclass(name = "Hyperparameters", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyHyperparameters {
    n_reservoir: f64,
    noise: f64,
    input_scaling: f64,
    teacher_scaling: f64,
    feedback_scaling: f64,
    spectral_radius: f64,
    dim_fraction: f64,
    kernel_gamma: f64,
    ridge_lambda: f64,
    svr_c: f64,
    svr_nu: f64,
}

impl From<Hyperparameters> for PyHyperparameters {
    fn from(h: Hyperparameters) -> Self {
        Self {
            n_reservoir: h.n_reservoir,
            noise: h.noise,
            input_scaling: h.input_scaling,
            teacher_scaling: h.teacher_scaling,
            feedback_scaling: h.feedback_scaling,
            spectral_radius: h.spectral_radius,
            dim_fraction: h.dim_fraction,
            kernel_gamma: h.kernel_gamma,
            ridge_lambda: h.ridge_lambda,
            svr_c: h.svr_c,
            svr_nu: h.svr_nu,
        }
    }
}

impl From<&PyHyperparameters> for Hyperparameters {
    fn from(h: &PyHyperparameters) -> Self {
        Self {
            n_reservoir: h.n_reservoir,
            noise: h.noise,
            input_scaling: h.input_scaling,
            teacher_scaling: h.teacher_scaling,
            feedback_scaling: h.feedback_scaling,
            spectral_radius: h.spectral_radius,
            dim_fraction: h.dim_fraction,
            kernel_gamma: h.kernel_gamma,
            ridge_lambda: h.ridge_lambda,
            svr_c: h.svr_c,
            svr_nu: h.svr_nu,
        }
    }
}

#[pymethods]
impl PyHyperparameters {
    /// Keyword arguments override the library defaults.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut h = Self::from(Hyperparameters::default());
        if let Some(kw) = kwargs {
            let obj = Bound::new(kw.py(), h.clone())?;
            for (k, v) in kw.iter() {
                let name: String = k.extract()?;
                obj.setattr(name.as_str(), v)
                    .map_err(|_| EsnDrError::new_err(format!("unknown hyperparameter {name:?}")))?;
            }
            h = obj.borrow().clone();
        }
        Ok(h)
    }

    fn __repr__(&self) -> String {
        let th = Hyperparameters::from(self);
        format!(
            "Hyperparameters({})",
            serde_json::to_string(&th).unwrap_or_default()
        )
    }
}

/// A fitted reservoir, projector and readout.
#[pyclass(name = "Pipeline", frozen)]
struct PyPipeline {
    inner: FittedPipeline,
}

#[pymethods]
impl PyPipeline {
    /// Fits on teacher-forced `(inputs, targets)` pairs. `kind` is
    /// `readout/dimred`, e.g. `"svr/pca"`.
    #[staticmethod]
    #[pyo3(signature = (theta, kind, inputs, targets, seed = 0, washout = 100))]
    fn fit(
        theta: &PyHyperparameters,
        kind: &str,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        seed: u64,
        washout: usize,
    ) -> PyResult<Self> {
        let kind: PipelineKind = kind.parse().map_err(py_err)?;
        let settings = PipelineSettings {
            washout,
            ..Default::default()
        };
        let train = Segment {
            inputs,
            targets,
            lead_in: Vec::new(),
        };
        let inner =
            fit_pipeline(&theta.into(), kind, &settings, &train, seed, None).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Closed-loop predictions for `inputs`, continuing from the end of
    /// training.
    fn predict(&self, inputs: Vec<f64>) -> PyResult<Vec<f64>> {
        let seg = Segment {
            targets: vec![0.0; inputs.len()],
            inputs,
            lead_in: Vec::new(),
        };
        let run = self
            .inner
            .run_segment(&seg, &self.inner.train_state)
            .map_err(py_err)?;
        Ok(run.predictions)
    }

    #[getter]
    fn train_predictions(&self) -> Vec<f64> {
        self.inner.train_predictions.clone()
    }

    #[getter]
    fn projected_dim(&self) -> usize {
        self.inner.projector.output_dim()
    }
}

#[pyclass(name = "Pca", frozen)]
struct PyPca {
    inner: PcaModel,
}

#[pymethods]
impl PyPca {
    #[new]
    fn new(rows: Vec<Vec<f64>>, dim: usize) -> PyResult<Self> {
        let inner = fit_pca(&to_matrix(&rows)?, dim).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn project(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(
            &self
                .inner
                .project_rows(&to_matrix(&rows)?)
                .map_err(py_err)?,
        ))
    }

    /// Principal directions as rows.
    #[getter]
    fn components(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.basis.transpose())
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigvals.iter().copied().collect()
    }
}

#[pyclass(name = "KernelPca", frozen)]
struct PyKernelPca {
    inner: KpcaModel,
}

#[pymethods]
impl PyKernelPca {
    #[new]
    fn new(rows: Vec<Vec<f64>>, dim: usize, gamma: f64) -> PyResult<Self> {
        let inner = fit_kpca(&to_matrix(&rows)?, dim, gamma).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn project(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(
            &self
                .inner
                .project_rows(&to_matrix(&rows)?)
                .map_err(py_err)?,
        ))
    }

    fn in_sample_projection(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.in_sample_projection())
    }
}

#[pyfunction]
#[pyo3(signature = (n, dt = 0.1, subsample = 1))]
fn mackey_glass(n: usize, dt: f64, subsample: usize) -> PyResult<Vec<f64>> {
    let rec = esn_dr::signals::gen_mackey_glass(&MackeyGlassParams {
        n: n * subsample.max(1),
        dt,
        ..Default::default()
    })
    .map_err(py_err)?;
    Ok(rec.values.into_iter().step_by(subsample.max(1)).collect())
}

/// Returns `(inputs, targets)` of the saturated NARMA system.
#[pyfunction]
#[pyo3(signature = (n, order = 20, seed = 0))]
fn narma(n: usize, order: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = esn_dr::signals::gen_narma(n, order, seed, NarmaVariant::Saturated).map_err(py_err)?;
    Ok((s.inputs, s.targets))
}

#[pyfunction]
#[pyo3(signature = (n, dt = 1.0))]
fn mso(n: usize, dt: f64) -> PyResult<Vec<f64>> {
    Ok(esn_dr::signals::gen_mso(n, dt).map_err(py_err)?.values)
}

#[pyfunction]
fn lorenz(n: usize) -> PyResult<Vec<[f64; 3]>> {
    let p = esn_dr::signals::LorenzParams {
        n,
        ..Default::default()
    };
    Ok(esn_dr::signals::gen_lorenz(&p).map_err(py_err)?.points)
}

#[pyfunction]
fn moore_spiegel(n: usize) -> PyResult<Vec<[f64; 3]>> {
    let p = esn_dr::signals::MooreSpiegelParams {
        n,
        ..Default::default()
    };
    Ok(esn_dr::signals::gen_moore_spiegel(&p)
        .map_err(py_err)?
        .points)
}

#[pyfunction]
fn autocorr_first_zero(x: Vec<f64>) -> PyResult<usize> {
    esn_dr::signals::autocorr_first_zero(&x).map_err(py_err)
}

#[pyfunction]
fn nrmse(predicted: Vec<f64>, target: Vec<f64>) -> PyResult<f64> {
    esn_dr::hyperopt::nrmse(&predicted, &target).map_err(py_err)
}

#[pyfunction]
fn delay_embed(x: Vec<f64>, m: usize, tau: usize) -> PyResult<Vec<Vec<f64>>> {
    let e = esn_dr::tsa::delay_embed(&x, m, tau).map_err(py_err)?;
    Ok((0..e.len()).map(|i| e.point(i).to_vec()).collect())
}

#[pyfunction]
fn false_nearest_neighbors(x: Vec<f64>, tau: usize, m_max: usize) -> PyResult<usize> {
    esn_dr::tsa::false_nearest_neighbors(&x, tau, m_max).map_err(py_err)
}

/// D2 and LLE of a trajectory given as rows; returns the measurement as a
/// JSON string.
#[pyfunction]
#[pyo3(signature = (points, dt, theiler = None))]
fn measure_invariants(points: Vec<Vec<f64>>, dt: f64, theiler: Option<usize>) -> PyResult<String> {
    let e = Embedding::from_rows(&to_matrix(&points)?);
    let cfg = InvariantConfig {
        theiler,
        ..Default::default()
    };
    let m = esn_dr::tsa::measure_invariants(&e, dt, &cfg).map_err(py_err)?;
    serde_json::to_string(&m).map_err(json_err)
}

/// Runs an experiment from TOML text and returns the result record as JSON.
#[pyfunction]
fn run_experiment(config_toml: &str) -> PyResult<String> {
    let cfg = esn_dr::experiment::ExperimentConfig::from_toml(config_toml).map_err(py_err)?;
    let out = esn_dr::experiment::run_experiment(&cfg).map_err(py_err)?;
    serde_json::to_string(&out.record).map_err(json_err)
}

#[pymodule(name = "esn_dr")]
fn esn_dr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EsnDrError", m.py().get_type::<EsnDrError>())?;
    m.add_class::<PyHyperparameters>()?;
    m.add_class::<PyPipeline>()?;
    m.add_class::<PyPca>()?;
    m.add_class::<PyKernelPca>()?;
    m.add_function(wrap_pyfunction!(mackey_glass, m)?)?;
    m.add_function(wrap_pyfunction!(narma, m)?)?;
    m.add_function(wrap_pyfunction!(mso, m)?)?;
    m.add_function(wrap_pyfunction!(lorenz, m)?)?;
    m.add_function(wrap_pyfunction!(moore_spiegel, m)?)?;
    m.add_function(wrap_pyfunction!(autocorr_first_zero, m)?)?;
    m.add_function(wrap_pyfunction!(nrmse, m)?)?;
    m.add_function(wrap_pyfunction!(delay_embed, m)?)?;
    m.add_function(wrap_pyfunction!(false_nearest_neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(measure_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
