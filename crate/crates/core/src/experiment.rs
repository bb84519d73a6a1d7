//! Prediction experiments: task construction, hyperparameter search,
//! ensemble evaluation on the test segment and result persistence.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperopt::{
    nrmse, run_ga, write_convergence_csv, Bounds, FitnessRecord, GaConfig, GaResult,
    GenerationSummary, Hyperparameters,
};
use crate::linalg::mean_std;
use crate::pipeline::{
    fit_pipeline, DimredKind, PipelineKind, PipelineSettings, RadiusCache, ReadoutKind,
};
use crate::rng::derive_seed;
use crate::signals::{
    autocorr_first_zero, gen_lorenz, gen_mackey_glass, gen_moore_spiegel, gen_mso, gen_narma,
    split_dataset, split_pairs, LorenzParams, MackeyGlassParams, MooreSpiegelParams, NarmaVariant,
    SupervisedSplit,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Mg,
    Narma,
    Mso,
    Lorenz,
    MooreSpiegel,
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mg" | "mackey_glass" => Ok(TaskKind::Mg),
            "narma" => Ok(TaskKind::Narma),
            "mso" => Ok(TaskKind::Mso),
            "lorenz" => Ok(TaskKind::Lorenz),
            "moore_spiegel" | "ms" => Ok(TaskKind::MooreSpiegel),
            other => Err(Error::Config(format!(
                "unknown task {other:?} (mg, narma, mso, lorenz, moore_spiegel)"
            ))),
        }
    }
}

/// How the supervised series is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub kind: TaskKind,
    /// Samples handed to the split (after discarding and subsampling).
    pub length: usize,
    /// Leading samples dropped before use (initial transient).
    pub discard: usize,
    /// Keep every `subsample`-th sample; the ODE/DDE signals are integrated
    /// at 0.1 or 0.01 and read out every 10 steps by default.
    pub subsample: usize,
    /// Forecast step; the first ACF zero when unset.
    pub tau_f: Option<usize>,
    pub fractions: [f64; 3],
    pub narma_order: usize,
    pub narma_variant: NarmaVariant,
    pub mso_dt: f64,
    pub mackey_glass: MackeyGlassParams,
    pub lorenz: LorenzParams,
    pub moore_spiegel: MooreSpiegelParams,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            kind: TaskKind::Mg,
            length: 10_000,
            discard: 1000,
            subsample: 10,
            tau_f: None,
            fractions: [0.6, 0.2, 0.2],
            narma_order: 20,
            narma_variant: NarmaVariant::Saturated,
            mso_dt: 1.0,
            mackey_glass: MackeyGlassParams::default(),
            lorenz: LorenzParams::default(),
            moore_spiegel: MooreSpiegelParams::default(),
        }
    }
}

impl TaskConfig {
    pub fn for_kind(kind: TaskKind) -> Self {
        let base = Self {
            kind,
            ..Default::default()
        };
        match kind {
            TaskKind::Narma | TaskKind::Mso => Self {
                discard: 0,
                subsample: 1,
                ..base
            },
            TaskKind::Mg | TaskKind::Lorenz | TaskKind::MooreSpiegel => base,
        }
    }
}

/// A task ready for the pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedTask {
    pub split: SupervisedSplit,
    pub tau_f: usize,
    pub dt: f64,
}

fn scalar_series(cfg: &TaskConfig) -> Result<(Vec<f64>, f64)> {
    let step = cfg.subsample.max(1);
    let raw_len = cfg.discard + cfg.length * step;
    let (values, dt) = match cfg.kind {
        TaskKind::Mg => {
            let rec = gen_mackey_glass(&MackeyGlassParams {
                n: raw_len,
                ..cfg.mackey_glass
            })?;
            (rec.values, rec.dt)
        }
        TaskKind::Mso => {
            let rec = gen_mso(raw_len, cfg.mso_dt)?;
            (rec.values, rec.dt)
        }
        TaskKind::Lorenz => {
            let t = gen_lorenz(&LorenzParams {
                n: raw_len,
                ..cfg.lorenz
            })?;
            (t.observable(), t.dt)
        }
        TaskKind::MooreSpiegel => {
            let t = gen_moore_spiegel(&MooreSpiegelParams {
                n: raw_len,
                ..cfg.moore_spiegel
            })?;
            (t.observable(), t.dt)
        }
        TaskKind::Narma => unreachable!("NARMA is an input/output task"),
    };
    let out: Vec<f64> = values[cfg.discard..]
        .iter()
        .step_by(step)
        .copied()
        .collect();
    Ok((out, dt * step as f64))
}

pub fn build_task(cfg: &TaskConfig, seed: u64) -> Result<PreparedTask> {
    if cfg.kind == TaskKind::Narma {
        let n = gen_narma(
            cfg.discard + cfg.length,
            cfg.narma_order,
            derive_seed(seed, "narma", 0),
            cfg.narma_variant,
        )?;
        let split = split_pairs(
            &n.inputs[cfg.discard..],
            &n.targets[cfg.discard..],
            cfg.fractions,
        )?;
        return Ok(PreparedTask {
            split,
            tau_f: 1,
            dt: 1.0,
        });
    }
    let (x, dt) = scalar_series(cfg)?;
    let tau_f = match cfg.tau_f {
        Some(t) => t,
        None => autocorr_first_zero(&x)?,
    };
    let split = split_dataset(&x, tau_f, cfg.fractions)?;
    Ok(PreparedTask { split, tau_f, dt })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub version: u32,
    pub task: TaskConfig,
    pub readout: ReadoutKind,
    pub dimred: DimredKind,
    pub ga: GaConfig,
    pub bounds: Bounds,
    pub pipeline: PipelineSettings,
    /// Skips the search when set.
    pub theta: Option<Hyperparameters>,
    /// Networks evaluated on the test segment.
    pub ensemble: usize,
    pub output_dir: Option<PathBuf>,
    pub rng_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            task: TaskConfig::default(),
            readout: ReadoutKind::Ridge,
            dimred: DimredKind::None,
            ga: GaConfig {
                population: 20,
                generations: 8,
                ..Default::default()
            },
            bounds: Bounds::default(),
            pipeline: PipelineSettings::default(),
            theta: None,
            ensemble: 16,
            output_dir: None,
            rng_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn kind(&self) -> PipelineKind {
        PipelineKind::new(self.readout, self.dimred)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let f = self.task.fractions;
        if f.iter().any(|v| !(*v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {f:?} must be positive and sum to 1"
            )));
        }
        if self.task.length == 0 {
            return Err(Error::Config("task length must be positive".into()));
        }
        if self.ensemble == 0 {
            return Err(Error::Config("ensemble must be at least 1".into()));
        }
        self.bounds.validate()?;
        if self.theta.is_none() {
            self.ga.validate()?;
        }
        if let Some(th) = &self.theta {
            if th.kernel_gamma <= 0.0
                && (self.dimred == DimredKind::Kpca || self.readout == ReadoutKind::Svr)
            {
                return Err(Error::Config(
                    "kernel methods need a positive kernel_gamma".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without validating, for callers that adjust the config first.
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The GA seed is derived from the root seed so one number controls a run.
    fn ga_config(&self) -> GaConfig {
        GaConfig {
            rng_seed: derive_seed(self.rng_seed, "ga", 0),
            ..self.ga
        }
    }
}

/// Test errors of an ensemble of independently initialised networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    /// Mean and std over the networks that produced a finite error.
    pub mean: f64,
    pub std: f64,
    /// One entry per network; `None` marks a failed network.
    pub errors: Vec<Option<f64>>,
    pub failures: usize,
}

/// Fits `n` networks with `theta` on the training segment, runs each closed
/// loop through validation and test, and scores the test predictions.
pub fn evaluate_ensemble(
    theta: &Hyperparameters,
    task: &SupervisedSplit,
    kind: PipelineKind,
    settings: &PipelineSettings,
    n: usize,
    root_seed: u64,
) -> Result<EnsembleResult> {
    use rayon::prelude::*;
    if n == 0 {
        return Err(Error::invalid("ensemble", "must be at least 1"));
    }
    let cache = RadiusCache::new();
    let errors: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(root_seed, "ensemble", i as u64);
            let run = || -> Result<f64> {
                let fitted = fit_pipeline(theta, kind, settings, &task.train, seed, Some(&cache))?;
                let val = fitted.run_segment(&task.validation, &fitted.train_state)?;
                let test = fitted.run_segment(&task.test, &val.final_state)?;
                nrmse(&test.predictions, &task.test.targets)
            };
            match run() {
                Ok(e) if e.is_finite() => Some(e),
                Ok(_) => {
                    log::warn!("ensemble network {i} diverged");
                    None
                }
                Err(err) => {
                    log::warn!("ensemble network {i} failed: {err}");
                    None
                }
            }
        })
        .collect();
    let ok: Vec<f64> = errors.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(Error::NonFinite("every ensemble network"));
    }
    let (mean, std) = mean_std(&ok);
    Ok(EnsembleResult {
        mean,
        std,
        failures: n - ok.len(),
        errors,
    })
}

/// Run timing, kept apart so the rest of the record is reproducible byte
/// for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub wall_clock_secs: f64,
    pub search_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub tau_f: usize,
    pub best_theta: Hyperparameters,
    pub best_fitness: Option<f64>,
    pub best_val_nrmse: Option<f64>,
    pub test_nrmse_mean: f64,
    pub test_nrmse_std: f64,
    pub test_errors: Vec<Option<f64>>,
    pub failed_networks: usize,
    pub metadata: RunMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub record: ResultRecord,
    pub search: Option<GaResult>,
}

/// Search only: builds the task and runs the GA.
pub fn optimize(cfg: &ExperimentConfig) -> Result<(PreparedTask, GaResult)> {
    cfg.validate()?;
    let task = build_task(&cfg.task, cfg.rng_seed)?;
    let ga = run_ga(
        &cfg.bounds,
        &cfg.ga_config(),
        &task.split,
        cfg.kind(),
        &cfg.pipeline,
    )?;
    Ok((task, ga))
}

/// Generate, split, search (unless `theta` is fixed), then evaluate the
/// ensemble on the test segment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let task = build_task(&cfg.task, cfg.rng_seed)?;
    let (theta, best, search) = match cfg.theta {
        Some(th) => (th, None, None),
        None => {
            let ga = run_ga(
                &cfg.bounds,
                &cfg.ga_config(),
                &task.split,
                cfg.kind(),
                &cfg.pipeline,
            )?;
            (ga.best.theta, Some(ga.best.clone()), Some(ga))
        }
    };
    let search_secs = start.elapsed().as_secs_f64();
    let ens = evaluate_ensemble(
        &theta,
        &task.split,
        cfg.kind(),
        &cfg.pipeline,
        cfg.ensemble,
        derive_seed(cfg.rng_seed, "test", 0),
    )?;
    let record = ResultRecord {
        config: cfg.clone(),
        tau_f: task.tau_f,
        best_theta: theta,
        best_fitness: best.as_ref().map(|b: &FitnessRecord| b.fitness),
        best_val_nrmse: best.as_ref().map(|b| b.val_nrmse_mean),
        test_nrmse_mean: ens.mean,
        test_nrmse_std: ens.std,
        test_errors: ens.errors,
        failed_networks: ens.failures,
        metadata: RunMetadata {
            wall_clock_secs: start.elapsed().as_secs_f64(),
            search_secs,
        },
    };
    Ok(ExperimentOutcome { record, search })
}

/// Writes `result.json` and, when a search ran, `convergence.csv`.
pub fn write_outcome(dir: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let f = std::fs::File::create(dir.join("result.json"))?;
    serde_json::to_writer_pretty(f, &outcome.record)?;
    if let Some(ga) = &outcome.search {
        write_history(dir, &ga.history)?;
    }
    Ok(())
}

pub fn write_history(dir: &Path, history: &[GenerationSummary]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let f = std::fs::File::create(dir.join("convergence.csv"))?;
    write_convergence_csv(f, history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig {
            theta: Some(Hyperparameters::default()),
            output_dir: Some("out".into()),
            ..Default::default()
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("version = 1\nreadout = \"svr\"\ndimred = \"pca\"\n")
            .unwrap();
        assert_eq!(
            cfg.kind(),
            PipelineKind::new(ReadoutKind::Svr, DimredKind::Pca)
        );
        assert_eq!(cfg.ga.population, 20);
    }

    #[test]
    fn bad_fractions_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.task.fractions = [0.5, 0.5, 0.5];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("version = 7\n").is_err());
    }

    #[test]
    fn narma_task_pairs() {
        let cfg = TaskConfig {
            length: 1000,
            ..TaskConfig::for_kind(TaskKind::Narma)
        };
        let t = build_task(&cfg, 1).unwrap();
        assert_eq!(t.tau_f, 1);
        assert_eq!(t.split.train.len(), 600);
        assert_eq!(t.split.test.len(), 200);
    }

    #[test]
    fn mso_task_forecast_step() {
        let cfg = TaskConfig {
            length: 2000,
            ..TaskConfig::for_kind(TaskKind::Mso)
        };
        let t = build_task(&cfg, 1).unwrap();
        assert!(t.tau_f >= 1);
        for (k, x) in t.split.train.inputs.iter().enumerate().take(50) {
            let _ = x;
            assert_eq!(t.split.train.targets[k], t.split.train.inputs[k + t.tau_f]);
        }
    }
}
