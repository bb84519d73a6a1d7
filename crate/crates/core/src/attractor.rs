//! Phase-space reconstruction study: invariants of the true attractor, of a
//! delay embedding and of trajectories spanned by projected reservoir states.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperopt::{run_ga, Bounds, GaConfig, GeneBound, Hyperparameters};
use crate::linalg::mean_std;
use crate::pipeline::{fit_pipeline, DimredKind, PipelineKind, PipelineSettings, ReadoutKind};
use crate::rng::{derive_seed, stream};
use crate::signals::{
    autocorr_first_zero, decorrelation_lag, gen_lorenz, gen_moore_spiegel, split_dataset,
    write_components_csv, LorenzParams, MooreSpiegelParams, Trajectory,
};
use crate::tsa::{
    delay_embed, measure_invariants, Embedding, InvariantConfig, InvariantEstimates,
    InvariantMeasurement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorSystem {
    Lorenz,
    MooreSpiegel,
}

impl FromStr for AttractorSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lorenz" => Ok(Self::Lorenz),
            "moore_spiegel" | "ms" => Ok(Self::MooreSpiegel),
            other => Err(Error::Config(format!(
                "unknown system {other:?} (lorenz, moore_spiegel)"
            ))),
        }
    }
}

impl fmt::Display for AttractorSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lorenz => "lorenz",
            Self::MooreSpiegel => "moore_spiegel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectorySource {
    TrueOde,
    DelayEmbedding,
    EsnPca,
    EsnKpca,
    EsnSmall,
}

impl TrajectorySource {
    pub const ALL: [TrajectorySource; 5] = [
        Self::TrueOde,
        Self::DelayEmbedding,
        Self::EsnPca,
        Self::EsnKpca,
        Self::EsnSmall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::TrueOde => "true_ode",
            Self::DelayEmbedding => "delay_embedding",
            Self::EsnPca => "esn_pca",
            Self::EsnKpca => "esn_kpca",
            Self::EsnSmall => "esn_small",
        }
    }

    fn dimred(self) -> Option<DimredKind> {
        match self {
            Self::EsnPca => Some(DimredKind::Pca),
            Self::EsnKpca => Some(DimredKind::Kpca),
            Self::EsnSmall => Some(DimredKind::None),
            Self::TrueOde | Self::DelayEmbedding => None,
        }
    }
}

impl fmt::Display for TrajectorySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectorySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|src| src.name() == key)
            .ok_or_else(|| {
                let valid: Vec<&str> = Self::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown source {s:?} (valid: {})",
                    valid.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttractorConfig {
    pub version: u32,
    pub system: AttractorSystem,
    pub sources: Vec<TrajectorySource>,
    pub repeats: usize,
    /// Points of the integrated trajectory used by `true_ode` and
    /// `delay_embedding`, at the integration step.
    pub ode_points: usize,
    /// Samples of the observable driving the networks, after subsampling.
    pub esn_length: usize,
    /// Integration steps per observable sample fed to the networks.
    pub subsample: usize,
    pub fractions: [f64; 3],
    /// Rescale the observable to zero mean and unit variance before it
    /// drives a network, so `input_scaling` does not depend on the units.
    pub standardize_input: bool,
    pub embedding_dim: usize,
    /// Embedding delay; the 1/e decorrelation lag of the observable if unset.
    pub tau_e: Option<usize>,
    /// Used as is unless `search` is set.
    pub theta: Hyperparameters,
    /// Reservoir size of the `esn_small` source, read directly without a
    /// projector.
    pub small_reservoir: usize,
    pub readout: ReadoutKind,
    /// Optional GA search per source; its loss weight `alpha` is forced to 0.
    pub search: Option<GaConfig>,
    pub pipeline: PipelineSettings,
    pub invariants: InvariantConfig,
    /// Half-width of the uniform perturbation of the initial condition
    /// between repeats.
    pub init_jitter: f64,
    pub lorenz: LorenzParams,
    pub moore_spiegel: MooreSpiegelParams,
    pub rng_seed: u64,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        Self {
            version: crate::experiment::CONFIG_VERSION,
            system: AttractorSystem::Lorenz,
            sources: TrajectorySource::ALL.to_vec(),
            repeats: 10,
            ode_points: 10_000,
            esn_length: 25_000,
            subsample: 10,
            fractions: [0.6, 0.2, 0.2],
            standardize_input: false,
            embedding_dim: 3,
            tau_e: None,
            theta: Hyperparameters {
                n_reservoir: 300.0,
                noise: 0.0,
                input_scaling: 0.1,
                teacher_scaling: 0.5,
                feedback_scaling: 0.3,
                spectral_radius: 0.9,
                ridge_lambda: 1e-3,
                ..Default::default()
            },
            small_reservoir: 3,
            readout: ReadoutKind::Ridge,
            search: None,
            pipeline: PipelineSettings {
                fixed_dim: Some(3),
                ..Default::default()
            },
            invariants: InvariantConfig::default(),
            init_jitter: 0.1,
            lorenz: LorenzParams::default(),
            moore_spiegel: MooreSpiegelParams::default(),
            rng_seed: 0,
        }
    }
}

impl AttractorConfig {
    pub fn for_system(system: AttractorSystem) -> Self {
        Self {
            system,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != crate::experiment::CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.sources.is_empty() {
            return Err(Error::Config("no trajectory sources requested".into()));
        }
        if self.embedding_dim == 0 || self.small_reservoir == 0 || self.subsample == 0 {
            return Err(Error::Config(
                "embedding_dim, small_reservoir and subsample must be positive".into(),
            ));
        }
        if let Some(ga) = &self.search {
            ga.validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn trajectory(&self, n: usize, repeat: usize) -> Result<Trajectory> {
        let mut rng = stream(
            derive_seed(self.rng_seed, "attractor-init", repeat as u64),
            "jitter",
        );
        let mut jitter = [0.0; 3];
        for j in &mut jitter {
            *j = if self.init_jitter > 0.0 {
                rng.random_range(-self.init_jitter..=self.init_jitter)
            } else {
                0.0
            };
        }
        let shift = |init: [f64; 3]| {
            [
                init[0] + jitter[0],
                init[1] + jitter[1],
                init[2] + jitter[2],
            ]
        };
        match self.system {
            AttractorSystem::Lorenz => gen_lorenz(&LorenzParams {
                n,
                init: shift(self.lorenz.init),
                ..self.lorenz
            }),
            AttractorSystem::MooreSpiegel => gen_moore_spiegel(&MooreSpiegelParams {
                n,
                init: shift(self.moore_spiegel.init),
                ..self.moore_spiegel
            }),
        }
    }

    fn network_kind(&self, source: TrajectorySource) -> Option<PipelineKind> {
        source.dimred().map(|d| PipelineKind::new(self.readout, d))
    }

    fn source_theta(&self, source: TrajectorySource) -> Hyperparameters {
        match source {
            TrajectorySource::EsnSmall => Hyperparameters {
                n_reservoir: self.small_reservoir as f64,
                ..self.theta
            },
            _ => self.theta,
        }
    }
}

/// A reconstructed trajectory ready for invariant estimation.
#[derive(Debug, Clone)]
pub struct SourceTrajectory {
    pub points: Embedding,
    pub dt: f64,
}

impl SourceTrajectory {
    /// The first three coordinates as a trajectory for `t,c1,c2,c3` output.
    pub fn to_trajectory(&self, name: &str) -> Trajectory {
        let m = self.points.m;
        let points = (0..self.points.len())
            .map(|i| {
                let p = self.points.point(i);
                [
                    p[0],
                    if m > 1 { p[1] } else { 0.0 },
                    if m > 2 { p[2] } else { 0.0 },
                ]
            })
            .collect();
        Trajectory {
            points,
            dt: self.dt,
            name: name.to_string(),
            params: Default::default(),
        }
    }
}

/// The network observable: the `x` component read every `subsample` steps.
fn network_series(cfg: &AttractorConfig, repeat: usize) -> Result<(Vec<f64>, f64)> {
    let traj = cfg
        .trajectory(cfg.esn_length * cfg.subsample, repeat)?
        .downsample(cfg.subsample);
    let mut x = traj.observable();
    if cfg.standardize_input {
        let (mean, std) = mean_std(&x);
        if std > 0.0 {
            x.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
    }
    Ok((x, traj.dt))
}

/// Searches hyperparameters for a network source with the prediction error
/// as the only loss term.
pub fn search_theta(
    cfg: &AttractorConfig,
    source: TrajectorySource,
    ga: &GaConfig,
) -> Result<Hyperparameters> {
    let kind = cfg
        .network_kind(source)
        .ok_or_else(|| Error::Config(format!("{source} has no network to tune")))?;
    let (x, _) = network_series(cfg, 0)?;
    let split = split_dataset(&x, autocorr_first_zero(&x)?, cfg.fractions)?;
    let mut bounds = Bounds::default();
    if source == TrajectorySource::EsnSmall {
        let n = cfg.small_reservoir as f64;
        bounds.genes[0] = GeneBound {
            min: n,
            max: n,
            sigma: 0.0,
        };
    }
    let ga = GaConfig {
        alpha: 0.0,
        rng_seed: derive_seed(cfg.rng_seed, source.name(), 0),
        ..*ga
    };
    Ok(run_ga(&bounds, &ga, &split, kind, &cfg.pipeline)?
        .best
        .theta)
}

/// Builds the trajectory of `source` for one repeat.
pub fn source_trajectory(
    cfg: &AttractorConfig,
    source: TrajectorySource,
    theta: &Hyperparameters,
    repeat: usize,
) -> Result<SourceTrajectory> {
    match source {
        TrajectorySource::TrueOde => {
            let t = cfg.trajectory(cfg.ode_points, repeat)?;
            Ok(SourceTrajectory {
                points: Embedding::from_points(&t.points),
                dt: t.dt,
            })
        }
        TrajectorySource::DelayEmbedding => {
            let t = cfg.trajectory(cfg.ode_points, repeat)?;
            let x = t.observable();
            let tau = match cfg.tau_e {
                Some(v) => v,
                None => decorrelation_lag(&x)?,
            };
            Ok(SourceTrajectory {
                points: delay_embed(&x, cfg.embedding_dim, tau)?,
                dt: t.dt,
            })
        }
        TrajectorySource::EsnPca | TrajectorySource::EsnKpca | TrajectorySource::EsnSmall => {
            let kind = cfg.network_kind(source).expect("network source");
            let (x, dt) = network_series(cfg, repeat)?;
            let split = split_dataset(&x, autocorr_first_zero(&x)?, cfg.fractions)?;
            let settings = PipelineSettings {
                fixed_dim: Some(cfg.embedding_dim),
                ..cfg.pipeline
            };
            let seed = derive_seed(cfg.rng_seed, source.name(), repeat as u64 + 1);
            let fitted = fit_pipeline(theta, kind, &settings, &split.train, seed, None)?;
            let val = fitted.run_segment(&split.validation, &fitted.train_state)?;
            let test = fitted.run_segment(&split.test, &val.final_state)?;
            Ok(SourceTrajectory {
                points: Embedding::from_rows(&test.projected),
                dt,
            })
        }
    }
}

/// One row of the invariant table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub source: TrajectorySource,
    pub estimates: Option<InvariantEstimates>,
    pub theta: Option<Hyperparameters>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorStudy {
    pub system: AttractorSystem,
    pub rows: Vec<SourceRow>,
}

impl AttractorStudy {
    pub fn row(&self, source: TrajectorySource) -> Option<&InvariantEstimates> {
        self.rows
            .iter()
            .find(|r| r.source == source)
            .and_then(|r| r.estimates.as_ref())
    }
}

/// Measures `source` over `cfg.repeats` runs; also returns the first run's
/// trajectory.
pub fn reconstruct_and_measure(
    cfg: &AttractorConfig,
    source: TrajectorySource,
) -> Result<(
    InvariantEstimates,
    Option<Hyperparameters>,
    SourceTrajectory,
)> {
    cfg.validate()?;
    let theta = match (source.dimred(), &cfg.search) {
        (Some(_), Some(ga)) => Some(search_theta(cfg, source, ga)?),
        (Some(_), None) => Some(cfg.source_theta(source)),
        (None, _) => None,
    };
    let th = theta.unwrap_or_default();
    let mut first = None;
    let mut ms: Vec<InvariantMeasurement> = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let traj = source_trajectory(cfg, source, &th, r)?;
        let m = measure_invariants(&traj.points, traj.dt, &cfg.invariants)?;
        log::info!("{source} repeat {r}: D2 {:.3} LLE {:.3}", m.d2.d2, m.lle);
        ms.push(m);
        if first.is_none() {
            first = Some(traj);
        }
    }
    let est = InvariantEstimates::from_measurements(&ms)?;
    Ok((est, theta, first.expect("at least one repeat")))
}

/// Runs every requested source; a failing source is recorded and the others
/// proceed. Trajectories of the first repeat are written to `out_dir` when
/// given, as `trajectory_<source>.csv`, next to `invariants.json`.
pub fn run_attractor_study(
    cfg: &AttractorConfig,
    out_dir: Option<&Path>,
) -> Result<AttractorStudy> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::with_capacity(cfg.sources.len());
    for &source in &cfg.sources {
        let row = match reconstruct_and_measure(cfg, source) {
            Ok((est, theta, traj)) => {
                if let Some(dir) = out_dir {
                    let f = std::fs::File::create(dir.join(format!("trajectory_{source}.csv")))?;
                    write_components_csv(
                        std::io::BufWriter::new(f),
                        &traj.to_trajectory(source.name()),
                    )?;
                }
                SourceRow {
                    source,
                    estimates: Some(est),
                    theta,
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("{source} failed: {e}");
                SourceRow {
                    source,
                    estimates: None,
                    theta: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    let study = AttractorStudy {
        system: cfg.system,
        rows,
    };
    if let Some(dir) = out_dir {
        let f = std::fs::File::create(dir.join("invariants.json"))?;
        serde_json::to_writer_pretty(f, &study)?;
    }
    Ok(study)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_names_roundtrip() {
        for s in TrajectorySource::ALL {
            assert_eq!(s.name().parse::<TrajectorySource>().unwrap(), s);
        }
        let err = "esn_huge"
            .parse::<TrajectorySource>()
            .unwrap_err()
            .to_string();
        assert!(err.contains("delay_embedding"), "{err}");
    }

    #[test]
    fn small_network_trajectory_is_three_dimensional() {
        let cfg = AttractorConfig {
            esn_length: 1500,
            ..Default::default()
        };
        let th = cfg.source_theta(TrajectorySource::EsnSmall);
        let t = source_trajectory(&cfg, TrajectorySource::EsnSmall, &th, 0).unwrap();
        assert_eq!(t.points.m, 3);
        assert!((t.dt - 0.1).abs() < 1e-12);
        assert!(t.points.len() >= 250);
    }

    #[test]
    fn repeats_differ_by_initial_condition() {
        let cfg = AttractorConfig::default();
        let a = cfg.trajectory(10, 0).unwrap();
        let b = cfg.trajectory(10, 1).unwrap();
        assert_ne!(a.points, b.points);
        assert_eq!(a.points, cfg.trajectory(10, 0).unwrap().points);
    }
}
