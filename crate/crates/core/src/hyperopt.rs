//! Genetic search over the ESN hyperparameters.
//!
//! Individuals are real-coded; every gene has a `[min, max]` range and a
//! Gaussian mutation width. The fitness of an individual is the validation
//! error of a few independently seeded networks blended with the fraction of
//! retained dimensions.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mean_std, pairwise_sum};
use crate::pipeline::{fit_pipeline, DimredKind, PipelineKind, PipelineSettings, RadiusCache};
use crate::rng::{derive_seed, stream};
use crate::signals::SupervisedSplit;

pub const N_GENES: usize = 11;

pub const GENE_NAMES: [&str; N_GENES] = [
    "n_reservoir",
    "noise",
    "input_scaling",
    "teacher_scaling",
    "feedback_scaling",
    "spectral_radius",
    "dim_fraction",
    "kernel_gamma",
    "ridge_lambda",
    "svr_c",
    "svr_nu",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub n_reservoir: f64,
    pub noise: f64,
    pub input_scaling: f64,
    pub teacher_scaling: f64,
    pub feedback_scaling: f64,
    pub spectral_radius: f64,
    /// Fraction of reservoir dimensions kept by the projector.
    pub dim_fraction: f64,
    /// Width of both the kernel PCA and the nu-SVR Gaussian kernels.
    pub kernel_gamma: f64,
    pub ridge_lambda: f64,
    pub svr_c: f64,
    pub svr_nu: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            n_reservoir: 200.0,
            noise: 0.0,
            input_scaling: 0.5,
            teacher_scaling: 0.5,
            feedback_scaling: 0.2,
            spectral_radius: 0.9,
            dim_fraction: 0.1,
            kernel_gamma: 0.01,
            ridge_lambda: 0.01,
            svr_c: 1.0,
            svr_nu: 0.5,
        }
    }
}

impl Hyperparameters {
    pub fn reservoir_size(&self) -> usize {
        self.n_reservoir.round().max(1.0) as usize
    }

    /// `max(1, round(theta_d * N_r))`, capped at `N_r`.
    pub fn reduced_dim(&self) -> usize {
        let n = self.reservoir_size();
        ((self.dim_fraction * n as f64).round() as usize).clamp(1, n)
    }

    pub fn to_genes(&self) -> [f64; N_GENES] {
        [
            self.n_reservoir,
            self.noise,
            self.input_scaling,
            self.teacher_scaling,
            self.feedback_scaling,
            self.spectral_radius,
            self.dim_fraction,
            self.kernel_gamma,
            self.ridge_lambda,
            self.svr_c,
            self.svr_nu,
        ]
    }

    pub fn from_genes(g: &[f64; N_GENES]) -> Self {
        Self {
            n_reservoir: g[0],
            noise: g[1],
            input_scaling: g[2],
            teacher_scaling: g[3],
            feedback_scaling: g[4],
            spectral_radius: g[5],
            dim_fraction: g[6],
            kernel_gamma: g[7],
            ridge_lambda: g[8],
            svr_c: g[9],
            svr_nu: g[10],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneBound {
    pub min: f64,
    pub max: f64,
    /// Standard deviation of the Gaussian mutation.
    pub sigma: f64,
}

const fn gb(min: f64, max: f64, sigma: f64) -> GeneBound {
    GeneBound { min, max, sigma }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub genes: [GeneBound; N_GENES],
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            genes: [
                gb(100.0, 500.0, 5.0),
                gb(0.0, 0.1, 0.01),
                gb(0.1, 0.9, 0.08),
                gb(0.1, 0.9, 0.08),
                gb(0.0, 0.6, 0.06),
                gb(0.5, 1.4, 0.09),
                gb(0.001, 1.0, 0.1),
                gb(0.001, 0.1, 0.01),
                gb(0.001, 1.0, 0.1),
                gb(0.001, 10.0, 1.0),
                gb(0.001, 1.0, 0.1),
            ],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for (b, name) in self.genes.iter().zip(GENE_NAMES) {
            if !(b.min <= b.max) || !b.min.is_finite() || !b.max.is_finite() || !(b.sigma >= 0.0) {
                return Err(Error::invalid(name, format!("inconsistent bound {b:?}")));
            }
        }
        if self.genes[0].min < 1.0 {
            return Err(Error::invalid(
                "n_reservoir",
                "lower bound must be at least 1",
            ));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &Hyperparameters) -> bool {
        theta
            .to_genes()
            .iter()
            .zip(&self.genes)
            .all(|(v, b)| *v >= b.min && *v <= b.max)
    }

    /// Clamps every gene into range and rounds the reservoir size.
    pub fn clamp(&self, genes: &mut [f64; N_GENES]) {
        for (v, b) in genes.iter_mut().zip(&self.genes) {
            *v = v.clamp(b.min, b.max);
        }
        genes[0] = genes[0]
            .round()
            .clamp(self.genes[0].min.ceil(), self.genes[0].max.floor());
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> [f64; N_GENES] {
        let mut g = [0.0; N_GENES];
        for (v, b) in g.iter_mut().zip(&self.genes) {
            *v = if b.max > b.min {
                rng.random_range(b.min..=b.max)
            } else {
                b.min
            };
        }
        self.clamp(&mut g);
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub p_mut: f64,
    pub p_cx: f64,
    pub tournament: usize,
    pub elites: usize,
    pub networks_per_eval: usize,
    pub alpha: f64,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 20,
            p_mut: 0.2,
            p_cx: 0.5,
            tournament: 4,
            elites: 1,
            networks_per_eval: 5,
            alpha: 0.1,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tournament < 2 || self.population < self.tournament {
            return Err(Error::invalid(
                "tournament",
                "need population >= tournament >= 2",
            ));
        }
        if self.generations == 0 {
            return Err(Error::invalid("generations", "must be at least 1"));
        }
        for (name, p) in [
            ("p_mut", self.p_mut),
            ("p_cx", self.p_cx),
            ("alpha", self.alpha),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if self.elites >= self.population {
            return Err(Error::invalid(
                "elites",
                "must be smaller than the population",
            ));
        }
        if self.networks_per_eval == 0 {
            return Err(Error::invalid("networks_per_eval", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub theta: Hyperparameters,
    pub fitness: f64,
    pub val_nrmse_mean: f64,
    pub val_nrmse_std: f64,
    /// The dimension term of the loss: `theta_d`, or 0 without a projector.
    pub penalty: f64,
    pub generation: usize,
}

/// Normalised root mean squared error.
pub fn nrmse(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            got: predicted.len(),
        });
    }
    if target.is_empty() {
        return Err(Error::invalid("target", "must not be empty"));
    }
    let n = target.len() as f64;
    let mean = pairwise_sum(target) / n;
    let var: Vec<f64> = target.iter().map(|t| (t - mean) * (t - mean)).collect();
    let var = pairwise_sum(&var) / n;
    if !(var > 0.0) {
        return Err(Error::ZeroVarianceTarget);
    }
    let err: Vec<f64> = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .collect();
    Ok((pairwise_sum(&err) / n / var).sqrt())
}

/// `(1 - alpha) * val_error + alpha * theta_d`.
pub fn loss(theta: &Hyperparameters, val_error: f64, alpha: f64) -> f64 {
    loss_value(val_error, theta.dim_fraction, alpha)
}

pub fn loss_value(val_error: f64, penalty: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * val_error + alpha * penalty
}

/// Dimension term used in the loss for a pipeline.
pub fn dim_penalty(theta: &Hyperparameters, kind: PipelineKind) -> f64 {
    match kind.dimred {
        DimredKind::None => 0.0,
        _ => theta.dim_fraction,
    }
}

/// Seed of the `i`-th network used to score an individual.
pub fn network_seed(root: u64, i: usize) -> u64 {
    derive_seed(root, "network", i as u64)
}

/// Validation NRMSE of one network.
pub fn validation_error(
    theta: &Hyperparameters,
    task: &SupervisedSplit,
    kind: PipelineKind,
    settings: &PipelineSettings,
    seed: u64,
    cache: Option<&RadiusCache>,
) -> Result<f64> {
    let fitted = fit_pipeline(theta, kind, settings, &task.train, seed, cache)?;
    let run = fitted.run_segment(&task.validation, &fitted.train_state)?;
    let e = nrmse(&run.predictions, &task.validation.targets)?;
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFinite("validation error"))
    }
}

/// Scores an individual with `cfg.networks_per_eval` independently seeded
/// networks; any failure makes the fitness infinite.
pub fn evaluate_individual(
    theta: &Hyperparameters,
    task: &SupervisedSplit,
    kind: PipelineKind,
    cfg: &GaConfig,
    settings: &PipelineSettings,
    cache: Option<&RadiusCache>,
) -> FitnessRecord {
    let penalty = dim_penalty(theta, kind);
    let errors: Result<Vec<f64>> = (0..cfg.networks_per_eval)
        .into_par_iter()
        .map(|i| {
            validation_error(
                theta,
                task,
                kind,
                settings,
                network_seed(cfg.rng_seed, i),
                cache,
            )
        })
        .collect();
    match errors {
        Ok(es) => {
            let (m, s) = mean_std(&es);
            FitnessRecord {
                theta: *theta,
                fitness: loss_value(m, penalty, cfg.alpha),
                val_nrmse_mean: m,
                val_nrmse_std: s,
                penalty,
                generation: 0,
            }
        }
        Err(e) => {
            log::debug!("individual culled: {e}");
            FitnessRecord {
                theta: *theta,
                fitness: f64::INFINITY,
                val_nrmse_mean: f64::INFINITY,
                val_nrmse_std: f64::NAN,
                penalty,
                generation: 0,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    /// Best fitness seen so far.
    pub best_fitness: f64,
    /// Mean over the finite fitness values of this generation.
    pub mean_fitness: f64,
    pub best_val_nrmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: FitnessRecord,
    pub history: Vec<GenerationSummary>,
    /// Every individual of every generation, in order.
    pub evaluations: Vec<FitnessRecord>,
}

fn genome_key(g: &[f64; N_GENES]) -> [u64; N_GENES] {
    g.map(f64::to_bits)
}

fn tournament<'a, R: Rng>(pop: &'a [FitnessRecord], k: usize, rng: &mut R) -> &'a FitnessRecord {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness < best.fitness {
            best = c;
        }
    }
    best
}

fn better(a: &FitnessRecord, b: &FitnessRecord) -> std::cmp::Ordering {
    a.fitness.total_cmp(&b.fitness)
}

/// Genetic algorithm over `bounds` with an arbitrary fitness function.
///
/// `fitness` must be deterministic: identical genomes are scored once and
/// served from a cache afterwards (elites in particular).
pub fn run_ga_with<F>(bounds: &Bounds, cfg: &GaConfig, fitness: F) -> Result<GaResult>
where
    F: Fn(&Hyperparameters) -> FitnessRecord + Sync,
{
    bounds.validate()?;
    cfg.validate()?;
    let mut rng = stream(cfg.rng_seed, "ga");
    let cache: Mutex<HashMap<[u64; N_GENES], FitnessRecord>> = Mutex::new(HashMap::new());

    let score = |genomes: &[[f64; N_GENES]], generation: usize| -> Vec<FitnessRecord> {
        genomes
            .par_iter()
            .map(|g| {
                let key = genome_key(g);
                let cached = cache.lock().ok().and_then(|c| c.get(&key).cloned());
                let mut rec = match cached {
                    Some(r) => r,
                    None => {
                        let r = fitness(&Hyperparameters::from_genes(g));
                        if let Ok(mut c) = cache.lock() {
                            c.insert(key, r.clone());
                        }
                        r
                    }
                };
                rec.generation = generation;
                rec
            })
            .collect()
    };

    let init: Vec<[f64; N_GENES]> = (0..cfg.population)
        .map(|_| bounds.sample(&mut rng))
        .collect();
    let mut pop = score(&init, 0);
    let mut evaluations = pop.clone();
    let mut best = pop
        .iter()
        .min_by(|a, b| better(a, b))
        .cloned()
        .ok_or(Error::invalid("population", "empty"))?;
    let mut history = vec![summary(0, &pop, &best)];
    let normals: Vec<Option<Normal<f64>>> = bounds
        .genes
        .iter()
        .map(|b| Normal::new(0.0, b.sigma).ok())
        .collect();

    for generation in 1..cfg.generations {
        let mut ranked = pop.clone();
        ranked.sort_by(better);
        let mut next: Vec<[f64; N_GENES]> = ranked
            .iter()
            .take(cfg.elites)
            .map(|r| r.theta.to_genes())
            .collect();
        while next.len() < cfg.population {
            let mut a = tournament(&pop, cfg.tournament, &mut rng).theta.to_genes();
            let mut b = tournament(&pop, cfg.tournament, &mut rng).theta.to_genes();
            if rng.random::<f64>() < cfg.p_cx {
                for i in 0..N_GENES {
                    if rng.random::<bool>() {
                        std::mem::swap(&mut a[i], &mut b[i]);
                    }
                }
            }
            for child in [&mut a, &mut b] {
                for (i, normal) in normals.iter().enumerate() {
                    if rng.random::<f64>() < cfg.p_mut {
                        if let Some(n) = normal {
                            child[i] += n.sample(&mut rng);
                        }
                    }
                }
                bounds.clamp(child);
            }
            next.push(a);
            if next.len() < cfg.population {
                next.push(b);
            }
        }
        pop = score(&next, generation);
        if let Some(gb) = pop.iter().min_by(|a, b| better(a, b)) {
            if gb.fitness < best.fitness {
                best = gb.clone();
            }
        }
        history.push(summary(generation, &pop, &best));
        evaluations.extend(pop.iter().cloned());
        log::info!(
            "generation {generation}: best {:.6e}, mean {:.6e}",
            best.fitness,
            history.last().map_or(f64::NAN, |h| h.mean_fitness)
        );
    }
    Ok(GaResult {
        best,
        history,
        evaluations,
    })
}

fn summary(generation: usize, pop: &[FitnessRecord], best: &FitnessRecord) -> GenerationSummary {
    let finite: Vec<f64> = pop
        .iter()
        .map(|r| r.fitness)
        .filter(|f| f.is_finite())
        .collect();
    GenerationSummary {
        generation,
        best_fitness: best.fitness,
        mean_fitness: if finite.is_empty() {
            f64::INFINITY
        } else {
            pairwise_sum(&finite) / finite.len() as f64
        },
        best_val_nrmse: best.val_nrmse_mean,
    }
}

/// GA over the ESN hyperparameters for one pipeline on one task.
pub fn run_ga(
    bounds: &Bounds,
    cfg: &GaConfig,
    task: &SupervisedSplit,
    kind: PipelineKind,
    settings: &PipelineSettings,
) -> Result<GaResult> {
    let radius = RadiusCache::new();
    run_ga_with(bounds, cfg, |theta| {
        evaluate_individual(theta, task, kind, cfg, settings, Some(&radius))
    })
}

/// `generation,best_fitness,mean_fitness,best_val_nrmse`.
pub fn write_convergence_csv<W: Write>(w: W, history: &[GenerationSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for h in history {
        out.serialize(h)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_convergence_csv<R: std::io::Read>(r: R) -> Result<Vec<GenerationSummary>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nrmse_identities() {
        let t = [1.0, 2.0, 4.0, -1.0];
        assert_eq!(nrmse(&t, &t).unwrap(), 0.0);
        let m = t.iter().sum::<f64>() / 4.0;
        assert!((nrmse(&[m; 4], &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((nrmse(&[0.0, 2.0], &[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            nrmse(&[1.0, 1.0], &[3.0, 3.0]),
            Err(Error::ZeroVarianceTarget)
        );
        assert!(nrmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn loss_cases() {
        let mut th = Hyperparameters::default();
        th.dim_fraction = 0.2;
        assert_eq!(loss(&th, 0.5, 0.0), 0.5);
        assert!((loss(&th, 0.5, 0.1) - 0.47).abs() < 1e-15);
        assert_eq!(loss(&th, 0.5, 1.0), 0.2);
    }

    #[test]
    fn reduced_dim_bounds() {
        let mut th = Hyperparameters::default();
        th.n_reservoir = 100.0;
        th.dim_fraction = 0.001;
        assert_eq!(th.reduced_dim(), 1);
        th.dim_fraction = 1.0;
        assert_eq!(th.reduced_dim(), 100);
        th.dim_fraction = 0.256;
        assert_eq!(th.reduced_dim(), 26);
    }

    #[test]
    fn default_bounds_valid_and_genes_roundtrip() {
        let b = Bounds::default();
        b.validate().unwrap();
        let th = Hyperparameters::default();
        assert!(b.contains(&th));
        assert_eq!(Hyperparameters::from_genes(&th.to_genes()), th);
    }

    #[test]
    fn clamping() {
        let b = Bounds::default();
        let mut g = [1e9; N_GENES];
        b.clamp(&mut g);
        assert!(b.contains(&Hyperparameters::from_genes(&g)));
        let mut g = [-1e9; N_GENES];
        b.clamp(&mut g);
        assert!(b.contains(&Hyperparameters::from_genes(&g)));
        assert_eq!(g[0], 100.0);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig {
            population: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GaConfig {
            p_mut: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn record(theta: &Hyperparameters, f: f64) -> FitnessRecord {
        FitnessRecord {
            theta: *theta,
            fitness: f,
            val_nrmse_mean: f,
            val_nrmse_std: 0.0,
            penalty: 0.0,
            generation: 0,
        }
    }

    #[test]
    fn single_generation_picks_minimum() {
        let cfg = GaConfig {
            population: 4,
            generations: 1,
            ..Default::default()
        };
        let r = run_ga_with(&Bounds::default(), &cfg, |t| record(t, t.dim_fraction)).unwrap();
        let min = r
            .evaluations
            .iter()
            .map(|e| e.theta.dim_fraction)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best.fitness, min);
        assert_eq!(r.evaluations.len(), 4);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn infinite_fitness_is_culled_not_fatal() {
        let cfg = GaConfig {
            population: 6,
            generations: 3,
            ..Default::default()
        };
        let r = run_ga_with(&Bounds::default(), &cfg, |t| {
            let f = if t.svr_c > 5.0 {
                f64::INFINITY
            } else {
                t.svr_c
            };
            record(t, f)
        })
        .unwrap();
        assert!(r.best.fitness.is_finite());
        assert!(r.history.iter().all(|h| h.mean_fitness.is_finite()));
    }
}
