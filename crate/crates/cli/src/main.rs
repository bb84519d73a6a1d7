use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esn_dr::attractor::{run_attractor_study, AttractorConfig, AttractorSystem, TrajectorySource};
use esn_dr::experiment::{
    optimize, run_experiment, write_history, write_outcome, ExperimentConfig, TaskKind,
};
use esn_dr::hyperopt::GaConfig;
use esn_dr::rng::derive_seed;
use esn_dr::signals::{
    decorrelation_lag, gen_lorenz, gen_mackey_glass, gen_moore_spiegel, gen_mso, gen_narma,
    read_series_csv, write_narma_csv, write_series_csv, write_trajectory_csv, LorenzParams,
    MackeyGlassParams, MooreSpiegelParams, NarmaVariant, SeriesFile,
};
use esn_dr::tsa::{
    delay_embed, measure_invariants, Embedding, InvariantConfig, InvariantEstimates,
};
use esn_dr::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "esn-dr",
    version,
    about = "Echo state networks with reduced readouts and attractor analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark or chaotic signal to CSV.
    Generate(GenerateArgs),
    /// Run the hyperparameter search only.
    Optimize(ExperimentArgs),
    /// Search (unless theta is fixed) and evaluate the test ensemble.
    Run(ExperimentArgs),
    /// Reconstruct an attractor from several sources and measure D2 and LLE.
    Attractor(AttractorArgs),
    /// Measure D2 and LLE of a series or trajectory file.
    Invariants(InvariantArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// mg, narma, mso, lorenz or moore_spiegel
    system: String,
    /// Samples written, after subsampling.
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    /// Keep every n-th integration step.
    #[arg(long, default_value_t = 1)]
    subsample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// NARMA order.
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// Output file; `series.csv` or `trajectory.csv` by default.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment configuration.
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Series length 150k, GA 50 x 20, 5 networks per evaluation, ensemble 32.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Networks averaged per GA fitness evaluation.
    #[arg(long)]
    networks: Option<usize>,
    /// Networks in the test ensemble.
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AttractorArgs {
    /// lorenz or moore_spiegel
    system: String,
    /// Optional TOML attractor configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of true_ode, delay_embedding, esn_pca, esn_kpca, esn_small.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<String>>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Search each network source's hyperparameters with a GA of this size
    /// (population x generations) instead of using the fixed ones.
    #[arg(long, num_args = 2, value_names = ["POP", "GENS"])]
    search: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InvariantArgs {
    /// CSV written by `generate` or `attractor`.
    input: PathBuf,
    /// Embedding dimension used for scalar series.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Embedding delay for scalar series; the 1/e decorrelation lag if unset.
    #[arg(long)]
    tau: Option<usize>,
    /// Theiler window; the first ACF zero if unset.
    #[arg(long)]
    theiler: Option<usize>,
    #[arg(long, short, default_value = "invariants.json")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("Usage", &e.to_string()),
    };
    let res = match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Optimize(a) => experiment(&a, true),
        Command::Run(a) => experiment(&a, false),
        Command::Attractor(a) => attractor(&a),
        Command::Invariants(a) => invariants(&a),
    };
    match res {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).unwrap_or_default()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message.trim() }));
    ExitCode::FAILURE
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn generate(a: &GenerateArgs) -> Result<serde_json::Value> {
    let kind: TaskKind = a.system.parse()?;
    if a.length == 0 || a.subsample == 0 {
        return Err(Error::Config(
            "length and subsample must be positive".into(),
        ));
    }
    let steps = a.length * a.subsample;
    let scalar_out = || a.out.clone().unwrap_or_else(|| "series.csv".into());
    let traj_out = || a.out.clone().unwrap_or_else(|| "trajectory.csv".into());
    let path = match kind {
        TaskKind::Mg => {
            let mut rec = gen_mackey_glass(&MackeyGlassParams {
                n: steps,
                ..Default::default()
            })?;
            rec.values = rec.values.into_iter().step_by(a.subsample).collect();
            rec.dt *= a.subsample as f64;
            let path = scalar_out();
            write_series_csv(create(&path)?, &rec)?;
            path
        }
        TaskKind::Narma => {
            let s = gen_narma(
                a.length,
                a.order,
                derive_seed(a.seed, "narma", 0),
                NarmaVariant::Saturated,
            )?;
            let path = scalar_out();
            write_narma_csv(create(&path)?, &s)?;
            path
        }
        TaskKind::Mso => {
            let rec = gen_mso(a.length, a.subsample as f64)?;
            let path = scalar_out();
            write_series_csv(create(&path)?, &rec)?;
            path
        }
        TaskKind::Lorenz | TaskKind::MooreSpiegel => {
            let traj = if kind == TaskKind::Lorenz {
                gen_lorenz(&LorenzParams {
                    n: steps,
                    ..Default::default()
                })?
            } else {
                gen_moore_spiegel(&MooreSpiegelParams {
                    n: steps,
                    ..Default::default()
                })?
            };
            let path = traj_out();
            write_trajectory_csv(create(&path)?, &traj.downsample(a.subsample))?;
            path
        }
    };
    Ok(json!({ "system": kind, "samples": a.length, "output": path }))
}

fn load_experiment(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&a.config)?;
    let mut cfg = ExperimentConfig::parse_toml(&text)?;
    if a.paper_scale {
        cfg.task.length = 150_000;
        cfg.ga = GaConfig {
            population: 50,
            generations: 20,
            networks_per_eval: 5,
            ..cfg.ga
        };
        cfg.ensemble = 32;
    }
    if let Some(v) = a.length {
        cfg.task.length = v;
    }
    if let Some(v) = a.population {
        cfg.ga.population = v;
    }
    if let Some(v) = a.generations {
        cfg.ga.generations = v;
    }
    if let Some(v) = a.networks {
        cfg.ga.networks_per_eval = v;
    }
    if let Some(v) = a.ensemble {
        cfg.ensemble = v;
    }
    if let Some(v) = a.seed {
        cfg.rng_seed = v;
    }
    if let Some(dir) = &a.out_dir {
        cfg.output_dir = Some(dir.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(a: &ExperimentArgs, search_only: bool) -> Result<serde_json::Value> {
    let cfg = load_experiment(a)?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| ".".into());
    if search_only {
        let (task, ga) = optimize(&cfg)?;
        write_history(&dir, &ga.history)?;
        let summary = json!({ "tau_f": task.tau_f, "best": ga.best });
        let f = create(&dir.join("optimize.json"))?;
        serde_json::to_writer_pretty(f, &summary)?;
        Ok(summary)
    } else {
        let outcome = run_experiment(&cfg)?;
        write_outcome(&dir, &outcome)?;
        let r = &outcome.record;
        Ok(json!({
            "pipeline": cfg.kind().to_string(),
            "tau_f": r.tau_f,
            "best_val_nrmse": r.best_val_nrmse,
            "test_nrmse_mean": r.test_nrmse_mean,
            "test_nrmse_std": r.test_nrmse_std,
            "failed_networks": r.failed_networks,
            "output_dir": dir,
        }))
    }
}

fn attractor(a: &AttractorArgs) -> Result<serde_json::Value> {
    let system: AttractorSystem = a.system.parse()?;
    let mut cfg = match &a.config {
        Some(p) => AttractorConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => AttractorConfig::for_system(system),
    };
    cfg.system = system;
    if let Some(names) = &a.sources {
        cfg.sources = names
            .iter()
            .map(|s| s.parse::<TrajectorySource>())
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    if let Some(ga) = &a.search {
        cfg.search = Some(GaConfig {
            population: ga[0],
            generations: ga[1],
            ..cfg.search.unwrap_or_default()
        });
    }
    let study = run_attractor_study(&cfg, Some(&a.out_dir))?;
    let rows: Vec<_> = study
        .rows
        .iter()
        .map(|r| match &r.estimates {
            Some(e) => json!({ "source": r.source, "d2": e.d2_mean, "d2_std": e.d2_std, "lle": e.lle_mean, "lle_std": e.lle_std }),
            None => json!({ "source": r.source, "error": r.error }),
        })
        .collect();
    Ok(json!({ "system": system.to_string(), "rows": rows, "output_dir": a.out_dir }))
}

fn invariants(a: &InvariantArgs) -> Result<serde_json::Value> {
    let file = read_series_csv(BufReader::new(File::open(&a.input)?))?;
    let (points, tau) = match &file {
        SeriesFile::Trajectory(t) => (Embedding::from_points(&t.points), None),
        SeriesFile::Scalar(_) | SeriesFile::Narma(_) => {
            let x = file.observable();
            let tau = match a.tau {
                Some(t) => t,
                None => decorrelation_lag(&x)?,
            };
            (delay_embed(&x, a.dim, tau)?, Some(tau))
        }
    };
    let cfg = InvariantConfig {
        theiler: a.theiler,
        ..Default::default()
    };
    let m = measure_invariants(&points, file.dt(), &cfg)?;
    let est = InvariantEstimates::from_measurements(std::slice::from_ref(&m))?;
    let summary = json!({
        "input": a.input,
        "embedding_delay": tau,
        "measurement": m,
        "estimates": est,
    });
    serde_json::to_writer_pretty(create(&a.out)?, &summary)?;
    Ok(summary)
}
