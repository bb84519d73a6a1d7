//! Acceptance run: one PASS/FAIL line per criterion and a summary line.
//! Select a subset with `ACCEPTANCE=1,4` (default: all). With
//! `ACCEPTANCE_STRICT=1` the exit status is 1 if any criterion fails.

mod common;

use std::io::Write;
use std::time::Instant;

use esn_dr::attractor::{
    reconstruct_and_measure, AttractorConfig, AttractorSystem, TrajectorySource,
};
use esn_dr::experiment::{run_experiment, ExperimentConfig, TaskConfig, TaskKind};
use esn_dr::hyperopt::GaConfig;
use esn_dr::pipeline::{PipelineKind, PipelineSettings};
use esn_dr::tsa::InvariantEstimates;

/// Networks averaged per fitness evaluation in the desk-scale searches.
const DESK_NETWORKS: usize = 2;
/// Training rows seen by the nu-SVR in the desk-scale searches.
const DESK_SVR_ROWS: usize = 1000;
const SEED: u64 = 0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn desk_config(task: TaskKind, kind: PipelineKind) -> ExperimentConfig {
    ExperimentConfig {
        task: TaskConfig::for_kind(task),
        readout: kind.readout,
        dimred: kind.dimred,
        ga: GaConfig {
            population: 20,
            generations: 8,
            networks_per_eval: DESK_NETWORKS,
            ..Default::default()
        },
        pipeline: PipelineSettings {
            svr_max_samples: DESK_SVR_ROWS,
            ..Default::default()
        },
        ensemble: 16,
        rng_seed: SEED,
        ..Default::default()
    }
}

/// Test NRMSE mean of a desk-scale search plus ensemble evaluation.
fn desk_error(task: TaskKind, kind: &str) -> Result<f64, String> {
    let kind: PipelineKind = kind.parse().map_err(|e| format!("{e}"))?;
    let out = run_experiment(&desk_config(task, kind)).map_err(|e| format!("{kind}: {e}"))?;
    let r = &out.record;
    eprintln!(
        "  {task:?} {kind}: test {:.3e} +- {:.1e} (val {:.3e}, {} failed, {:.0}s)",
        r.test_nrmse_mean,
        r.test_nrmse_std,
        r.best_val_nrmse.unwrap_or(f64::NAN),
        r.failed_networks,
        r.metadata.wall_clock_secs
    );
    Ok(r.test_nrmse_mean)
}

fn mackey_glass() -> Result<Verdict, String> {
    let svr = desk_error(TaskKind::Mg, "svr/pca")?;
    let ridge = desk_error(TaskKind::Mg, "ridge/none")?;
    let ratio = ridge / svr;
    Ok(verdict(
        svr <= 1e-2 && ratio >= 10.0,
        format!("svr/pca {svr:.3e} (<= 1e-2), ridge/none {ridge:.3e}, ratio {ratio:.1} (>= 10)"),
    ))
}

fn narma() -> Result<Verdict, String> {
    let mut e = std::collections::BTreeMap::new();
    for k in PipelineKind::all() {
        e.insert(k.to_string(), desk_error(TaskKind::Narma, &k.to_string())?);
    }
    let g = |k: &str| e[k];
    let best = e.values().cloned().fold(f64::INFINITY, f64::min);
    let svr_worst = ["svr/none", "svr/pca", "svr/kpca"]
        .map(g)
        .into_iter()
        .fold(0.0, f64::max);
    let checks = [
        ("ridge/none > ridge/pca", g("ridge/none") > g("ridge/pca")),
        (
            "ridge/kpca <= 1.1 ridge/pca",
            g("ridge/kpca") <= 1.1 * g("ridge/pca"),
        ),
        ("ridge/kpca > svr variants", g("ridge/kpca") > svr_worst),
        ("svr/kpca within 10% of best", g("svr/kpca") <= 1.1 * best),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let table: Vec<String> = e.iter().map(|(k, v)| format!("{k} {v:.3e}")).collect();
    Ok(verdict(
        failed.is_empty(),
        format!("{}; failed: {failed:?}", table.join(", ")),
    ))
}

fn mso() -> Result<Verdict, String> {
    let none = desk_error(TaskKind::Mso, "svr/none")?;
    let pca = desk_error(TaskKind::Mso, "svr/pca")?;
    Ok(verdict(
        none < pca,
        format!("svr/none {none:.3e} < svr/pca {pca:.3e}"),
    ))
}

/// Measures each source, failing any that exceeds `limit_secs`.
fn measure_sources(
    system: AttractorSystem,
    sources: &[TrajectorySource],
    limit_secs: f64,
) -> Result<Vec<InvariantEstimates>, String> {
    let cfg = AttractorConfig {
        rng_seed: SEED,
        ..AttractorConfig::for_system(system)
    };
    let mut out = Vec::new();
    for &s in sources {
        let start = Instant::now();
        let (est, _, _) = reconstruct_and_measure(&cfg, s).map_err(|e| format!("{s}: {e}"))?;
        let secs = start.elapsed().as_secs_f64();
        eprintln!(
            "  {system} {s}: D2 {:.3} +- {:.3}, LLE {:.3} +- {:.3} ({secs:.0}s)",
            est.d2_mean, est.d2_std, est.lle_mean, est.lle_std
        );
        if secs > limit_secs {
            return Err(format!("{s} took {secs:.0}s (limit {limit_secs:.0}s)"));
        }
        out.push(est);
    }
    Ok(out)
}

fn lorenz() -> Result<Verdict, String> {
    use TrajectorySource::*;
    let est = measure_sources(
        AttractorSystem::Lorenz,
        &[TrueOde, DelayEmbedding, EsnPca, EsnSmall],
        600.0,
    )?;
    let (t, d, p, s) = (&est[0], &est[1], &est[2], &est[3]);
    let checks = [
        (t.d2_mean - 2.068).abs() <= 0.15,
        (t.lle_mean - 0.906).abs() <= 0.15,
        (d.d2_mean - 1.89).abs() <= 0.3,
        (p.d2_mean - 2.17).abs() <= 0.35,
        p.d2_mean > s.d2_mean,
    ];
    Ok(verdict(
        checks.iter().all(|c| *c),
        format!(
            "true D2 {:.3} LLE {:.3}; delay D2 {:.3}; esn_pca D2 {:.3}; esn_small D2 {:.3}; checks {checks:?}",
            t.d2_mean, t.lle_mean, d.d2_mean, p.d2_mean, s.d2_mean
        ),
    ))
}

fn moore_spiegel() -> Result<Verdict, String> {
    use TrajectorySource::*;
    let est = measure_sources(
        AttractorSystem::MooreSpiegel,
        &[EsnSmall, DelayEmbedding, EsnKpca],
        f64::INFINITY,
    )?;
    let (s, d, k) = (est[0].d2_mean, est[1].d2_mean, est[2].d2_mean);
    let near = [(s, 0.635), (d, 0.835), (k, 0.956)]
        .iter()
        .all(|(v, r)| (v - r).abs() <= 0.3);
    Ok(verdict(
        s < d && d < k && near,
        format!("esn_small {s:.3} < delay {d:.3} < esn_kpca {k:.3}; means within 0.3 of 0.635/0.835/0.956: {near}"),
    ))
}

fn properties() -> Result<Verdict, String> {
    let mut lines = Vec::new();
    let mut all = true;
    let mut check = |name: &str, f: &dyn Fn() -> (bool, String)| {
        let start = Instant::now();
        let (ok, detail) = f();
        let secs = start.elapsed().as_secs_f64();
        let ok = ok && secs < 60.0;
        all &= ok;
        lines.push(format!(
            "{name} {} ({detail}, {secs:.1}s)",
            if ok { "ok" } else { "FAIL" }
        ));
    };
    check("esp", &|| {
        let g = common::esp_gap();
        (g < 1e-6, format!("gap {g:.1e}"))
    });
    check("pca", &|| {
        let (o, s, v) = common::pca_errors();
        (
            o < 1e-8 && s < 1e-8 && v < 1e-8,
            format!("{o:.1e}/{s:.1e}/{v:.1e}"),
        )
    });
    check("kpca", &|| {
        let g = common::kpca_gap();
        (g < 1e-8, format!("gap {g:.1e}"))
    });
    check("ridge", &|| {
        let g = common::ridge_gap();
        (g < 1e-6, format!("gap {g:.1e}"))
    });
    check("svr", &|| {
        let (f, g) = common::svr_errors();
        (
            f < 1e-4 && g < 1e-4,
            format!("feasibility {f:.1e}, objective gap {g:.1e}"),
        )
    });
    check("nrmse", &|| {
        let (z, o) = common::nrmse_identity_errors();
        (z == 0.0 && o < 1e-12, format!("{z:.1e}/{o:.1e}"))
    });
    check("narma", &|| (common::narma_exact(), "bitwise".into()));
    check("embedding", &|| {
        (common::embedding_rows_exact(), "row counts".into())
    });
    check("segment_d2", &|| {
        let d = common::segment_d2();
        ((d - 1.0).abs() <= 0.1, format!("{d:.3}"))
    });
    check("doubling_lle", &|| {
        let l = common::doubling_lle();
        ((l - 2f64.ln()).abs() <= 0.1, format!("{l:.3}"))
    });
    Ok(verdict(all, lines.join("; ")))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let criteria: [(usize, &str, f64, fn() -> Result<Verdict, String>); 6] = [
        (1, "Mackey-Glass svr/pca vs ridge/none", 900.0, mackey_glass),
        (2, "NARMA pipeline ordering", 1200.0, narma),
        (3, "MSO svr/none beats svr/pca", f64::INFINITY, mso),
        (4, "Lorenz invariants", f64::INFINITY, lorenz),
        (5, "Moore-Spiegel D2 ordering", f64::INFINITY, moore_spiegel),
        (6, "property suites", f64::INFINITY, properties),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let res = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match res {
            Ok(v) if secs > limit => (
                false,
                format!("{} (runtime {secs:.0}s over {limit:.0}s)", v.detail),
            ),
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {id} {}: {name}: {detail} [{secs:.0}s]",
            if pass { "PASS" } else { "FAIL" }
        );
        std::io::stdout().flush().ok();
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
        return;
    }
    println!("acceptance: all criteria passed");
}
