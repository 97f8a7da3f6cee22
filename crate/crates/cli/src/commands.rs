//! The six experiment runners behind the subcommands.

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{svg_line_plot, OutputWriter};
use litm_core::acceptance::{run_criterion, Verdict, FAST_IDS, MC_IDS};
use litm_core::closedform::{accuracy_expansion, midpoint_grid, score_profile, u_shape_analyze};
use litm_core::meanfield::{evolve_meanfield, SpectralField};
use litm_core::sim::EnsembleSpec;
use litm_core::stats::{estimates_csv, run_requests_streaming, Request};
use litm_core::testfn::TestFunction;
use num_complex::Complex64;
use serde_json::json;
use std::f64::consts::TAU;
use std::path::Path;

pub enum RunError {
    Runtime(String),
}

impl From<litm_core::Error> for RunError {
    fn from(e: litm_core::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(format!("io: {e}"))
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Fast,
    Mc,
    All,
}

fn ensemble_spec(cfg: &ExperimentConfig) -> EnsembleSpec {
    EnsembleSpec {
        params: cfg.params.clone(),
        sampler: cfg.initial_sampler(),
        dt: cfg.dt_particle,
        checkpoints: cfg.checkpoints.clone(),
        replicates: cfg.replicates,
        method: cfg.drift_method,
    }
}

fn writer(cfg: &ExperimentConfig, out_dir: &Path) -> Result<OutputWriter, RunError> {
    Ok(OutputWriter::new(out_dir, cfg.canonical_toml())?)
}

pub fn run_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let bytes = cfg.replicates * cfg.params.n_tokens * (cfg.checkpoints.len() + 1) * 8;
    if bytes > 2_000_000_000 {
        return Err(RunError::Runtime(format!(
            "trajectory dump of ~{} MB is too large; lower replicates or checkpoints",
            bytes / 1_000_000
        )));
    }
    let mut w = writer(cfg, out_dir)?;
    let ens = ensemble_spec(cfg).materialize()?;
    w.write_csv("trajectory.csv", &ens.to_csv())?;
    let summary = json!({
        "experiment": "simulate",
        "replicates": cfg.replicates,
        "n_tokens": cfg.params.n_tokens,
        "checkpoints": cfg.checkpoints,
        "files": w.files(),
    });
    w.write_json("summary.json", summary)?;
    println!(
        "simulate: {} replicates x {} tokens at {} checkpoints -> {}",
        cfg.replicates,
        cfg.params.n_tokens,
        cfg.checkpoints.len(),
        out_dir.display()
    );
    Ok(0)
}

/// Spectral initial data matching the configured sampler: the uniform law,
/// or the codeword mixture f̂(σ, n) = Σ_m p_m(σ) e^{-in 2πm/M}.
fn initial_field(cfg: &ExperimentConfig) -> SpectralField {
    let sampler = cfg.initial_sampler();
    let m = cfg.params.vocab_size;
    SpectralField::from_fn(cfg.s_grid, cfg.n_max, true, |sigma, n| {
        match sampler.codeword_distribution(sigma) {
            None => {
                if n == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Some(p) => p
                .iter()
                .enumerate()
                .map(|(word, &pw)| {
                    let (s, c) = (-(n as f64) * TAU * word as f64 / m as f64).sin_cos();
                    pw * Complex64::new(c, s)
                })
                .sum(),
        }
    })
}

pub fn run_meanfield(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let mut w = writer(cfg, out_dir)?;
    let mut field = initial_field(cfg);
    let mut t_cur = 0.0;
    let mut entries = Vec::new();
    for &t in &cfg.checkpoints {
        if t > t_cur {
            let ev = evolve_meanfield(&field, &cfg.params, cfg.dt_field, t - t_cur)?;
            field = ev.field;
            t_cur = t;
            entries.push(json!({
                "t": t,
                "tail_sup": ev.tail_sup,
                "tail_warning": ev.tail_sup > 1e-6,
                "mass_error": field.mass_error(),
            }));
        } else {
            entries.push(json!({ "t": t, "tail_sup": field.tail_sup(), "tail_warning": field.tail_sup() > 1e-6, "mass_error": field.mass_error() }));
        }
        w.write_csv(&format!("field_t{t}.csv"), &field.to_csv())?;
    }
    let summary = json!({
        "experiment": "meanfield",
        "s_grid": cfg.s_grid,
        "n_max": cfg.n_max,
        "checkpoints": entries,
        "files": w.files(),
    });
    w.write_json("summary.json", summary)?;
    println!(
        "meanfield: S={} n_max={} evolved to t={} -> {}",
        cfg.s_grid,
        cfg.n_max,
        cfg.checkpoints.last().unwrap(),
        out_dir.display()
    );
    Ok(0)
}

pub fn run_correlations(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let mut w = writer(cfg, out_dir)?;
    let phi = TestFunction::harmonic(cfg.phi_harmonic);
    let n_tokens = cfg.params.n_tokens as f64;
    let mut requests = Vec::new();
    for &t in &cfg.checkpoints {
        for &sigma in &cfg.sigma_list {
            for &n in &cfg.n_list {
                requests.push(Request::Mode { t, sigma, n });
                requests.push(Request::AutoCov {
                    t,
                    sigma,
                    n,
                    phi: phi.clone(),
                });
                for &sigma0 in &cfg.sigma0_list {
                    // only strictly earlier source indices are admissible
                    if (n_tokens * sigma0).ceil() < (n_tokens * sigma).ceil() {
                        requests.push(Request::CrossCov {
                            t,
                            sigma,
                            sigma0,
                            n,
                            phi: phi.clone(),
                        });
                    }
                }
            }
        }
    }
    if requests.is_empty() {
        return Err(RunError::Runtime(
            "no estimators requested: fill sigma_list and n_list".into(),
        ));
    }
    let estimates = run_requests_streaming(&ensemble_spec(cfg), &requests)?;
    let rows: Vec<_> = requests.into_iter().zip(estimates).collect();
    w.write_csv("estimates.csv", &estimates_csv(&rows))?;
    let summary = json!({
        "experiment": "correlations",
        "estimators": rows.len(),
        "replicates": cfg.replicates,
        "phi_harmonic": cfg.phi_harmonic,
        "files": w.files(),
    });
    w.write_json("summary.json", summary)?;
    println!(
        "correlations: {} estimators over {} replicates -> {}",
        rows.len(),
        cfg.replicates,
        out_dir.display()
    );
    Ok(0)
}

pub fn run_profile(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let mut w = writer(cfg, out_dir)?;
    let grid = midpoint_grid(cfg.profile_points);
    let mut entries = Vec::new();
    for &t in &cfg.checkpoints {
        let profile = score_profile(&cfg.params, t, &grid)?;
        let report = u_shape_analyze(&profile)?;
        let mut csv = String::from("sigma0,score\n");
        for (s0, v) in grid.iter().zip(&profile.scores) {
            csv.push_str(&format!("{s0},{v}\n"));
        }
        w.write_csv(&format!("profile_t{t}.csv"), &csv)?;

        let floor = profile
            .scores
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
            .min(0.0);
        let centered: Vec<(f64, f64)> = grid
            .iter()
            .zip(&profile.scores)
            .map(|(&s0, &v)| (s0, v - floor))
            .collect();
        let svg = svg_line_plot(
            &format!("centered retrieval correction, t = {t}"),
            "source position",
            "score - min score",
            &[(&format!("t={t}"), &centered)],
        );
        w.write_svg(&format!("profile_t{t}.svg"), &svg)?;

        entries.push(json!({
            "t": t,
            "argmin": report.argmin,
            "unique_interior_min": report.unique_interior_min,
            "boundary_slope": report.boundary_slope,
            "condition_ok": profile.condition_ok,
            "condition_margin": profile.condition_margin,
            "n_terms_used": profile.n_terms_used,
            "degenerate": report.degenerate,
        }));
    }
    let summary = json!({
        "experiment": "profile",
        "profile_points": cfg.profile_points,
        "profiles": entries,
        "files": w.files(),
    });
    w.write_json("summary.json", summary)?;
    println!(
        "profile: {} curves on {} points -> {}",
        cfg.checkpoints.len(),
        cfg.profile_points,
        out_dir.display()
    );
    Ok(0)
}

pub fn run_accuracy(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let mut w = writer(cfg, out_dir)?;
    if cfg.sigma0_list.is_empty() {
        return Err(RunError::Runtime("accuracy needs sigma0_list".into()));
    }
    let hard = cfg.initial_sampler().is_codeword_valued();
    let mut requests = Vec::new();
    for &t in &cfg.checkpoints {
        for &sigma0 in &cfg.sigma0_list {
            requests.push(Request::SoftAccuracy { t, sigma0 });
            if hard {
                requests.push(Request::HardAccuracy { t, sigma0 });
            }
        }
    }
    let estimates = run_requests_streaming(&ensemble_spec(cfg), &requests)?;
    let rows: Vec<_> = requests.into_iter().zip(estimates).collect();
    w.write_csv("estimates.csv", &estimates_csv(&rows))?;

    let mut predictions = Vec::new();
    for &t in &cfg.checkpoints {
        for &sigma0 in &cfg.sigma0_list {
            predictions.push(json!({
                "t": t,
                "sigma0": sigma0,
                "soft_accuracy_expansion": accuracy_expansion(&cfg.params, t, sigma0)?,
            }));
        }
    }
    let summary = json!({
        "experiment": "accuracy",
        "replicates": cfg.replicates,
        "hard_accuracy_included": hard,
        "note": if hard { "" } else { "hard accuracy skipped: initial data are not codeword-valued" },
        "expansion_predictions": predictions,
        "files": w.files(),
    });
    w.write_json("summary.json", summary)?;
    println!(
        "accuracy: {} estimators over {} replicates -> {}",
        rows.len(),
        cfg.replicates,
        out_dir.display()
    );
    Ok(0)
}

pub fn run_verify(cfg: &ExperimentConfig, out_dir: &Path, tier: Tier) -> Result<i32, RunError> {
    let mut w = writer(cfg, out_dir)?;
    let ids: Vec<usize> = match tier {
        Tier::Fast => FAST_IDS.to_vec(),
        Tier::Mc => MC_IDS.to_vec(),
        Tier::All => {
            let mut v = FAST_IDS.to_vec();
            v.extend_from_slice(&MC_IDS);
            v.sort();
            v
        }
    };
    let mut any_fail = false;
    let mut results = Vec::new();
    for id in ids {
        let report = run_criterion(id);
        println!("{}", report.render());
        any_fail |= report.verdict == Verdict::Fail;
        results.push(json!({
            "id": report.id,
            "name": report.name,
            "verdict": report.verdict.label(),
            "seconds": report.seconds,
            "details": report.details,
        }));
    }
    let summary = json!({
        "experiment": "verify",
        "tier": match tier { Tier::Fast => "fast", Tier::Mc => "mc", Tier::All => "all" },
        "criteria": results,
        "files": w.files(),
    });
    w.write_json("verify.json", summary)?;
    Ok(if any_fail { 1 } else { 0 })
}

pub fn dispatch(cfg: &ExperimentConfig, out_dir: &Path, tier: Tier) -> Result<i32, RunError> {
    match cfg.experiment {
        Experiment::Simulate => run_simulate(cfg, out_dir),
        Experiment::Meanfield => run_meanfield(cfg, out_dir),
        Experiment::Correlations => run_correlations(cfg, out_dir),
        Experiment::Profile => run_profile(cfg, out_dir),
        Experiment::Accuracy => run_accuracy(cfg, out_dir),
        Experiment::Verify => run_verify(cfg, out_dir, tier),
    }
}
