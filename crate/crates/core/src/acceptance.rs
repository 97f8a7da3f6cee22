//! The verification suite: ten numbered criteria covering the closed form,
//! the spectral solvers, the weight asymptotics, and the Monte Carlo
//! scalings, each with pinned tolerances.
//!
//! Deterministic criteria (1, 2, 3, 4, 5, 9) form the fast tier; the
//! ensemble-based ones (6, 7, 8, 10) form the mc tier. Monte Carlo
//! verdicts are three-valued — a comparison drowned in its own standard
//! error is reported `Inconclusive`, distinct from `Fail`.

use crate::closedform::{
    convexity_bound, convexity_coefficient, critical_time, g_closed, midpoint_grid,
    score_profile, score_s, u_shape_analyze,
};
use crate::error::Result;
use crate::interaction::a_coeff;
use crate::meanfield::{
    evolve_crosscorr, evolve_meanfield, volterra_g_numeric, SpectralField,
};
use crate::params::ModelParams;
use crate::sampler::InitialSampler;
use crate::sim::{DriftMethod, EnsembleSpec};
use crate::special::bessel_i_series;
use crate::stats::{run_requests_streaming, CorrelationEstimate, Request};
use crate::testfn::TestFunction;
use crate::{alibi, stats};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub verdict: Verdict,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {:2} [{}]: {} ({:.1}s)",
            self.id,
            self.name,
            self.verdict.label(),
            self.seconds
        )
    }

    pub fn render(&self) -> String {
        let mut s = self.summary_line();
        for d in &self.details {
            s.push_str("\n    ");
            s.push_str(d);
        }
        s
    }
}

pub const FAST_IDS: [usize; 6] = [1, 2, 3, 4, 5, 9];
pub const MC_IDS: [usize; 4] = [6, 7, 8, 10];

pub fn run_criterion(id: usize) -> CriterionReport {
    let start = Instant::now();
    let mut report = match id {
        1 => c1_closed_form_vs_volterra(),
        2 => c2_uniform_diagonalization(),
        3 => c3_u_shape(),
        4 => c4_convexity_certificate(),
        5 => c5_meanfield_stationarity_and_convergence(),
        6 => c6_chaos_rate(),
        7 => c7_correlation_limit(),
        8 => c8_covariance_scaling(),
        9 => c9_graphon_convergence(),
        10 => c10_soft_accuracy(),
        _ => panic!("unknown criterion {id}"),
    }
    .unwrap_or_else(|e| failed(id, "internal", vec![format!("error: {e}")]));
    report.seconds = start.elapsed().as_secs_f64();
    report
}

fn failed(id: usize, name: &'static str, details: Vec<String>) -> CriterionReport {
    CriterionReport {
        id,
        name,
        verdict: Verdict::Fail,
        details,
        seconds: 0.0,
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// The criterion-1/2 parameter matrix: a ∈ {I_1(1), 1}, λ ∈ {0, 1},
/// σ₀ ∈ {0.1, 0.3, 0.6}.
fn ab_matrix() -> Vec<(f64, f64, f64)> {
    let mut m = Vec::new();
    for &a in &[0.5651591f64, 1.0] {
        for &lam in &[0.0f64, 1.0] {
            for &s0 in &[0.1f64, 0.3, 0.6] {
                m.push((a, lam, s0));
            }
        }
    }
    m
}

fn c1_closed_form_vs_volterra() -> Result<CriterionReport> {
    let mut details = Vec::new();
    let mut worst: f64 = 0.0;
    for (a, lam, s0) in ab_matrix() {
        let vol = volterra_g_numeric(a, lam, s0, 2048, 1e-3, 1.0)?;
        let gc = g_closed(a, 1.0, 1.0, vol.sigma0_snapped, lam)?;
        let rel = (gc - vol.g_at_one).abs() / gc.abs().max(1e-8);
        worst = worst.max(rel);
        if rel > 1e-4 {
            details.push(format!(
                "a={a:.7} lambda={lam} sigma0={s0}: rel error {rel:.3e} > 1e-4"
            ));
        }
    }
    details.push(format!("max relative error {worst:.3e} (tolerance 1e-4)"));
    Ok(CriterionReport {
        id: 1,
        name: "closed form vs volterra oracle",
        verdict: if worst <= 1e-4 { Verdict::Pass } else { Verdict::Fail },
        details,
        seconds: 0.0,
    })
}

/// β realizing a given a₁ = I_1(β), by bisection.
fn beta_for_a1(a1: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_i_series(1, mid) < a1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c2_uniform_diagonalization() -> Result<CriterionReport> {
    let (s, n_max, dt) = (512usize, 3usize, 1e-3);
    let phi = TestFunction::harmonic(1);
    let mut worst_rel: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    let mut details = Vec::new();
    for (a, lam, s0) in ab_matrix() {
        let beta = beta_for_a1(a);
        let params = ModelParams::new(beta, lam, 64, 8, 1.0)?;
        let f0 = SpectralField::uniform(s, n_max);
        let ev = evolve_crosscorr(&f0, &phi, &params, s0, dt, 1.0)?;
        let a1 = a_coeff(1, beta);
        let i0 = (ev.sigma0_snapped * s as f64).round() as usize;
        let mut rel_here: f64 = 0.0;
        for i in i0..s {
            let sigma = (i as f64 + 0.5) / s as f64;
            let truth = g_closed(a1, 1.0, sigma, ev.sigma0_snapped, lam)?;
            let c = ev.c.get(i, 1);
            let rel = (c.re - truth).abs().max(c.im.abs()) / truth.abs().max(1e-8);
            rel_here = rel_here.max(rel);
        }
        worst_rel = worst_rel.max(rel_here);
        for i in 0..s {
            for n in -(n_max as i64)..=n_max as i64 {
                if n != 1 {
                    worst_off = worst_off.max(ev.c.get(i, n).norm());
                }
            }
        }
        if rel_here > 1e-4 {
            details.push(format!("a={a:.7} lambda={lam} sigma0={s0}: rel {rel_here:.3e}"));
        }
    }
    details.push(format!(
        "max relative error at n=1: {worst_rel:.3e} (tol 1e-4); max off-diagonal: {worst_off:.3e} (tol 1e-8)"
    ));
    Ok(CriterionReport {
        id: 2,
        name: "uniform-case correlation diagonalization",
        verdict: if worst_rel <= 1e-4 && worst_off <= 1e-8 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        details,
        seconds: 0.0,
    })
}

/// Quadrature evaluation of I_n(β), independent of the series used by the
/// implementation: (1/π)∫_0^π e^{β cos θ} cos(nθ) dθ by Simpson panels.
fn bessel_quadrature(n: u32, beta: f64) -> f64 {
    let panels = 1 << 14;
    let h = PI / panels as f64;
    let f = |t: f64| (beta * t.cos()).exp() * (n as f64 * t).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0 / PI
}

fn c3_u_shape() -> Result<CriterionReport> {
    let params = ModelParams::new(1.0, 1.0, 64, 8, 4.0)?;
    let mut details = Vec::new();
    let mut ok = true;

    // the smallness threshold time, certified against the quadrature oracle
    let sup_quad = (1..=16)
        .map(|n| (n * n) as f64 * bessel_quadrature(n as u32, 1.0))
        .fold(f64::MIN, f64::max);
    let t_star_quad = convexity_bound().min(2.0 * (1.0 - (-1.0f64).exp())) / sup_quad;
    let t_star = critical_time(1.0, 1.0, 16)?;
    if (t_star - t_star_quad).abs() > 1e-9 || (t_star - 2.237).abs() > 5e-3 {
        ok = false;
        details.push(format!("threshold time {t_star} vs quadrature {t_star_quad}"));
    }
    details.push(format!("threshold time t* = {t_star:.4} (expected ~2.237)"));

    for t in [0.5, 1.0, 2.0] {
        let profile = score_profile(&params, t, &midpoint_grid(512))?;
        let report = u_shape_analyze(&profile)?;
        let lo = score_s(&params, t, 2.0f64.powi(-10))?.value;
        let hi = score_s(&params, t, 2.0f64.powi(-4))?.value;
        let primacy_factor = lo / hi;
        // the divergence itself: scores strictly increase along σ₀ = 2^-k
        let dyadic: Vec<f64> = (4..=10)
            .map(|k| score_s(&params, t, 2.0f64.powi(-k)).map(|s| s.value))
            .collect::<Result<_>>()?;
        let dyadic_increasing = dyadic.windows(2).all(|w| w[1] > w[0]);
        let this_ok = profile.condition_ok
            && report.unique_interior_min
            && report.recency_slope_positive
            && primacy_factor >= 2.0;
        ok &= this_ok;
        details.push(format!(
            "t={t}: minima={} argmin={:.3} boundary slope={:.3} primacy factor={:.2} \
             dyadic increase={dyadic_increasing} {}",
            report.n_local_minima,
            report.argmin.unwrap_or(f64::NAN),
            report.boundary_slope,
            primacy_factor,
            if this_ok { "ok" } else { "VIOLATED (factor-2 proxy)" }
        ));
    }
    Ok(CriterionReport {
        id: 3,
        name: "u-shaped retrieval profile",
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        details,
        seconds: 0.0,
    })
}

fn c4_convexity_certificate() -> Result<CriterionReport> {
    let bound = convexity_bound();
    let mut min_coeff = f64::INFINITY;
    for i in 1..=100 {
        let c = bound * i as f64 / 100.0;
        for k in 0..=64 {
            min_coeff = min_coeff.min(convexity_coefficient(c, k));
        }
    }
    let beyond = convexity_coefficient(bound + 0.01, 0);
    let ok = min_coeff >= -1e-12 && beyond < 0.0;
    Ok(CriterionReport {
        id: 4,
        name: "convexity certificate",
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        details: vec![format!(
            "min coefficient on (0, 3-sqrt(3)] grid: {min_coeff:.3e} (tol -1e-12); k=0 coefficient at bound+0.01: {beyond:.4e} (< 0 required)"
        )],
        seconds: 0.0,
    })
}

fn c5_meanfield_stationarity_and_convergence() -> Result<CriterionReport> {
    let params = ModelParams::new(1.0, 1.0, 64, 8, 2.0)?;
    let mut details = Vec::new();

    let uniform = SpectralField::uniform(256, 16);
    let ev = evolve_meanfield(&uniform, &params, 1e-3, 2.0)?;
    let drift = ev.field.sup_difference(&uniform);
    details.push(format!("uniform law drift at t=2: {drift:.3e} (tol 1e-10)"));

    let init = |sigma: f64, n: i64| match n {
        0 => Complex64::new(1.0, 0.0),
        1 | -1 => Complex64::new(0.3 * sigma, 0.0),
        _ => Complex64::new(0.0, 0.0),
    };
    let coarse =
        evolve_meanfield(&SpectralField::from_fn(256, 16, true, init), &params, 1e-3, 1.0)?;
    let fine =
        evolve_meanfield(&SpectralField::from_fn(512, 32, true, init), &params, 1e-3, 1.0)?;
    // compare at the coarse midpoints; 4-point interpolation of the fine
    // grid contributes O(S^-4), negligible against the 1e-6 tolerance
    let mut sup: f64 = 0.0;
    for i in 0..256 {
        let sigma = (i as f64 + 0.5) / 256.0;
        for n in -16..=16i64 {
            let d = (coarse.field.get(i, n) - interpolate_row(&fine.field, sigma, n)).norm();
            sup = sup.max(d);
        }
    }
    details.push(format!(
        "self-convergence (256,16)->(512,32) sup difference: {sup:.3e} (tol 1e-6)"
    ));
    let ok = drift <= 1e-10 && sup <= 1e-6;
    Ok(CriterionReport {
        id: 5,
        name: "mean-field stationarity and self-convergence",
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        details,
        seconds: 0.0,
    })
}

/// 4-point Lagrange interpolation of a field row in σ.
fn interpolate_row(f: &SpectralField, sigma: f64, n: i64) -> Complex64 {
    let s = f.s() as f64;
    let x = sigma * s - 0.5;
    let j = (x.floor() as i64).clamp(1, f.s() as i64 - 3) as usize;
    let t = x - j as f64;
    let c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    f.get(j - 1, n) * c0 + f.get(j, n) * c1 + f.get(j + 1, n) * c2 + f.get(j + 2, n) * c3
}

/// dt used by the ensemble criteria; the RK4 error at this step is three
/// orders of magnitude below the Monte Carlo standard errors.
const MC_DT: f64 = 0.02;

fn c6_chaos_rate() -> Result<CriterionReport> {
    let mut details = Vec::new();
    let mut lns = Vec::new();
    let mut lnv = Vec::new();
    let mut any_inconclusive = false;
    for &n in &[64usize, 128, 256, 512] {
        let spec = EnsembleSpec {
            params: ModelParams::new(1.0, 1.0, n, 8, 1.0)?,
            sampler: InitialSampler::iid_uniform(601),
            dt: MC_DT,
            checkpoints: vec![1.0],
            replicates: 2000,
            method: DriftMethod::Spectral,
        };
        let est = run_requests_streaming(&spec, &[Request::ModeFluctuation { t: 1.0, n: 1 }])?;
        let (v, se) = (est[0].value.re, est[0].std_error_re);
        let conclusive = se <= v / 3.0;
        any_inconclusive |= !conclusive;
        details.push(format!(
            "N={n:4}: fluctuation {v:.5} +- {se:.5}{}",
            if conclusive { "" } else { " [inconclusive point]" }
        ));
        lns.push((n as f64).ln());
        lnv.push(v.ln());
    }
    let slope = fit_slope(&lns, &lnv);
    details.push(format!("fitted log-log slope {slope:.3} (require <= -0.4)"));
    let verdict = if slope <= -0.4 {
        Verdict::Pass
    } else if any_inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    Ok(CriterionReport {
        id: 6,
        name: "propagation-of-chaos rate",
        verdict,
        details,
        seconds: 0.0,
    })
}

/// The N = 64, R = 1e6 ensemble shared by criteria 7 and 10: three
/// rescaled source covariances plus the nine-point soft-accuracy profile
/// at t ∈ {0, 1}, all computed in one streaming pass.
struct SharedRun64 {
    crosscov: Vec<(f64, CorrelationEstimate)>,
    soft_t1: Vec<(f64, CorrelationEstimate)>,
    soft_t0: Vec<(f64, CorrelationEstimate)>,
}

static SHARED64: OnceLock<std::result::Result<SharedRun64, String>> = OnceLock::new();

fn shared_run64() -> Result<&'static SharedRun64> {
    SHARED64
        .get_or_init(|| {
            let spec = EnsembleSpec {
                params: ModelParams::new(1.0, 1.0, 64, 8, 1.0).unwrap(),
                sampler: InitialSampler::iid_uniform(4217),
                dt: MC_DT,
                checkpoints: vec![0.0, 1.0],
                replicates: 1_000_000,
                method: DriftMethod::Spectral,
            };
            let sigma0_cov = [0.25, 0.5, 0.75];
            let sigma0_soft: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
            let mut reqs = Vec::new();
            for &s0 in &sigma0_cov {
                reqs.push(Request::CrossCov {
                    t: 1.0,
                    sigma: 1.0,
                    sigma0: s0,
                    n: 1,
                    phi: TestFunction::harmonic(1),
                });
            }
            for &s0 in &sigma0_soft {
                reqs.push(Request::SoftAccuracy { t: 1.0, sigma0: s0 });
            }
            for &s0 in &sigma0_soft {
                reqs.push(Request::SoftAccuracy { t: 0.0, sigma0: s0 });
            }
            let est = run_requests_streaming(&spec, &reqs).map_err(|e| e.to_string())?;
            let mut it = est.into_iter();
            let crosscov = sigma0_cov.iter().map(|&s| (s, it.next().unwrap())).collect();
            let soft_t1 = sigma0_soft.iter().map(|&s| (s, it.next().unwrap())).collect();
            let soft_t0 = sigma0_soft.iter().map(|&s| (s, it.next().unwrap())).collect();
            Ok(SharedRun64 {
                crosscov,
                soft_t1,
                soft_t0,
            })
        })
        .as_ref()
        .map_err(|e| crate::Error::Config(e.clone()))
}

fn c7_correlation_limit() -> Result<CriterionReport> {
    let a1 = a_coeff(1, 1.0);
    let shared = shared_run64()?;
    let mut details = Vec::new();
    let mut ok = true;

    for (s0, est) in &shared.crosscov {
        // the source index is exact at N = 64 for these σ₀
        let truth = g_closed(a1, 1.0, 1.0, *s0, 1.0)?;
        let tol_re = 3.0 * est.std_error_re + 0.2 * truth.abs();
        let tol_im = 3.0 * est.std_error_im + 0.2 * truth.abs();
        let ok_here = (est.value.re - truth).abs() <= tol_re && est.value.im.abs() <= tol_im;
        ok &= ok_here;
        details.push(format!(
            "sigma0={s0}: N*Cov = {:.4}{:+.4}i +- ({:.4},{:.4}), limit {truth:.4} {}",
            est.value.re,
            est.value.im,
            est.std_error_re,
            est.std_error_im,
            if ok_here { "ok" } else { "VIOLATED" }
        ));
    }

    // finite-size bias at σ₀ = 0.5 shrinks with N
    let mut biases = Vec::new();
    for &n in &[32usize, 64, 128] {
        let est = if n == 64 {
            shared.crosscov[1].1.clone()
        } else {
            let spec = EnsembleSpec {
                params: ModelParams::new(1.0, 1.0, n, 8, 1.0)?,
                sampler: InitialSampler::iid_uniform(4217 + n as u64),
                dt: MC_DT,
                checkpoints: vec![0.0, 1.0],
                replicates: 1_000_000,
                method: DriftMethod::Spectral,
            };
            run_requests_streaming(
                &spec,
                &[Request::CrossCov {
                    t: 1.0,
                    sigma: 1.0,
                    sigma0: 0.5,
                    n: 1,
                    phi: TestFunction::harmonic(1),
                }],
            )?
            .pop()
            .unwrap()
        };
        let truth = g_closed(a1, 1.0, 1.0, 0.5, 1.0)?;
        let bias = (est.value - Complex64::new(truth, 0.0)).norm();
        details.push(format!(
            "N={n:3}: bias |estimate - limit| = {bias:.4} (se {:.4})",
            est.std_error()
        ));
        biases.push((bias, est.std_error()));
    }
    let monotone = biases.windows(2).all(|w| w[1].0 < w[0].0);
    let within_noise = biases
        .windows(2)
        .all(|w| w[1].0 < w[0].0 + 3.0 * (w[0].1 + w[1].1));
    details.push(format!(
        "bias sequence monotone: {monotone}; within noise: {within_noise}"
    ));
    let verdict = if ok && monotone {
        Verdict::Pass
    } else if ok && within_noise {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    Ok(CriterionReport {
        id: 7,
        name: "correlation limit, monte carlo",
        verdict,
        details,
        seconds: 0.0,
    })
}

fn c8_covariance_scaling() -> Result<CriterionReport> {
    let n_tokens = 512usize;
    let spec = EnsembleSpec {
        params: ModelParams::new(1.0, 1.0, n_tokens, 8, 1.0)?,
        sampler: InitialSampler::iid_uniform(801),
        dt: MC_DT,
        checkpoints: vec![0.0, 1.0],
        replicates: 200_000,
        method: DriftMethod::Spectral,
    };
    let pair_indices = [32usize, 64, 128, 256];
    let mut reqs: Vec<Request> = pair_indices
        .iter()
        .map(|&i| Request::PairCov {
            a: stats::ObsSpec {
                t: 1.0,
                sigma: i as f64 / n_tokens as f64,
                phi: TestFunction::harmonic(1),
            },
            b: stats::ObsSpec {
                t: 1.0,
                sigma: i as f64 / (2 * n_tokens) as f64,
                phi: TestFunction::harmonic(-1),
            },
        })
        .collect();
    // third-cumulant triples at t = 0, distinct positions
    let triple = |s1: f64, s2: f64, s3: f64| Request::Cumulant3 {
        specs: [
            stats::ObsSpec {
                t: 0.0,
                sigma: s1,
                phi: TestFunction::harmonic(1),
            },
            stats::ObsSpec {
                t: 0.0,
                sigma: s2,
                phi: TestFunction::harmonic(1),
            },
            stats::ObsSpec {
                t: 0.0,
                sigma: s3,
                phi: TestFunction::harmonic(1),
            },
        ],
    };
    reqs.push(triple(0.125, 0.25, 0.5));
    reqs.push(triple(0.25, 0.5, 0.75));

    let est = run_requests_streaming(&spec, &reqs)?;
    let mut details = Vec::new();
    let mut lns = Vec::new();
    let mut lnc = Vec::new();
    for (k, &i) in pair_indices.iter().enumerate() {
        let v = est[k].value.norm();
        details.push(format!(
            "i={i:3}, j={}: |Cov| = {v:.5} +- {:.5}",
            i / 2,
            est[k].std_error()
        ));
        lns.push((i as f64).ln());
        lnc.push(v.ln());
    }
    let slope = fit_slope(&lns, &lnc);
    let slope_ok = (-1.35..=-0.65).contains(&slope);
    details.push(format!("fitted slope {slope:.3} (window [-1.35, -0.65])"));

    let mut cumulant_ok = true;
    for e in &est[4..] {
        let ok = e.value.re.abs() <= 3.0 * e.std_error_re.max(1e-12)
            && e.value.im.abs() <= 3.0 * e.std_error_im.max(1e-12);
        cumulant_ok &= ok;
        details.push(format!(
            "t=0 third cumulant: {:.2e}{:+.2e}i +- ({:.2e},{:.2e}) {}",
            e.value.re,
            e.value.im,
            e.std_error_re,
            e.std_error_im,
            if ok { "ok" } else { "VIOLATED" }
        ));
    }
    Ok(CriterionReport {
        id: 8,
        name: "same-time covariance scaling",
        verdict: if slope_ok && cumulant_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        details,
        seconds: 0.0,
    })
}

fn c9_graphon_convergence() -> Result<CriterionReport> {
    let mut details = Vec::new();
    let mut ok = true;
    for &sigma in &[0.25f64, 1.0] {
        for &lam in &[0.0f64, 1.0] {
            let mut prev: Option<f64> = None;
            for p in 6..=10 {
                let n = 1usize << p;
                let params = ModelParams::new(1.0, lam, n, 8, 1.0)?;
                let err = alibi::graphon_l1_error(sigma, &params)?;
                if let Some(e_prev) = prev {
                    let ratio = e_prev / err;
                    if !(1.6..=2.4).contains(&ratio) {
                        ok = false;
                        details.push(format!(
                            "sigma={sigma}, lambda={lam}, N={}->{n}: ratio {ratio:.3} outside [1.6, 2.4]",
                            n / 2
                        ));
                    }
                }
                prev = Some(err);
            }
            details.push(format!(
                "sigma={sigma}, lambda={lam}: L1 error at N=1024 is {:.3e}",
                prev.unwrap()
            ));
        }
    }
    Ok(CriterionReport {
        id: 9,
        name: "graphon convergence rate",
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        details,
        seconds: 0.0,
    })
}

fn c10_soft_accuracy() -> Result<CriterionReport> {
    let shared = shared_run64()?;
    let params = ModelParams::new(1.0, 1.0, 64, 8, 1.0)?;
    let m = 8.0f64;
    let n = 64.0f64;
    let baseline = (PI / 2.0).sqrt() / m;
    let mut details = Vec::new();

    // centered profile against the closed-form score, at the effective
    // source positions ⌈Nσ₀⌉/N
    let mut centered = Vec::new();
    let mut predicted = Vec::new();
    for (s0, est) in &shared.soft_t1 {
        let c = (est.value.re - baseline) * m * n / (2.0 * PI).sqrt();
        let eff = (n * s0).ceil() / n;
        let truth = score_s(&params, 1.0, eff)?.value;
        centered.push(c);
        predicted.push(truth);
        details.push(format!(
            "sigma0={s0:.1}: centered {c:.3} (se {:.3}), score {truth:.3}",
            est.std_error_re * m * n / (2.0 * PI).sqrt()
        ));
    }
    let rho = spearman(&centered, &predicted);
    details.push(format!("rank correlation {rho:.3} (require >= 0.8)"));

    // zero-time calibration: the soft profile is flat at √(π/2)/M
    let mean_t0: f64 =
        shared.soft_t0.iter().map(|(_, e)| e.value.re).sum::<f64>() / shared.soft_t0.len() as f64;
    let max_se = shared
        .soft_t0
        .iter()
        .map(|(_, e)| e.std_error_re)
        .fold(0.0f64, f64::max);
    let calib_ok = (mean_t0 - baseline).abs() <= 3.0 * max_se;
    details.push(format!(
        "t=0 profile mean {mean_t0:.6} vs sqrt(pi/2)/M = {baseline:.6} (3 se = {:.1e}) {}",
        3.0 * max_se,
        if calib_ok { "ok" } else { "VIOLATED" }
    ));

    // informational: the t=1 mean sits above the baseline by the
    // predicted O(1/N) correction
    let mean_t1: f64 =
        shared.soft_t1.iter().map(|(_, e)| e.value.re).sum::<f64>() / shared.soft_t1.len() as f64;
    let predicted_mean =
        baseline + (2.0 * PI).sqrt() / (m * n) * predicted.iter().sum::<f64>() / 9.0;
    details.push(format!(
        "t=1 profile mean {mean_t1:.6}, expansion prediction {predicted_mean:.6}"
    ));

    let ok = rho >= 0.8 && calib_ok;
    Ok(CriterionReport {
        id: 10,
        name: "end-to-end soft accuracy",
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        details,
        seconds: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_and_rank_correlation() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((fit_slope(&xs, &ys) - 2.0).abs() < 1e-12);
        assert!((spearman(&xs, &ys) - 1.0).abs() < 1e-12);
        let rev = [8.0, 6.0, 4.0, 2.0];
        assert!((spearman(&xs, &rev) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_bisection_inverts_a1() {
        let beta = beta_for_a1(0.5651591039924851);
        assert!((beta - 1.0).abs() < 1e-7);
        let beta = beta_for_a1(1.0);
        assert!((bessel_i_series(1, beta) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_bessel_agrees_with_series() {
        for n in 0..6u32 {
            assert!((bessel_quadrature(n, 1.0) - bessel_i_series(n, 1.0)).abs() < 1e-11);
        }
    }
}
