//! Monte Carlo estimators over trajectory ensembles.
//!
//! Estimators are one-pass folds over replicates. Replicates are split into
//! fixed index ranges (leaves); leaves are processed in parallel and merged
//! along a fixed pairwise tree, so results do not depend on thread count.
//! Covariance/cumulant standard errors come from the spread of per-leaf
//! estimates (batch means); plain means carry the classical sd/√R error.

mod accum;
mod soft;

pub use soft::{soft_kernel, soft_kernel_direct, soft_kernel_fourier};

use crate::error::{Error, Result};
use crate::sim::{EnsembleSpec, ReplicateData, TrajectoryEnsemble};
use crate::testfn::TestFunction;
use crate::torus::decode_nearest;
use accum::{MeanAcc, TripleAcc};
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Mode,
    AutoCov,
    CrossCov,
    Cumulant3,
    Accuracy,
    ModeFluctuation,
    PairCov,
}

impl EstimateKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimateKind::Mode => "mode",
            EstimateKind::AutoCov => "autocov",
            EstimateKind::CrossCov => "crosscov",
            EstimateKind::Cumulant3 => "cumulant3",
            EstimateKind::Accuracy => "accuracy",
            EstimateKind::ModeFluctuation => "mode_fluct",
            EstimateKind::PairCov => "paircov",
        }
    }
}

/// A Monte Carlo estimate with componentwise standard errors.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub kind: EstimateKind,
    pub value: Complex64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    pub replicates: usize,
}

impl CorrelationEstimate {
    /// Scalar summary of the componentwise errors.
    pub fn std_error(&self) -> f64 {
        self.std_error_re.hypot(self.std_error_im)
    }
}

/// One observable φ(θ_{⌈Nσ⌉}(t)).
#[derive(Debug, Clone)]
pub struct ObsSpec {
    pub t: f64,
    pub sigma: f64,
    pub phi: TestFunction,
}

/// Estimator requests, resolved against an ensemble's checkpoints.
#[derive(Debug, Clone)]
pub enum Request {
    /// f̂_N(t, σ, n) = E[e^{-inθ_{⌈Nσ⌉}(t)}].
    Mode { t: f64, sigma: f64, n: i64 },
    /// Cov(e^{-inθ_{⌈Nσ⌉}(t)}, φ(θ⁰_{⌈Nσ⌉})).
    AutoCov {
        t: f64,
        sigma: f64,
        n: i64,
        phi: TestFunction,
    },
    /// N · Cov(e^{-inθ_{⌈Nσ⌉}(t)}, φ(θ⁰_{⌈Nσ₀⌉})), σ₀ strictly earlier.
    CrossCov {
        t: f64,
        sigma: f64,
        sigma0: f64,
        n: i64,
        phi: TestFunction,
    },
    /// Plug-in third joint cumulant of three observables.
    Cumulant3 { specs: [ObsSpec; 3] },
    /// Cov(φ_a(θ_{i_a}(t_a)), φ_b(θ_{i_b}(t_b))) without the N factor.
    PairCov { a: ObsSpec, b: ObsSpec },
    /// Fraction of replicates whose terminal token decodes to the source
    /// codeword at ⌈Nσ₀⌉.
    HardAccuracy { t: f64, sigma0: f64 },
    /// Mean wrapped-Gaussian score of θ_N(t) against θ⁰_{⌈Nσ₀⌉}.
    SoftAccuracy { t: f64, sigma0: f64 },
    /// √E[ |N⁻¹ Σ_j e^{-inθ_j(t)} - δ_{n,0}|² ]: the empirical-measure
    /// fluctuation of one Fourier mode.
    ModeFluctuation { t: f64, n: i64 },
}

fn token_index(n_tokens: usize, sigma: f64) -> Result<usize> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Domain(format!("sigma must be in (0,1], got {sigma}")));
    }
    Ok((((n_tokens as f64) * sigma).ceil() as usize).clamp(1, n_tokens))
}

#[inline]
fn character(theta: f64, n: i64) -> Complex64 {
    // e^{-inθ}
    let (s, c) = (-(n as f64) * theta).sin_cos();
    Complex64::new(c, s)
}

/// A value extracted from one replicate.
#[derive(Debug, Clone)]
enum Channel {
    /// e^{-inθ_idx(t_cp)}; cp = usize::MAX means initial state.
    Character { cp: usize, idx: usize, n: i64 },
    /// φ(θ⁰_idx).
    InitialPhi { idx: usize, phi: TestFunction },
    /// φ(θ_idx(t_cp)).
    StatePhi { cp: usize, idx: usize, phi: TestFunction },
    Zero,
}

impl Channel {
    fn eval(&self, rep: &ReplicateData) -> Complex64 {
        match self {
            Channel::Character { cp, idx, n } => character(rep.states[*cp][*idx - 1], *n),
            Channel::InitialPhi { idx, phi } => phi.eval(rep.initial[*idx - 1]),
            Channel::StatePhi { cp, idx, phi } => phi.eval(rep.states[*cp][*idx - 1]),
            Channel::Zero => Complex64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Mean {
        kind: EstimateKind,
        ch: Channel,
    },
    Triple {
        kind: EstimateKind,
        x: Channel,
        y: Channel,
        z: Channel,
        /// scale applied to the final value (N for cross-correlations)
        scale: f64,
        /// true: covariance of (x, y); false: third cumulant of (x, y, z)
        cov: bool,
    },
    Count {
        cp: usize,
        i_src: usize,
        vocab: usize,
    },
    Soft {
        cp: usize,
        i_src: usize,
        vocab: usize,
    },
    Fluct {
        cp: usize,
        n: i64,
    },
}

#[derive(Debug, Clone)]
enum AccState {
    Mean(MeanAcc),
    Triple { acc: TripleAcc, leaf: MeanAcc },
    Count { hits: u64, total: u64 },
}

impl Prepared {
    fn new_state(&self) -> AccState {
        match self {
            Prepared::Mean { .. } | Prepared::Soft { .. } | Prepared::Fluct { .. } => {
                AccState::Mean(MeanAcc::new())
            }
            Prepared::Triple { .. } => AccState::Triple {
                acc: TripleAcc::new(),
                leaf: MeanAcc::new(),
            },
            Prepared::Count { .. } => AccState::Count { hits: 0, total: 0 },
        }
    }

    fn update(&self, state: &mut AccState, rep: &ReplicateData) {
        match (self, state) {
            (Prepared::Mean { ch, .. }, AccState::Mean(acc)) => acc.push(ch.eval(rep)),
            (Prepared::Soft { cp, i_src, vocab }, AccState::Mean(acc)) => {
                let n_tokens = rep.initial.len();
                let delta = rep.states[*cp][n_tokens - 1] - rep.initial[*i_src - 1];
                acc.push(Complex64::new(soft_kernel(delta, *vocab), 0.0));
            }
            (Prepared::Fluct { cp, n }, AccState::Mean(acc)) => {
                let state = &rep.states[*cp];
                let (mut re, mut im) = (0.0, 0.0);
                for &theta in state {
                    let (s, c) = (-(*n as f64) * theta).sin_cos();
                    re += c;
                    im += s;
                }
                let inv = 1.0 / state.len() as f64;
                re *= inv;
                im *= inv;
                if *n == 0 {
                    re -= 1.0;
                }
                acc.push(Complex64::new(re * re + im * im, 0.0));
            }
            (Prepared::Triple { x, y, z, .. }, AccState::Triple { acc, .. }) => {
                acc.push(x.eval(rep), y.eval(rep), z.eval(rep));
            }
            (Prepared::Count { cp, i_src, vocab }, AccState::Count { hits, total }) => {
                let n_tokens = rep.initial.len();
                let src = decode_nearest(rep.initial[*i_src - 1], *vocab);
                let got = decode_nearest(rep.states[*cp][n_tokens - 1], *vocab);
                *total += 1;
                if src == got {
                    *hits += 1;
                }
            }
            _ => unreachable!("accumulator state mismatch"),
        }
    }

    /// Called once at the end of each leaf range.
    fn close_leaf(&self, state: &mut AccState) {
        if let (Prepared::Triple { cov, .. }, AccState::Triple { acc, leaf }) = (self, state) {
            let est = if *cov { acc.covariance_xy() } else { acc.cumulant3() };
            leaf.push(est);
            // the per-leaf moments are merged later; reset only the leaf tag
        }
    }

    fn merge(&self, a: &mut AccState, b: &AccState) {
        match (a, b) {
            (AccState::Mean(x), AccState::Mean(y)) => x.merge(y),
            (
                AccState::Triple { acc: xa, leaf: la },
                AccState::Triple { acc: xb, leaf: lb },
            ) => {
                xa.merge(xb);
                la.merge(lb);
            }
            (
                AccState::Count { hits: ha, total: ta },
                AccState::Count { hits: hb, total: tb },
            ) => {
                *ha += hb;
                *ta += tb;
            }
            _ => unreachable!("accumulator state mismatch"),
        }
    }

    fn finalize(&self, state: &AccState, replicates: usize) -> CorrelationEstimate {
        match (self, state) {
            (Prepared::Mean { kind: _, .. } | Prepared::Soft { .. }, AccState::Mean(acc)) => {
                let kind = if let Prepared::Mean { kind, .. } = self {
                    *kind
                } else {
                    EstimateKind::Accuracy
                };
                let (se_re, se_im) = acc.std_error();
                CorrelationEstimate {
                    kind,
                    value: acc.mean,
                    std_error_re: se_re,
                    std_error_im: se_im,
                    replicates,
                }
            }
            (Prepared::Fluct { .. }, AccState::Mean(acc)) => {
                // value = √(mean of |m|²); delta-method standard error
                let v = acc.mean.re.max(0.0);
                let root = v.sqrt();
                let (se_re, _) = acc.std_error();
                let se = if root > 0.0 { se_re / (2.0 * root) } else { se_re };
                CorrelationEstimate {
                    kind: EstimateKind::ModeFluctuation,
                    value: Complex64::new(root, 0.0),
                    std_error_re: se,
                    std_error_im: 0.0,
                    replicates,
                }
            }
            (
                Prepared::Triple { kind, scale, cov, .. },
                AccState::Triple { acc, leaf },
            ) => {
                let raw = if *cov { acc.covariance_xy() } else { acc.cumulant3() };
                let (se_re, se_im) = leaf.std_error();
                CorrelationEstimate {
                    kind: *kind,
                    value: raw * *scale,
                    std_error_re: se_re * *scale,
                    std_error_im: se_im * *scale,
                    replicates,
                }
            }
            (Prepared::Count { .. }, AccState::Count { hits, total }) => {
                let p = *hits as f64 / (*total).max(1) as f64;
                CorrelationEstimate {
                    kind: EstimateKind::Accuracy,
                    value: Complex64::new(p, 0.0),
                    std_error_re: wilson_halfwidth(*hits, *total),
                    std_error_im: 0.0,
                    replicates,
                }
            }
            _ => unreachable!("accumulator state mismatch"),
        }
    }
}

/// Wilson score interval halfwidth at z = 1.
pub fn wilson_halfwidth(hits: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let p = hits as f64 / n;
    let z2 = 1.0;
    (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

fn prepare(spec: &EnsembleSpec, req: &Request) -> Result<Prepared> {
    let n_tokens = spec.params.n_tokens;
    let needs_two = |r: usize| -> Result<()> {
        if r < 2 {
            Err(Error::InsufficientReplicates(format!(
                "covariance estimators need >= 2 replicates, got {r}"
            )))
        } else {
            Ok(())
        }
    };
    match req {
        Request::Mode { t, sigma, n } => Ok(Prepared::Mean {
            kind: EstimateKind::Mode,
            ch: Channel::Character {
                cp: spec.checkpoint_index(*t)?,
                idx: token_index(n_tokens, *sigma)?,
                n: *n,
            },
        }),
        Request::AutoCov { t, sigma, n, phi } => {
            needs_two(spec.replicates)?;
            let idx = token_index(n_tokens, *sigma)?;
            Ok(Prepared::Triple {
                kind: EstimateKind::AutoCov,
                x: Channel::Character {
                    cp: spec.checkpoint_index(*t)?,
                    idx,
                    n: *n,
                },
                y: Channel::InitialPhi {
                    idx,
                    phi: phi.clone(),
                },
                z: Channel::Zero,
                scale: 1.0,
                cov: true,
            })
        }
        Request::CrossCov {
            t,
            sigma,
            sigma0,
            n,
            phi,
        } => {
            needs_two(spec.replicates)?;
            let idx = token_index(n_tokens, *sigma)?;
            let idx0 = token_index(n_tokens, *sigma0)?;
            if idx0 >= idx {
                return Err(Error::Order(format!(
                    "source index {idx0} must precede observation index {idx}"
                )));
            }
            Ok(Prepared::Triple {
                kind: EstimateKind::CrossCov,
                x: Channel::Character {
                    cp: spec.checkpoint_index(*t)?,
                    idx,
                    n: *n,
                },
                y: Channel::InitialPhi {
                    idx: idx0,
                    phi: phi.clone(),
                },
                z: Channel::Zero,
                scale: n_tokens as f64,
                cov: true,
            })
        }
        Request::Cumulant3 { specs } => {
            needs_two(spec.replicates)?;
            let mut chans = Vec::with_capacity(3);
            for s in specs {
                chans.push(Channel::StatePhi {
                    cp: spec.checkpoint_index(s.t)?,
                    idx: token_index(n_tokens, s.sigma)?,
                    phi: s.phi.clone(),
                });
            }
            let z = chans.pop().unwrap();
            let y = chans.pop().unwrap();
            let x = chans.pop().unwrap();
            Ok(Prepared::Triple {
                kind: EstimateKind::Cumulant3,
                x,
                y,
                z,
                scale: 1.0,
                cov: false,
            })
        }
        Request::PairCov { a, b } => {
            needs_two(spec.replicates)?;
            Ok(Prepared::Triple {
                kind: EstimateKind::PairCov,
                x: Channel::StatePhi {
                    cp: spec.checkpoint_index(a.t)?,
                    idx: token_index(n_tokens, a.sigma)?,
                    phi: a.phi.clone(),
                },
                y: Channel::StatePhi {
                    cp: spec.checkpoint_index(b.t)?,
                    idx: token_index(n_tokens, b.sigma)?,
                    phi: b.phi.clone(),
                },
                z: Channel::Zero,
                scale: 1.0,
                cov: true,
            })
        }
        Request::HardAccuracy { t, sigma0 } => {
            if !(*sigma0 > 0.0 && *sigma0 < 1.0) {
                return Err(Error::Domain(format!(
                    "sigma0 must be in (0,1), got {sigma0}"
                )));
            }
            if !spec.sampler.is_codeword_valued() {
                return Err(Error::Sampler(
                    "hard accuracy needs codeword-valued initial data (vocabulary profile)".into(),
                ));
            }
            Ok(Prepared::Count {
                cp: spec.checkpoint_index(*t)?,
                i_src: token_index(n_tokens, *sigma0)?,
                vocab: spec.params.vocab_size,
            })
        }
        Request::SoftAccuracy { t, sigma0 } => {
            if !(*sigma0 > 0.0 && *sigma0 < 1.0) {
                return Err(Error::Domain(format!(
                    "sigma0 must be in (0,1), got {sigma0}"
                )));
            }
            Ok(Prepared::Soft {
                cp: spec.checkpoint_index(*t)?,
                i_src: token_index(n_tokens, *sigma0)?,
                vocab: spec.params.vocab_size,
            })
        }
        Request::ModeFluctuation { t, n } => Ok(Prepared::Fluct {
            cp: spec.checkpoint_index(*t)?,
            n: *n,
        }),
    }
}

/// Fixed leaf ranges: these are both the parallel work units and the
/// batches behind covariance/cumulant standard errors.
fn leaf_ranges(replicates: usize) -> Vec<(u64, u64)> {
    let b = (replicates / 4).clamp(2, 64).min(replicates.max(1));
    let leaf = replicates.div_ceil(b);
    (0..b)
        .map(|i| {
            let lo = (i * leaf) as u64;
            let hi = (((i + 1) * leaf).min(replicates)) as u64;
            (lo, hi)
        })
        .filter(|(lo, hi)| hi > lo)
        .collect()
}

fn tree_merge(prepared: &[Prepared], mut leaves: Vec<Vec<AccState>>) -> Vec<AccState> {
    while leaves.len() > 1 {
        let mut next = Vec::with_capacity(leaves.len().div_ceil(2));
        let mut it = leaves.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for ((p, sa), sb) in prepared.iter().zip(a.iter_mut()).zip(b.iter()) {
                    p.merge(sa, sb);
                }
            }
            next.push(a);
        }
        leaves = next;
    }
    leaves.pop().unwrap()
}

fn fold<G>(spec: &EnsembleSpec, requests: &[Request], get: G) -> Result<Vec<CorrelationEstimate>>
where
    G: Fn(u64) -> Result<ReplicateData> + Sync,
{
    let prepared: Result<Vec<Prepared>> = requests.iter().map(|r| prepare(spec, r)).collect();
    let prepared = prepared?;
    let ranges = leaf_ranges(spec.replicates);
    let leaves: Result<Vec<Vec<AccState>>> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let mut states: Vec<AccState> = prepared.iter().map(|p| p.new_state()).collect();
            for r in lo..hi {
                let rep = get(r)?;
                for (p, s) in prepared.iter().zip(states.iter_mut()) {
                    p.update(s, &rep);
                }
            }
            for (p, s) in prepared.iter().zip(states.iter_mut()) {
                p.close_leaf(s);
            }
            Ok(states)
        })
        .collect();
    let merged = tree_merge(&prepared, leaves?);
    Ok(prepared
        .iter()
        .zip(merged.iter())
        .map(|(p, s)| p.finalize(s, spec.replicates))
        .collect())
}

/// Run estimators against a materialized ensemble.
pub fn run_requests(
    ens: &TrajectoryEnsemble,
    requests: &[Request],
) -> Result<Vec<CorrelationEstimate>> {
    fold(&ens.spec, requests, |r| {
        Ok(ens.replicates[r as usize].clone())
    })
}

/// Run estimators streaming: each replicate is regenerated from
/// (seed, replicate) on the fly and never stored.
pub fn run_requests_streaming(
    spec: &EnsembleSpec,
    requests: &[Request],
) -> Result<Vec<CorrelationEstimate>> {
    spec.validate()?;
    fold(spec, requests, |r| spec.simulate_replicate(r))
}

fn one(ens: &TrajectoryEnsemble, req: Request) -> Result<CorrelationEstimate> {
    Ok(run_requests(ens, &[req])?.pop().unwrap())
}

pub fn estimate_mode(
    ens: &TrajectoryEnsemble,
    t: f64,
    sigma: f64,
    n: i64,
) -> Result<CorrelationEstimate> {
    one(ens, Request::Mode { t, sigma, n })
}

pub fn estimate_autocov(
    ens: &TrajectoryEnsemble,
    t: f64,
    sigma: f64,
    n: i64,
    phi: &TestFunction,
) -> Result<CorrelationEstimate> {
    one(
        ens,
        Request::AutoCov {
            t,
            sigma,
            n,
            phi: phi.clone(),
        },
    )
}

pub fn estimate_crosscov(
    ens: &TrajectoryEnsemble,
    t: f64,
    sigma: f64,
    sigma0: f64,
    n: i64,
    phi: &TestFunction,
) -> Result<CorrelationEstimate> {
    one(
        ens,
        Request::CrossCov {
            t,
            sigma,
            sigma0,
            n,
            phi: phi.clone(),
        },
    )
}

pub fn estimate_cumulant3(
    ens: &TrajectoryEnsemble,
    specs: [ObsSpec; 3],
) -> Result<CorrelationEstimate> {
    one(ens, Request::Cumulant3 { specs })
}

pub fn estimate_paircov(
    ens: &TrajectoryEnsemble,
    a: ObsSpec,
    b: ObsSpec,
) -> Result<CorrelationEstimate> {
    one(ens, Request::PairCov { a, b })
}

pub fn hard_accuracy(ens: &TrajectoryEnsemble, t: f64, sigma0: f64) -> Result<CorrelationEstimate> {
    one(ens, Request::HardAccuracy { t, sigma0 })
}

pub fn soft_accuracy(ens: &TrajectoryEnsemble, t: f64, sigma0: f64) -> Result<CorrelationEstimate> {
    one(ens, Request::SoftAccuracy { t, sigma0 })
}

pub fn estimate_mode_fluctuation(
    ens: &TrajectoryEnsemble,
    t: f64,
    n: i64,
) -> Result<CorrelationEstimate> {
    one(ens, Request::ModeFluctuation { t, n })
}

/// CSV rows (kind, t, sigma, sigma0, n, value_re, value_im, std_error,
/// replicates) for a batch of estimates.
pub fn estimates_csv(items: &[(Request, CorrelationEstimate)]) -> String {
    let mut s = String::from("kind,t,sigma,sigma0,n,value_re,value_im,std_error,replicates\n");
    for (req, est) in items {
        let (t, sigma, sigma0, n) = match req {
            Request::Mode { t, sigma, n } => (Some(*t), Some(*sigma), None, Some(*n)),
            Request::AutoCov { t, sigma, n, .. } => (Some(*t), Some(*sigma), None, Some(*n)),
            Request::CrossCov {
                t, sigma, sigma0, n, ..
            } => (Some(*t), Some(*sigma), Some(*sigma0), Some(*n)),
            Request::Cumulant3 { specs } => (Some(specs[0].t), Some(specs[0].sigma), None, None),
            Request::PairCov { a, b } => (Some(a.t), Some(a.sigma), Some(b.sigma), None),
            Request::HardAccuracy { t, sigma0 } | Request::SoftAccuracy { t, sigma0 } => {
                (Some(*t), None, Some(*sigma0), None)
            }
            Request::ModeFluctuation { t, n } => (Some(*t), None, None, Some(*n)),
        };
        let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let fmt_n = |x: Option<i64>| x.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            est.kind.label(),
            fmt(t),
            fmt(sigma),
            fmt(sigma0),
            fmt_n(n),
            est.value.re,
            est.value.im,
            est.std_error(),
            est.replicates
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::sampler::InitialSampler;
    use crate::sim::DriftMethod;

    fn uniform_ensemble(n: usize, reps: usize, seed: u64, t_final: f64) -> TrajectoryEnsemble {
        let params = ModelParams::new(1.0, 1.0, n, 8, t_final).unwrap();
        EnsembleSpec {
            params,
            sampler: InitialSampler::iid_uniform(seed),
            dt: 0.05,
            checkpoints: if t_final > 0.0 { vec![0.0, t_final] } else { vec![0.0] },
            replicates: reps,
            method: DriftMethod::Spectral,
        }
        .materialize()
        .unwrap()
    }

    #[test]
    fn mode_zero_frequency_is_exact() {
        let ens = uniform_ensemble(8, 50, 1, 1.0);
        let est = estimate_mode(&ens, 1.0, 1.0, 0).unwrap();
        assert_eq!(est.value, Complex64::new(1.0, 0.0));
        assert_eq!(est.std_error(), 0.0);
    }

    #[test]
    fn mode_of_uniform_initial_data_is_small() {
        let ens = uniform_ensemble(8, 4000, 2, 1.0);
        let est = estimate_mode(&ens, 0.0, 1.0, 1).unwrap();
        assert!(est.value.re.abs() <= 3.0 * est.std_error_re.max(1e-12));
        assert!(est.value.im.abs() <= 3.0 * est.std_error_im.max(1e-12));
    }

    #[test]
    fn mode_is_hermitian_in_n() {
        let ens = uniform_ensemble(8, 200, 3, 1.0);
        let plus = estimate_mode(&ens, 1.0, 0.5, 2).unwrap();
        let minus = estimate_mode(&ens, 1.0, 0.5, -2).unwrap();
        assert_eq!(plus.value.re, minus.value.re);
        assert_eq!(plus.value.im, -minus.value.im);
    }

    #[test]
    fn missing_checkpoint_is_an_error() {
        let ens = uniform_ensemble(8, 10, 4, 1.0);
        assert!(matches!(
            estimate_mode(&ens, 0.7, 1.0, 1),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn autocov_of_initial_character_is_one() {
        // Cov(e^{-iθ⁰}, e^{iθ⁰}) = 1 for uniform initial data.
        let ens = uniform_ensemble(8, 4000, 5, 1.0);
        let est = estimate_autocov(&ens, 0.0, 1.0, 1, &TestFunction::harmonic(1)).unwrap();
        assert!(
            (est.value.re - 1.0).abs() <= 3.0 * est.std_error_re,
            "got {} ± {}",
            est.value.re,
            est.std_error_re
        );
        assert!(est.value.im.abs() <= 3.0 * est.std_error_im);
    }

    #[test]
    fn autocov_of_constant_is_exact_zero() {
        let ens = uniform_ensemble(8, 100, 6, 1.0);
        let est = estimate_autocov(&ens, 0.0, 1.0, 1, &TestFunction::constant(1.0)).unwrap();
        assert_eq!(est.value, Complex64::new(0.0, 0.0));
        assert_eq!(est.std_error(), 0.0);
    }

    #[test]
    fn autocov_stays_near_one_in_the_uniform_case() {
        // The limiting autocovariance at n = 1 with φ = e^{iθ} is exactly 1
        // for all t; at finite N the estimate carries an O(1/N) bias.
        let ens = uniform_ensemble(128, 2000, 7, 1.0);
        let est = estimate_autocov(&ens, 1.0, 1.0, 1, &TestFunction::harmonic(1)).unwrap();
        assert!(
            (est.value.re - 1.0).abs() <= 3.0 * est.std_error_re + 0.1,
            "got {} ± {}",
            est.value.re,
            est.std_error_re
        );
    }

    #[test]
    fn crosscov_vanishes_at_time_zero() {
        let ens = uniform_ensemble(16, 3000, 8, 1.0);
        let est =
            estimate_crosscov(&ens, 0.0, 1.0, 0.5, 1, &TestFunction::harmonic(1)).unwrap();
        assert!(est.value.re.abs() <= 3.0 * est.std_error_re);
        assert!(est.value.im.abs() <= 3.0 * est.std_error_im);
        // constant φ has exactly zero covariance
        let c = estimate_crosscov(&ens, 0.0, 1.0, 0.5, 1, &TestFunction::constant(2.0)).unwrap();
        assert_eq!(c.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn crosscov_order_error() {
        let ens = uniform_ensemble(16, 10, 9, 1.0);
        assert!(matches!(
            estimate_crosscov(&ens, 0.0, 0.5, 0.5, 1, &TestFunction::harmonic(1)),
            Err(Error::Order(_))
        ));
    }

    #[test]
    fn cumulant_of_independent_initial_data_is_small() {
        let ens = uniform_ensemble(16, 3000, 10, 1.0);
        let phi = TestFunction::harmonic(1);
        let spec_at = |sigma: f64| ObsSpec {
            t: 0.0,
            sigma,
            phi: phi.clone(),
        };
        let est =
            estimate_cumulant3(&ens, [spec_at(0.25), spec_at(0.5), spec_at(1.0)]).unwrap();
        assert!(est.value.re.abs() <= 3.0 * est.std_error_re.max(1e-12));
        assert!(est.value.im.abs() <= 3.0 * est.std_error_im.max(1e-12));
    }

    #[test]
    fn cumulant_with_constant_argument_is_exact_zero() {
        let ens = uniform_ensemble(16, 100, 11, 1.0);
        let c = |v: f64| ObsSpec {
            t: 0.0,
            sigma: 1.0,
            phi: TestFunction::constant(v),
        };
        let spec = ObsSpec {
            t: 0.0,
            sigma: 0.5,
            phi: TestFunction::harmonic(1),
        };
        let est = estimate_cumulant3(&ens, [spec, c(1.0), c(2.0)]).unwrap();
        assert_eq!(est.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn insufficient_replicates() {
        let ens = uniform_ensemble(8, 1, 12, 1.0);
        assert!(matches!(
            estimate_autocov(&ens, 0.0, 1.0, 1, &TestFunction::harmonic(1)),
            Err(Error::InsufficientReplicates(_))
        ));
    }

    #[test]
    fn hard_accuracy_source_at_terminal_token() {
        let params = ModelParams::new(1.0, 1.0, 8, 8, 0.0).unwrap();
        let ens = EnsembleSpec {
            params,
            sampler: InitialSampler::uniform_codewords(8, 13),
            dt: 0.05,
            checkpoints: vec![0.0],
            replicates: 200,
            method: DriftMethod::Spectral,
        }
        .materialize()
        .unwrap();
        // σ₀ picks the terminal token: accuracy at t = 0 is exactly 1.
        let est = hard_accuracy(&ens, 0.0, 0.99).unwrap();
        assert_eq!(est.value.re, 1.0);
    }

    #[test]
    fn hard_accuracy_fair_coin() {
        let params = ModelParams::new(1.0, 1.0, 16, 2, 0.0).unwrap();
        let ens = EnsembleSpec {
            params,
            sampler: InitialSampler::uniform_codewords(2, 14),
            dt: 0.05,
            checkpoints: vec![0.0],
            replicates: 4000,
            method: DriftMethod::Spectral,
        }
        .materialize()
        .unwrap();
        let est = hard_accuracy(&ens, 0.0, 0.5).unwrap();
        assert!((est.value.re - 0.5).abs() <= 3.0 * est.std_error_re);
    }

    #[test]
    fn hard_accuracy_needs_codewords() {
        let ens = uniform_ensemble(8, 10, 15, 1.0);
        assert!(matches!(
            hard_accuracy(&ens, 0.0, 0.5),
            Err(Error::Sampler(_))
        ));
    }

    #[test]
    fn soft_accuracy_uniform_baseline() {
        // At t = 0 with an independent source token, E[soft score] = √(π/2)/M.
        let ens = uniform_ensemble(16, 4000, 16, 1.0);
        let est = soft_accuracy(&ens, 0.0, 0.5).unwrap();
        let expect = (std::f64::consts::PI / 2.0).sqrt() / 8.0;
        assert!(
            (est.value.re - expect).abs() <= 3.0 * est.std_error_re,
            "got {} ± {}, want {expect}",
            est.value.re,
            est.std_error_re
        );
    }

    #[test]
    fn streaming_matches_materialized() {
        let params = ModelParams::new(1.0, 1.0, 16, 8, 1.0).unwrap();
        let spec = EnsembleSpec {
            params,
            sampler: InitialSampler::iid_uniform(17),
            dt: 0.05,
            checkpoints: vec![0.0, 1.0],
            replicates: 300,
            method: DriftMethod::Spectral,
        };
        let reqs = vec![
            Request::Mode {
                t: 1.0,
                sigma: 1.0,
                n: 1,
            },
            Request::CrossCov {
                t: 1.0,
                sigma: 1.0,
                sigma0: 0.5,
                n: 1,
                phi: TestFunction::harmonic(1),
            },
        ];
        let ens = spec.materialize().unwrap();
        let a = run_requests(&ens, &reqs).unwrap();
        let b = run_requests_streaming(&spec, &reqs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value, y.value);
            assert_eq!(x.std_error(), y.std_error());
        }
    }

    #[test]
    fn std_error_shrinks_like_inverse_sqrt_replicates() {
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let small = uniform_ensemble(4, 500, 100 + seed, 0.0);
            let large = uniform_ensemble(4, 2000, 200 + seed, 0.0);
            let a = estimate_mode(&small, 0.0, 1.0, 1).unwrap();
            let b = estimate_mode(&large, 0.0, 1.0, 1).unwrap();
            ratios.push(a.std_error() / b.std_error());
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((1.7..=2.3).contains(&mean), "mean SE ratio {mean}, want ~2");
    }

    #[test]
    fn covariance_estimator_recovers_truth() {
        // Synthetic check at t = 0: Cov(e^{-iθ}, e^{iθ}) = 1 for uniform
        // initial data. Count 3-SE coverage over many independent trials.
        let mut hits = 0;
        let trials = 300;
        for seed in 0..trials {
            let ens = uniform_ensemble(4, 256, 1000 + seed, 0.0);
            let est = estimate_autocov(&ens, 0.0, 1.0, 1, &TestFunction::harmonic(1)).unwrap();
            let ok_re = (est.value.re - 1.0).abs() <= 3.0 * est.std_error_re;
            let ok_im = est.value.im.abs() <= 3.0 * est.std_error_im;
            if ok_re && ok_im {
                hits += 1;
            }
        }
        assert!(
            hits as f64 >= 0.97 * trials as f64,
            "coverage {hits}/{trials}"
        );
    }

    #[test]
    fn csv_emission() {
        let ens = uniform_ensemble(8, 10, 18, 1.0);
        let req = Request::Mode {
            t: 1.0,
            sigma: 1.0,
            n: 1,
        };
        let est = run_requests(&ens, std::slice::from_ref(&req)).unwrap();
        let csv = estimates_csv(&[(req, est[0].clone())]);
        assert!(csv.starts_with("kind,t,sigma,sigma0,n,"));
        assert!(csv.lines().nth(1).unwrap().starts_with("mode,1,1,,1,"));
    }
}
