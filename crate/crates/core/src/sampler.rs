//! Initial prompt ensembles.
//!
//! Two families: iid angles uniform on the torus, and vocabulary profiles
//! where token i draws a codeword m ~ p_·(i/N) and is encoded as 2πm/M.
//! Every replicate owns a counter-based RNG stream derived from
//! (seed, replicate), so parallel and serial runs produce identical data.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerKind {
    IidUniform,
    /// Position-dependent codeword distribution: `probs[g]` is a simplex
    /// vector of length `vocab_size` attached to the grid node
    /// `sigma_nodes[g]`; between nodes the vector is interpolated linearly
    /// in σ and renormalized.
    VocabularyProfile {
        sigma_nodes: Vec<f64>,
        probs: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl InitialSampler {
    pub fn iid_uniform(seed: u64) -> Self {
        InitialSampler {
            kind: SamplerKind::IidUniform,
            seed,
        }
    }

    pub fn vocabulary_profile(sigma_nodes: Vec<f64>, probs: Vec<Vec<f64>>, seed: u64) -> Self {
        InitialSampler {
            kind: SamplerKind::VocabularyProfile { sigma_nodes, probs },
            seed,
        }
    }

    /// Uniform distribution over the M codewords at every position.
    pub fn uniform_codewords(vocab_size: usize, seed: u64) -> Self {
        let p = vec![1.0 / vocab_size as f64; vocab_size];
        Self::vocabulary_profile(vec![0.0, 1.0], vec![p.clone(), p], seed)
    }

    /// Whether initial angles are guaranteed to sit on codewords.
    pub fn is_codeword_valued(&self) -> bool {
        matches!(self.kind, SamplerKind::VocabularyProfile { .. })
    }

    /// The interpolated codeword distribution at position σ, or None for
    /// the continuous uniform sampler.
    pub fn codeword_distribution(&self, sigma: f64) -> Option<Vec<f64>> {
        match &self.kind {
            SamplerKind::IidUniform => None,
            SamplerKind::VocabularyProfile { sigma_nodes, probs } => {
                let mut out = Vec::new();
                profile_at(sigma_nodes, probs, sigma, &mut out);
                Some(out)
            }
        }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if let SamplerKind::VocabularyProfile { sigma_nodes, probs } = &self.kind {
            if sigma_nodes.len() < 2 || sigma_nodes.len() != probs.len() {
                return Err(Error::Config(format!(
                    "profile needs >= 2 nodes and matching probs rows, got {} nodes / {} rows",
                    sigma_nodes.len(),
                    probs.len()
                )));
            }
            if sigma_nodes.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("profile sigma_nodes must be increasing".into()));
            }
            for (g, row) in probs.iter().enumerate() {
                if row.len() != params.vocab_size {
                    return Err(Error::Config(format!(
                        "profile row {g} has length {}, expected vocab_size {}",
                        row.len(),
                        params.vocab_size
                    )));
                }
                if row.iter().any(|&p| p < 0.0) {
                    return Err(Error::Config(format!("profile row {g} has negative mass")));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "profile row {g} sums to {s}, expected 1 within 1e-12"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Linear interpolation of the simplex vector at σ, clamped to the node
/// range, then renormalized.
fn profile_at(sigma_nodes: &[f64], probs: &[Vec<f64>], sigma: f64, out: &mut Vec<f64>) {
    let m = probs[0].len();
    out.clear();
    if sigma <= sigma_nodes[0] {
        out.extend_from_slice(&probs[0]);
    } else if sigma >= *sigma_nodes.last().unwrap() {
        out.extend_from_slice(probs.last().unwrap());
    } else {
        let g = sigma_nodes.partition_point(|&x| x < sigma).max(1) - 1;
        let (x0, x1) = (sigma_nodes[g], sigma_nodes[g + 1]);
        let t = (sigma - x0) / (x1 - x0);
        for i in 0..m {
            out.push((1.0 - t) * probs[g][i] + t * probs[g + 1][i]);
        }
    }
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        for p in out.iter_mut() {
            *p /= s;
        }
    }
}

/// Draw the N initial angles for one replicate.
pub fn sample_initial(
    sampler: &InitialSampler,
    params: &ModelParams,
    replicate: u64,
) -> Result<Vec<f64>> {
    sampler.validate(params)?;
    let n = params.n_tokens;
    let mut rng = replicate_rng(sampler.seed, replicate);
    let mut out = Vec::with_capacity(n);
    match &sampler.kind {
        SamplerKind::IidUniform => {
            for _ in 0..n {
                out.push(rng.gen::<f64>() * TAU);
            }
        }
        SamplerKind::VocabularyProfile { sigma_nodes, probs } => {
            let m = params.vocab_size;
            let mut p = Vec::with_capacity(m);
            for i in 1..=n {
                let sigma = i as f64 / n as f64;
                profile_at(sigma_nodes, probs, sigma, &mut p);
                let u = rng.gen::<f64>();
                let mut cdf = 0.0;
                let mut word = m - 1;
                for (w, &pw) in p.iter().enumerate() {
                    cdf += pw;
                    if u < cdf {
                        word = w;
                        break;
                    }
                }
                out.push(TAU * word as f64 / m as f64);
            }
        }
    }
    Ok(out)
}
