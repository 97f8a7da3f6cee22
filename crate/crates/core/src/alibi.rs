//! Causal positional weights and their continuum (graphon) limit.
//!
//! The row-normalized weights are ω_{j,k} = e^{-λ(j-k)/N} 1_{k<j} / Z_{N,j}
//! with Z_{N,j} = Σ_{k<j} e^{-λ(j-k)/N}. Equivalently ω_{j,k} =
//! u_k / Σ_{m<j} u_m with u_k = e^{λk/N}, which is the form stored here:
//! it needs O(N) memory and makes prefix evaluation cheap. Row 1 has an
//! empty normalizing sum and is identically zero (token 1 is frozen).
//!
//! The large-N limit of N ω_{⌈Nσ⌉,⌈Nσ'⌉} is the directed kernel
//! k_λ(σ,σ') = λ e^{-λ(σ-σ')} / (1 - e^{-λσ}) for σ' < σ, understood as
//! σ^{-1} 1_{σ'<σ} when λ = 0.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Below this magnitude, λ is treated as exactly zero to avoid cancellation
/// in λ/(1 - e^{-λσ}).
pub const LAMBDA_ZERO_EPS: f64 = 1e-8;

/// Row-stochastic causal weight matrix in factored form.
#[derive(Debug, Clone)]
pub struct AlibiWeights {
    n: usize,
    /// u_k = e^{λ k / N}, k = 1..N (0-based storage).
    u: Vec<f64>,
    /// z[j-1] = Σ_{m<j} u_m; z[0] = 0.
    z: Vec<f64>,
}

impl AlibiWeights {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.n_tokens;
        let lam = params.lambda;
        let u: Vec<f64> = (1..=n).map(|k| (lam * k as f64 / n as f64).exp()).collect();
        let mut z = vec![0.0; n];
        for j in 1..n {
            z[j] = z[j - 1] + u[j - 1];
        }
        AlibiWeights { n, u, z }
    }

    pub fn n_tokens(&self) -> usize {
        self.n
    }

    /// ω_{j,k} with 1-based indices.
    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.n && k >= 1 && k <= self.n);
        if k >= j || j == 1 {
            0.0
        } else {
            self.u[k - 1] / self.z[j - 1]
        }
    }

    /// u_k = e^{λk/N} (1-based k); numerator of ω before normalization.
    #[inline]
    pub fn numerator(&self, k: usize) -> f64 {
        self.u[k - 1]
    }

    /// Z_j = Σ_{m<j} u_m (1-based j); zero for j = 1.
    #[inline]
    pub fn normalizer(&self, j: usize) -> f64 {
        self.z[j - 1]
    }

    pub fn row_sum(&self, j: usize) -> f64 {
        (1..j).map(|k| self.weight(j, k)).sum()
    }

    /// Column sums Σ_j ω_{j,k} for all k, in O(N).
    pub fn col_sums(&self) -> Vec<f64> {
        // Σ_{j>k} u_k / Z_j = u_k * suffix sum of 1/Z_j.
        let mut s = 0.0;
        let mut inv_suffix = vec![0.0; self.n + 2];
        for j in (2..=self.n).rev() {
            s += 1.0 / self.z[j - 1];
            inv_suffix[j] = s;
        }
        (1..=self.n)
            .map(|k| {
                if k + 1 > self.n {
                    0.0
                } else {
                    self.u[k - 1] * inv_suffix[k + 1]
                }
            })
            .collect()
    }

    /// Dense matrix, for small N only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (1..=self.n)
            .map(|j| (1..=self.n).map(|k| self.weight(j, k)).collect())
            .collect()
    }
}

/// The limiting directed kernel k_λ(σ, σ').
pub fn graphon_k(sigma: f64, sigma_prime: f64, lambda: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::Domain(format!("graphon_k needs sigma > 0, got {sigma}")));
    }
    if sigma_prime >= sigma {
        return Ok(0.0);
    }
    if lambda.abs() < LAMBDA_ZERO_EPS {
        return Ok(1.0 / sigma);
    }
    // 1 - e^{-λσ} computed as -expm1(-λσ) to stay accurate for small λσ.
    Ok(lambda * (-lambda * (sigma - sigma_prime)).exp() / (-(-lambda * sigma).exp_m1()))
}

fn ceil_index(n: usize, sigma: f64) -> usize {
    ((n as f64 * sigma).ceil() as usize).clamp(1, n)
}

/// Rescaled discrete kernel K_N(σ, σ') = N ω_{⌈Nσ⌉,⌈Nσ'⌉}.
pub fn graphon_kn(sigma: f64, sigma_prime: f64, params: &ModelParams) -> Result<f64> {
    if !(sigma > 0.0 && sigma <= 1.0 && sigma_prime > 0.0 && sigma_prime <= 1.0) {
        return Err(Error::Domain(format!(
            "graphon_kn needs sigma, sigma' in (0,1], got ({sigma}, {sigma_prime})"
        )));
    }
    let w = AlibiWeights::new(params);
    let n = params.n_tokens;
    let j = ceil_index(n, sigma);
    let k = ceil_index(n, sigma_prime);
    Ok(n as f64 * w.weight(j, k))
}

/// Antiderivative of τ ↦ k_λ(σ, τ) on (0, σ).
fn k_antiderivative(sigma: f64, tau: f64, lambda: f64) -> f64 {
    if lambda.abs() < LAMBDA_ZERO_EPS {
        tau / sigma
    } else {
        (-lambda * (sigma - tau)).exp() / (-(-lambda * sigma).exp_m1())
    }
}

/// ∫_a^b |k_λ(σ,·) - v| dτ for a cell [a, b] ⊂ (0, σ), exactly: k_λ is
/// monotone in τ so there is at most one crossing, solvable in closed form.
fn cell_abs_error(sigma: f64, a: f64, b: f64, v: f64, lambda: f64) -> f64 {
    let f = |lo: f64, hi: f64| {
        k_antiderivative(sigma, hi, lambda) - k_antiderivative(sigma, lo, lambda) - v * (hi - lo)
    };
    let ka = graphon_k(sigma, a, lambda).unwrap_or(0.0);
    let kb = graphon_k(sigma, (b - 1e-300).min(b), lambda).unwrap_or(0.0);
    let crossing = v > 0.0 && (ka - v) * (kb - v) < 0.0 && lambda.abs() >= LAMBDA_ZERO_EPS;
    if crossing {
        // Solve λ e^{-λ(σ-τ)} / (1 - e^{-λσ}) = v for τ.
        let denom = -(-lambda * sigma).exp_m1();
        let tau_star = sigma + (v * denom / lambda).ln() / lambda;
        let t = tau_star.clamp(a, b);
        f(a, t).abs() + f(t, b).abs()
    } else {
        f(a, b).abs()
    }
}

/// ∫_0^1 |K_N(σ,·) - k_λ(σ,·)| dσ', by exact piecewise integration of k_λ
/// against the step function K_N.
pub fn graphon_l1_error(sigma: f64, params: &ModelParams) -> Result<f64> {
    if sigma <= 0.0 || sigma > 1.0 {
        return Err(Error::Domain(format!(
            "graphon_l1_error needs sigma in (0,1], got {sigma}"
        )));
    }
    let n = params.n_tokens;
    let lam = params.lambda;
    let w = AlibiWeights::new(params);
    let j = ceil_index(n, sigma);
    let mut total = 0.0;
    for m in 1..=n {
        let a = (m - 1) as f64 / n as f64;
        let b = m as f64 / n as f64;
        if a >= sigma {
            break; // K_N and k_λ both vanish above σ
        }
        let v = n as f64 * w.weight(j, m);
        let hi = b.min(sigma);
        total += cell_abs_error(sigma, a, hi, v, lam);
        // above σ inside this cell, both functions vanish
    }
    Ok(total)
}
