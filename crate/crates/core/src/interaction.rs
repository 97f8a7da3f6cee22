//! Interaction kernel on the torus and its Fourier data.
//!
//! The pairwise kernel is w_β(θ) = e^{β cos θ}, its drift contribution is
//! w_β'(θ) = -β sin θ e^{β cos θ}, and its Fourier coefficients (under the
//! character convention ĥ(n) = E[e^{-inθ}] for probability laws) are
//! ŵ_β(n) = I_n(β). The coefficients a_n = n² ŵ_β(n) govern the retrieval
//! profile.

use crate::error::{Error, Result};
use crate::special::bessel_i_series;

/// w_β(θ) = e^{β cos θ}. Strictly positive, even, 2π-periodic.
#[inline]
pub fn interaction_w(theta: f64, beta: f64) -> f64 {
    (beta * theta.cos()).exp()
}

/// w_β'(θ) = -β sin θ e^{β cos θ}. Odd, 2π-periodic.
#[inline]
pub fn interaction_w_prime(theta: f64, beta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    -beta * s * (beta * c).exp()
}

/// Fourier coefficient ŵ_β(n) = I_{|n|}(β); symmetric in n and strictly
/// decreasing in |n|.
pub fn fourier_w(n: i64, beta: f64) -> f64 {
    bessel_i_series(n.unsigned_abs() as u32, beta)
}

/// a_n = n² ŵ_β(n); a_0 = 0 and a_{-n} = a_n.
pub fn a_coeff(n: i64, beta: f64) -> f64 {
    let n2 = (n * n) as f64;
    if n == 0 {
        0.0
    } else {
        n2 * fourier_w(n, beta)
    }
}

/// Upper bound on a_n for a single n, used to certify truncations:
/// I_n(β) ≤ (β/2)^n e^{β²/4} / n!.
fn a_tail_bound(n: u32, beta: f64) -> f64 {
    let h = 0.5 * beta;
    let mut lead = 1.0;
    for k in 1..=n as u64 {
        lead *= h / k as f64;
    }
    (n as f64) * (n as f64) * lead * (h * h).exp()
}

/// sup over 1 ≤ n ≤ n_max of a_n, with a certified tail: the upper bound on
/// a_{n_max+1} must fall below the maximum found, otherwise n_max was too
/// small to capture the supremum.
pub fn sup_a(beta: f64, n_max: usize) -> Result<(f64, usize)> {
    if n_max < 1 {
        return Err(Error::Truncation("sup_a needs n_max >= 1".into()));
    }
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
    for n in 1..=n_max {
        let a = a_coeff(n as i64, beta);
        if a > best {
            best = a;
            arg = n;
        }
    }
    let tail = a_tail_bound(n_max as u32 + 1, beta);
    if tail > best {
        return Err(Error::Truncation(format!(
            "sup_a: tail bound {tail:.3e} at n = {} exceeds current max {best:.3e}; increase n_max",
            n_max + 1
        )));
    }
    Ok((best, arg))
}
