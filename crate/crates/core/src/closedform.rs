//! Closed-form solution of the source-correlation equation and the
//! position-retrieval score built from it.
//!
//! The scalar profile solves ∂_t g = a (k_λ(σ,σ₀) + ∫_{σ₀}^σ k_λ g) with
//! g(0) = 0 and has the explicit form
//!
//!   g_a(t,σ;σ₀) = [λ e^{-λ(σ-σ₀)} / (1 - e^{-λσ})] ψ_{at}(Y(σ;σ₀)),
//!   Y(σ;σ₀)     = log((e^{λσ} - 1)/(e^{λσ₀} - 1)),
//!
//! with ψ_c(y) = √(c/y) I_1(2√(cy)) evaluated as a power series in y (so
//! Y → 0 is regular). The retrieval score at the output position is
//!
//!   S_t(σ₀) = Σ_{n≥1} e^{-π²n²/(2M²)} g_{a_n}(t, 1; σ₀),  a_n = n² I_n(β),
//!
//! which is U-shaped in σ₀ under the smallness condition
//! t·sup_n a_n ≤ min{3-√3, 2(1-e^{-λ})}: high near both ends of the
//! prompt, with a unique interior minimum.

use crate::alibi::LAMBDA_ZERO_EPS;
use crate::error::{Error, Result};
use crate::interaction::{a_coeff, sup_a};
use crate::params::ModelParams;
use crate::special::psi_c;
use std::f64::consts::PI;

pub use crate::special::bessel_i;

/// The constant 3 - √3 bounding the per-mode coefficient c = a_n t.
pub fn convexity_bound() -> f64 {
    3.0 - 3.0f64.sqrt()
}

/// Y(σ; σ₀) = log((e^{λσ} - 1)/(e^{λσ₀} - 1)); log(σ/σ₀) when λ = 0.
/// Nonnegative, zero iff σ = σ₀, strictly decreasing in σ₀.
pub fn y_map(sigma: f64, sigma0: f64, lambda: f64) -> Result<f64> {
    if !(sigma0 > 0.0 && sigma0 <= sigma && sigma <= 1.0) {
        return Err(Error::Domain(format!(
            "y_map needs 0 < sigma0 <= sigma <= 1, got ({sigma}, {sigma0})"
        )));
    }
    if lambda.abs() < LAMBDA_ZERO_EPS {
        Ok((sigma / sigma0).ln())
    } else {
        Ok(((lambda * sigma).exp_m1() / (lambda * sigma0).exp_m1()).ln())
    }
}

/// λ e^{-λ(σ-σ₀)} / (1 - e^{-λσ}), or 1/σ when λ = 0.
fn prefactor(sigma: f64, sigma0: f64, lambda: f64) -> f64 {
    if lambda.abs() < LAMBDA_ZERO_EPS {
        1.0 / sigma
    } else {
        lambda * (-lambda * (sigma - sigma0)).exp() / (-(-lambda * sigma).exp_m1())
    }
}

/// Closed-form profile value g_a(t, σ; σ₀).
pub fn g_closed(a: f64, t: f64, sigma: f64, sigma0: f64, lambda: f64) -> Result<f64> {
    if a < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!(
            "g_closed needs a, t >= 0, got a = {a}, t = {t}"
        )));
    }
    let y = y_map(sigma, sigma0, lambda)?;
    Ok(prefactor(sigma, sigma0, lambda) * psi_c(a * t, y))
}

/// One evaluation of the retrieval score with its certified truncation.
#[derive(Debug, Clone, Copy)]
pub struct ScoreEval {
    pub value: f64,
    pub n_terms: usize,
}

/// Gaussian frequency weight e^{-π²n²/(2M²)}.
#[inline]
fn freq_weight(n: usize, vocab_size: usize) -> f64 {
    let m = vocab_size as f64;
    (-(PI * PI) * (n * n) as f64 / (2.0 * m * m)).exp()
}

/// S_t(σ₀) = Σ_{n≥1} e^{-π²n²/(2M²)} g_{a_n}(t, 1; σ₀).
///
/// The sum stops once the weight times an upper bound on g (monotone in a,
/// with a_n dominated by sup_n a_n) falls below 1e-14 of the partial sum.
pub fn score_s(params: &ModelParams, t: f64, sigma0: f64) -> Result<ScoreEval> {
    if !(sigma0 > 0.0 && sigma0 <= 1.0) {
        return Err(Error::Domain(format!(
            "score_s needs sigma0 in (0,1], got {sigma0}"
        )));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("score_s needs t >= 0, got {t}")));
    }
    let (a_sup, _) = sup_a(params.beta, 64)?;
    let g_bound = g_closed(a_sup, t, 1.0, sigma0, params.lambda)?;
    if g_bound == 0.0 {
        return Ok(ScoreEval { value: 0.0, n_terms: 0 });
    }
    let mut sum = 0.0;
    let mut n = 1usize;
    loop {
        let bound = freq_weight(n, params.vocab_size) * g_bound;
        if n > 1 && bound <= 1e-14 * sum {
            break;
        }
        let a_n = a_coeff(n as i64, params.beta);
        sum += freq_weight(n, params.vocab_size)
            * g_closed(a_n, t, 1.0, sigma0, params.lambda)?;
        n += 1;
        if n > 4096 {
            return Err(Error::Truncation("score_s failed to converge".into()));
        }
    }
    Ok(ScoreEval {
        value: sum,
        n_terms: n - 1,
    })
}

/// Leading-order soft accuracy √(π/2)/M + √(2π)/(MN) · S_t(σ₀).
pub fn accuracy_expansion(params: &ModelParams, t: f64, sigma0: f64) -> Result<f64> {
    let m = params.vocab_size as f64;
    let n = params.n_tokens as f64;
    let s = score_s(params, t, sigma0)?;
    Ok((PI / 2.0).sqrt() / m + (2.0 * PI).sqrt() / (m * n) * s.value)
}

/// Outcome of the smallness condition t·sup_n a_n ≤ min{3-√3, 2(1-e^{-λ})}.
#[derive(Debug, Clone, Copy)]
pub struct SmallnessReport {
    pub ok: bool,
    /// threshold - t·sup a_n (negative when violated)
    pub margin: f64,
    pub threshold: f64,
    pub sup_a: f64,
    pub sup_arg: usize,
}

pub fn smallness_check(beta: f64, lambda: f64, t: f64, n_max: usize) -> Result<SmallnessReport> {
    if lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "smallness condition needs lambda > 0, got {lambda}"
        )));
    }
    let (a_sup, sup_arg) = sup_a(beta, n_max)?;
    let threshold = convexity_bound().min(2.0 * (-(-lambda).exp_m1()));
    let value = t * a_sup;
    Ok(SmallnessReport {
        ok: value <= threshold,
        margin: threshold - value,
        threshold,
        sup_a: a_sup,
        sup_arg,
    })
}

/// Largest t satisfying the smallness condition at (β, λ).
pub fn critical_time(beta: f64, lambda: f64, n_max: usize) -> Result<f64> {
    let r = smallness_check(beta, lambda, 0.0, n_max)?;
    Ok(r.threshold / r.sup_a)
}

/// Convexity series coefficient c² - 2(k+3)c + (k+2)(k+3) of one mode.
pub fn convexity_coefficient(c: f64, k: usize) -> f64 {
    let kf = k as f64;
    c * c - 2.0 * (kf + 3.0) * c + (kf + 2.0) * (kf + 3.0)
}

/// Diagnostics of one score mode h_c(y) = (λ/(e^λ-1) + λe^{-y}) ψ_c(y).
#[derive(Debug, Clone, Copy)]
pub struct HDiagnostics {
    pub h: f64,
    /// h_c'(0) = λc (c / (2(1 - e^{-λ})) - 1)
    pub h_prime_zero: f64,
    /// true iff every series coefficient of ψ_c'' - 2ψ_c' + ψ_c is
    /// nonnegative, i.e. c ≤ 3 - √3 (k ≤ 64 checked explicitly; the k = 0
    /// coefficient is the smallest, covering the rest)
    pub convexity_certificate: bool,
}

pub fn h_diagnostics(c: f64, lambda: f64, y: f64) -> Result<HDiagnostics> {
    if c < 0.0 || y < 0.0 {
        return Err(Error::Domain(format!(
            "h_diagnostics needs c, y >= 0, got c = {c}, y = {y}"
        )));
    }
    if lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "h_diagnostics needs lambda > 0, got {lambda}"
        )));
    }
    let front = lambda / lambda.exp_m1() + lambda * (-y).exp();
    let h = front * psi_c(c, y);
    let h_prime_zero = lambda * c * (c / (2.0 * (-(-lambda).exp_m1())) - 1.0);
    let certificate = (0..=64).all(|k| convexity_coefficient(c, k) >= -1e-12);
    Ok(HDiagnostics {
        h,
        h_prime_zero,
        convexity_certificate: certificate,
    })
}

/// h_c(y) itself, shared by the diagnostics and the convexity tests.
pub fn h_mode(c: f64, lambda: f64, y: f64) -> f64 {
    (lambda / lambda.exp_m1() + lambda * (-y).exp()) * psi_c(c, y)
}

/// A sampled retrieval-score profile with its certification metadata.
#[derive(Debug, Clone)]
pub struct ClosedFormProfile {
    pub beta: f64,
    pub lambda: f64,
    pub vocab_size: usize,
    pub t: f64,
    pub sigma0_grid: Vec<f64>,
    pub scores: Vec<f64>,
    /// maximum number of frequency terms used across the grid
    pub n_terms_used: usize,
    pub condition_ok: bool,
    pub condition_margin: f64,
    pub min_location: Option<f64>,
}

/// Evaluate S_t on a σ₀-grid; the smallness condition is checked when
/// λ > 0 and recorded on the profile.
pub fn score_profile(params: &ModelParams, t: f64, sigma0_grid: &[f64]) -> Result<ClosedFormProfile> {
    let mut scores = Vec::with_capacity(sigma0_grid.len());
    let mut n_terms = 0;
    for &s0 in sigma0_grid {
        let e = score_s(params, t, s0)?;
        scores.push(e.value);
        n_terms = n_terms.max(e.n_terms);
    }
    let (condition_ok, condition_margin) = if params.lambda > 0.0 {
        let r = smallness_check(params.beta, params.lambda, t, 64)?;
        (r.ok, r.margin)
    } else {
        (false, f64::NEG_INFINITY)
    };
    let min_location = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| sigma0_grid[i]);
    Ok(ClosedFormProfile {
        beta: params.beta,
        lambda: params.lambda,
        vocab_size: params.vocab_size,
        t,
        sigma0_grid: sigma0_grid.to_vec(),
        scores,
        n_terms_used: n_terms,
        condition_ok,
        condition_margin,
        min_location,
    })
}

/// Uniform midpoint grid on (0, 1) for profile sweeps.
pub fn midpoint_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| (i as f64 + 0.5) / points as f64).collect()
}

/// Shape analysis of a sampled profile.
#[derive(Debug, Clone)]
pub struct UShapeReport {
    /// all-zero profile (t = 0): no structure to analyze
    pub degenerate: bool,
    /// smallness condition unmet; analysis ran but is unreliable
    pub condition_violated: bool,
    pub primacy_decreasing: bool,
    pub recency_increasing: bool,
    /// second-order one-sided derivative of S at σ₀ = 1
    pub boundary_slope: f64,
    pub recency_slope_positive: bool,
    pub unique_interior_min: bool,
    pub n_local_minima: usize,
    pub argmin: Option<f64>,
}

impl UShapeReport {
    pub fn u_shaped(&self) -> bool {
        !self.degenerate
            && self.primacy_decreasing
            && self.recency_increasing
            && self.recency_slope_positive
            && self.unique_interior_min
    }
}

/// Verify the grid profile decreases from the left edge to a unique
/// interior minimum and increases up to the right edge, and measure the
/// one-sided slope at σ₀ = 1.
pub fn u_shape_analyze(profile: &ClosedFormProfile) -> Result<UShapeReport> {
    let n = profile.scores.len();
    if n < 64 {
        return Err(Error::Config(format!(
            "u-shape analysis needs >= 64 grid points, got {n}"
        )));
    }
    let s = &profile.scores;
    let degenerate = s.iter().all(|&v| v.abs() < 1e-15);
    if degenerate {
        return Ok(UShapeReport {
            degenerate: true,
            condition_violated: !profile.condition_ok,
            primacy_decreasing: false,
            recency_increasing: false,
            boundary_slope: 0.0,
            recency_slope_positive: false,
            unique_interior_min: false,
            n_local_minima: 0,
            argmin: None,
        });
    }

    let argmin_idx = s
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let primacy_decreasing = s[..=argmin_idx].windows(2).all(|w| w[1] < w[0]);
    let recency_increasing = s[argmin_idx..].windows(2).all(|w| w[1] > w[0]);
    let n_local_minima = (1..n - 1)
        .filter(|&i| s[i] < s[i - 1] && s[i] < s[i + 1])
        .count();
    let unique_interior_min =
        n_local_minima == 1 && argmin_idx > 0 && argmin_idx < n - 1;

    // one-sided derivative at σ₀ = 1 by a second-order backward difference
    let params = ModelParams::new(
        profile.beta,
        profile.lambda,
        1,
        profile.vocab_size,
        profile.t.max(1.0),
    )?;
    let h = 1.0 / 1024.0;
    let s1 = score_s(&params, profile.t, 1.0)?.value;
    let s2 = score_s(&params, profile.t, 1.0 - h)?.value;
    let s3 = score_s(&params, profile.t, 1.0 - 2.0 * h)?.value;
    let boundary_slope = (3.0 * s1 - 4.0 * s2 + s3) / (2.0 * h);

    Ok(UShapeReport {
        degenerate: false,
        condition_violated: !profile.condition_ok,
        primacy_decreasing,
        recency_increasing,
        boundary_slope,
        recency_slope_positive: boundary_slope > 0.0,
        unique_interior_min,
        n_local_minima,
        argmin: Some(profile.sigma0_grid[argmin_idx]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::volterra_g_numeric;
    use crate::special::bessel_i_series;
    use crate::special::oracle::{bessel_i_quadrature, integrate};

    fn params(beta: f64, lambda: f64, m: usize) -> ModelParams {
        ModelParams::new(beta, lambda, 64, m, 4.0).unwrap()
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert!((bessel_i(1, 2.0).unwrap() - bessel_i_quadrature(1, 2.0)).abs() < 1e-11);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_c(0.9, 0.0), 0.9);
        assert_eq!(psi_c(0.0, 2.0), 0.0);
        assert!((psi_c(1.0, 1.0) - bessel_i_quadrature(1, 2.0)).abs() < 1e-11);
    }

    #[test]
    fn y_map_values() {
        assert_eq!(y_map(0.7, 0.7, 1.3).unwrap(), 0.0);
        assert!((y_map(1.0, (-1.0f64).exp(), 0.0).unwrap() - 1.0).abs() < 1e-12);
        let expect = ((1.0f64.exp() - 1.0) / (0.5f64.exp() - 1.0)).ln();
        assert!((y_map(1.0, 0.5, 1.0).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.974077).abs() < 1e-6);
        assert!(y_map(0.5, 0.7, 1.0).is_err());
        assert!(y_map(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn y_map_monotone_in_sigma0() {
        let mut prev = f64::INFINITY;
        for i in 1..20 {
            let s0 = i as f64 / 20.0;
            let y = y_map(1.0, s0, 1.0).unwrap();
            assert!(y >= 0.0 && y < prev);
            prev = y;
        }
    }

    #[test]
    fn g_closed_edges() {
        assert_eq!(g_closed(0.7, 0.0, 1.0, 0.5, 1.0).unwrap(), 0.0);
        // σ₀ → σ⁻ continuity: ψ_{at}(0) = at and the prefactor limit
        let (a, t, lam, sigma) = (0.6f64, 1.2f64, 1.0f64, 0.8f64);
        let lim = a * t * lam / (1.0 - (-lam * sigma).exp());
        let near = g_closed(a, t, sigma, sigma - 1e-9, lam).unwrap();
        assert!((near - lim).abs() < 1e-6 * lim);
        assert!(g_closed(0.5, 1.0, 0.5, 0.7, 1.0).is_err());
        assert!(g_closed(-0.1, 1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn g_closed_matches_volterra_oracle() {
        // a = 1²·I_1(1) at β = 1; moderate grid keeps the test fast, the
        // full tolerance matrix lives in the acceptance suite.
        let a = bessel_i_quadrature(1, 1.0);
        let vol = volterra_g_numeric(a, 1.0, 0.5, 512, 2e-3, 1.0).unwrap();
        let closed = g_closed(a, 1.0, 1.0, vol.sigma0_snapped, 1.0).unwrap();
        assert!(
            (closed - vol.g_at_one).abs() < 1e-4 * closed.max(1e-8),
            "closed {closed} vs volterra {}",
            vol.g_at_one
        );
    }

    #[test]
    fn g_closed_residual_solves_the_volterra_equation() {
        // ∂_t g = a I_0(2√(atY)) · prefactor (analytic) must equal
        // a (k_λ(σ,σ₀) + ∫_{σ₀}^σ k_λ g) (quadrature) on a lattice.
        for &(a, lam) in &[(0.5651591, 1.0), (1.0, 0.0), (0.8, 1.0)] {
            for &(sigma, sigma0, t) in &[(1.0, 0.2, 0.5), (0.7, 0.35, 1.5), (1.0, 0.6, 1.0)] {
                let y = y_map(sigma, sigma0, lam).unwrap();
                let dt_g = a
                    * prefactor(sigma, sigma0, lam)
                    * bessel_i_series(0, 2.0 * (a * t * y).sqrt());
                let integral = integrate(
                    |tau| {
                        crate::alibi::graphon_k(sigma, tau, lam).unwrap()
                            * g_closed(a, t, tau.max(sigma0), sigma0, lam).unwrap()
                    },
                    sigma0,
                    sigma * (1.0 - 1e-13),
                    1e-12,
                );
                let rhs =
                    a * (crate::alibi::graphon_k(sigma, sigma0, lam).unwrap() + integral);
                assert!(
                    (dt_g - rhs).abs() <= 1e-6,
                    "residual {} at a={a}, lam={lam}, sigma={sigma}, sigma0={sigma0}, t={t}",
                    dt_g - rhs
                );
            }
        }
    }

    #[test]
    fn g_closed_lambda_continuity() {
        for &(sigma, sigma0) in &[(1.0f64, 0.3f64), (0.8, 0.5), (0.6, 0.1)] {
            for &(a, t) in &[(0.5651591f64, 1.0f64), (1.0, 2.0)] {
                let tiny = g_closed(a, t, sigma, sigma0, 1e-9).unwrap();
                let zero = g_closed(a, t, sigma, sigma0, 0.0).unwrap();
                assert!((tiny - zero).abs() <= 1e-6);
                let near = g_closed(a, t, sigma, sigma0, 2e-8).unwrap();
                assert!((near - zero).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn g_closed_monotone_in_t_and_a() {
        let mut prev = 0.0;
        for i in 1..=8 {
            let t = i as f64 * 0.4;
            let g = g_closed(0.6, t, 1.0, 0.4, 1.0).unwrap();
            assert!(g > prev);
            prev = g;
        }
        prev = 0.0;
        for i in 1..=8 {
            let a = i as f64 * 0.2;
            let g = g_closed(a, 1.0, 1.0, 0.4, 1.0).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn goursat_mixed_derivative_identity() {
        // U(t,y) = e^{λσ₀} I_0(2√(aty)) satisfies ∂_t∂_y U = a U.
        let (a, lam, sigma0) = (0.7f64, 1.0f64, 0.3f64);
        let u = |t: f64, y: f64| (lam * sigma0).exp() * bessel_i_series(0, 2.0 * (a * t * y).sqrt());
        let h = 1e-3;
        for &(t, y) in &[(0.5, 0.4), (1.0, 1.3), (1.7, 2.2)] {
            let mixed =
                (u(t + h, y + h) - u(t + h, y - h) - u(t - h, y + h) + u(t - h, y - h))
                    / (4.0 * h * h);
            let target = a * u(t, y);
            assert!(
                (mixed - target).abs() < 1e-4 * target.abs(),
                "mixed {mixed} vs aU {target} at ({t},{y})"
            );
        }
    }

    #[test]
    fn score_vanishes_at_time_zero() {
        let p = params(1.0, 1.0, 8);
        let s = score_s(&p, 0.0, 0.3).unwrap();
        assert_eq!(s.value, 0.0);
        assert!((accuracy_expansion(&p, 0.0, 0.3).unwrap()
            - (PI / 2.0).sqrt() / 8.0)
            .abs()
            < 1e-15);
    }

    #[test]
    fn score_positive_and_truncation_certified() {
        let p = params(1.0, 1.0, 8);
        let s = score_s(&p, 1.0, 0.5).unwrap();
        assert!(s.value > 0.0 && s.value.is_finite());
        // for M = 8 the certified truncation needs roughly 25 terms
        assert!((20..=32).contains(&s.n_terms), "used {} terms", s.n_terms);
    }

    #[test]
    fn accuracy_expansion_baseline_value() {
        let p = params(1.0, 1.0, 8);
        let base = accuracy_expansion(&p, 0.0, 0.5).unwrap();
        assert!((base - 0.15666426716443754).abs() < 1e-15);
        // the O(1/N) correction is positive for t > 0
        assert!(accuracy_expansion(&p, 1.0, 0.5).unwrap() > base);
    }

    #[test]
    fn smallness_examples() {
        let r = smallness_check(1.0, 1.0, 0.0, 16).unwrap();
        assert!(r.ok);
        let expect_threshold = (3.0 - 3.0f64.sqrt()).min(2.0 * (1.0 - (-1.0f64).exp()));
        assert!((r.margin - expect_threshold).abs() < 1e-12);
        assert!((r.threshold - 1.2642411).abs() < 1e-6);

        assert!(smallness_check(1.0, 1.0, 2.0, 16).unwrap().ok);
        assert!(!smallness_check(1.0, 1.0, 2.5, 16).unwrap().ok);
        assert!(smallness_check(1.0, 0.0, 1.0, 16).is_err());

        // threshold time at β = λ = 1, against the quadrature oracle
        let t_star = critical_time(1.0, 1.0, 16).unwrap();
        let oracle = expect_threshold / bessel_i_quadrature(1, 1.0);
        assert!((t_star - oracle).abs() < 1e-10);
        assert!((t_star - 2.237).abs() < 0.5e-3, "t* = {t_star}");
    }

    #[test]
    fn convexity_coefficients() {
        // at c = 3 - √3 the k = 0 coefficient vanishes
        let c = convexity_bound();
        assert!(convexity_coefficient(c, 0).abs() < 1e-12);
        assert_eq!(convexity_coefficient(2.0, 0), -2.0);
        // coefficients grow with k for small c
        for k in 0..64 {
            assert!(convexity_coefficient(0.9, k + 1) > convexity_coefficient(0.9, k));
        }
    }

    #[test]
    fn h_diagnostics_examples() {
        let d = h_diagnostics(0.5, 1.0, 0.0).unwrap();
        assert!(d.convexity_certificate);
        assert!((d.h_prime_zero + 0.30225291164133417).abs() < 1e-12);
        assert!(d.h_prime_zero < 0.0);
        // cross-check h'(0) with a finite difference of h_c
        let h = 1e-6;
        let fd = (h_mode(0.5, 1.0, h) - h_mode(0.5, 1.0, 0.0)) / h;
        assert!((d.h_prime_zero - fd).abs() < 1e-4);

        assert!(!h_diagnostics(2.0, 1.0, 0.5).unwrap().convexity_certificate);
        assert!(h_diagnostics(convexity_bound(), 1.0, 0.5)
            .unwrap()
            .convexity_certificate);
        assert!(h_diagnostics(0.5, 0.0, 0.5).is_err());
    }

    #[test]
    fn score_combination_is_convex_under_smallness() {
        // Sampled second differences of H(y) = Σ_n q_n h_{c_n}(y) stay
        // positive out to Y(σ₀ = 2^{-10}).
        let p = params(1.0, 1.0, 8);
        let t = 1.0;
        let y_max = y_map(1.0, 2.0f64.powi(-10), 1.0).unwrap();
        let h_of = |y: f64| -> f64 {
            (1..=40)
                .map(|n| freq_weight(n, 8) * h_mode(a_coeff(n as i64, p.beta) * t, 1.0, y))
                .sum()
        };
        let step = 1e-3;
        for i in 0..60 {
            let y = step + y_max * i as f64 / 60.0;
            let dd = h_of(y + step) - 2.0 * h_of(y) + h_of(y - step);
            assert!(dd > 0.0, "second difference {dd} at y = {y}");
        }
    }

    #[test]
    fn profile_is_u_shaped_in_the_reference_regime() {
        let p = params(1.0, 1.0, 8);
        let profile = score_profile(&p, 1.0, &midpoint_grid(512)).unwrap();
        assert!(profile.condition_ok);
        assert!(profile.scores.iter().all(|&s| s > 0.0));
        let report = u_shape_analyze(&profile).unwrap();
        assert!(report.u_shaped(), "{report:?}");
        let argmin = report.argmin.unwrap();
        assert!(argmin > 0.1 && argmin < 0.9, "argmin at {argmin}");
    }

    #[test]
    fn degenerate_profile_reports_no_structure() {
        let p = params(1.0, 1.0, 8);
        let profile = score_profile(&p, 0.0, &midpoint_grid(128)).unwrap();
        let report = u_shape_analyze(&profile).unwrap();
        assert!(report.degenerate);
        assert!(!report.u_shaped());
        assert!(report.argmin.is_none());
    }

    #[test]
    fn argmin_is_stable_under_grid_coarsening() {
        let p = params(1.0, 1.0, 8);
        let fine = score_profile(&p, 1.0, &midpoint_grid(512)).unwrap();
        let coarse = score_profile(&p, 1.0, &midpoint_grid(256)).unwrap();
        let a = u_shape_analyze(&fine).unwrap().argmin.unwrap();
        let b = u_shape_analyze(&coarse).unwrap().argmin.unwrap();
        assert!((a - b).abs() <= 1.0 / 256.0 + 1e-12);
    }

    #[test]
    fn condition_flag_appears_past_the_threshold() {
        let p = params(1.0, 1.0, 8);
        let profile = score_profile(&p, 2.5, &midpoint_grid(128)).unwrap();
        assert!(!profile.condition_ok);
        let report = u_shape_analyze(&profile).unwrap();
        assert!(report.condition_violated);
    }

    #[test]
    fn analysis_needs_enough_points() {
        let p = params(1.0, 1.0, 8);
        let profile = score_profile(&p, 1.0, &midpoint_grid(32)).unwrap();
        assert!(matches!(u_shape_analyze(&profile), Err(Error::Config(_))));
    }
}
