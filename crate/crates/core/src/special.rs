//! Modified Bessel functions of the first kind and the related kernel series.
//!
//! Everything here is evaluated by the ascending power series
//!
//!   I_ν(z) = Σ_{k≥0} (z/2)^{2k+ν} / (k! (k+ν)!),
//!
//! terminated once a term drops below 1e-17 of the partial sum. The series
//! is well conditioned for the argument range used by this crate (z ≲ 50;
//! all terms are positive, so there is no cancellation).

use crate::error::{Error, Result};

/// Relative termination threshold for the ascending series.
const SERIES_EPS: f64 = 1e-17;
const MAX_TERMS: usize = 400;

/// I_n(z) for integer order n ≥ 0 and z ≥ 0, by the ascending series.
pub fn bessel_i_series(n: u32, z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    let h = 0.5 * z;
    // leading term (z/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n as u64 {
        term *= h / k as f64;
    }
    let mut sum = term;
    let h2 = h * h;
    for k in 1..MAX_TERMS as u64 {
        term *= h2 / (k * (k + n as u64)) as f64;
        sum += term;
        if term <= SERIES_EPS * sum {
            break;
        }
    }
    sum
}

/// I_ν(z) for ν ∈ {0, 1} on the validated range 0 ≤ z ≤ 50.
pub fn bessel_i(nu: u32, z: f64) -> Result<f64> {
    if nu > 1 {
        return Err(Error::Range(format!("bessel_i supports nu in {{0,1}}, got {nu}")));
    }
    if !(0.0..=50.0).contains(&z) {
        return Err(Error::Range(format!(
            "bessel_i validated for 0 <= z <= 50, got {z}"
        )));
    }
    Ok(bessel_i_series(nu, z))
}

/// The kernel series ψ_c(y) = √(c/y) I_1(2√(cy)) = Σ_{k≥0} c^{k+1} y^k / (k! (k+1)!).
///
/// Evaluated directly as a power series in y, which removes the apparent
/// singularity at y = 0: ψ_c(0) = c and ψ_c'(0) = c²/2.
pub fn psi_c(c: f64, y: f64) -> f64 {
    debug_assert!(c >= 0.0 && y >= 0.0);
    if c == 0.0 {
        return 0.0;
    }
    let mut term = c;
    let mut sum = term;
    let cy = c * y;
    for k in 1..MAX_TERMS as u64 {
        term *= cy / (k * (k + 1)) as f64;
        sum += term;
        if term <= SERIES_EPS * sum {
            break;
        }
    }
    sum
}

/// First derivative ψ_c'(y) = Σ_{k≥1} c^{k+1} k y^{k-1} / (k! (k+1)!).
pub fn psi_c_prime(c: f64, y: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    // term_k = c^{k+1} y^{k-1} / ((k-1)! (k+1)!), starting at k = 1 with c²/2.
    let mut term = c * c / 2.0;
    let mut sum = term;
    let cy = c * y;
    for k in 2..MAX_TERMS as u64 {
        term *= cy / ((k - 1) * (k + 1)) as f64;
        sum += term;
        if term <= SERIES_EPS * sum {
            break;
        }
    }
    sum
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Quadrature oracle for the Bessel series, independent of the series
    //! implementation: I_n(z) = (1/π) ∫_0^π e^{z cos θ} cos(nθ) dθ, by
    //! adaptive Simpson refinement to absolute 1e-12.

    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
        }
        s * h / 3.0
    }

    /// Refine Simpson's rule until two successive halvings agree to `tol`.
    pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        let mut n = 64;
        let mut prev = simpson(&f, a, b, n);
        loop {
            n *= 2;
            let cur = simpson(&f, a, b, n);
            if (cur - prev).abs() <= tol || n >= 1 << 22 {
                return cur;
            }
            prev = cur;
        }
    }

    pub fn bessel_i_quadrature(n: u32, z: f64) -> f64 {
        let f = |theta: f64| (z * theta.cos()).exp() * (n as f64 * theta).cos();
        integrate(f, 0.0, std::f64::consts::PI, 1e-13) / std::f64::consts::PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_quadrature_oracle() {
        for &(n, z) in &[(0u32, 1.0), (1, 1.0), (2, 1.0), (1, 2.0), (0, 0.3), (3, 4.0), (5, 0.5)] {
            let series = bessel_i_series(n, z);
            let quad = oracle::bessel_i_quadrature(n, z);
            assert!(
                (series - quad).abs() <= 1e-11 * quad.abs().max(1.0),
                "I_{n}({z}): series {series} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn frozen_oracle_values() {
        // Values frozen from the quadrature oracle above.
        assert!((bessel_i_series(0, 1.0) - 1.2660658777520084).abs() < 1e-14);
        assert!((bessel_i_series(1, 1.0) - 0.5651591039924851).abs() < 1e-14);
        assert!((bessel_i_series(1, 2.0) - 1.5906368546373291).abs() < 1e-13);
    }

    #[test]
    fn bessel_i_edge_values() {
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert!((bessel_i(1, 2.0).unwrap() - 1.5906369).abs() < 1e-6);
    }

    #[test]
    fn bessel_i_range_errors() {
        assert!(bessel_i(0, 50.1).is_err());
        assert!(bessel_i(0, -0.1).is_err());
        assert!(bessel_i(2, 1.0).is_err());
    }

    #[test]
    fn psi_edge_values() {
        // ψ_c(0) = c, ψ_0 ≡ 0, and ψ_1(1) = I_1(2).
        assert_eq!(psi_c(0.7, 0.0), 0.7);
        assert_eq!(psi_c(0.0, 3.0), 0.0);
        let i12 = oracle::bessel_i_quadrature(1, 2.0);
        assert!((psi_c(1.0, 1.0) - i12).abs() < 1e-11);
    }

    #[test]
    fn psi_identity_against_bessel_form() {
        // √(c/y) I_1(2√(cy)) for a few (c, y) away from y = 0.
        for &(c, y) in &[(0.5f64, 1.0f64), (1.3, 2.5), (0.1, 7.0)] {
            let direct = (c / y).sqrt() * bessel_i_series(1, 2.0 * (c * y).sqrt());
            assert!((psi_c(c, y) - direct).abs() < 1e-13 * direct.max(1.0));
        }
    }

    #[test]
    fn psi_prime_matches_finite_difference() {
        let (c, y, h) = (0.8, 1.7, 1e-5);
        let fd = (psi_c(c, y + h) - psi_c(c, y - h)) / (2.0 * h);
        assert!((psi_c_prime(c, y) - fd).abs() < 1e-8);
        assert!((psi_c_prime(c, 0.0) - c * c / 2.0).abs() < 1e-15);
    }
}
