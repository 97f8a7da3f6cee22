//! Test functions on the torus, given by their Fourier coefficients:
//! φ(θ) = Σ_ξ φ̂(ξ) e^{iξθ}.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    /// Sparse (frequency, coefficient) pairs.
    coeffs: Vec<(i64, Complex64)>,
}

impl TestFunction {
    pub fn from_coeffs(coeffs: Vec<(i64, Complex64)>) -> Self {
        TestFunction { coeffs }
    }

    /// φ(θ) = e^{inθ}.
    pub fn harmonic(n: i64) -> Self {
        TestFunction {
            coeffs: vec![(n, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn constant(c: f64) -> Self {
        TestFunction {
            coeffs: vec![(0, Complex64::new(c, 0.0))],
        }
    }

    pub fn coeffs(&self) -> &[(i64, Complex64)] {
        &self.coeffs
    }

    /// φ̂(ξ), zero off the stored support.
    pub fn coeff(&self, xi: i64) -> Complex64 {
        self.coeffs
            .iter()
            .find(|(n, _)| *n == xi)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn max_frequency(&self) -> i64 {
        self.coeffs.iter().map(|(n, _)| n.abs()).max().unwrap_or(0)
    }

    /// Whether φ is real-valued: φ̂(-ξ) = conj(φ̂(ξ)) on the support.
    pub fn is_real(&self) -> bool {
        self.coeffs
            .iter()
            .all(|&(n, c)| (self.coeff(-n) - c.conj()).norm() < 1e-15)
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(n, c) in &self.coeffs {
            let (s, cc) = (n as f64 * theta).sin_cos();
            acc += c * Complex64::new(cc, s);
        }
        acc
    }
}
