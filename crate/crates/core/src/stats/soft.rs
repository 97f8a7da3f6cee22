//! Soft retrieval kernel: a periodized Gaussian bump of width ~π/M around
//! zero, evaluated both as a wrapped sum over images and through its
//! Fourier series. The two forms are tied by Poisson summation and are
//! cross-checked against each other on every sample.

use std::f64::consts::{PI, TAU};

/// Half-width of the image sum; the first omitted image is bounded by
/// e^{-24.5 M²}, negligible for M ≥ 2.
const K_IMAGES: i64 = 3;

/// Direct wrapped-Gaussian form Σ_{|k|≤3} exp(-(M²/2π²)(Δ - 2πk)²),
/// with Δ reduced to [-π, π) first.
pub fn soft_kernel_direct(delta: f64, vocab_size: usize) -> f64 {
    let m2 = (vocab_size * vocab_size) as f64;
    let alpha = m2 / (2.0 * PI * PI);
    let d = wrap_symmetric(delta);
    let mut sum = 0.0;
    for k in -K_IMAGES..=K_IMAGES {
        let x = d - TAU * k as f64;
        sum += (-alpha * x * x).exp();
    }
    // tail certificate: next image at |d - 2π·4| ≥ 7π
    let tail = (-alpha * (7.0 * PI) * (7.0 * PI)).exp();
    assert!(tail < 1e-30, "wrapped-Gaussian truncation too aggressive");
    sum
}

/// Fourier form (√(π/2)/M) Σ_n e^{-π²n²/(2M²)} cos(nΔ), truncated once the
/// weight drops below 1e-18.
pub fn soft_kernel_fourier(delta: f64, vocab_size: usize) -> f64 {
    let m = vocab_size as f64;
    let rate = PI * PI / (2.0 * m * m);
    let mut sum = 1.0;
    let mut n = 1.0;
    loop {
        let w = (-rate * n * n).exp();
        if w < 1e-18 {
            break;
        }
        sum += 2.0 * w * (n * delta).cos();
        n += 1.0;
    }
    (PI / 2.0).sqrt() / m * sum
}

/// Direct evaluation with the Poisson-summation cross-check.
pub fn soft_kernel(delta: f64, vocab_size: usize) -> f64 {
    let direct = soft_kernel_direct(delta, vocab_size);
    let fourier = soft_kernel_fourier(delta, vocab_size);
    assert!(
        (direct - fourier).abs() <= 1e-10,
        "soft kernel forms disagree: direct {direct} vs fourier {fourier} at delta {delta}"
    );
    direct
}

#[inline]
fn wrap_symmetric(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn peak_value_is_one_up_to_images() {
        // At Δ = 0 the kernel is 1 + 2e^{-2M²} + ... ≈ 1.
        let v = soft_kernel(0.0, 8);
        assert!((v - 1.0).abs() < 1e-10);
        let v2 = soft_kernel(0.0, 2);
        assert!((v2 - (1.0 + 2.0 * (-8.0f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn forms_agree_on_random_angles() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &m in &[2usize, 8, 32] {
            for _ in 0..10_000 {
                let a = rng.gen::<f64>() * 300.0 - 150.0;
                let b = rng.gen::<f64>() * 300.0 - 150.0;
                let d = soft_kernel_direct(a - b, m);
                let f = soft_kernel_fourier(a - b, m);
                assert!((d - f).abs() <= 1e-10, "M={m}, delta={}", a - b);
            }
        }
    }

    #[test]
    fn kernel_is_periodic_and_even() {
        for &m in &[2usize, 8] {
            for i in 0..50 {
                let d = -8.0 + 0.31 * i as f64;
                assert!((soft_kernel_direct(d, m) - soft_kernel_direct(-d, m)).abs() < 1e-12);
                assert!((soft_kernel_direct(d, m) - soft_kernel_direct(d + TAU, m)).abs() < 1e-12);
            }
        }
    }
}
