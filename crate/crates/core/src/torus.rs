//! Torus geometry: angles live on 𝕋 = ℝ/2πℤ but are stored as unwrapped
//! reals; periodicity is applied only where it matters (distances, decode).

use std::f64::consts::TAU;

/// Canonical representative in [0, 2π).
#[inline]
pub fn wrap(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r == TAU {
        0.0
    } else {
        r
    }
}

/// Torus distance |a - b|_𝕋 ∈ [0, π].
#[inline]
pub fn dist(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(TAU - d)
}

/// Nearest codeword index in {0, .., m-1} for the codebook θ_k = 2πk/m.
/// Exact ties are broken toward the smaller index.
pub fn decode_nearest(theta: f64, vocab_size: usize) -> usize {
    debug_assert!(vocab_size >= 2);
    let m = vocab_size;
    let u = wrap(theta) * m as f64 / TAU; // in [0, m)
    let base = u.floor();
    let lo = (base as usize) % m;
    let hi = (lo + 1) % m;
    // fractional cell coordinate; u - floor(u) is exact in IEEE arithmetic
    let f = u - base;
    if f < 0.5 {
        lo
    } else if f > 0.5 {
        hi
    } else {
        lo.min(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_and_dist_basics() {
        assert_eq!(wrap(0.0), 0.0);
        assert!((wrap(-0.1) - (TAU - 0.1)).abs() < 1e-15);
        assert!((dist(0.1, TAU + 0.2) - 0.1).abs() < 1e-12);
        assert!((dist(0.0, std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn decode_exact_codeword() {
        assert_eq!(decode_nearest(TAU * 3.0 / 8.0, 8), 3);
    }

    #[test]
    fn decode_within_half_cell() {
        let theta = TAU * 3.0 / 8.0 + std::f64::consts::PI / 8.0 * 0.5;
        assert_eq!(decode_nearest(theta, 8), 3);
    }

    #[test]
    fn decode_tie_breaks_to_smaller_index() {
        // Exactly midway between codewords 0 and 1 for M = 8: the cell
        // coordinate evaluates to exactly 0.5 and the tie goes to index 0.
        let theta = std::f64::consts::PI / 8.0;
        assert_eq!(decode_nearest(theta, 8), 0);
        // M = 2: midway between codewords 0 and 1 at θ = π/2.
        assert_eq!(decode_nearest(std::f64::consts::PI / 2.0, 2), 0);
    }

    proptest! {
        #[test]
        fn decode_recovers_codeword_under_small_shift(
            m in 2usize..40,
            k in 0usize..40,
            frac in -0.49f64..0.49,
            turns in -3i32..4,
        ) {
            let k = k % m;
            let cell = TAU / m as f64;
            let theta = cell * k as f64 + frac * cell + turns as f64 * TAU;
            prop_assert_eq!(decode_nearest(theta, m), k);
        }

        #[test]
        fn dist_is_symmetric_and_bounded(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let d = dist(a, b);
            prop_assert!(d >= 0.0 && d <= std::f64::consts::PI + 1e-12);
            prop_assert!((d - dist(b, a)).abs() < 1e-12);
        }
    }
}
