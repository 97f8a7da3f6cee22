//! Streaming central-moment accumulators over complex channels.
//!
//! All estimators are single-pass folds. States merge associatively with
//! the standard mean/co-moment combination formulas, so a fixed reduction
//! tree over replicate-index ranges yields results independent of thread
//! count. Central (Welford-style) updates keep constants exactly at zero
//! covariance and avoid the cancellation of raw-moment accumulation.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Mean and componentwise second central moments of one complex channel.
#[derive(Debug, Clone, Copy)]
pub struct MeanAcc {
    pub count: u64,
    pub mean: Complex64,
    /// Σ (re - mean.re)², Σ (im - mean.im)².
    pub m2_re: f64,
    pub m2_im: f64,
}

impl MeanAcc {
    pub fn new() -> Self {
        MeanAcc {
            count: 0,
            mean: ZERO,
            m2_re: 0.0,
            m2_im: 0.0,
        }
    }

    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        let d = x - self.mean;
        let inv = 1.0 / self.count as f64;
        self.mean += d * inv;
        let d2 = x - self.mean;
        self.m2_re += d.re * d2.re;
        self.m2_im += d.im * d2.im;
    }

    pub fn merge(&mut self, other: &MeanAcc) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = other.mean - self.mean;
        self.m2_re += other.m2_re + d.re * d.re * na * nb / n;
        self.m2_im += other.m2_im + d.im * d.im * na * nb / n;
        self.mean += d * (nb / n);
        self.count += other.count;
    }

    /// Standard error of the mean, per component.
    pub fn std_error(&self) -> (f64, f64) {
        if self.count < 2 {
            return (0.0, 0.0);
        }
        let n = self.count as f64;
        (
            (self.m2_re / (n - 1.0) / n).max(0.0).sqrt(),
            (self.m2_im / (n - 1.0) / n).max(0.0).sqrt(),
        )
    }
}

/// Central co-moments up to third order of a complex triple (x, y, z),
/// with plain (non-conjugated) products throughout.
#[derive(Debug, Clone, Copy)]
pub struct TripleAcc {
    pub count: u64,
    pub mean_x: Complex64,
    pub mean_y: Complex64,
    pub mean_z: Complex64,
    /// S_ab = Σ (a - ā)(b - b̄)
    pub s_xy: Complex64,
    pub s_xz: Complex64,
    pub s_yz: Complex64,
    /// S_xyz = Σ (x - x̄)(y - ȳ)(z - z̄)
    pub s_xyz: Complex64,
}

impl TripleAcc {
    pub fn new() -> Self {
        TripleAcc {
            count: 0,
            mean_x: ZERO,
            mean_y: ZERO,
            mean_z: ZERO,
            s_xy: ZERO,
            s_xz: ZERO,
            s_yz: ZERO,
            s_xyz: ZERO,
        }
    }

    pub fn push(&mut self, x: Complex64, y: Complex64, z: Complex64) {
        let single = TripleAcc {
            count: 1,
            mean_x: x,
            mean_y: y,
            mean_z: z,
            s_xy: ZERO,
            s_xz: ZERO,
            s_yz: ZERO,
            s_xyz: ZERO,
        };
        self.merge(&single);
    }

    pub fn merge(&mut self, other: &TripleAcc) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        let dz = other.mean_z - self.mean_z;
        let w = na * nb / n;

        // third order first: it consumes the unmerged pair sums
        let ca = nb / n;
        let cb = na / n;
        self.s_xyz = self.s_xyz + other.s_xyz
            - ca * (dx * self.s_yz + dy * self.s_xz + dz * self.s_xy)
            + cb * (dx * other.s_yz + dy * other.s_xz + dz * other.s_xy)
            + dx * dy * dz * (na * nb * (na - nb) / (n * n));

        self.s_xy += other.s_xy + dx * dy * w;
        self.s_xz += other.s_xz + dx * dz * w;
        self.s_yz += other.s_yz + dy * dz * w;

        self.mean_x += dx * ca;
        self.mean_y += dy * ca;
        self.mean_z += dz * ca;
        self.count += other.count;
    }

    /// Unbiased covariance of (x, y): S_xy / (n - 1).
    pub fn covariance_xy(&self) -> Complex64 {
        if self.count < 2 {
            return ZERO;
        }
        self.s_xy / (self.count as f64 - 1.0)
    }

    /// Plug-in third joint cumulant: S_xyz / n.
    pub fn cumulant3(&self) -> Complex64 {
        if self.count == 0 {
            return ZERO;
        }
        self.s_xyz / self.count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn naive_cov(xs: &[Complex64], ys: &[Complex64]) -> Complex64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<Complex64>() / n;
        let my = ys.iter().sum::<Complex64>() / n;
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<Complex64>()
            / (n - 1.0)
    }

    fn naive_cum3(xs: &[Complex64], ys: &[Complex64], zs: &[Complex64]) -> Complex64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<Complex64>() / n;
        let my = ys.iter().sum::<Complex64>() / n;
        let mz = zs.iter().sum::<Complex64>() / n;
        xs.iter()
            .zip(ys)
            .zip(zs)
            .map(|((x, y), z)| (x - mx) * (y - my) * (z - mz))
            .sum::<Complex64>()
            / n
    }

    fn random_data(seed: u64, n: usize) -> Vec<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() * 2.0))
            .collect()
    }

    #[test]
    fn matches_two_pass_reference() {
        let (xs, ys, zs) = (random_data(1, 500), random_data(2, 500), random_data(3, 500));
        let mut acc = TripleAcc::new();
        for i in 0..500 {
            acc.push(xs[i], ys[i], zs[i]);
        }
        assert!((acc.covariance_xy() - naive_cov(&xs, &ys)).norm() < 1e-12);
        assert!((acc.cumulant3() - naive_cum3(&xs, &ys, &zs)).norm() < 1e-12);
    }

    #[test]
    fn merge_equals_sequential() {
        let (xs, ys, zs) = (random_data(4, 301), random_data(5, 301), random_data(6, 301));
        let mut seq = TripleAcc::new();
        for i in 0..301 {
            seq.push(xs[i], ys[i], zs[i]);
        }
        // merge in uneven chunks
        let mut merged = TripleAcc::new();
        for chunk in [0..97, 97..150, 150..301] {
            let mut part = TripleAcc::new();
            for i in chunk {
                part.push(xs[i], ys[i], zs[i]);
            }
            merged.merge(&part);
        }
        assert!((seq.covariance_xy() - merged.covariance_xy()).norm() < 1e-12);
        assert!((seq.cumulant3() - merged.cumulant3()).norm() < 1e-12);
        assert!((seq.mean_x - merged.mean_x).norm() < 1e-14);
    }

    #[test]
    fn constant_channel_gives_exact_zero() {
        let xs = random_data(7, 64);
        let c = Complex64::new(0.1, 0.0);
        let mut acc = TripleAcc::new();
        for &x in &xs {
            acc.push(x, c, x);
        }
        assert_eq!(acc.covariance_xy(), ZERO);
        assert_eq!(acc.cumulant3(), ZERO);
    }

    #[test]
    fn mean_acc_basics() {
        let mut acc = MeanAcc::new();
        for &x in &[1.0, 2.0, 3.0, 4.0] {
            acc.push(Complex64::new(x, -x));
        }
        assert!((acc.mean.re - 2.5).abs() < 1e-15);
        let (se_re, se_im) = acc.std_error();
        // sd of {1,2,3,4} is √(5/3); SE = sd/2
        let expect = (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((se_re - expect).abs() < 1e-14);
        assert!((se_im - expect).abs() < 1e-14);

        let mut a = MeanAcc::new();
        let mut b = MeanAcc::new();
        for &x in &[1.0, 2.0] {
            a.push(Complex64::new(x, 0.0));
        }
        for &x in &[3.0, 4.0] {
            b.push(Complex64::new(x, 0.0));
        }
        a.merge(&b);
        assert!((a.mean.re - acc.mean.re).abs() < 1e-15);
        assert!((a.m2_re - acc.m2_re).abs() < 1e-13);
    }
}
