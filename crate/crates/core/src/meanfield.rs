//! Deterministic solvers for the limiting equations.
//!
//! State lives in Fourier space: a field f̂(σ_i, n) on S uniform σ-midpoints
//! × frequencies |n| ≤ n_max. The layered transport equation reads
//!
//!   ∂_t f̂(t,σ,n) = Σ_ξ n ξ ŵ_β(ξ) f̂(t,σ,n-ξ) ∫_0^σ k_λ(σ,τ) f̂(t,τ,ξ) dτ,
//!
//! and the auto-/cross-correlation fields evolve under its linearization:
//! the autocorrelation is transported by the mean-field coefficient, while
//! the cross-correlation picks up two extra terms — transport of the mean
//! field against the correlation, and a forcing k_λ(σ,σ₀)(ŵ' * A)(σ₀)
//! injected at the source position.
//!
//! The σ-integral uses exact cell integrals of k_λ against piecewise-
//! constant field values, which keeps the row normalization exact and
//! avoids the 1/σ near-singularity. Time stepping is classical RK4. The
//! n = 0 mode has an identically zero right-hand side, so mass is
//! conserved exactly; Hermitian fields are evolved by computing n ≥ 1 and
//! mirroring, so their symmetry is exact as well.

use crate::alibi::{graphon_k, LAMBDA_ZERO_EPS};
use crate::error::{Error, Result};
use crate::interaction::fourier_w;
use crate::params::ModelParams;
use crate::testfn::TestFunction;
use num_complex::Complex64;
use rayon::prelude::*;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex Fourier coefficients on the σ-grid × truncated frequency set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    s: usize,
    n_max: usize,
    hermitian: bool,
    /// row-major: coeffs[i * (2 n_max + 1) + (n + n_max)]
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(s: usize, n_max: usize, hermitian: bool) -> Self {
        SpectralField {
            s,
            n_max,
            hermitian,
            coeffs: vec![ZERO; s * (2 * n_max + 1)],
        }
    }

    /// The uniform probability law: f̂ = 1_{n=0}.
    pub fn uniform(s: usize, n_max: usize) -> Self {
        let mut f = Self::zeros(s, n_max, true);
        for i in 0..s {
            f.set(i, 0, Complex64::new(1.0, 0.0));
        }
        f
    }

    pub fn from_fn(
        s: usize,
        n_max: usize,
        hermitian: bool,
        f: impl Fn(f64, i64) -> Complex64,
    ) -> Self {
        let mut out = Self::zeros(s, n_max, hermitian);
        for i in 0..s {
            let sigma = out.sigma(i);
            for n in -(n_max as i64)..=n_max as i64 {
                out.set(i, n, f(sigma, n));
            }
        }
        out
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Midpoint σ_i = (i + 1/2)/S, i = 0..S-1.
    #[inline]
    pub fn sigma(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.s as f64
    }

    #[inline]
    pub fn get(&self, i: usize, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            return ZERO;
        }
        self.coeffs[i * (2 * self.n_max + 1) + (n + self.n_max as i64) as usize]
    }

    #[inline]
    pub fn set(&mut self, i: usize, n: i64, v: Complex64) {
        let idx = i * (2 * self.n_max + 1) + (n + self.n_max as i64) as usize;
        self.coeffs[idx] = v;
    }

    /// sup_i |f̂(σ_i, ±n_max)|: the discarded-tail indicator.
    pub fn tail_sup(&self) -> f64 {
        let nm = self.n_max as i64;
        (0..self.s)
            .map(|i| self.get(i, nm).norm().max(self.get(i, -nm).norm()))
            .fold(0.0, f64::max)
    }

    /// sup_i |f̂(σ_i, 0) - 1| for probability-law fields.
    pub fn mass_error(&self) -> f64 {
        (0..self.s)
            .map(|i| (self.get(i, 0) - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// sup over (σ, n) of |f̂(σ,-n) - conj(f̂(σ,n))|.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.s {
            for n in 0..=self.n_max as i64 {
                d = d.max((self.get(i, -n) - self.get(i, n).conj()).norm());
            }
        }
        d
    }

    pub fn sup_difference(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.s, other.s);
        assert_eq!(self.n_max, other.n_max);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// CSV rows (sigma, n, re, im).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,n,re,im\n");
        for i in 0..self.s {
            for n in -(self.n_max as i64)..=self.n_max as i64 {
                let v = self.get(i, n);
                out.push_str(&format!("{},{},{},{}\n", self.sigma(i), n, v.re, v.im));
            }
        }
        out
    }
}

/// Precomputed exact cell integrals of k_λ(σ_i, ·) on the midpoint grid.
///
/// Every row integral ∫ k_λ(σ_i, τ) v(τ) dτ over (edge, σ_i] decomposes
/// into full cells plus the half cell owned by row i. The field is
/// reconstructed linearly within each cell (midpoint value plus a
/// difference slope) and k_λ is integrated against that reconstruction in
/// closed form; the value-weight rows Q(i,j) = c_i d_j, Q(i,i) = c_i h_i
/// sum to exactly 1 when the lower edge is 0, and a constant field sees
/// zero slopes, so normalization is exact. The slope correction keeps the
/// rule second-order down to the smallest rows, where the ~1/σ kernel
/// weight would otherwise amplify the half-cell bias to first order.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    s: usize,
    /// c_i = e^{-λσ_i} / (1 - e^{-λσ_i}), or 1/σ_i when λ = 0.
    c: Vec<f64>,
    /// full-cell value masses d_j = e^{λ(j+1)/S} - e^{λ j/S}, or 1/S.
    d: Vec<f64>,
    /// half-cell value masses h_i = e^{λσ_i} - e^{λ i/S}, or 1/(2S).
    h: Vec<f64>,
    /// full-cell slope masses λ∫_cell e^{λτ}(τ - mid) dτ; 0 when λ = 0.
    sm: Vec<f64>,
    /// half-cell slope masses λ∫_{cell start}^{σ_i} e^{λτ}(τ - σ_i) dτ,
    /// or -1/(8S²) when λ = 0.
    hm: Vec<f64>,
    /// probe factor at σ = 1: e^{-λ}/(1 - e^{-λ}), or 1.
    c_probe: f64,
}

impl KernelQuadrature {
    pub fn new(s: usize, lambda: f64) -> Self {
        let sf = s as f64;
        let delta = 1.0 / sf;
        if lambda.abs() < LAMBDA_ZERO_EPS {
            return KernelQuadrature {
                s,
                c: (0..s).map(|i| sf / (i as f64 + 0.5)).collect(),
                d: vec![delta; s],
                h: vec![0.5 * delta; s],
                sm: vec![0.0; s],
                hm: vec![-delta * delta / 8.0; s],
                c_probe: 1.0,
            };
        }
        let c = (0..s)
            .map(|i| {
                let sigma = (i as f64 + 0.5) / sf;
                (-lambda * sigma).exp() / (-(-lambda * sigma).exp_m1())
            })
            .collect();
        let em_full = (lambda / sf).exp_m1();
        let em_half = (lambda / (2.0 * sf)).exp_m1();
        let d: Vec<f64> = (0..s).map(|j| (lambda * j as f64 / sf).exp() * em_full).collect();
        let h = (0..s).map(|i| (lambda * i as f64 / sf).exp() * em_half).collect();
        // λ ∫_0^Δ e^{λx}(x - Δ/2) dx = Δ((u/2)(e^u+1) - (e^u-1))/u with
        // u = λΔ; series u²/12 + u³/24 + u⁴/80 for small u.
        let u = lambda * delta;
        let full_moment = if u.abs() < 1e-4 {
            delta * (u * u / 12.0 + u * u * u / 24.0)
        } else {
            (delta / 2.0) * (u.exp_m1() + 2.0) - u.exp_m1() / lambda
        };
        // λ ∫_0^{Δ/2} e^{λx}(x - Δ/2) dx = (v - (e^v - 1))/λ with v = λΔ/2.
        let v = 0.5 * u;
        let half_moment = (v - v.exp_m1()) / lambda;
        let sm = (0..s)
            .map(|j| (lambda * j as f64 / sf).exp() * full_moment)
            .collect();
        let hm = (0..s)
            .map(|i| (lambda * i as f64 / sf).exp() * half_moment)
            .collect();
        KernelQuadrature {
            s,
            c,
            d,
            h,
            sm,
            hm,
            c_probe: (-lambda).exp() / (-(-lambda).exp_m1()),
        }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Σ_j Q(i, j) over the value weights with lower edge 0; equals 1 up
    /// to rounding.
    pub fn row_sum(&self, i: usize) -> f64 {
        let full: f64 = self.d[..i].iter().sum();
        self.c[i] * (full + self.h[i])
    }

    /// out[i] = ∫_{edge}^{σ_i} k_λ(σ_i, τ) v(τ) dτ for all rows; rows with
    /// σ_i below the edge get 0. `lo_edge` indexes cell edges: the lower
    /// limit is lo_edge / S. Slopes use central differences inside the
    /// active domain and one-sided differences at its ends, so a
    /// discontinuity at the lower edge is never smeared across it.
    pub fn apply(&self, vals: &[Complex64], lo_edge: usize, out: &mut [Complex64]) {
        let sf = self.s as f64;
        let lo = lo_edge;
        let hi = self.s;
        let slope = |j: usize| -> Complex64 {
            let left = j > lo;
            let right = j + 1 < hi;
            match (left, right) {
                (true, true) => (vals[j + 1] - vals[j - 1]) * (0.5 * sf),
                (false, true) => (vals[j + 1] - vals[j]) * sf,
                (true, false) => (vals[j] - vals[j - 1]) * sf,
                (false, false) => ZERO,
            }
        };
        let mut prefix = ZERO;
        for i in 0..self.s {
            if i < lo {
                out[i] = ZERO;
                continue;
            }
            let si = slope(i);
            out[i] = (prefix + vals[i] * self.h[i] + si * self.hm[i]) * self.c[i];
            prefix += vals[i] * self.d[i] + si * self.sm[i];
        }
    }

    pub fn apply_real(&self, vals: &[f64], lo_edge: usize, out: &mut [f64]) {
        let sf = self.s as f64;
        let lo = lo_edge;
        let hi = self.s;
        let slope = |j: usize| -> f64 {
            let left = j > lo;
            let right = j + 1 < hi;
            match (left, right) {
                (true, true) => (vals[j + 1] - vals[j - 1]) * (0.5 * sf),
                (false, true) => (vals[j + 1] - vals[j]) * sf,
                (true, false) => (vals[j] - vals[j - 1]) * sf,
                (false, false) => 0.0,
            }
        };
        let mut prefix = 0.0;
        for i in 0..self.s {
            if i < lo {
                out[i] = 0.0;
                continue;
            }
            let si = slope(i);
            out[i] = (prefix + vals[i] * self.h[i] + si * self.hm[i]) * self.c[i];
            prefix += vals[i] * self.d[i] + si * self.sm[i];
        }
    }

    /// ∫_{edge}^{1} k_λ(1, τ) v(τ) dτ: the probe row at the top boundary,
    /// made of full cells only.
    pub fn probe_one(&self, vals: &[f64], lo_edge: usize) -> f64 {
        let sf = self.s as f64;
        let lo = lo_edge;
        let hi = self.s;
        let slope = |j: usize| -> f64 {
            let left = j > lo;
            let right = j + 1 < hi;
            match (left, right) {
                (true, true) => (vals[j + 1] - vals[j - 1]) * (0.5 * sf),
                (false, true) => (vals[j + 1] - vals[j]) * sf,
                (true, false) => (vals[j] - vals[j - 1]) * sf,
                (false, false) => 0.0,
            }
        };
        let mut prefix = 0.0;
        for i in lo..self.s {
            prefix += vals[i] * self.d[i] + slope(i) * self.sm[i];
        }
        prefix * self.c_probe
    }
}

/// Snap σ₀ to the nearest interior cell edge i₀/S, i₀ ∈ [1, S-1].
pub fn snap_sigma0(s: usize, sigma0: f64) -> Result<(usize, f64)> {
    if !(sigma0 > 0.0 && sigma0 < 1.0) {
        return Err(Error::Domain(format!(
            "sigma0 must be in (0,1), got {sigma0}"
        )));
    }
    let i0 = (sigma0 * s as f64).round() as i64;
    if i0 < 1 || i0 > s as i64 - 1 {
        return Err(Error::Domain(format!(
            "sigma0 = {sigma0} outside grid coverage at S = {s}"
        )));
    }
    Ok((i0 as usize, i0 as f64 / s as f64))
}

/// ŵ_β(ξ) for |ξ| ≤ n_max.
fn kernel_coeffs(beta: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| fourier_w(n as i64, beta)).collect()
}

/// Shared pieces of one linearized-transport right-hand side evaluation.
struct RhsContext {
    quad: KernelQuadrature,
    what: Vec<f64>,
    n_max: usize,
    s: usize,
}

impl RhsContext {
    fn new(params: &ModelParams, s: usize, n_max: usize) -> Self {
        RhsContext {
            quad: KernelQuadrature::new(s, params.lambda),
            what: kernel_coeffs(params.beta, n_max),
            n_max,
            s,
        }
    }

    #[inline]
    fn w(&self, xi: i64) -> f64 {
        self.what[xi.unsigned_abs() as usize]
    }

    /// Kernel integrals K(i, ξ) = ∫_{edge}^{σ_i} k_λ(σ_i, τ) v̂(τ, ξ) dτ for
    /// all ξ ≠ 0 (the ξ = 0 column is never consumed: the ξ factor kills it).
    fn kernel_columns(&self, field: &SpectralField, lo_edge: usize) -> Vec<Vec<Complex64>> {
        let nm = self.n_max as i64;
        (-nm..=nm)
            .map(|xi| {
                let mut col = vec![ZERO; self.s];
                if xi != 0 {
                    let vals: Vec<Complex64> = (0..self.s).map(|i| field.get(i, xi)).collect();
                    self.quad.apply(&vals, lo_edge, &mut col);
                }
                col
            })
            .collect()
    }
}

#[inline]
fn col_index(n_max: usize, xi: i64) -> usize {
    (xi + n_max as i64) as usize
}

/// rhs(i, n) = Σ_{ξ≠0} n ξ ŵ(ξ) a(i, n-ξ) k_cols[ξ][i], written into `out`,
/// respecting the carried field's symmetry class.
fn transport_rhs(
    ctx: &RhsContext,
    carrier: &SpectralField,
    k_cols: &[Vec<Complex64>],
    out: &mut SpectralField,
) {
    let nm = ctx.n_max as i64;
    let n_lo = if carrier.hermitian { 1 } else { -nm };
    let rows: Vec<Vec<Complex64>> = (0..ctx.s)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity((nm - n_lo + 1) as usize);
            for n in n_lo..=nm {
                if n == 0 {
                    row.push(ZERO);
                    continue;
                }
                let mut acc = ZERO;
                for xi in -nm..=nm {
                    if xi == 0 {
                        continue;
                    }
                    let a = carrier.get(i, n - xi);
                    if a == ZERO {
                        continue;
                    }
                    let coeff = (n * xi) as f64 * ctx.w(xi);
                    acc += a * k_cols[col_index(ctx.n_max, xi)][i] * coeff;
                }
                row.push(acc);
            }
            row
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (k, n) in (n_lo..=nm).enumerate() {
            out.set(i, n, row[k]);
            if carrier.hermitian {
                out.set(i, -n, row[k].conj());
            }
        }
        out.set(i, 0, ZERO);
    }
}

fn axpy(y: &mut SpectralField, a: f64, x: &SpectralField) {
    for (yi, xi) in y.coeffs.iter_mut().zip(&x.coeffs) {
        *yi += a * xi;
    }
}

/// Result of a field evolution with its truncation monitor.
#[derive(Debug, Clone)]
pub struct FieldEvolution {
    pub field: SpectralField,
    /// running sup of the discarded-tail indicator over all steps
    pub tail_sup: f64,
}

impl FieldEvolution {
    pub fn tail_warning(&self) -> bool {
        self.tail_sup > 1e-6
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Step(format!("dt must be > 0, got {dt}")));
    }
    Ok(())
}

fn step_sizes(dt: f64, t_end: f64) -> Vec<f64> {
    let n_full = (t_end / dt).floor() as u64;
    let rem = t_end - n_full as f64 * dt;
    (0..n_full)
        .map(|_| dt)
        .chain(if rem > 1e-12 * dt { Some(rem) } else { None })
        .collect()
}

/// March a coupled set of fields with classical RK4, landing exactly on
/// t_end (last partial step shortened). Returns the tail monitor sup.
fn rk4_march<F: FnMut(&[SpectralField], &mut [SpectralField])>(
    fields: &mut [SpectralField],
    dt: f64,
    t_end: f64,
    mut rhs: F,
) -> f64 {
    let m = fields.len();
    let mut k1: Vec<SpectralField> = fields.to_vec();
    let mut k2 = fields.to_vec();
    let mut k3 = fields.to_vec();
    let mut k4 = fields.to_vec();
    let mut stage = fields.to_vec();
    let mut tail: f64 = fields.iter().map(|f| f.tail_sup()).fold(0.0, f64::max);

    for h in step_sizes(dt, t_end) {
        rhs(fields, &mut k1);
        for j in 0..m {
            stage[j].coeffs.copy_from_slice(&fields[j].coeffs);
            axpy(&mut stage[j], 0.5 * h, &k1[j]);
        }
        rhs(&stage, &mut k2);
        for j in 0..m {
            stage[j].coeffs.copy_from_slice(&fields[j].coeffs);
            axpy(&mut stage[j], 0.5 * h, &k2[j]);
        }
        rhs(&stage, &mut k3);
        for j in 0..m {
            stage[j].coeffs.copy_from_slice(&fields[j].coeffs);
            axpy(&mut stage[j], h, &k3[j]);
        }
        rhs(&stage, &mut k4);
        for j in 0..m {
            let c = h / 6.0;
            for idx in 0..fields[j].coeffs.len() {
                fields[j].coeffs[idx] += c
                    * (k1[j].coeffs[idx]
                        + 2.0 * k2[j].coeffs[idx]
                        + 2.0 * k3[j].coeffs[idx]
                        + k4[j].coeffs[idx]);
            }
        }
        tail = tail.max(fields.iter().map(|f| f.tail_sup()).fold(0.0, f64::max));
    }
    tail
}

/// Evolve the mean-field law to time t_end.
pub fn evolve_meanfield(
    f0: &SpectralField,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
) -> Result<FieldEvolution> {
    params.validate()?;
    check_dt(dt)?;
    let ctx = RhsContext::new(params, f0.s(), f0.n_max());
    let mut fields = vec![f0.clone()];
    let tail = rk4_march(&mut fields, dt, t_end, |state, out| {
        let k = ctx.kernel_columns(&state[0], 0);
        transport_rhs(&ctx, &state[0], &k, &mut out[0]);
    });
    Ok(FieldEvolution {
        field: fields.pop().unwrap(),
        tail_sup: tail,
    })
}

/// Â_φ(0, σ, n) = Σ_ξ φ̂(ξ) (f̂₀(σ, n-ξ) - f̂₀(σ, n) f̂₀(σ, -ξ)): the
/// spectrum of f₀ (φ - ⟨φ⟩_{f₀}).
pub fn autocorr_initial(f0: &SpectralField, phi: &TestFunction) -> SpectralField {
    let hermitian = f0.is_hermitian() && phi.is_real();
    let nm = f0.n_max() as i64;
    let mut a = SpectralField::zeros(f0.s(), f0.n_max(), hermitian);
    for i in 0..f0.s() {
        for n in -nm..=nm {
            let mut acc = ZERO;
            for &(xi, coeff) in phi.coeffs() {
                acc += coeff * (f0.get(i, n - xi) - f0.get(i, n) * f0.get(i, -xi));
            }
            a.set(i, n, acc);
        }
    }
    a
}

/// Co-evolved mean field and autocorrelation at t_end.
#[derive(Debug, Clone)]
pub struct AutocorrEvolution {
    pub f: SpectralField,
    pub a: SpectralField,
    pub tail_sup: f64,
}

pub fn evolve_autocorr(
    f0: &SpectralField,
    phi: &TestFunction,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
) -> Result<AutocorrEvolution> {
    params.validate()?;
    check_dt(dt)?;
    let ctx = RhsContext::new(params, f0.s(), f0.n_max());
    let a0 = autocorr_initial(f0, phi);
    let mut fields = vec![f0.clone(), a0];
    let tail = rk4_march(&mut fields, dt, t_end, |state, out| {
        let k = ctx.kernel_columns(&state[0], 0);
        transport_rhs(&ctx, &state[0], &k, &mut out[0]);
        transport_rhs(&ctx, &state[1], &k, &mut out[1]);
    });
    let a = fields.pop().unwrap();
    let f = fields.pop().unwrap();
    Ok(AutocorrEvolution { f, a, tail_sup: tail })
}

/// Co-evolved mean field, autocorrelation, and cross-correlation.
#[derive(Debug, Clone)]
pub struct CrosscorrEvolution {
    pub f: SpectralField,
    pub a: SpectralField,
    pub c: SpectralField,
    pub sigma0_snapped: f64,
    pub tail_sup: f64,
}

pub fn evolve_crosscorr(
    f0: &SpectralField,
    phi: &TestFunction,
    params: &ModelParams,
    sigma0: f64,
    dt: f64,
    t_end: f64,
) -> Result<CrosscorrEvolution> {
    params.validate()?;
    check_dt(dt)?;
    let s = f0.s();
    let n_max = f0.n_max();
    let nm = n_max as i64;
    let (i0, sigma0s) = snap_sigma0(s, sigma0)?;
    let ctx = RhsContext::new(params, s, n_max);
    // pointwise forcing weights k_λ(σ_i, σ₀), zero below the source
    let k_at_source: Vec<f64> = (0..s)
        .map(|i| {
            let sigma = (i as f64 + 0.5) / s as f64;
            if i < i0 {
                0.0
            } else {
                graphon_k(sigma, sigma0s, params.lambda).unwrap_or(0.0)
            }
        })
        .collect();

    let a0 = autocorr_initial(f0, phi);
    let c0 = SpectralField::zeros(s, n_max, a0.is_hermitian() && f0.is_hermitian());
    let mut fields = vec![f0.clone(), a0, c0];
    let tail = rk4_march(&mut fields, dt, t_end, |state, out| {
        let (f, a, c) = (&state[0], &state[1], &state[2]);
        let kf = ctx.kernel_columns(f, 0);
        transport_rhs(&ctx, f, &kf, &mut out[0]);
        transport_rhs(&ctx, a, &kf, &mut out[1]);

        // source-row autocorrelation spectrum at the snapped edge; the
        // midpoint rows i0-1 and i0 straddle it symmetrically
        let a_src: Vec<Complex64> = (-nm..=nm)
            .map(|xi| 0.5 * (a.get(i0 - 1, xi) + a.get(i0, xi)))
            .collect();
        let kc = ctx.kernel_columns(c, i0);

        let rows: Vec<Vec<Complex64>> = (0..s)
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::with_capacity(2 * n_max + 1);
                for n in -nm..=nm {
                    if n == 0 {
                        row.push(ZERO);
                        continue;
                    }
                    let mut acc = ZERO;
                    for xi in -nm..=nm {
                        if xi == 0 {
                            continue;
                        }
                        let coeff = (n * xi) as f64 * ctx.w(xi);
                        let fv = f.get(i, n - xi);
                        if fv != ZERO {
                            let force = kc[col_index(n_max, xi)][i]
                                + k_at_source[i] * a_src[col_index(n_max, xi)];
                            acc += fv * force * coeff;
                        }
                        let cv = c.get(i, n - xi);
                        if cv != ZERO {
                            acc += cv * kf[col_index(n_max, xi)][i] * coeff;
                        }
                    }
                    row.push(acc);
                }
                row
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (k, n) in (-nm..=nm).enumerate() {
                out[2].set(i, n, row[k]);
            }
            out[2].set(i, 0, ZERO);
        }
    });

    let c = fields.pop().unwrap();
    let a = fields.pop().unwrap();
    let f = fields.pop().unwrap();
    Ok(CrosscorrEvolution {
        f,
        a,
        c,
        sigma0_snapped: sigma0s,
        tail_sup: tail,
    })
}

/// Scalar profile g(t, σ_i; σ₀) plus its value at the probe point σ = 1.
#[derive(Debug, Clone)]
pub struct VolterraProfile {
    pub sigma: Vec<f64>,
    pub g: Vec<f64>,
    pub g_at_one: f64,
    pub sigma0_snapped: f64,
}

/// Direct time stepping of ∂_t g = a (k_λ(σ,σ₀) + ∫_{σ₀}^σ k_λ(σ,τ) g dτ),
/// g(0) = 0, with the same cellwise-exact quadrature as the field solver.
/// Serves as the independent oracle for the closed-form solution.
pub fn volterra_g_numeric(
    a: f64,
    lambda: f64,
    sigma0: f64,
    s: usize,
    dt: f64,
    t_end: f64,
) -> Result<VolterraProfile> {
    if a < 0.0 {
        return Err(Error::Domain(format!("coefficient a must be >= 0, got {a}")));
    }
    check_dt(dt)?;
    let (i0, sigma0s) = snap_sigma0(s, sigma0)?;
    let quad = KernelQuadrature::new(s, lambda);
    let k_src: Vec<f64> = (0..s)
        .map(|i| {
            let sigma = (i as f64 + 0.5) / s as f64;
            if i < i0 {
                0.0
            } else {
                graphon_k(sigma, sigma0s, lambda).unwrap()
            }
        })
        .collect();
    let k_src_probe = graphon_k(1.0, sigma0s, lambda).unwrap();

    // state: g on the S midpoints plus the probe value at σ = 1
    let mut g = vec![0.0; s];
    let mut g_probe = 0.0;
    let mut integ = vec![0.0; s];
    let rhs = |g: &[f64], integ: &mut [f64]| -> f64 {
        quad.apply_real(g, i0, integ);
        for i in 0..s {
            integ[i] = if i < i0 { 0.0 } else { a * (k_src[i] + integ[i]) };
        }
        a * (k_src_probe + quad.probe_one(g, i0))
    };

    let mut k = vec![vec![0.0; s]; 4];
    let mut kp = [0.0; 4];
    let mut stage = vec![0.0; s];
    for h in step_sizes(dt, t_end) {
        kp[0] = rhs(&g, &mut integ);
        k[0].copy_from_slice(&integ);
        for i in 0..s {
            stage[i] = g[i] + 0.5 * h * k[0][i];
        }
        kp[1] = rhs(&stage, &mut integ);
        k[1].copy_from_slice(&integ);
        for i in 0..s {
            stage[i] = g[i] + 0.5 * h * k[1][i];
        }
        kp[2] = rhs(&stage, &mut integ);
        k[2].copy_from_slice(&integ);
        for i in 0..s {
            stage[i] = g[i] + h * k[2][i];
        }
        kp[3] = rhs(&stage, &mut integ);
        k[3].copy_from_slice(&integ);
        for i in 0..s {
            g[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        g_probe += h / 6.0 * (kp[0] + 2.0 * kp[1] + 2.0 * kp[2] + kp[3]);
    }

    Ok(VolterraProfile {
        sigma: (0..s).map(|i| (i as f64 + 0.5) / s as f64).collect(),
        g,
        g_at_one: g_probe,
        sigma0_snapped: sigma0s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, lambda: f64) -> ModelParams {
        ModelParams::new(beta, lambda, 64, 8, 1.0).unwrap()
    }

    #[test]
    fn quadrature_rows_are_normalized() {
        for lam in [0.0, 1.0, -2.0, 5.0] {
            for s in [64, 512] {
                let q = KernelQuadrature::new(s, lam);
                for i in [0, 1, s / 2, s - 1] {
                    assert!(
                        (q.row_sum(i) - 1.0).abs() < 1e-10,
                        "row {i} at lambda={lam}, S={s}: {}",
                        q.row_sum(i)
                    );
                }
            }
        }
    }

    #[test]
    fn quadrature_matches_pointwise_kernel_integral() {
        // Against a smooth integrand the cellwise-exact rule agrees with
        // adaptive quadrature of k_λ(σ,·) v(·) to O(S^{-2}).
        let s = 1024;
        let lam = 1.0;
        let q = KernelQuadrature::new(s, lam);
        let v = |t: f64| (2.0 * t).cos();
        let vals: Vec<f64> = (0..s).map(|i| v((i as f64 + 0.5) / s as f64)).collect();
        let mut out = vec![0.0; s];
        q.apply_real(&vals, 0, &mut out);
        let i = s - 1;
        let sigma = (i as f64 + 0.5) / s as f64;
        let exact = crate::special::oracle::integrate(
            |t| graphon_k(sigma, t, lam).unwrap() * v(t),
            0.0,
            sigma * (1.0 - 1e-14),
            1e-12,
        );
        assert!((out[i] - exact).abs() < 5e-6, "{} vs {exact}", out[i]);
    }

    #[test]
    fn uniform_law_is_a_fixed_point() {
        let f0 = SpectralField::uniform(128, 8);
        let ev = evolve_meanfield(&f0, &params(1.0, 1.0), 0.01, 2.0).unwrap();
        assert_eq!(ev.field.sup_difference(&f0), 0.0);
        assert!(!ev.tail_warning());
        assert_eq!(ev.field.mass_error(), 0.0);
    }

    #[test]
    fn dirac_at_common_angle_is_stationary_on_resolved_modes() {
        // A point mass at a common angle is a stationary state of the full
        // dynamics. Its spectrum does not decay, so the truncated
        // convolution loses the ±ξ cancellation within ~ξ_eff of the
        // cutoff; interior modes must still be exactly stationary, and the
        // tail monitor must flag the unresolved field.
        let theta_star = 1.1;
        let n_max = 24i64;
        let f0 = SpectralField::from_fn(64, n_max as usize, true, |_, n| {
            let (s, c) = (-(n as f64) * theta_star).sin_cos();
            Complex64::new(c, s)
        });
        let ev = evolve_meanfield(&f0, &params(1.0, 0.7), 0.005, 0.02).unwrap();
        for i in 0..64 {
            for n in -10..=10i64 {
                let tol = if n.abs() <= 5 { 1e-13 } else { 1e-8 };
                assert!(
                    (ev.field.get(i, n) - f0.get(i, n)).norm() < tol,
                    "interior mode {n} moved: {} vs {}",
                    ev.field.get(i, n),
                    f0.get(i, n)
                );
            }
        }
        // the tail indicator is |f̂(±n_max)| = 1 here, so the monitor fires
        assert!(ev.tail_warning());
    }

    #[test]
    fn mass_and_symmetry_survive_a_nonuniform_evolution() {
        let f0 = SpectralField::from_fn(96, 12, true, |sigma, n| match n {
            0 => Complex64::new(1.0, 0.0),
            1 | -1 => Complex64::new(0.3 * sigma, 0.0),
            _ => ZERO,
        });
        let ev = evolve_meanfield(&f0, &params(1.0, 1.0), 0.005, 1.0).unwrap();
        assert_eq!(ev.field.mass_error(), 0.0);
        assert_eq!(ev.field.hermitian_defect(), 0.0);
        assert!(ev.field.sup_difference(&f0) > 1e-4); // it actually moved
    }

    #[test]
    fn autocorr_is_constant_in_the_uniform_case() {
        let f0 = SpectralField::uniform(64, 6);
        let phi = TestFunction::harmonic(1);
        let ev = evolve_autocorr(&f0, &phi, &params(1.0, 1.0), 0.01, 1.0).unwrap();
        for i in 0..64 {
            for n in -6..=6i64 {
                let expect = if n == 1 { 1.0 } else { 0.0 };
                assert!(
                    (ev.a.get(i, n) - Complex64::new(expect, 0.0)).norm() < 1e-14,
                    "A({i},{n}) = {}",
                    ev.a.get(i, n)
                );
            }
        }
        assert_eq!(ev.f.sup_difference(&f0), 0.0);
    }

    #[test]
    fn autocorr_of_constant_phi_is_zero() {
        let f0 = SpectralField::from_fn(32, 6, true, |sigma, n| match n {
            0 => Complex64::new(1.0, 0.0),
            2 | -2 => Complex64::new(0.1 + 0.2 * sigma, 0.0),
            _ => ZERO,
        });
        let phi = TestFunction::constant(3.0);
        let ev = evolve_autocorr(&f0, &phi, &params(1.0, 0.5), 0.01, 0.7).unwrap();
        for i in 0..32 {
            for n in -6..=6i64 {
                assert!(ev.a.get(i, n).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn autocorr_mass_is_zero_and_hermitian_for_real_phi() {
        let f0 = SpectralField::from_fn(48, 8, true, |sigma, n| match n {
            0 => Complex64::new(1.0, 0.0),
            1 | -1 => Complex64::new(0.25 * sigma, 0.0),
            _ => ZERO,
        });
        let half = Complex64::new(0.5, 0.0);
        let cos_phi = TestFunction::from_coeffs(vec![(1, half), (-1, half)]);
        let ev = evolve_autocorr(&f0, &cos_phi, &params(1.2, 0.8), 0.005, 1.0).unwrap();
        for i in 0..48 {
            assert_eq!(ev.a.get(i, 0), ZERO);
        }
        assert_eq!(ev.a.hermitian_defect(), 0.0);
    }

    #[test]
    fn crosscorr_zero_time_and_causal_support() {
        let f0 = SpectralField::uniform(64, 4);
        let phi = TestFunction::harmonic(1);
        let ev = evolve_crosscorr(&f0, &phi, &params(1.0, 1.0), 0.5, 0.01, 0.0).unwrap();
        assert!((0..64).all(|i| (-4..=4i64).all(|n| ev.c.get(i, n) == ZERO)));

        let ev = evolve_crosscorr(&f0, &phi, &params(1.0, 1.0), 0.5, 0.01, 1.0).unwrap();
        let (i0, _) = snap_sigma0(64, 0.5).unwrap();
        for i in 0..i0 {
            for n in -4..=4i64 {
                assert_eq!(ev.c.get(i, n), ZERO, "row {i} mode {n} below the source");
            }
        }
        // above the source the field is genuinely nonzero at n = 1
        assert!(ev.c.get(63, 1).norm() > 1e-3);
    }

    #[test]
    fn crosscorr_mode_one_matches_volterra_exactly_in_the_uniform_case() {
        // With f uniform and φ = e^{iθ}, the n = 1 component of the
        // cross-correlation satisfies the same discrete system as the
        // scalar Volterra solver; they must agree to rounding.
        let s = 128;
        let f0 = SpectralField::uniform(s, 4);
        let phi = TestFunction::harmonic(1);
        let p = params(1.0, 1.0);
        let a1 = crate::interaction::a_coeff(1, 1.0);
        let ev = evolve_crosscorr(&f0, &phi, &p, 0.25, 0.002, 1.0).unwrap();
        let vol = volterra_g_numeric(a1, 1.0, 0.25, s, 0.002, 1.0).unwrap();
        for i in 0..s {
            let c = ev.c.get(i, 1);
            assert!(
                (c.re - vol.g[i]).abs() < 1e-10 && c.im.abs() < 1e-12,
                "row {i}: {c} vs {}",
                vol.g[i]
            );
        }
        // off-diagonal modes stay identically zero
        for i in 0..s {
            for n in [-4i64, -3, -2, -1, 2, 3, 4] {
                assert!(ev.c.get(i, n).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn volterra_zero_source() {
        let v = volterra_g_numeric(0.0, 1.0, 0.3, 64, 0.01, 1.0).unwrap();
        assert!(v.g.iter().all(|&x| x == 0.0));
        assert_eq!(v.g_at_one, 0.0);
    }

    #[test]
    fn volterra_short_time_is_the_first_picard_iterate() {
        let (a, lam, s) = (0.7, 1.0, 256);
        let t = 1e-3;
        let v = volterra_g_numeric(a, lam, 0.25, s, 1e-4, t).unwrap();
        let (i0, s0) = snap_sigma0(s, 0.25).unwrap();
        for i in [i0 + 5, s / 2, s - 1] {
            let sigma = (i as f64 + 0.5) / s as f64;
            let lead = a * t * graphon_k(sigma, s0, lam).unwrap();
            assert!(
                (v.g[i] - lead).abs() < 5.0 * t * lead.abs(),
                "g({sigma}) = {} vs leading {lead}",
                v.g[i]
            );
        }
    }

    #[test]
    fn sigma0_snapping() {
        let (i0, s0) = snap_sigma0(512, 0.25).unwrap();
        assert_eq!(i0, 128);
        assert_eq!(s0, 0.25);
        let (_, s0) = snap_sigma0(512, 0.2502).unwrap();
        assert!((s0 - 0.25).abs() < 1e-12);
        assert!(snap_sigma0(512, 0.0).is_err());
        assert!(snap_sigma0(512, 1.0).is_err());
        assert!(snap_sigma0(512, 0.0001).is_err());
    }
}
