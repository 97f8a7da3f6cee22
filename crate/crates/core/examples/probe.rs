use litm_core::closedform::g_closed;
use litm_core::meanfield::{evolve_meanfield, volterra_g_numeric, SpectralField};
use litm_core::ModelParams;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    // criterion-1 style probe
    let t0 = Instant::now();
    for &a in &[0.5651591f64, 1.0] {
        for &lam in &[0.0f64, 1.0] {
            for &s0 in &[0.1f64, 0.3, 0.6] {
                let vol = volterra_g_numeric(a, lam, s0, 2048, 1e-3, 1.0).unwrap();
                let gc = g_closed(a, 1.0, 1.0, vol.sigma0_snapped, lam).unwrap();
                let rel = (gc - vol.g_at_one).abs() / gc.abs().max(1e-8);
                println!("a={a:.4} lam={lam} s0={s0}: closed={gc:.8} vol={:.8} rel={rel:.3e}", vol.g_at_one);
            }
        }
    }
    println!("volterra block: {:.1?}", t0.elapsed());

    // criterion-5 style probe: smooth init, (256,16) vs (512,32)
    let p = ModelParams::new(1.0, 1.0, 64, 8, 1.0).unwrap();
    let init = |sigma: f64, n: i64| match n {
        0 => Complex64::new(1.0, 0.0),
        1 | -1 => Complex64::new(0.3 * sigma, 0.0),
        _ => Complex64::new(0.0, 0.0),
    };
    let t0 = Instant::now();
    let coarse = evolve_meanfield(&SpectralField::from_fn(256, 16, true, init), &p, 1e-3, 1.0).unwrap();
    let t_coarse = t0.elapsed();
    let t0 = Instant::now();
    let fine = evolve_meanfield(&SpectralField::from_fn(512, 32, true, init), &p, 1e-3, 1.0).unwrap();
    let t_fine = t0.elapsed();
    // cubic interpolation of fine rows at coarse midpoints
    let interp = |f: &SpectralField, sigma: f64, n: i64| -> Complex64 {
        let s = f.s() as f64;
        let x = sigma * s - 0.5;
        let j = (x.floor() as i64).clamp(1, f.s() as i64 - 3) as usize;
        let t = x - j as f64;
        let (m1, z, p1, p2) = (f.get(j - 1, n), f.get(j, n), f.get(j + 1, n), f.get(j + 2, n));
        // Catmull-Rom style 4-point Lagrange on uniform grid
        let c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        m1 * c0 + z * c1 + p1 * c2 + p2 * c3
    };
    let mut sup = 0.0f64;
    for i in 0..256 {
        let sigma = (i as f64 + 0.5) / 256.0;
        for n in -16..=16i64 {
            let d = (coarse.field.get(i, n) - interp(&fine.field, sigma, n)).norm();
            sup = sup.max(d);
        }
    }
    println!("criterion-5 probe: sup diff = {sup:.3e} (coarse {t_coarse:.1?}, fine {t_fine:.1?})");
}
