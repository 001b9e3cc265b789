//! Windowed SSIM on reflectance-map luminance.

use crate::rmap::ReflectanceMap;

pub const WINDOW: usize = 11;
pub const WINDOW_SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;

/// Normalized separable Gaussian taps.
pub fn gaussian_taps() -> [f64; WINDOW] {
    let c = (WINDOW / 2) as f64;
    let mut w = [0.0; WINDOW];
    for (k, v) in w.iter_mut().enumerate() {
        *v = (-((k as f64 - c).powi(2)) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Luminance raster of a dense map with zeros outside the disc.
pub fn luminance_grid(rm: &ReflectanceMap) -> Vec<f64> {
    rm.radiance()
        .iter()
        .zip(rm.defined())
        .map(|(c, &d)| if d { c.luminance() } else { 0.0 })
        .collect()
}

/// Mean SSIM over all full windows whose center cell lies in `centers`.
/// `a` and `b` are `r x r` rasters; the dynamic range is taken from the
/// values at `in_disc` cells of both (1 when flat). Returns `None` when no
/// window qualifies.
pub fn mean_ssim(a: &[f64], b: &[f64], r: usize, in_disc: &[bool]) -> Option<f64> {
    if r < WINDOW {
        return None;
    }
    let (lo, hi) = a
        .iter()
        .chain(b)
        .zip(in_disc.iter().chain(in_disc))
        .filter(|(_, &m)| m)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    let c1 = (K1 * range).powi(2);
    let c2 = (K2 * range).powi(2);
    let g = gaussian_taps();
    let half = WINDOW / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for cy in half..r - half {
        for cx in half..r - half {
            if !in_disc[cy * r + cx] {
                continue;
            }
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (dy, gy) in g.iter().enumerate() {
                let row = (cy + dy - half) * r;
                for (dx, gx) in g.iter().enumerate() {
                    let w = gy * gx;
                    let k = row + cx + dx - half;
                    let (va, vb) = (a[k], b[k]);
                    ma += w * va;
                    mb += w * vb;
                    saa += w * va * va;
                    sbb += w * vb * vb;
                    sab += w * va * vb;
                }
            }
            let var_a = saa - ma * ma;
            let var_b = sbb - mb * mb;
            let cov = sab - ma * mb;
            let s = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            total += s;
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}
