//! Shared fixtures and independent reference implementations.
#![allow(dead_code)]

pub mod parsers;

use std::f64::consts::{FRAC_PI_2, PI};

use lumisphere::domain::OrientedSample;
use lumisphere::geom::{Rgb, Vec3};
use lumisphere::image::{pixel_center, NormalMap, RadianceImage};
use lumisphere::rmap::{cell_in_disc, cell_orientation, shade_from_normals, ReflectanceMap};
use lumisphere::synth::merl::{CHANNEL_SCALE, PHI_D_RES, TABLE_LEN, THETA_D_RES, THETA_H_RES};
use lumisphere::synth::{AnalyticBrdf, Brdf, EnvironmentMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit_upper(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0));
        let l = v.length();
        if l > 0.1 && l <= 1.0 {
            return v / l;
        }
    }
}

pub fn random_rgb(rng: &mut ChaCha8Rng, hi: f64) -> Rgb {
    Rgb::new(rng.random_range(0.0..hi), rng.random_range(0.0..hi), rng.random_range(0.0..hi))
}

/// A seeded (environment, material) pair.
pub fn random_pair(seed: u64) -> (EnvironmentMap, Brdf) {
    let mut r = rng(seed);
    let env = EnvironmentMap::procedural(seed ^ 0xabc, 32, 16);
    let brdf = if r.random_bool(0.3) {
        AnalyticBrdf::Lambert { albedo: Rgb::new(r.random_range(0.1..0.9), r.random_range(0.1..0.9), r.random_range(0.1..0.9)) }
    } else {
        let kd = r.random_range(0.0..0.5);
        AnalyticBrdf::BlinnPhong {
            diffuse: Rgb::splat(kd),
            specular: Rgb::splat(r.random_range(0.1..(1.0 - kd))),
            exponent: r.random_range(5.0..300.0),
        }
    };
    (env, Brdf::from(brdf))
}

/// Kernel-weighted average written as a plain double loop.
pub fn naive_rbf(samples: &[OrientedSample], sigma: f64, r: usize) -> Vec<Option<Rgb>> {
    let mut out = vec![None; r * r];
    for j in 0..r {
        for i in 0..r {
            if !cell_in_disc(i, j, r) {
                continue;
            }
            let n = cell_orientation(i, j, r).vector();
            let mut num = [0.0; 3];
            let mut den = 0.0;
            let mut best = (-2.0, Rgb::BLACK);
            for s in samples {
                let c = n.dot(s.omega.vector()).clamp(-1.0, 1.0);
                let w = (-(sigma * c.acos()) * (sigma * c.acos())).exp();
                den += w;
                for ch in 0..3 {
                    num[ch] += w * s.radiance[ch];
                }
                if c > best.0 {
                    best = (c, s.radiance);
                }
            }
            out[j * r + i] = Some(if den < 1e-12 { best.1 } else { Rgb::new(num[0] / den, num[1] / den, num[2] / den) });
        }
    }
    out
}

fn rotate_vector(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis * (axis.dot(v) * (1.0 - c)) + axis.cross(v) * s
}

/// Half/difference conversion by explicit rotations, then trilinear
/// interpolation over the eight surrounding bins.
pub fn reference_merl_eval(raw: &[f64], w_in: Vec3, w_out: Vec3) -> [f64; 3] {
    let half = (w_in + w_out).normalize();
    let theta_half = half.z.acos();
    let phi_half = half.y.atan2(half.x);
    let temp = rotate_vector(w_in, Vec3::Z, -phi_half);
    let diff = rotate_vector(temp, Vec3::Y, -theta_half);
    let theta_diff = diff.z.clamp(-1.0, 1.0).acos();
    let mut phi_diff = diff.y.atan2(diff.x);
    if phi_diff < 0.0 {
        phi_diff += PI;
    }
    let xh = ((theta_half / FRAC_PI_2).sqrt() * THETA_H_RES as f64).clamp(0.0, (THETA_H_RES - 1) as f64);
    let xd = (theta_diff / FRAC_PI_2 * THETA_D_RES as f64).clamp(0.0, (THETA_D_RES - 1) as f64);
    let xp = phi_diff / PI * PHI_D_RES as f64;
    let (h0, d0, p0) = (xh.floor(), xd.floor(), xp.floor());
    let mut out = [0.0; 3];
    for corner in 0..8 {
        let (a, b, c) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
        let wh = if a == 1 { xh - h0 } else { 1.0 - (xh - h0) };
        let wd = if b == 1 { xd - d0 } else { 1.0 - (xd - d0) };
        let wp = if c == 1 { xp - p0 } else { 1.0 - (xp - p0) };
        let ih = ((h0 as usize) + a).min(THETA_H_RES - 1);
        let id = ((d0 as usize) + b).min(THETA_D_RES - 1);
        let ip = ((p0 as i64 + c as i64).rem_euclid(PHI_D_RES as i64)) as usize;
        let idx = ih * THETA_D_RES * PHI_D_RES + id * PHI_D_RES + ip;
        for ch in 0..3 {
            out[ch] += wh * wd * wp * raw[ch * TABLE_LEN + idx].max(0.0);
        }
    }
    [out[0] * CHANNEL_SCALE[0], out[1] * CHANNEL_SCALE[1], out[2] * CHANNEL_SCALE[2]]
}

/// SSIM straight from the definition: a non-separable 2D Gaussian window
/// and two-pass moments.
pub fn reference_ssim(a: &[f64], b: &[f64], r: usize, in_disc: &[bool]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..r * r {
        if in_disc[k] {
            lo = lo.min(a[k]).min(b[k]);
            hi = hi.max(a[k]).max(b[k]);
        }
    }
    let range = if hi > lo { hi - lo } else { 1.0 };
    let (c1, c2) = ((0.01 * range) * (0.01 * range), (0.03 * range) * (0.03 * range));
    let mut kernel = [[0.0; 11]; 11];
    let mut total = 0.0;
    for (dy, row) in kernel.iter_mut().enumerate() {
        for (dx, w) in row.iter_mut().enumerate() {
            let (u, v) = (dx as f64 - 5.0, dy as f64 - 5.0);
            *w = (-(u * u + v * v) / (2.0 * 1.5 * 1.5)).exp();
            total += *w;
        }
    }
    let mut sum = 0.0;
    let mut n = 0;
    for cy in 5..r - 5 {
        for cx in 5..r - 5 {
            if !in_disc[cy * r + cx] {
                continue;
            }
            let at = |img: &[f64], dx: usize, dy: usize| img[(cy + dy - 5) * r + cx + dx - 5];
            let (mut ma, mut mb) = (0.0, 0.0);
            for dy in 0..11 {
                for dx in 0..11 {
                    let w = kernel[dy][dx] / total;
                    ma += w * at(a, dx, dy);
                    mb += w * at(b, dx, dy);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for dy in 0..11 {
                for dx in 0..11 {
                    let w = kernel[dy][dx] / total;
                    let (ea, eb) = (at(a, dx, dy) - ma, at(b, dx, dy) - mb);
                    va += w * ea * ea;
                    vb += w * eb * eb;
                    cov += w * ea * eb;
                }
            }
            sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            n += 1;
        }
    }
    sum / n as f64
}

pub fn naive_mse(a: &ReflectanceMap, b: &ReflectanceMap) -> f64 {
    let r = a.resolution();
    let mut sum = 0.0;
    let mut n = 0usize;
    for j in 0..r {
        for i in 0..r {
            if let (Some(x), Some(y)) = (a.get(i, j), b.get(i, j)) {
                let mut e = 0.0;
                for c in 0..3 {
                    e += (x[c] - y[c]) * (x[c] - y[c]);
                }
                sum += e / 3.0;
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// (mean, median, rmse) of per-pixel angles in degrees.
pub fn naive_angle_stats(pred: &NormalMap, gt: &NormalMap) -> (f64, f64, f64) {
    let mut v = Vec::new();
    for k in 0..gt.normals.len() {
        if gt.mask[k] {
            let d = pred.normals[k].dot(gt.normals[k]).clamp(-1.0, 1.0);
            v.push(d.acos() * 180.0 / PI);
        }
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let rmse = (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len();
    let median = if m % 2 == 1 { v[m / 2] } else { (v[m / 2 - 1] + v[m / 2]) / 2.0 };
    (mean, median, rmse)
}

/// Two copies of a sphere side by side (2S x S). Every orientation is seen
/// twice and at most one copy of each pair is shadowed.
pub struct TwinShadowScene {
    pub normals: NormalMap,
    pub clean: RadianceImage,
    pub shadowed: RadianceImage,
    pub shadowed_fraction: f64,
}

pub fn twin_shadow_scene(rm: &ReflectanceMap, size: usize, target_fraction: f64, seed: u64) -> TwinShadowScene {
    let sphere = NormalMap::sphere(size);
    let (w, h) = (2 * size, size);
    let mut normals = vec![Vec3::ZERO; w * h];
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let k = sphere.index(x % size, y);
            normals[y * w + x] = sphere.normals[k];
            mask[y * w + x] = sphere.mask[k];
        }
    }
    let nm = NormalMap::new(w, h, normals, mask).unwrap();
    let clean = shade_from_normals(&nm, rm).image;

    let mut r = rng(seed);
    let fg: Vec<usize> = (0..w * h).filter(|&k| nm.mask[k]).collect();
    let budget = (target_fraction * fg.len() as f64).floor() as usize;
    let mut dark = vec![false; w * h];
    let mut count = 0;
    // random discs on either copy, skipping pixels whose twin is dark
    while count < budget {
        let side = r.random_range(0..2usize);
        let (cx, cy) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let rad: f64 = r.random_range(0.05..0.35);
        for y in 0..h {
            for x in 0..size {
                let (px, py) = (pixel_center(x, size), pixel_center(y, size));
                if (px - cx).powi(2) + (py - cy).powi(2) > rad * rad {
                    continue;
                }
                let k = y * w + x + side * size;
                let twin = y * w + x + (1 - side) * size;
                if nm.mask[k] && !dark[k] && !dark[twin] && count < budget {
                    dark[k] = true;
                    count += 1;
                }
            }
        }
    }
    let mut shadowed = clean.clone();
    for k in 0..w * h {
        if dark[k] {
            shadowed.rgb[k] = clean.rgb[k] * r.random_range(0.05..0.9);
        }
    }
    TwinShadowScene { normals: nm, clean, shadowed, shadowed_fraction: count as f64 / fg.len() as f64 }
}

/// A map that is dark except for a Gaussian highlight around `peak`.
pub fn highlight_rm(peak: Vec3, width_deg: f64, r: usize) -> ReflectanceMap {
    let peak = peak.normalize();
    let w = width_deg.to_radians();
    ReflectanceMap::from_fn(r, move |o| {
        let a = o.vector().dot(peak).clamp(-1.0, 1.0).acos();
        Rgb::splat(0.05) + Rgb::new(0.9, 0.8, 0.7) * (-(a / w) * (a / w)).exp()
    })
}

/// Luminance-weighted centroid, in pixels, of foreground pixels brighter
/// than `threshold`.
pub fn highlight_centroid(img: &RadianceImage, threshold: f64) -> (f64, f64) {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let k = img.index(x, y);
            let l = img.rgb[k].luminance();
            if img.mask[k] && l > threshold {
                sx += l * x as f64;
                sy += l * y as f64;
                sw += l;
            }
        }
    }
    (sx / sw, sy / sw)
}

/// A synthetic photo: a procedural shape shaded by a convolved map, with
/// multiplicative texture the map cannot explain.
pub fn edit_scene(seed: u64, size: usize) -> (RadianceImage, NormalMap, ReflectanceMap) {
    use lumisphere::synth::{brdf_convolve, procedural_normals, Shape};
    let (env, brdf) = random_pair(seed);
    let rm = brdf_convolve(&env, &brdf, 32, 256, seed).unwrap();
    let rm = rm.map_defined(|c| c / (1.0 + c.luminance()));
    let shape = [Shape::Sphere, Shape::Torus { minor: 0.3, major: 0.6 }, Shape::Superellipsoid { e1: 0.5, e2: 1.0 }][seed as usize % 3];
    let nm = procedural_normals(&shape, 30.0 * seed as f64, size).unwrap().map;
    let mut img = shade_from_normals(&nm, &rm).image;
    let mut r = rng(seed ^ 0x7e7);
    for k in 0..img.len() {
        if img.mask[k] {
            img.rgb[k] = img.rgb[k] * r.random_range(0.6..1.0);
        }
    }
    (img, nm, rm)
}
