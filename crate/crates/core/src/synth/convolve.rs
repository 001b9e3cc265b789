//! Ground-truth reflectance maps by Monte Carlo integration over the
//! environment.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::brdf::{eval_brdf, Brdf};
use super::derive_seed;
use super::envmap::EnvironmentMap;
use crate::geom::{Rgb, Vec3};
use crate::rmap::{cell_in_disc, cell_orientation, ReflectanceMap};

pub const MIN_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvolveError {
    #[error("at least {MIN_SAMPLES} samples per cell are required, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvLookup {
    #[default]
    Bilinear,
    Nearest,
}

/// Cosine-weighted hemisphere directions (local frame, +z up) from a
/// jittered `k x k` grid plus `n - k^2` uniform extras.
pub fn cosine_samples(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let k = (n as f64).sqrt().floor() as usize;
    let mut out = Vec::with_capacity(n);
    let mut push = |u1: f64, u2: f64| {
        let r = u1.sqrt();
        let phi = 2.0 * PI * u2;
        out.push(Vec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt()));
    };
    for a in 0..k {
        for b in 0..k {
            let u1 = (a as f64 + rng.random::<f64>()) / k as f64;
            let u2 = (b as f64 + rng.random::<f64>()) / k as f64;
            push(u1, u2);
        }
    }
    for _ in k * k..n {
        push(rng.random(), rng.random());
    }
    out
}

pub fn brdf_convolve(
    env: &EnvironmentMap,
    brdf: &Brdf,
    resolution: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ReflectanceMap, ConvolveError> {
    brdf_convolve_with(env, brdf, resolution, n_samples, seed, EnvLookup::Bilinear)
}

/// Per cell with normal `n` and the viewer at +z, estimates
/// `∫ f(w_i, v) L(w_i) max(0, n·w_i) dw_i`. Each cell draws from its own
/// stream derived from `(seed, cell index)`.
pub fn brdf_convolve_with(
    env: &EnvironmentMap,
    brdf: &Brdf,
    resolution: usize,
    n_samples: usize,
    seed: u64,
    lookup: EnvLookup,
) -> Result<ReflectanceMap, ConvolveError> {
    if n_samples < MIN_SAMPLES {
        return Err(ConvolveError::TooFewSamples(n_samples));
    }
    let values: Vec<Option<Rgb>> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            if !cell_in_disc(i, j, resolution) {
                return None;
            }
            let n = cell_orientation(i, j, resolution).vector();
            let (t, b) = n.basis();
            let w_out = Vec3::new(Vec3::Z.dot(t), Vec3::Z.dot(b), Vec3::Z.dot(n));
            assert!(w_out.z >= 0.0, "in-disc cell faces away from the viewer");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let mut acc = Rgb::BLACK;
            for w_in in cosine_samples(n_samples, &mut rng) {
                let f = eval_brdf(brdf, w_in, w_out);
                if f.below_horizon {
                    continue;
                }
                let world = t * w_in.x + b * w_in.y + n * w_in.z;
                let l = match lookup {
                    EnvLookup::Bilinear => env.radiance(world),
                    EnvLookup::Nearest => env.radiance_nearest(world),
                };
                // pdf = cos / pi, so f L cos / pdf = pi f L
                acc += f.rgb * l;
            }
            Some(acc * (PI / n_samples as f64))
        })
        .collect();
    let mut rm = ReflectanceMap::empty(resolution);
    for (k, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            rm.set(k % resolution, k / resolution, v);
        }
    }
    Ok(rm)
}
