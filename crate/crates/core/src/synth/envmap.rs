//! Latitude-longitude environment maps.
//!
//! Texel `(x, y)` covers `u = (x + 0.5) / W`, `v = (y + 0.5) / H`. The
//! azimuth is `phi = 2 pi u` and the polar angle from +y (up) is
//! `theta = pi v`, so row 0 is the zenith. Directions are
//! `(sin theta sin phi, cos theta, sin theta cos phi)`; `u = 0` faces +z,
//! towards the viewer.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{Rgb, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("environment map must be at least 4x2, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("expected {expected} texels, got {actual}")]
    BufferSize { expected: usize, actual: usize },
    #[error("texel {index} is negative or non-finite")]
    InvalidTexel { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    width: usize,
    height: usize,
    texels: Vec<Rgb>,
}

pub fn direction_from_uv(u: f64, v: f64) -> Vec3 {
    let (phi, theta) = (2.0 * PI * u, PI * v);
    Vec3::new(theta.sin() * phi.sin(), theta.cos(), theta.sin() * phi.cos())
}

/// Inverse of [`direction_from_uv`] with `u` in `[0, 1)`.
pub fn uv_from_direction(d: Vec3) -> (f64, f64) {
    let theta = d.y.clamp(-1.0, 1.0).acos();
    let phi = d.x.atan2(d.z).rem_euclid(2.0 * PI);
    (phi / (2.0 * PI), theta / PI)
}

impl EnvironmentMap {
    pub fn new(width: usize, height: usize, texels: Vec<Rgb>) -> Result<Self, EnvError> {
        if width < 4 || height < 2 {
            return Err(EnvError::TooSmall { width, height });
        }
        if texels.len() != width * height {
            return Err(EnvError::BufferSize { expected: width * height, actual: texels.len() });
        }
        if let Some(index) = texels.iter().position(|c| !(c.is_finite() && c.is_non_negative())) {
            return Err(EnvError::InvalidTexel { index });
        }
        Ok(Self { width, height, texels })
    }

    pub fn constant(width: usize, height: usize, value: Rgb) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant environment")
    }

    /// Samples `f` at every texel-center direction. Negative or
    /// non-finite values are clamped to zero.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(Vec3) -> Rgb + Sync) -> Self {
        let texels = (0..width * height)
            .into_par_iter()
            .map(|k| {
                let (x, y) = (k % width, k / width);
                let d = direction_from_uv((x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64);
                f(d).map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 })
            })
            .collect();
        Self::new(width, height, texels).expect("sanitized texels")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn texels(&self) -> &[Rgb] {
        &self.texels
    }

    pub fn texel(&self, x: usize, y: usize) -> Rgb {
        self.texels[y * self.width + x]
    }

    /// Direction through the center of texel `(x, y)`.
    pub fn texel_direction(&self, x: usize, y: usize) -> Vec3 {
        direction_from_uv((x as f64 + 0.5) / self.width as f64, (y as f64 + 0.5) / self.height as f64)
    }

    /// Bilinear lookup, wrapping in azimuth and clamping at the poles.
    pub fn radiance(&self, d: Vec3) -> Rgb {
        let (u, v) = uv_from_direction(d);
        let fx = u * self.width as f64 - 0.5;
        let fy = (v * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0f = fx.floor();
        let tx = fx - x0f;
        let x0 = (x0f as i64).rem_euclid(self.width as i64) as usize;
        let x1 = (x0 + 1) % self.width;
        let y0 = (fy.floor() as usize).min(self.height - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ty = fy - y0 as f64;
        let row = |y| self.texel(x0, y) * (1.0 - tx) + self.texel(x1, y) * tx;
        row(y0) * (1.0 - ty) + row(y1) * ty
    }

    /// Nearest-texel lookup.
    pub fn radiance_nearest(&self, d: Vec3) -> Rgb {
        let (u, v) = uv_from_direction(d);
        let x = ((u * self.width as f64) as usize).min(self.width - 1);
        let y = ((v * self.height as f64) as usize).min(self.height - 1);
        self.texel(x, y)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.width, self.height, self.texels.iter().map(|&c| c * k).collect()).expect("scaled texels")
    }

    /// Texel-wise `self + other`; sizes must agree.
    pub fn add(&self, other: &Self) -> Option<Self> {
        if (self.width, self.height) != (other.width, other.height) {
            return None;
        }
        let texels = self.texels.iter().zip(&other.texels).map(|(&a, &b)| a + b).collect();
        Some(Self { width: self.width, height: self.height, texels })
    }

    /// A random outdoor-like panorama: sky gradient, darker ground, a sun
    /// and a few soft area lights.
    pub fn procedural(seed: u64, width: usize, height: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hue = |rng: &mut ChaCha8Rng| Rgb::new(rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.5..1.0));
        let zenith = hue(&mut rng) * rng.random_range(0.3..1.2);
        let horizon = hue(&mut rng) * rng.random_range(0.5..1.5);
        let ground = hue(&mut rng) * rng.random_range(0.05..0.3);
        let sun_dir = direction_from_uv(rng.random_range(0.0..1.0), rng.random_range(0.1..0.45));
        let sun = hue(&mut rng) * rng.random_range(20.0..200.0);
        let sun_size = rng.random_range(0.02f64..0.08);
        let lights: Vec<(Vec3, Rgb, f64)> = (0..rng.random_range(1..4))
            .map(|_| {
                let d = direction_from_uv(rng.random_range(0.0..1.0), rng.random_range(0.05..0.7));
                (d, hue(&mut rng) * rng.random_range(1.0..8.0), rng.random_range(0.1f64..0.4))
            })
            .collect();
        Self::from_fn(width, height, move |d| {
            let mut c = if d.y >= 0.0 {
                let t = d.y.powf(0.6);
                horizon * (1.0 - t) + zenith * t
            } else {
                ground * (1.0 + d.y * 0.5)
            };
            let sa = d.dot(sun_dir).clamp(-1.0, 1.0).acos();
            c += sun * (-(sa / sun_size).powi(2)).exp();
            for &(ld, lc, size) in &lights {
                let a = d.dot(ld).clamp(-1.0, 1.0).acos();
                c += lc * (-(a / size).powi(2)).exp();
            }
            c
        })
    }
}
