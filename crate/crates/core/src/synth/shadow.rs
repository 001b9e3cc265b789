//! Synthetic cast-shadow masks used to augment rendered images.

use rand::Rng;

use crate::geom::Rgb;
use crate::image::{pixel_center, RadianceImage};

/// Per-pixel attenuation factors in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowMask {
    pub width: usize,
    pub height: usize,
    pub attenuation: Vec<f64>,
}

impl ShadowMask {
    pub fn none(width: usize, height: usize) -> Self {
        Self { width, height, attenuation: vec![1.0; width * height] }
    }

    pub fn shadowed(&self, k: usize) -> bool {
        self.attenuation[k] < 1.0
    }

    /// Fraction of the foreground of `mask` that is darkened.
    pub fn shadowed_fraction(&self, mask: &[bool]) -> f64 {
        let fg = mask.iter().filter(|&&m| m).count();
        if fg == 0 {
            return 0.0;
        }
        let dark = mask.iter().enumerate().filter(|&(k, &m)| m && self.shadowed(k)).count();
        dark as f64 / fg as f64
    }

    /// Darkens the foreground of `img`; the result never exceeds the input.
    pub fn apply(&self, img: &RadianceImage) -> RadianceImage {
        assert_eq!((self.width, self.height), (img.width, img.height), "shadow mask size");
        let rgb = img
            .rgb
            .iter()
            .zip(&img.mask)
            .zip(&self.attenuation)
            .map(|((&c, &m), &a)| if m { c * a } else { c })
            .collect::<Vec<Rgb>>();
        RadianceImage { rgb, ..img.clone() }
    }
}

/// Random soft-edged blobs, each darkening by a factor in `[0.1, 0.6]`.
/// Blobs are added until another one would push the shadowed share of the
/// foreground above `max_fraction`.
pub fn random_shadow_mask(width: usize, height: usize, foreground: &[bool], max_fraction: f64, rng: &mut impl Rng) -> ShadowMask {
    let mut mask = ShadowMask::none(width, height);
    for _ in 0..rng.random_range(1..=4) {
        let (cx, cy) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let radius: f64 = rng.random_range(0.15..0.6);
        let (rx, ry) = (radius * rng.random_range(0.6..1.4), radius * rng.random_range(0.6..1.4));
        let factor = rng.random_range(0.1..0.6);
        let mut next = mask.clone();
        for y in 0..height {
            for x in 0..width {
                let dx = (pixel_center(x, width) - cx) / rx;
                let dy = (pixel_center(y, height) - cy) / ry;
                let d2 = dx * dx + dy * dy;
                if d2 < 1.0 {
                    // full strength in the core, fading towards the rim
                    let a = factor + (1.0 - factor) * d2 * d2;
                    let k = y * width + x;
                    next.attenuation[k] = next.attenuation[k].min(a.min(1.0 - 1e-3));
                }
            }
        }
        if next.shadowed_fraction(foreground) > max_fraction {
            break;
        }
        mask = next;
    }
    mask
}
