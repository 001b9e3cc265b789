//! Global photographic tone mapping.

use crate::geom::Rgb;
use crate::image::RadianceImage;

/// Offset inside the log-average so black pixels stay finite.
pub const LOG_DELTA: f64 = 1e-4;

/// The per-image operator `c -> c * s / (1 + s L(c))`, with
/// `s = key / L_avg`. Luminance maps to `l / (1 + l)` where `l = s L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reinhard {
    pub scale: f64,
}

impl Reinhard {
    /// Fits the operator to the foreground of `img`. Returns `None` for an
    /// image without positive luminance.
    pub fn fit(img: &RadianceImage, key: f64) -> Option<Self> {
        assert!(key > 0.0, "tone-mapping key must be positive");
        let lums: Vec<f64> = img.rgb.iter().zip(&img.mask).filter(|(_, &m)| m).map(|(c, _)| c.luminance().max(0.0)).collect();
        if lums.is_empty() || lums.iter().all(|&l| l <= 0.0) {
            return None;
        }
        let log_avg = (lums.iter().map(|l| (LOG_DELTA + l).ln()).sum::<f64>() / lums.len() as f64).exp();
        Some(Self { scale: key / log_avg })
    }

    pub fn apply(&self, c: Rgb) -> Rgb {
        let l = c.luminance();
        if l <= 0.0 {
            return Rgb::BLACK;
        }
        c * (self.scale / (1.0 + self.scale * l))
    }
}

/// Tone-maps the foreground; images without light are returned unchanged.
pub fn reinhard_tonemap(img: &RadianceImage, key: f64) -> RadianceImage {
    match Reinhard::fit(img, key) {
        Some(op) => img.map_foreground(|c| op.apply(c)),
        None => img.clone(),
    }
}
