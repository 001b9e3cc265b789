//! Brush strokes that tilt normals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::image::NormalMap;

/// A round brush. Normals within `radius` pixels of the center rotate
/// towards the image-plane direction `azimuth_deg` (0 = +x, 90 = +y) by
/// `tilt_deg * strength * exp(-d^2 / (2 (radius/2)^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stroke {
    /// Center in pixel coordinates; pixel `(x, y)` sits at `(x, y)`.
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub azimuth_deg: f64,
    pub tilt_deg: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrokeError {
    #[error("stroke center ({0}, {1}) lies outside the image")]
    OutsideImage(f64, f64),
    #[error("stroke radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("stroke strength must lie in [0, 1], got {0}")]
    Strength(f64),
    #[error("stroke angles must be finite")]
    Angle,
}

impl Stroke {
    pub fn validate(&self, width: usize, height: usize) -> Result<(), StrokeError> {
        let inside = |v: f64, n: usize| v.is_finite() && v >= -0.5 && v <= n as f64 - 0.5;
        if !(inside(self.x, width) && inside(self.y, height)) {
            return Err(StrokeError::OutsideImage(self.x, self.y));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(StrokeError::Radius(self.radius));
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(StrokeError::Strength(self.strength));
        }
        if !(self.azimuth_deg.is_finite() && self.tilt_deg.is_finite()) {
            return Err(StrokeError::Angle);
        }
        Ok(())
    }

    /// Rotation angle in radians at distance `d` from the center.
    pub fn angle_at(&self, d: f64) -> f64 {
        if d > self.radius {
            return 0.0;
        }
        let s = self.radius / 2.0;
        self.tilt_deg.to_radians() * self.strength * (-(d * d) / (2.0 * s * s)).exp()
    }

    /// Axis `z × a` for the in-plane tilt direction `a`.
    pub fn axis(&self) -> Vec3 {
        let (s, c) = self.azimuth_deg.to_radians().sin_cos();
        Vec3::new(-s, c, 0.0)
    }
}

pub fn normal_paint(nm: &NormalMap, stroke: &Stroke) -> Result<NormalMap, StrokeError> {
    stroke.validate(nm.width, nm.height)?;
    let axis = stroke.axis();
    let mut out = nm.clone();
    let r = stroke.radius.ceil() as i64;
    let (cx, cy) = (stroke.x.round() as i64, stroke.y.round() as i64);
    for y in (cy - r).max(0)..=(cy + r).min(nm.height as i64 - 1) {
        for x in (cx - r).max(0)..=(cx + r).min(nm.width as i64 - 1) {
            let k = nm.index(x as usize, y as usize);
            if !nm.mask[k] {
                continue;
            }
            let d = ((x as f64 - stroke.x).powi(2) + (y as f64 - stroke.y).powi(2)).sqrt();
            let angle = stroke.angle_at(d);
            if angle == 0.0 {
                continue;
            }
            let mut n = nm.normals[k].rotate(axis, angle);
            if n.z < 0.0 {
                n.z = 0.0;
            }
            out.normals[k] = n.try_normalize().unwrap_or(nm.normals[k]);
        }
    }
    Ok(out)
}
