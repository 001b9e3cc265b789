//! Orthographic normal maps of analytic shapes.
//!
//! Shapes live inside the unit ball and are viewed along -z from +z. The
//! image covers `[-1, 1]^2` with row 0 at the bottom (y = -1).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::image::{pixel_center, NormalMap};

const MARCH_STEPS: usize = 256;
const BISECT_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("torus needs 0 < minor < major and major + minor <= 1, got minor {minor}, major {major}")]
    Torus { minor: f64, major: f64 },
    #[error("superellipsoid exponents must lie in (0, 2], got ({e1}, {e2})")]
    Superellipsoid { e1: f64, e2: f64 },
    #[error("image size must be positive")]
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Unit sphere.
    Sphere,
    /// Ring torus around the z axis.
    Torus { minor: f64, major: f64 },
    /// `(|x/a|^(2/e2) + |y/b|^(2/e2))^(e2/e1) + |z/c|^(2/e1) = 1` with
    /// semi-axes `SUPERELLIPSOID_AXES`.
    Superellipsoid { e1: f64, e2: f64 },
}

pub const SUPERELLIPSOID_AXES: [f64; 3] = [0.85, 0.65, 0.75];

#[derive(Debug, Clone, PartialEq)]
pub struct ProceduralNormals {
    pub map: NormalMap,
    /// Surface hits whose normal faced away from the viewer; left masked out.
    pub rejected_backfacing: usize,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Shape {
    pub fn validate(&self) -> Result<(), ShapeError> {
        match *self {
            Shape::Sphere => Ok(()),
            Shape::Torus { minor, major } => {
                if minor > 0.0 && minor < major && major + minor <= 1.0 {
                    Ok(())
                } else {
                    Err(ShapeError::Torus { minor, major })
                }
            }
            Shape::Superellipsoid { e1, e2 } => {
                let ok = |e: f64| e > 0.0 && e <= 2.0;
                if ok(e1) && ok(e2) {
                    Ok(())
                } else {
                    Err(ShapeError::Superellipsoid { e1, e2 })
                }
            }
        }
    }

    /// Implicit function, negative inside.
    fn implicit(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Sphere => p.dot(p) - 1.0,
            Shape::Torus { minor, major } => {
                let q = (p.x * p.x + p.y * p.y).sqrt() - major;
                q * q + p.z * p.z - minor * minor
            }
            Shape::Superellipsoid { e1, e2 } => {
                let [a, b, c] = SUPERELLIPSOID_AXES;
                let inner = (p.x / a).abs().powf(2.0 / e2) + (p.y / b).abs().powf(2.0 / e2);
                inner.powf(e2 / e1) + (p.z / c).abs().powf(2.0 / e1) - 1.0
            }
        }
    }

    fn gradient(&self, p: Vec3) -> Vec3 {
        match *self {
            Shape::Sphere => p * 2.0,
            Shape::Torus { major, .. } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                if rho == 0.0 {
                    return Vec3::new(0.0, 0.0, 2.0 * p.z);
                }
                let k = 2.0 * (rho - major) / rho;
                Vec3::new(k * p.x, k * p.y, 2.0 * p.z)
            }
            Shape::Superellipsoid { e1, e2 } => {
                let [a, b, c] = SUPERELLIPSOID_AXES;
                let (ax, ay, az) = ((p.x / a).abs(), (p.y / b).abs(), (p.z / c).abs());
                let inner = ax.powf(2.0 / e2) + ay.powf(2.0 / e2);
                let outer = if inner > 0.0 { (2.0 / e1) * inner.powf(e2 / e1 - 1.0) } else { 0.0 };
                Vec3::new(
                    outer * ax.powf(2.0 / e2 - 1.0) * sign(p.x) / a,
                    outer * ay.powf(2.0 / e2 - 1.0) * sign(p.y) / b,
                    (2.0 / e1) * az.powf(2.0 / e1 - 1.0) * sign(p.z) / c,
                )
            }
        }
    }
}

/// First surface crossing along the ray `(x, y, 1) - t z` inside the unit
/// ball, in object coordinates.
fn trace(shape: &Shape, x: f64, y: f64, rot: f64) -> Option<Vec3> {
    let r2 = x * x + y * y;
    if r2 >= 1.0 {
        return None;
    }
    let half = (1.0 - r2).sqrt();
    let at = |z: f64| Vec3::new(x, y, z).rotate_y(-rot);
    let step = 2.0 * half / MARCH_STEPS as f64;
    let mut z_prev = half;
    if shape.implicit(at(z_prev)) <= 0.0 {
        // only possible on the bounding sphere itself
        return Some(at(z_prev));
    }
    for k in 1..=MARCH_STEPS {
        let z = half - step * k as f64;
        let f = shape.implicit(at(z));
        if f <= 0.0 {
            let (mut hi, mut lo) = (z_prev, z);
            for _ in 0..BISECT_STEPS {
                let mid = 0.5 * (hi + lo);
                if shape.implicit(at(mid)) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(at(0.5 * (hi + lo)));
        }
        z_prev = z;
    }
    None
}

pub fn procedural_normals(shape: &Shape, rotation_y_deg: f64, size: usize) -> Result<ProceduralNormals, ShapeError> {
    shape.validate()?;
    if size == 0 {
        return Err(ShapeError::Size);
    }
    if let Shape::Sphere = shape {
        return Ok(ProceduralNormals { map: NormalMap::sphere(size), rejected_backfacing: 0 });
    }
    let rot = rotation_y_deg.to_radians();
    let px: Vec<(Option<Vec3>, bool)> = (0..size * size)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (pixel_center(k % size, size), pixel_center(k / size, size));
            let Some(p) = trace(shape, x, y, rot) else {
                return (None, false);
            };
            match shape.gradient(p).rotate_y(rot).try_normalize() {
                Some(n) if n.z >= 0.0 => (Some(n), false),
                _ => (None, true),
            }
        })
        .collect();
    let rejected_backfacing = px.iter().filter(|p| p.1).count();
    let mask: Vec<bool> = px.iter().map(|p| p.0.is_some()).collect();
    let normals = px.into_iter().map(|p| p.0.unwrap_or(Vec3::ZERO)).collect();
    let map = NormalMap::new(size, size, normals, mask).expect("unit front-facing normals");
    Ok(ProceduralNormals { map, rejected_backfacing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_matches_closed_form_for_any_rotation() {
        for rot in [0.0, 37.0, 180.0] {
            let out = procedural_normals(&Shape::Sphere, rot, 32).unwrap();
            assert_eq!(out.map, NormalMap::sphere(32));
        }
    }

    #[test]
    fn traced_ellipsoid_normals_are_unit_and_front_facing() {
        let out = procedural_normals(&Shape::Superellipsoid { e1: 1.0, e2: 1.0 }, 20.0, 48).unwrap();
        assert!(out.map.foreground_count() > 0);
        for (n, &m) in out.map.normals.iter().zip(&out.map.mask) {
            if m {
                assert!((n.length() - 1.0).abs() < 1e-12 && n.z >= 0.0);
            }
        }
    }

    #[test]
    fn ellipsoid_normals_match_analytic_gradient() {
        // e1 = e2 = 1 is an ellipsoid; at the hit point the normal is
        // (x/a^2, y/b^2, z/c^2) normalized
        let [a, b, c] = SUPERELLIPSOID_AXES;
        let shape = Shape::Superellipsoid { e1: 1.0, e2: 1.0 };
        let p = trace(&shape, 0.2, -0.3, 0.0).unwrap();
        let want = Vec3::new(p.x / (a * a), p.y / (b * b), p.z / (c * c)).normalize();
        let got = shape.gradient(p).normalize();
        assert!((want - got).length() < 1e-9);
        assert!(shape.implicit(p).abs() < 1e-9);
    }

    #[test]
    fn torus_rejects_back_facing_hits_when_tilted() {
        let torus = Shape::Torus { minor: 0.25, major: 0.6 };
        let flat = procedural_normals(&torus, 0.0, 64).unwrap();
        assert!(flat.map.foreground_count() > 0);
        let tilted = procedural_normals(&torus, 80.0, 64).unwrap();
        assert!(tilted.map.foreground_count() > 0);
        assert!(tilted.map.normals.iter().zip(&tilted.map.mask).all(|(n, &m)| !m || n.z >= 0.0));
    }

    #[test]
    fn degenerate_parameters() {
        assert!(procedural_normals(&Shape::Torus { minor: 0.5, major: 0.4 }, 0.0, 8).is_err());
        assert!(procedural_normals(&Shape::Torus { minor: 0.3, major: 0.8 }, 0.0, 8).is_err());
        assert!(procedural_normals(&Shape::Superellipsoid { e1: 0.0, e2: 1.0 }, 0.0, 8).is_err());
        assert!(procedural_normals(&Shape::Superellipsoid { e1: 1.0, e2: 2.5 }, 0.0, 8).is_err());
        assert_eq!(procedural_normals(&Shape::Sphere, 0.0, 0), Err(ShapeError::Size));
    }
}
