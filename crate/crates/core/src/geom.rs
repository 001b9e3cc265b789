//! Small vector and color types shared by every module.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns `None` for (near) zero vectors.
    pub fn try_normalize(self) -> Option<Vec3> {
        let len = self.length();
        if len > 1e-300 && len.is_finite() {
            Some(self / len)
        } else {
            None
        }
    }

    pub fn normalize(self) -> Vec3 {
        self.try_normalize().unwrap_or(Vec3::Z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Builds an orthonormal basis `(t, b)` so that `(t, b, self)` is right-handed.
    /// `self` must be unit length.
    pub fn basis(self) -> (Vec3, Vec3) {
        // Duff et al. branchless ONB
        let sign = 1f64.copysign(self.z);
        let a = -1.0 / (sign + self.z);
        let b = self.x * self.y * a;
        let t = Vec3::new(1.0 + sign * self.x * self.x * a, sign * b, -sign * self.x);
        let bt = Vec3::new(b, sign + self.y * self.y * a, -self.y);
        (t, bt)
    }

    /// Rotates `self` about the unit `axis` by `angle` radians (Rodrigues).
    pub fn rotate(self, axis: Vec3, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (1.0 - c))
    }

    pub fn rotate_y(self, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        Vec3::new(c * self.x + s * self.z, self.y, -s * self.x + c * self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

/// Linear RGB triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rgb(pub [f64; 3]);

impl Rgb {
    pub const BLACK: Rgb = Rgb([0.0; 3]);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb([r, g, b])
    }

    pub const fn splat(v: f64) -> Self {
        Rgb([v; 3])
    }

    /// Rec. 709 relative luminance.
    pub fn luminance(self) -> f64 {
        0.2126 * self.0[0] + 0.7152 * self.0[1] + 0.0722 * self.0[2]
    }

    pub fn max_channel(self) -> f64 {
        self.0[0].max(self.0[1]).max(self.0[2])
    }

    pub fn min_channel(self) -> f64 {
        self.0[0].min(self.0[1]).min(self.0[2])
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Rgb {
        Rgb([f(self.0[0]), f(self.0[1]), f(self.0[2])])
    }

    pub fn zip(self, o: Rgb, f: impl Fn(f64, f64) -> f64) -> Rgb {
        Rgb([f(self.0[0], o.0[0]), f(self.0[1], o.0[1]), f(self.0[2], o.0[2])])
    }

    pub fn channel_max(self, o: Rgb) -> Rgb {
        self.zip(o, f64::max)
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn is_non_negative(self) -> bool {
        self.0.iter().all(|&c| c >= 0.0)
    }
}

impl Index<usize> for Rgb {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Rgb {
    type Output = Rgb;
    fn add(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a + b)
    }
}

impl AddAssign for Rgb {
    fn add_assign(&mut self, o: Rgb) {
        *self = *self + o;
    }
}

impl Sub for Rgb {
    type Output = Rgb;
    fn sub(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a - b)
    }
}

impl Mul<f64> for Rgb {
    type Output = Rgb;
    fn mul(self, k: f64) -> Rgb {
        self.map(|c| c * k)
    }
}

impl Mul<Rgb> for Rgb {
    type Output = Rgb;
    fn mul(self, o: Rgb) -> Rgb {
        self.zip(o, |a, b| a * b)
    }
}

impl Div<f64> for Rgb {
    type Output = Rgb;
    fn div(self, k: f64) -> Rgb {
        self.map(|c| c / k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OrientationError {
    #[error("vector ({0}, {1}, {2}) is not unit length")]
    NotUnit(f64, f64, f64),
    #[error("orientation faces away from the viewer (z = {0})")]
    BackFacing(f64),
    #[error("coordinate ({0}, {1}) lies outside the unit disc")]
    OutsideDisc(f64, f64),
}

/// Unit surface orientation on the upper (viewer-facing) half-sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation(Vec3);

impl Orientation {
    pub const UNIT_TOLERANCE: f64 = 1e-6;
    pub const POLE: Orientation = Orientation(Vec3::Z);

    pub fn new(n: Vec3) -> Result<Self, OrientationError> {
        if !n.is_finite() || (n.length() - 1.0).abs() > Self::UNIT_TOLERANCE {
            return Err(OrientationError::NotUnit(n.x, n.y, n.z));
        }
        if n.z < 0.0 {
            return Err(OrientationError::BackFacing(n.z));
        }
        Ok(Orientation(n))
    }

    /// Normalizes `v` and clamps it into the upper half-sphere.
    pub fn from_vector(v: Vec3) -> Option<Self> {
        let n = v.try_normalize()?;
        if n.z >= 0.0 {
            Some(Orientation(n))
        } else {
            Vec3::new(n.x, n.y, 0.0).try_normalize().map(Orientation)
        }
    }

    /// Lifts a disc coordinate back onto the half-sphere.
    pub fn from_st(c: StCoord) -> Self {
        let z = (1.0 - c.s * c.s - c.t * c.t).max(0.0).sqrt();
        Orientation(Vec3::new(c.s, c.t, z).normalize())
    }

    pub fn vector(self) -> Vec3 {
        self.0
    }

    /// Projects onto the (s,t) disc by dropping z.
    pub fn to_st(self) -> StCoord {
        StCoord { s: self.0.x, t: self.0.y }
    }

    pub fn dot(self, o: Orientation) -> f64 {
        self.0.dot(o.0)
    }

    /// Angle to `o` in radians.
    pub fn angle(self, o: Orientation) -> f64 {
        self.dot(o).clamp(-1.0, 1.0).acos()
    }
}

/// Checked version of [`Orientation::to_st`] working on raw vectors.
pub fn orientation_to_st(n: Vec3) -> Result<StCoord, OrientationError> {
    Orientation::new(n).map(Orientation::to_st)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StCoord {
    pub s: f64,
    pub t: f64,
}

impl StCoord {
    pub fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }

    pub fn radius_sq(self) -> f64 {
        self.s * self.s + self.t * self.t
    }

    pub fn in_disc(self) -> bool {
        self.radius_sq() <= 1.0
    }
}
