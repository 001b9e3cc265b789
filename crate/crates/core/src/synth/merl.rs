//! Tabulated isotropic BRDFs in the MERL binary layout.
//!
//! The table is indexed by half/difference angles `(theta_h, theta_d,
//! phi_d)` with `90 x 90 x 180` bins; `theta_h` uses a square-root warp.
//! Evaluation interpolates trilinearly between bin samples.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::geom::{Rgb, Vec3};

pub const THETA_H_RES: usize = 90;
pub const THETA_D_RES: usize = 90;
pub const PHI_D_RES: usize = 180;
pub const TABLE_LEN: usize = THETA_H_RES * THETA_D_RES * PHI_D_RES;
pub const HEADER_LEN: usize = 12;
pub const FILE_LEN: usize = HEADER_LEN + TABLE_LEN * 3 * 8;
pub const CHANNEL_SCALE: [f64; 3] = [1.0 / 1500.0, 1.15 / 1500.0, 1.66 / 1500.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MerlError {
    #[error("MERL header needs {HEADER_LEN} bytes, got {0}")]
    HeaderTruncated(usize),
    #[error("MERL dimensions {0:?}, expected [90, 90, 180]")]
    Dimensions([i32; 3]),
    #[error("MERL payload is {actual} bytes, expected {expected}")]
    Length { expected: usize, actual: usize },
    #[error("MERL table contains {0} non-finite values")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrdfTable {
    /// Three channel planes of `TABLE_LEN` raw (unscaled) values.
    data: Vec<f64>,
    negative_count: usize,
}

impl BrdfTable {
    /// Builds a table from raw per-channel planes (red, green, blue).
    pub fn from_raw(data: Vec<f64>) -> Result<Self, MerlError> {
        if data.len() != 3 * TABLE_LEN {
            return Err(MerlError::Length { expected: FILE_LEN, actual: HEADER_LEN + data.len() * 8 });
        }
        let bad = data.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(MerlError::NonFinite(bad));
        }
        let negative_count = data.iter().filter(|&&v| v < 0.0).count();
        Ok(Self { data, negative_count })
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// Number of negative entries in the file; they evaluate as zero.
    pub fn negative_count(&self) -> usize {
        self.negative_count
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FILE_LEN);
        for d in [THETA_H_RES, THETA_D_RES, PHI_D_RES] {
            out.extend_from_slice(&(d as i32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn raw_at(&self, ch: usize, th: usize, td: usize, pd: usize) -> f64 {
        self.data[ch * TABLE_LEN + (th * THETA_D_RES + td) * PHI_D_RES + pd].max(0.0)
    }

    /// Reflectance for unit directions in the local shading frame (normal
    /// = +z). Both directions must lie in the upper hemisphere.
    pub fn eval_local(&self, w_in: Vec3, w_out: Vec3) -> Rgb {
        let (theta_h, theta_d, phi_d) = half_diff(w_in, w_out);
        let x = continuous_index(theta_h, theta_d, phi_d);
        self.interpolate(x)
    }

    fn interpolate(&self, [xh, xd, xp]: [f64; 3]) -> Rgb {
        let (h0, fh) = split_clamped(xh, THETA_H_RES);
        let (d0, fd) = split_clamped(xd, THETA_D_RES);
        let p0f = xp.floor();
        let fp = xp - p0f;
        let p0 = (p0f as i64).rem_euclid(PHI_D_RES as i64) as usize;
        let p1 = (p0 + 1) % PHI_D_RES;
        let h1 = (h0 + 1).min(THETA_H_RES - 1);
        let d1 = (d0 + 1).min(THETA_D_RES - 1);
        let mut out = [0.0; 3];
        for (ch, o) in out.iter_mut().enumerate() {
            let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
            let c = |h, d, p| self.raw_at(ch, h, d, p);
            let c00 = lerp(c(h0, d0, p0), c(h0, d0, p1), fp);
            let c01 = lerp(c(h0, d1, p0), c(h0, d1, p1), fp);
            let c10 = lerp(c(h1, d0, p0), c(h1, d0, p1), fp);
            let c11 = lerp(c(h1, d1, p0), c(h1, d1, p1), fp);
            let v = lerp(lerp(c00, c01, fd), lerp(c10, c11, fd), fh);
            *o = v * CHANNEL_SCALE[ch];
        }
        Rgb(out)
    }
}

/// Integer part (clamped to the table) and fraction of a continuous index.
fn split_clamped(x: f64, n: usize) -> (usize, f64) {
    let x = x.clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 1);
    (i, x - i as f64)
}

/// Half/difference angles of a direction pair in the local frame.
pub fn half_diff(w_in: Vec3, w_out: Vec3) -> (f64, f64, f64) {
    let h = (w_in + w_out).try_normalize().unwrap_or(Vec3::Z);
    let theta_h = h.z.clamp(-1.0, 1.0).acos();
    let phi_h = h.y.atan2(h.x);
    // frame in which h is the pole: rotate by -phi_h about z, then by
    // -theta_h about y
    let (sp, cp) = phi_h.sin_cos();
    let (st, ct) = theta_h.sin_cos();
    let bx = Vec3::new(cp * ct, sp * ct, -st);
    let by = Vec3::new(-sp, cp, 0.0);
    let d = Vec3::new(w_in.dot(bx), w_in.dot(by), w_in.dot(h));
    let theta_d = d.z.clamp(-1.0, 1.0).acos();
    let mut phi_d = d.y.atan2(d.x);
    if phi_d < 0.0 {
        phi_d += PI;
    }
    (theta_h, theta_d, phi_d)
}

/// Continuous table coordinates; bin `k` sits at coordinate `k`.
pub fn continuous_index(theta_h: f64, theta_d: f64, phi_d: f64) -> [f64; 3] {
    [
        (theta_h.max(0.0) / FRAC_PI_2).sqrt() * THETA_H_RES as f64,
        theta_d / FRAC_PI_2 * THETA_D_RES as f64,
        phi_d / PI * PHI_D_RES as f64,
    ]
}

pub fn parse_merl(bytes: &[u8]) -> Result<BrdfTable, MerlError> {
    if bytes.len() < HEADER_LEN {
        return Err(MerlError::HeaderTruncated(bytes.len()));
    }
    let dim = |k: usize| i32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    let dims = [dim(0), dim(1), dim(2)];
    if dims != [THETA_H_RES as i32, THETA_D_RES as i32, PHI_D_RES as i32] {
        return Err(MerlError::Dimensions(dims));
    }
    if bytes.len() != FILE_LEN {
        return Err(MerlError::Length { expected: FILE_LEN, actual: bytes.len() });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    BrdfTable::from_raw(data)
}
