//! Guided upsampling of low-resolution normal maps.
//!
//! Joint bilateral upsampling: each full-resolution normal is the
//! renormalized average of nearby low-resolution normals, weighted by a
//! spatial Gaussian and by a Gaussian on the guide-color difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::image::{ImageError, NormalMap, RadianceImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsampleParams {
    /// Spatial standard deviation, in full-resolution pixels.
    pub sigma_spatial: f64,
    /// Standard deviation on the guide RGB distance.
    pub sigma_range: f64,
    /// Half-width of the square window, in full-resolution pixels.
    pub window_radius: usize,
}

impl UpsampleParams {
    /// Defaults for an upscale factor. A spatial sigma of half the factor
    /// keeps the kernel about as narrow as bilinear interpolation, so
    /// smooth curvature is not averaged away.
    pub fn for_factor(factor: f64) -> Self {
        Self {
            sigma_spatial: 0.5 * factor,
            sigma_range: 0.1,
            window_radius: (2.0 * factor).ceil().max(1.0) as usize,
        }
    }

    /// Rejects non-positive values; returns warnings for windows narrower
    /// than two spatial sigmas.
    pub fn validate(&self) -> Result<Vec<String>, UpsampleError> {
        if !(self.sigma_spatial > 0.0 && self.sigma_spatial.is_finite()) {
            return Err(UpsampleError::Params(format!("sigma_spatial = {}", self.sigma_spatial)));
        }
        if !(self.sigma_range > 0.0 && self.sigma_range.is_finite()) {
            return Err(UpsampleError::Params(format!("sigma_range = {}", self.sigma_range)));
        }
        if self.window_radius < 1 {
            return Err(UpsampleError::Params("window_radius = 0".into()));
        }
        let mut warnings = Vec::new();
        if (self.window_radius as f64) < (2.0 * self.sigma_spatial).ceil() {
            warnings.push(format!(
                "window radius {} truncates the spatial kernel (sigma {})",
                self.window_radius, self.sigma_spatial
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpsampleError {
    #[error("invalid upsampling parameters: {0}")]
    Params(String),
    #[error("guide {0}x{1} is smaller than the normal map {2}x{3}")]
    GuideTooSmall(usize, usize, usize, usize),
    #[error("low-resolution mask disagrees with the downscaled guide mask at {0} pixels")]
    MaskMismatch(usize),
    #[error("normal map has no foreground pixels")]
    EmptyMask,
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Upsampled {
    pub normals: NormalMap,
    /// Pixels whose weights all vanished and took the nearest low-res normal.
    pub fallback_pixels: usize,
    pub warnings: Vec<String>,
}

struct Grid {
    scale_x: f64,
    scale_y: f64,
}

impl Grid {
    /// Low-res pixel center in full-resolution pixel coordinates.
    fn center(&self, qi: usize, qj: usize) -> (f64, f64) {
        ((qi as f64 + 0.5) * self.scale_x - 0.5, (qj as f64 + 0.5) * self.scale_y - 0.5)
    }

    /// Full-resolution pixel nearest to a low-res center.
    fn nearest_high(&self, qi: usize, qj: usize, w: usize, h: usize) -> (usize, usize) {
        let (x, y) = self.center(qi, qj);
        ((x.round().max(0.0) as usize).min(w - 1), (y.round().max(0.0) as usize).min(h - 1))
    }
}

fn nearest_low(low: &NormalMap, grid: &Grid, x: usize, y: usize) -> Option<Vec3> {
    let (px, py) = (x as f64, y as f64);
    let mut best: Option<(f64, Vec3)> = None;
    for qj in 0..low.height {
        for qi in 0..low.width {
            let k = low.index(qi, qj);
            if !low.mask[k] {
                continue;
            }
            let (cx, cy) = grid.center(qi, qj);
            let d2 = (cx - px).powi(2) + (cy - py).powi(2);
            if best.is_none_or(|(b, _)| d2 < b) {
                best = Some((d2, low.normals[k]));
            }
        }
    }
    best.map(|(_, n)| n)
}

/// Unit vector with `z >= 0`, or `None` for degenerate input.
fn to_upper_unit(v: Vec3) -> Option<Vec3> {
    let n = v.try_normalize()?;
    if n.z >= 0.0 {
        Some(n)
    } else {
        Vec3::new(n.x, n.y, 0.0).try_normalize()
    }
}

fn check_inputs(low: &NormalMap, guide: &RadianceImage) -> Result<Grid, UpsampleError> {
    if guide.width < low.width || guide.height < low.height {
        return Err(UpsampleError::GuideTooSmall(guide.width, guide.height, low.width, low.height));
    }
    if low.foreground_count() == 0 {
        return Err(UpsampleError::EmptyMask);
    }
    let grid = Grid {
        scale_x: guide.width as f64 / low.width as f64,
        scale_y: guide.height as f64 / low.height as f64,
    };
    let mismatched = (0..low.len())
        .filter(|&k| {
            let (qi, qj) = (k % low.width, k / low.width);
            let (x, y) = grid.nearest_high(qi, qj, guide.width, guide.height);
            low.mask[k] != guide.mask[guide.index(x, y)]
        })
        .count();
    if mismatched > 0 {
        return Err(UpsampleError::MaskMismatch(mismatched));
    }
    Ok(grid)
}

pub fn joint_upsample(low: &NormalMap, guide: &RadianceImage, params: &UpsampleParams) -> Result<Upsampled, UpsampleError> {
    let warnings = params.validate()?;
    let grid = check_inputs(low, guide)?;
    let (w, h) = (guide.width, guide.height);
    let radius = params.window_radius as f64;
    let inv_2ss = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
    let inv_2sr = 1.0 / (2.0 * params.sigma_range * params.sigma_range);

    let out: Vec<(Vec3, bool)> = (0..w * h)
        .into_par_iter()
        .map(|k| {
            if !guide.mask[k] {
                return (Vec3::ZERO, false);
            }
            let (x, y) = (k % w, k / w);
            let (px, py) = (x as f64, y as f64);
            let g = guide.rgb[k];
            // low-res index range whose centers fall inside the window
            let qi_lo = (((px - radius + 0.5) / grid.scale_x - 0.5).floor().max(0.0)) as usize;
            let qi_hi = ((((px + radius + 0.5) / grid.scale_x - 0.5).ceil()).max(0.0) as usize).min(low.width - 1);
            let qj_lo = (((py - radius + 0.5) / grid.scale_y - 0.5).floor().max(0.0)) as usize;
            let qj_hi = ((((py + radius + 0.5) / grid.scale_y - 0.5).ceil()).max(0.0) as usize).min(low.height - 1);
            let mut acc = Vec3::ZERO;
            let mut wsum = 0.0;
            for qj in qj_lo..=qj_hi {
                for qi in qi_lo..=qi_hi {
                    let q = low.index(qi, qj);
                    if !low.mask[q] {
                        continue;
                    }
                    let (cx, cy) = grid.center(qi, qj);
                    let (dx, dy) = (cx - px, cy - py);
                    if dx.abs() > radius || dy.abs() > radius {
                        continue;
                    }
                    let (gx, gy) = grid.nearest_high(qi, qj, w, h);
                    let dc = g - guide.get(gx, gy);
                    let range2 = dc.0.iter().map(|c| c * c).sum::<f64>();
                    let weight = (-(dx * dx + dy * dy) * inv_2ss - range2 * inv_2sr).exp();
                    acc += low.normals[q] * weight;
                    wsum += weight;
                }
            }
            let blended = if wsum > 0.0 { to_upper_unit(acc / wsum) } else { None };
            match blended {
                Some(n) => (n, false),
                None => (nearest_low(low, &grid, x, y).unwrap_or(Vec3::Z), true),
            }
        })
        .collect();

    let fallback_pixels = out.iter().filter(|(_, f)| *f).count();
    let normals = out.into_iter().map(|(n, _)| n).collect();
    let normals = NormalMap::new(w, h, normals, guide.mask.clone())?;
    Ok(Upsampled { normals, fallback_pixels, warnings })
}

/// Unguided baseline: bilinear interpolation of the masked-in low-res
/// normals (weights renormalized over the foreground), then renormalized.
pub fn bilinear_upsample(low: &NormalMap, width: usize, height: usize, mask: &[bool]) -> Result<NormalMap, UpsampleError> {
    if low.foreground_count() == 0 {
        return Err(UpsampleError::EmptyMask);
    }
    let grid = Grid { scale_x: width as f64 / low.width as f64, scale_y: height as f64 / low.height as f64 };
    let normals = (0..width * height)
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return Vec3::ZERO;
            }
            let (x, y) = (k % width, k / width);
            let u = (x as f64 + 0.5) / grid.scale_x - 0.5;
            let v = (y as f64 + 0.5) / grid.scale_y - 0.5;
            let (i0, j0) = (u.floor(), v.floor());
            let (fu, fv) = (u - i0, v - j0);
            let mut acc = Vec3::ZERO;
            for (di, dj, wgt) in [(0.0, 0.0, (1.0 - fu) * (1.0 - fv)), (1.0, 0.0, fu * (1.0 - fv)), (0.0, 1.0, (1.0 - fu) * fv), (1.0, 1.0, fu * fv)] {
                let (qi, qj) = (i0 + di, j0 + dj);
                if qi < 0.0 || qj < 0.0 || qi >= low.width as f64 || qj >= low.height as f64 {
                    continue;
                }
                let q = low.index(qi as usize, qj as usize);
                if low.mask[q] {
                    acc += low.normals[q] * wgt;
                }
            }
            to_upper_unit(acc)
                .or_else(|| nearest_low(low, &grid, x, y))
                .unwrap_or(Vec3::Z)
        })
        .collect();
    Ok(NormalMap::new(width, height, normals, mask.to_vec())?)
}
