//! Masked per-pixel rasters: radiance images and normal maps.
//!
//! Row 0 is the bottom scanline, matching PFM storage order, so the image
//! y axis, the normal y component and the reflectance-map t axis all point
//! the same way.

use thiserror::Error;

use crate::geom::{Rgb, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImageError {
    #[error("buffer length {actual} does not match {width}x{height}")]
    BufferSize { width: usize, height: usize, actual: usize },
    #[error("images differ in size: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("masks differ at {count} pixels")]
    MaskMismatch { count: usize },
    #[error("pixel ({x}, {y}) holds an invalid value: {reason}")]
    InvalidPixel { x: usize, y: usize, reason: &'static str },
    #[error("image is empty")]
    Empty,
}

/// Pixel-center coordinate in `[-1, 1]` along an axis with `n` pixels.
pub fn pixel_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64 * 2.0 - 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<Rgb>,
    pub mask: Vec<bool>,
}

impl RadianceImage {
    pub fn new(width: usize, height: usize, rgb: Vec<Rgb>, mask: Vec<bool>) -> Result<Self, ImageError> {
        let n = width * height;
        if n == 0 {
            return Err(ImageError::Empty);
        }
        for len in [rgb.len(), mask.len()] {
            if len != n {
                return Err(ImageError::BufferSize { width, height, actual: len });
            }
        }
        for (i, (c, &m)) in rgb.iter().zip(&mask).enumerate() {
            if m && !(c.is_finite() && c.is_non_negative()) {
                return Err(ImageError::InvalidPixel {
                    x: i % width,
                    y: i / width,
                    reason: "radiance must be finite and non-negative",
                });
            }
        }
        Ok(Self { width, height, rgb, mask })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Self {
        let n = width * height;
        Self { width, height, rgb: vec![value; n], mask: vec![true; n] }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.rgb[self.index(x, y)]
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn same_size(&self, w: usize, h: usize) -> Result<(), ImageError> {
        if self.width != w || self.height != h {
            return Err(ImageError::SizeMismatch(self.width, self.height, w, h));
        }
        Ok(())
    }

    /// Applies `f` to every masked-in pixel.
    pub fn map_foreground(&self, f: impl Fn(Rgb) -> Rgb) -> RadianceImage {
        let rgb = self
            .rgb
            .iter()
            .zip(&self.mask)
            .map(|(&c, &m)| if m { f(c) } else { c })
            .collect();
        RadianceImage { rgb, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Vec3>,
    pub mask: Vec<bool>,
}

impl NormalMap {
    pub const UNIT_TOLERANCE: f64 = 1e-4;

    /// Validates unit length and `z >= 0` on masked-in pixels. Masked-out
    /// entries are zeroed.
    pub fn new(width: usize, height: usize, mut normals: Vec<Vec3>, mask: Vec<bool>) -> Result<Self, ImageError> {
        let n = width * height;
        if n == 0 {
            return Err(ImageError::Empty);
        }
        for len in [normals.len(), mask.len()] {
            if len != n {
                return Err(ImageError::BufferSize { width, height, actual: len });
            }
        }
        for (i, (v, &m)) in normals.iter_mut().zip(&mask).enumerate() {
            if !m {
                *v = Vec3::ZERO;
                continue;
            }
            let reason = if !v.is_finite() || (v.length() - 1.0).abs() > Self::UNIT_TOLERANCE {
                Some("normal is not unit length")
            } else if v.z < 0.0 {
                Some("normal faces away from the viewer")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(ImageError::InvalidPixel { x: i % width, y: i / width, reason });
            }
        }
        Ok(Self { width, height, normals, mask })
    }

    pub fn constant(width: usize, height: usize, n: Vec3) -> Self {
        let len = width * height;
        Self { width, height, normals: vec![n; len], mask: vec![true; len] }
    }

    /// Normal map of an orthographic unit sphere that fills the frame.
    pub fn sphere(size: usize) -> Self {
        let mut normals = Vec::with_capacity(size * size);
        let mut mask = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let s = pixel_center(x, size);
                let t = pixel_center(y, size);
                let r2 = s * s + t * t;
                if r2 <= 1.0 {
                    normals.push(Vec3::new(s, t, (1.0 - r2).sqrt()));
                    mask.push(true);
                } else {
                    normals.push(Vec3::ZERO);
                    mask.push(false);
                }
            }
        }
        Self { width: size, height: size, normals, mask }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> Vec3 {
        self.normals[self.index(x, y)]
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Nearest-neighbor downscale by an integer factor (sampling the pixel
    /// nearest each low-res center).
    pub fn downsample_nearest(&self, factor: usize) -> NormalMap {
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut normals = Vec::with_capacity(w * h);
        let mut mask = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let sx = (x * factor + factor / 2).min(self.width - 1);
                let sy = (y * factor + factor / 2).min(self.height - 1);
                let i = self.index(sx, sy);
                normals.push(self.normals[i]);
                mask.push(self.mask[i]);
            }
        }
        NormalMap { width: w, height: h, normals, mask }
    }
}

/// Checks that two rasters have equal sizes and identical masks.
pub fn check_congruent(a: (usize, usize, &[bool]), b: (usize, usize, &[bool])) -> Result<(), ImageError> {
    if a.0 != b.0 || a.1 != b.1 {
        return Err(ImageError::SizeMismatch(a.0, a.1, b.0, b.1));
    }
    let count = a.2.iter().zip(b.2).filter(|(x, y)| x != y).count();
    if count > 0 {
        return Err(ImageError::MaskMismatch { count });
    }
    Ok(())
}
