//! The reflectance map: outgoing radiance indexed by surface orientation on
//! an R×R grid over the (s,t) unit disc, plus appearance lookup.
//!
//! Cell `(i, j)` has its center at `s = (i + 0.5) / R * 2 - 1` and
//! `t = (j + 0.5) / R * 2 - 1`; a cell belongs to the disc iff its center
//! does. Cells outside the disc are never defined.

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{Orientation, Rgb, StCoord, Vec3};
use crate::image::{pixel_center, NormalMap, RadianceImage};

pub const DEFAULT_RESOLUTION: usize = 32;

/// Color written where a lookup had no defined neighbors.
pub const UNDEFINED_SENTINEL: Rgb = Rgb::new(1.0, 0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("resolution {0} is below the minimum of 2")]
    Resolution(usize),
    #[error("buffer length {actual} does not match {resolution}x{resolution}")]
    BufferSize { resolution: usize, actual: usize },
    #[error("cell ({i}, {j}) lies outside the unit disc but is marked defined")]
    DefinedOutsideDisc { i: usize, j: usize },
    #[error("cell ({i}, {j}) holds non-finite or negative radiance")]
    InvalidRadiance { i: usize, j: usize },
    #[error("coordinate ({0}, {1}) lies outside the unit disc")]
    OutsideDisc(f64, f64),
    #[error("maps differ in resolution: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
}

pub fn cell_center(i: usize, resolution: usize) -> f64 {
    pixel_center(i, resolution)
}

pub fn pixel_to_st(i: usize, j: usize, resolution: usize) -> StCoord {
    StCoord::new(cell_center(i, resolution), cell_center(j, resolution))
}

/// Grid cell containing `c`; rejects points outside the unit disc.
pub fn st_to_pixel(c: StCoord, resolution: usize) -> Result<(usize, usize), MapError> {
    if resolution < 2 {
        return Err(MapError::Resolution(resolution));
    }
    if !c.in_disc() || !c.s.is_finite() || !c.t.is_finite() {
        return Err(MapError::OutsideDisc(c.s, c.t));
    }
    let cell = |v: f64| (((v + 1.0) * 0.5 * resolution as f64).floor() as usize).min(resolution - 1);
    Ok((cell(c.s), cell(c.t)))
}

pub fn cell_in_disc(i: usize, j: usize, resolution: usize) -> bool {
    pixel_to_st(i, j, resolution).in_disc()
}

/// Orientation at the center of an in-disc cell.
pub fn cell_orientation(i: usize, j: usize, resolution: usize) -> Orientation {
    Orientation::from_st(pixel_to_st(i, j, resolution))
}

/// Smallest angle, in degrees, between the orientations of two
/// edge-adjacent in-disc cells. A cone narrower than this around a cell
/// center contains no other cell center.
pub fn min_cell_spacing_deg(resolution: usize) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..resolution {
        for i in 0..resolution {
            if !cell_in_disc(i, j, resolution) {
                continue;
            }
            let o = cell_orientation(i, j, resolution);
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni < resolution && nj < resolution && cell_in_disc(ni, nj, resolution) {
                    best = best.min(o.angle(cell_orientation(ni, nj, resolution)).to_degrees());
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectanceMap {
    resolution: usize,
    radiance: Vec<Rgb>,
    defined: Vec<bool>,
}

impl ReflectanceMap {
    pub fn new(resolution: usize, radiance: Vec<Rgb>, defined: Vec<bool>) -> Result<Self, MapError> {
        if resolution < 2 {
            return Err(MapError::Resolution(resolution));
        }
        let n = resolution * resolution;
        for len in [radiance.len(), defined.len()] {
            if len != n {
                return Err(MapError::BufferSize { resolution, actual: len });
            }
        }
        for (k, &d) in defined.iter().enumerate() {
            if !d {
                continue;
            }
            let (i, j) = (k % resolution, k / resolution);
            if !cell_in_disc(i, j, resolution) {
                return Err(MapError::DefinedOutsideDisc { i, j });
            }
            let c = radiance[k];
            if !(c.is_finite() && c.is_non_negative()) {
                return Err(MapError::InvalidRadiance { i, j });
            }
        }
        Ok(Self { resolution, radiance, defined })
    }

    /// Map with every cell undefined.
    pub fn empty(resolution: usize) -> Self {
        assert!(resolution >= 2, "resolution must be at least 2");
        let n = resolution * resolution;
        Self { resolution, radiance: vec![Rgb::BLACK; n], defined: vec![false; n] }
    }

    /// Evaluates `f` at every in-disc cell orientation.
    pub fn from_fn(resolution: usize, f: impl Fn(Orientation) -> Rgb + Sync) -> Self {
        let mut map = Self::empty(resolution);
        let values: Vec<Option<Rgb>> = (0..resolution * resolution)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % resolution, k / resolution);
                cell_in_disc(i, j, resolution).then(|| f(cell_orientation(i, j, resolution)))
            })
            .collect();
        for (k, v) in values.into_iter().enumerate() {
            if let Some(v) = v {
                map.radiance[k] = v;
                map.defined[k] = true;
            }
        }
        map
    }

    pub fn constant(resolution: usize, value: Rgb) -> Self {
        Self::from_fn(resolution, |_| value)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn radiance(&self) -> &[Rgb] {
        &self.radiance
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Rgb> {
        let k = j * self.resolution + i;
        self.defined[k].then_some(self.radiance[k])
    }

    /// Sets an in-disc cell. Panics on out-of-disc cells or invalid radiance.
    pub fn set(&mut self, i: usize, j: usize, value: Rgb) {
        assert!(cell_in_disc(i, j, self.resolution), "cell ({i}, {j}) is outside the disc");
        assert!(value.is_finite() && value.is_non_negative(), "invalid radiance {value:?}");
        let k = j * self.resolution + i;
        self.radiance[k] = value;
        self.defined[k] = true;
    }

    pub fn unset(&mut self, i: usize, j: usize) {
        let k = j * self.resolution + i;
        self.defined[k] = false;
        self.radiance[k] = Rgb::BLACK;
    }

    pub fn defined_count(&self) -> usize {
        self.defined.iter().filter(|&&d| d).count()
    }

    pub fn disc_cell_count(&self) -> usize {
        self.disc_cells().count()
    }

    /// True when every in-disc cell is defined.
    pub fn is_dense(&self) -> bool {
        self.disc_cells().all(|(i, j)| self.get(i, j).is_some())
    }

    /// In-disc cells in scanline order.
    pub fn disc_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.resolution;
        (0..r * r).map(move |k| (k % r, k / r)).filter(move |&(i, j)| cell_in_disc(i, j, r))
    }

    /// Defined cells as `(i, j, value)`.
    pub fn defined_cells(&self) -> impl Iterator<Item = (usize, usize, Rgb)> + '_ {
        let r = self.resolution;
        (0..r * r).filter(|&k| self.defined[k]).map(move |k| (k % r, k / r, self.radiance[k]))
    }

    /// Applies `f` to every defined cell.
    pub fn map_defined(&self, f: impl Fn(Rgb) -> Rgb) -> ReflectanceMap {
        let radiance = self
            .radiance
            .iter()
            .zip(&self.defined)
            .map(|(&c, &d)| if d { f(c) } else { c })
            .collect();
        ReflectanceMap { radiance, ..self.clone() }
    }

    /// Bilinear lookup over cell centers. Weights of undefined or
    /// out-of-grid neighbors are dropped and the rest renormalized; `None`
    /// when none of the four neighbors is defined.
    pub fn lookup_st(&self, c: StCoord) -> Option<Rgb> {
        let r = self.resolution as f64;
        let u = (c.s + 1.0) * 0.5 * r - 0.5;
        let v = (c.t + 1.0) * 0.5 * r - 0.5;
        let (i0, j0) = (u.floor(), v.floor());
        let (fu, fv) = (u - i0, v - j0);
        let taps = [
            (i0, j0, (1.0 - fu) * (1.0 - fv)),
            (i0 + 1.0, j0, fu * (1.0 - fv)),
            (i0, j0 + 1.0, (1.0 - fu) * fv),
            (i0 + 1.0, j0 + 1.0, fu * fv),
        ];
        let mut acc = Rgb::BLACK;
        let mut wsum = 0.0;
        let mut nearest: Option<(f64, Rgb)> = None;
        for (ti, tj, w) in taps {
            if ti < 0.0 || tj < 0.0 || ti >= r || tj >= r {
                continue;
            }
            let Some(value) = self.get(ti as usize, tj as usize) else {
                continue;
            };
            acc += value * w;
            wsum += w;
            let d2 = (ti - u).powi(2) + (tj - v).powi(2);
            if nearest.is_none_or(|(best, _)| d2 < best) {
                nearest = Some((d2, value));
            }
        }
        let (_, fallback) = nearest?;
        if wsum > 1e-12 {
            Some(acc / wsum)
        } else {
            Some(fallback)
        }
    }

    pub fn lookup(&self, n: Orientation) -> Option<Rgb> {
        self.lookup_st(n.to_st())
    }
}

/// Result of shading a raster through a reflectance map.
#[derive(Debug, Clone, PartialEq)]
pub struct Shading {
    pub image: RadianceImage,
    /// Foreground pixels whose lookup was undefined; they hold
    /// [`UNDEFINED_SENTINEL`].
    pub unknown: Vec<bool>,
}

impl Shading {
    pub fn unknown_count(&self) -> usize {
        self.unknown.iter().filter(|&&u| u).count()
    }
}

fn shade_pixels(
    width: usize,
    height: usize,
    mask: Vec<bool>,
    normal_at: impl Fn(usize) -> Option<Vec3> + Sync,
    rm: &ReflectanceMap,
) -> Shading {
    let looked_up: Vec<(Rgb, bool)> = (0..width * height)
        .into_par_iter()
        .map(|k| match normal_at(k) {
            None => (Rgb::BLACK, false),
            Some(n) => match Orientation::from_vector(n).and_then(|o| rm.lookup(o)) {
                Some(c) => (c, false),
                None => (UNDEFINED_SENTINEL, true),
            },
        })
        .collect();
    let (rgb, unknown) = looked_up.into_iter().unzip();
    Shading { image: RadianceImage { width, height, rgb, mask }, unknown }
}

/// Orthographic image of a sphere showing `rm`; the mask is the disc.
pub fn render_sphere(rm: &ReflectanceMap, size: usize) -> Shading {
    assert!(size >= 2, "sphere render needs at least 2x2 pixels");
    let nm = NormalMap::sphere(size);
    shade_from_normals(&nm, rm)
}

/// Per-pixel appearance lookup; background pixels are black and the mask
/// is copied from `nm`.
pub fn shade_from_normals(nm: &NormalMap, rm: &ReflectanceMap) -> Shading {
    shade_pixels(
        nm.width,
        nm.height,
        nm.mask.clone(),
        |k| nm.mask[k].then_some(nm.normals[k]),
        rm,
    )
}
