//! Image edits through reflectance maps with detail preservation.
//!
//! A session stores the per-pixel L*a*b* difference between the input
//! image and its re-rendering through its own map. Every edit re-renders
//! and adds that difference back, so shadows and texture that the map
//! cannot express survive the edit.

mod export;
mod lab;
mod paint;

pub use export::{encode_png, linear_to_srgb8, write_png};
pub use lab::{in_gamut, lab_to_rgb, rgb_to_lab, Lab, LabImage};
pub use paint::{normal_paint, Stroke, StrokeError};

use thiserror::Error;

use crate::image::{check_congruent, ImageError, NormalMap, RadianceImage};
use crate::rmap::{shade_from_normals, ReflectanceMap};

/// Share of unknown lookups above which an edit logs a warning.
pub const UNKNOWN_WARN_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditSession {
    image: RadianceImage,
    normals: NormalMap,
    rm: ReflectanceMap,
    /// `None` where the session map could not shade the pixel.
    residual: Vec<Option<Lab>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditOutput {
    pub image: RadianceImage,
    /// Foreground pixels left at their original value because the lookup
    /// (or the session residual) was undefined.
    pub unknown_pixels: usize,
    pub out_of_gamut: usize,
}

impl EditSession {
    pub fn new(image: RadianceImage, normals: NormalMap, rm: ReflectanceMap) -> Result<Self, EditError> {
        check_congruent((image.width, image.height, &image.mask), (normals.width, normals.height, &normals.mask))?;
        let shading = shade_from_normals(&normals, &rm);
        let residual = (0..image.len())
            .map(|k| {
                (image.mask[k] && !shading.unknown[k]).then(|| rgb_to_lab(image.rgb[k]) - rgb_to_lab(shading.image.rgb[k]))
            })
            .collect();
        Ok(Self { image, normals, rm, residual })
    }

    pub fn image(&self) -> &RadianceImage {
        &self.image
    }

    pub fn normals(&self) -> &NormalMap {
        &self.normals
    }

    pub fn rm(&self) -> &ReflectanceMap {
        &self.rm
    }

    pub fn residual(&self) -> &[Option<Lab>] {
        &self.residual
    }

    fn render(&self, normals: &NormalMap, rm: &ReflectanceMap) -> EditOutput {
        let shading = shade_from_normals(normals, rm);
        let mut unknown_pixels = 0;
        let mut out_of_gamut = 0;
        let rgb = (0..self.image.len())
            .map(|k| {
                let orig = self.image.rgb[k];
                if !self.image.mask[k] {
                    return orig;
                }
                match self.residual[k] {
                    Some(res) if !shading.unknown[k] => {
                        let c = lab_to_rgb(rgb_to_lab(shading.image.rgb[k]) + res);
                        if !in_gamut(c) {
                            out_of_gamut += 1;
                        }
                        c
                    }
                    _ => {
                        unknown_pixels += 1;
                        orig
                    }
                }
            })
            .collect();
        let fg = self.image.foreground_count().max(1);
        if unknown_pixels as f64 > UNKNOWN_WARN_FRACTION * fg as f64 {
            log::warn!("{unknown_pixels} of {fg} foreground pixels had no defined lookup and were kept");
        }
        EditOutput { image: RadianceImage { rgb, ..self.image.clone() }, unknown_pixels, out_of_gamut }
    }
}

/// Re-renders the session's shape with another object's map. The maps
/// may differ in resolution.
pub fn material_transfer(session: &EditSession, rm_b: &ReflectanceMap) -> Result<EditOutput, EditError> {
    Ok(session.render(&session.normals, rm_b))
}

/// Re-renders the session's material on edited normals.
pub fn shape_reshade(session: &EditSession, nm_new: &NormalMap) -> Result<EditOutput, EditError> {
    check_congruent((nm_new.width, nm_new.height, &nm_new.mask), (session.image.width, session.image.height, &session.image.mask))?;
    Ok(session.render(nm_new, &session.rm))
}
