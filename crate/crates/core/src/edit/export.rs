//! 8-bit sRGB PNG export.

use std::path::Path;

use crate::geom::Rgb;
use crate::image::RadianceImage;

/// sRGB-encodes a linear value, clamped to `[0, 1]`.
pub fn linear_to_srgb8(v: f64) -> u8 {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let e = if v <= 0.003_130_8 { 12.92 * v } else { 1.055 * v.powf(1.0 / 2.4) - 0.055 };
    (e * 255.0).round() as u8
}

/// RGBA PNG with the mask in alpha. Rows are flipped so the bottom
/// scanline (row 0) ends up at the bottom of the picture.
pub fn encode_png(img: &RadianceImage) -> Vec<u8> {
    let mut data = Vec::with_capacity(img.len() * 4);
    for y in (0..img.height).rev() {
        for x in 0..img.width {
            let k = img.index(x, y);
            let c: Rgb = img.rgb[k];
            data.extend(c.0.iter().map(|&v| linear_to_srgb8(v)));
            data.push(if img.mask[k] { 255 } else { 0 });
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
        let mut w = enc.write_header().expect("in-memory PNG header");
        w.write_image_data(&data).expect("in-memory PNG data");
    }
    out
}

pub fn write_png(img: &RadianceImage, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, encode_png(img))
}
