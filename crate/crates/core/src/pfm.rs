//! Portable float map I/O with `{0,1}` sidecar masks.
//!
//! Maps, images and normal maps are written as 3-channel little-endian PFM
//! files; the mask lives next to them as a 1-channel PFM named
//! `<stem>.mask.pfm`. Normals are stored raw in `[-1, 1]`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geom::{Rgb, Vec3};
use crate::image::{ImageError, NormalMap, RadianceImage};
use crate::rmap::{MapError, ReflectanceMap};

#[derive(Debug, Error)]
pub enum PfmError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed PFM header: {0}")]
    Header(String),
    #[error("expected {expected} channels, found {found}")]
    Channels { expected: usize, found: usize },
    #[error("PFM payload is {actual} bytes, expected {expected}")]
    Truncated { expected: usize, actual: usize },
    #[error("mask is {0}x{1} but data is {2}x{3}")]
    MaskSize(usize, usize, usize, usize),
    #[error("reflectance map must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// A decoded float raster, row 0 = bottom scanline.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl FloatMap {
    pub fn encode(&self) -> Vec<u8> {
        let tag = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{tag}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PfmError> {
        let mut pos = 0;
        let mut tokens = Vec::with_capacity(4);
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(PfmError::Header("unexpected end of header".into()));
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        // exactly one whitespace byte separates the header from the payload
        pos += 1;
        let channels = match tokens[0].as_str() {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(PfmError::Header(format!("bad magic {other:?}"))),
        };
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| PfmError::Header(format!("bad dimension {s:?}")))
        };
        let width = parse_dim(&tokens[1])?;
        let height = parse_dim(&tokens[2])?;
        let scale: f32 = tokens[3]
            .parse()
            .ok()
            .filter(|s: &f32| *s != 0.0 && s.is_finite())
            .ok_or_else(|| PfmError::Header(format!("bad scale {:?}", tokens[3])))?;
        let count = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| PfmError::Header("dimensions overflow".into()))?;
        let payload = bytes.get(pos..).unwrap_or(&[]);
        if payload.len() != count * 4 {
            return Err(PfmError::Truncated { expected: count * 4, actual: payload.len() });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if scale < 0.0 {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }
            })
            .collect();
        Ok(Self { width, height, channels, data })
    }

    pub fn read(path: &Path) -> Result<Self, PfmError> {
        let bytes = fs::read(path).map_err(|source| PfmError::Io { path: path.into(), source })?;
        Self::decode(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<(), PfmError> {
        write_bytes(path, &self.encode())
    }
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PfmError> {
    let io = |source| PfmError::Io { path: path.into(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// `foo.pfm` → `foo.mask.pfm`.
pub fn mask_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.mask.pfm"))
}

fn rgb_map(width: usize, height: usize, px: impl Iterator<Item = [f64; 3]>) -> FloatMap {
    let data = px.flat_map(|p| p.map(|v| v as f32)).collect();
    FloatMap { width, height, channels: 3, data }
}

fn mask_map(width: usize, height: usize, mask: &[bool]) -> FloatMap {
    let data = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    FloatMap { width, height, channels: 1, data }
}

fn read_pair(path: &Path) -> Result<(FloatMap, Vec<bool>), PfmError> {
    let data = FloatMap::read(path)?;
    if data.channels != 3 {
        return Err(PfmError::Channels { expected: 3, found: data.channels });
    }
    let mask = FloatMap::read(&mask_path(path))?;
    if mask.channels != 1 {
        return Err(PfmError::Channels { expected: 1, found: mask.channels });
    }
    if (mask.width, mask.height) != (data.width, data.height) {
        return Err(PfmError::MaskSize(mask.width, mask.height, data.width, data.height));
    }
    let mask = mask.data.iter().map(|&v| v > 0.5).collect();
    Ok((data, mask))
}

fn rgb_triples(data: &FloatMap) -> impl Iterator<Item = [f64; 3]> + '_ {
    data.data.chunks_exact(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
}

pub fn encode_map(rm: &ReflectanceMap) -> (Vec<u8>, Vec<u8>) {
    let r = rm.resolution();
    let px = rm
        .radiance()
        .iter()
        .zip(rm.defined())
        .map(|(c, &d)| if d { c.0 } else { [0.0; 3] });
    (rgb_map(r, r, px).encode(), mask_map(r, r, rm.defined()).encode())
}

pub fn write_map(rm: &ReflectanceMap, path: &Path) -> Result<(), PfmError> {
    let (data, mask) = encode_map(rm);
    write_bytes(path, &data)?;
    write_bytes(&mask_path(path), &mask)
}

pub fn read_map(path: &Path) -> Result<ReflectanceMap, PfmError> {
    let (data, mask) = read_pair(path)?;
    if data.width != data.height {
        return Err(PfmError::NotSquare(data.width, data.height));
    }
    let rgb = rgb_triples(&data).map(Rgb).collect();
    Ok(ReflectanceMap::new(data.width, rgb, mask)?)
}

pub fn write_image(img: &RadianceImage, path: &Path) -> Result<(), PfmError> {
    rgb_map(img.width, img.height, img.rgb.iter().map(|c| c.0)).write(path)?;
    mask_map(img.width, img.height, &img.mask).write(&mask_path(path))
}

pub fn read_image(path: &Path) -> Result<RadianceImage, PfmError> {
    let (data, mask) = read_pair(path)?;
    let rgb = rgb_triples(&data).map(Rgb).collect();
    Ok(RadianceImage::new(data.width, data.height, rgb, mask)?)
}

pub fn write_normals(nm: &NormalMap, path: &Path) -> Result<(), PfmError> {
    rgb_map(nm.width, nm.height, nm.normals.iter().map(|n| [n.x, n.y, n.z])).write(path)?;
    mask_map(nm.width, nm.height, &nm.mask).write(&mask_path(path))
}

/// Reads a normal map; masked-in vectors are renormalized after the f32
/// round trip.
pub fn read_normals(path: &Path) -> Result<NormalMap, PfmError> {
    let (data, mask) = read_pair(path)?;
    let normals = rgb_triples(&data)
        .zip(&mask)
        .map(|(p, &m)| {
            let v = Vec3::new(p[0], p[1], p[2]);
            if m {
                v.try_normalize().unwrap_or(v)
            } else {
                v
            }
        })
        .collect();
    Ok(NormalMap::new(data.width, data.height, normals, mask)?)
}
