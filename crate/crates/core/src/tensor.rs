//! Tensor-block interchange files for external predictors.
//!
//! Layout (all little-endian): `b"TBLK"`, `u32` version, `u32` rank,
//! `rank × u64` dims, then `product(dims)` `f32` values in row-major order.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geom::Rgb;
use crate::rmap::ReflectanceMap;

pub const MAGIC: &[u8; 4] = b"TBLK";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("not a tensor block (magic {0:?})")]
    Magic([u8; 4]),
    #[error("unsupported tensor block version {0}")]
    Version(u32),
    #[error("tensor block header truncated")]
    Header,
    #[error("payload holds {actual} bytes, dims {dims:?} need {expected}")]
    Payload { dims: Vec<u64>, expected: usize, actual: usize },
    #[error("dims {0:?} overflow")]
    Overflow(Vec<u64>),
    #[error("expected shape {expected}, found {found:?}")]
    Shape { expected: String, found: Vec<u64> },
    #[error("tensor holds non-finite values")]
    NonFinite,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorBlock {
    pub dims: Vec<u64>,
    pub data: Vec<f32>,
}

impl TensorBlock {
    pub fn new(dims: Vec<u64>, data: Vec<f32>) -> Result<Self, TensorError> {
        let expected = element_count(&dims)?;
        if expected != data.len() {
            return Err(TensorError::Payload { dims, expected: expected * 4, actual: data.len() * 4 });
        }
        Ok(Self { dims, data })
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TensorError> {
        let take = |at: usize, n: usize| bytes.get(at..at + n).ok_or(TensorError::Header);
        let magic: [u8; 4] = take(0, 4)?.try_into().unwrap();
        if &magic != MAGIC {
            return Err(TensorError::Magic(magic));
        }
        let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
        if version != VERSION {
            return Err(TensorError::Version(version));
        }
        let rank = u32::from_le_bytes(take(8, 4)?.try_into().unwrap()) as usize;
        let dims: Vec<u64> = (0..rank)
            .map(|k| take(12 + 8 * k, 8).map(|b| u64::from_le_bytes(b.try_into().unwrap())))
            .collect::<Result<_, _>>()?;
        let count = element_count(&dims)?;
        let payload = &bytes[12 + 8 * rank..];
        if payload.len() != count * 4 {
            return Err(TensorError::Payload { dims, expected: count * 4, actual: payload.len() });
        }
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { dims, data })
    }

    pub fn read(path: &Path) -> Result<Self, TensorError> {
        Self::decode(&fs::read(path)?)
    }

    /// Writes via a temporary file and rename so readers never see a
    /// partial block.
    pub fn write(&self, path: &Path) -> Result<(), TensorError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tblk.tmp");
        fs::write(&tmp, self.encode())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Encodes a map as `R×R×4` (rgb + defined flag).
    pub fn from_map(rm: &ReflectanceMap) -> Self {
        let r = rm.resolution() as u64;
        let data = rm
            .radiance()
            .iter()
            .zip(rm.defined())
            .flat_map(|(c, &d)| {
                let c = if d { c.0 } else { [0.0; 3] };
                [c[0] as f32, c[1] as f32, c[2] as f32, if d { 1.0 } else { 0.0 }]
            })
            .collect();
        Self { dims: vec![r, r, 4], data }
    }

    /// Decodes `R×R×3` (all in-disc cells defined) or `R×R×4` (explicit
    /// defined flag). Out-of-disc cells are always left undefined.
    pub fn to_map(&self, resolution: usize) -> Result<ReflectanceMap, TensorError> {
        let r = resolution as u64;
        let channels = match self.dims.as_slice() {
            [h, w, c] if *h == r && *w == r && (*c == 3 || *c == 4) => *c as usize,
            _ => {
                return Err(TensorError::Shape {
                    expected: format!("[{r}, {r}, 3|4]"),
                    found: self.dims.clone(),
                })
            }
        };
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        let mut rm = ReflectanceMap::empty(resolution);
        for (k, px) in self.data.chunks_exact(channels).enumerate() {
            let (i, j) = (k % resolution, k / resolution);
            let flagged = channels == 3 || px[3] > 0.5;
            if flagged && crate::rmap::cell_in_disc(i, j, resolution) {
                let c = Rgb::new(px[0] as f64, px[1] as f64, px[2] as f64).map(|v| v.max(0.0));
                rm.set(i, j, c);
            }
        }
        Ok(rm)
    }
}

fn element_count(dims: &[u64]) -> Result<usize, TensorError> {
    dims.iter()
        .try_fold(1usize, |acc, &d| usize::try_from(d).ok().and_then(|d| acc.checked_mul(d)))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| TensorError::Overflow(dims.to_vec()))
}
