use rayon::prelude::*;
use thiserror::Error;

use super::OrientedSample;
use crate::geom::Rgb;
use crate::rmap::{cell_in_disc, cell_orientation, ReflectanceMap};

/// Kernel sharpness on the angular distance, in inverse radians.
pub const DEFAULT_SIGMA: f64 = 8.0;

/// Weight sums below this fall back to the nearest sample.
const DEGENERATE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RbfError {
    #[error("RBF reconstruction needs at least one sample")]
    NoSamples,
    #[error("kernel sigma must be positive and finite, got {0}")]
    Sigma(f64),
}

/// `exp(-(sigma * acos(x))^2)` for a cosine `x`.
pub fn rbf_weight(cos_angle: f64, sigma: f64) -> f64 {
    let angle = cos_angle.clamp(-1.0, 1.0).acos();
    (-(sigma * angle).powi(2)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfOutput {
    pub map: ReflectanceMap,
    /// Cells whose weight sum was degenerate and took the nearest sample.
    pub fallback_cells: Vec<(usize, usize)>,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Normalized kernel-weighted average of the samples at every in-disc cell.
pub fn rbf_reconstruct(samples: &[OrientedSample], sigma: f64, resolution: usize) -> Result<RbfOutput, RbfError> {
    if samples.is_empty() {
        return Err(RbfError::NoSamples);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(RbfError::Sigma(sigma));
    }
    let cells: Vec<Option<(Rgb, bool)>> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            if !cell_in_disc(i, j, resolution) {
                return None;
            }
            let omega = cell_orientation(i, j, resolution);
            let mut wsum = KahanSum::default();
            let mut acc = [KahanSum::default(); 3];
            let mut nearest = (f64::NEG_INFINITY, Rgb::BLACK);
            for s in samples {
                let cos = omega.dot(s.omega);
                if cos > nearest.0 {
                    nearest = (cos, s.radiance);
                }
                let w = rbf_weight(cos, sigma);
                wsum.add(w);
                for (a, c) in acc.iter_mut().zip(s.radiance.0) {
                    a.add(w * c);
                }
            }
            let wsum = wsum.value();
            if wsum < DEGENERATE_WEIGHT {
                Some((nearest.1, true))
            } else {
                Some((Rgb(acc.map(|a| a.value() / wsum)), false))
            }
        })
        .collect();

    let mut map = ReflectanceMap::empty(resolution);
    let mut fallback_cells = Vec::new();
    for (k, cell) in cells.into_iter().enumerate() {
        if let Some((value, fell_back)) = cell {
            let (i, j) = (k % resolution, k / resolution);
            map.set(i, j, value.map(|v| v.max(0.0)));
            if fell_back {
                fallback_cells.push((i, j));
            }
        }
    }
    Ok(RbfOutput { map, fallback_cells })
}
