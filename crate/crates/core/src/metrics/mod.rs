//! Scores for reflectance maps and normal maps.

mod ssim;
mod table;

pub use ssim::{gaussian_taps, luminance_grid, mean_ssim, WINDOW, WINDOW_SIGMA};
pub use table::{emit_results_table, MethodRow, ResultsTable, SplitScore, TableError, TableMetadata, RESULTS_SCHEMA};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{densify, DensifyMethod, DEFAULT_SIGMA};
use crate::image::{check_congruent, ImageError, NormalMap};
use crate::rmap::{cell_in_disc, ReflectanceMap};

/// Overlaps below this share of the disc are flagged.
pub const LOW_OVERLAP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("resolution mismatch: {0} vs {1}")]
    Resolution(usize, usize),
    #[error("the maps share no defined cell")]
    NoOverlap,
    #[error("resolution {0} is smaller than the {WINDOW}x{WINDOW} SSIM window")]
    TooSmall(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("normal maps have no foreground pixel")]
    EmptyMask,
}

fn joint_cells(a: &ReflectanceMap, b: &ReflectanceMap) -> Result<Vec<usize>, MetricError> {
    if a.resolution() != b.resolution() {
        return Err(MetricError::Resolution(a.resolution(), b.resolution()));
    }
    let joint: Vec<usize> = (0..a.defined().len()).filter(|&k| a.defined()[k] && b.defined()[k]).collect();
    if joint.is_empty() {
        return Err(MetricError::NoOverlap);
    }
    Ok(joint)
}

/// Mean over jointly defined cells of the per-cell mean squared RGB
/// difference.
pub fn rm_mse(a: &ReflectanceMap, b: &ReflectanceMap) -> Result<f64, MetricError> {
    let joint = joint_cells(a, b)?;
    let sum: f64 = joint
        .iter()
        .map(|&k| {
            let d = a.radiance()[k] - b.radiance()[k];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / 3.0
        })
        .sum();
    Ok(sum / joint.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dssim {
    pub dssim: f64,
    /// In-disc cells of each input filled by RBF densification first.
    pub filled_a: usize,
    pub filled_b: usize,
}

fn fill(rm: &ReflectanceMap) -> (ReflectanceMap, usize) {
    if rm.is_dense() {
        return (rm.clone(), 0);
    }
    let missing = rm.disc_cell_count() - rm.defined_count();
    let dense = densify(rm, &DensifyMethod::Rbf { sigma: DEFAULT_SIGMA }).expect("non-empty map").map;
    (dense, missing)
}

/// `(1 - SSIM) / 2` on luminance; undefined in-disc cells are filled by RBF
/// densification before windowing.
pub fn rm_dssim(a: &ReflectanceMap, b: &ReflectanceMap) -> Result<Dssim, MetricError> {
    joint_cells(a, b)?;
    let r = a.resolution();
    if r < WINDOW {
        return Err(MetricError::TooSmall(r));
    }
    let (fa, filled_a) = fill(a);
    let (fb, filled_b) = fill(b);
    let in_disc: Vec<bool> = (0..r * r).map(|k| cell_in_disc(k % r, k / r, r)).collect();
    let ssim = mean_ssim(&luminance_grid(&fa), &luminance_grid(&fb), r, &in_disc).ok_or(MetricError::TooSmall(r))?;
    Ok(Dssim { dssim: ((1.0 - ssim) / 2.0).clamp(0.0, 1.0), filled_a, filled_b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmScore {
    pub mse: f64,
    pub dssim: f64,
    /// Jointly defined share of the in-disc cells.
    pub defined_overlap: f64,
    pub filled_cells: usize,
}

impl RmScore {
    pub fn low_overlap(&self) -> bool {
        self.defined_overlap < LOW_OVERLAP
    }
}

pub fn rm_score(pred: &ReflectanceMap, gt: &ReflectanceMap) -> Result<RmScore, MetricError> {
    let mse = rm_mse(pred, gt)?;
    let d = rm_dssim(pred, gt)?;
    let overlap = joint_cells(pred, gt)?.len() as f64 / pred.disc_cell_count() as f64;
    let score = RmScore { mse, dssim: d.dssim, defined_overlap: overlap, filled_cells: d.filled_a + d.filled_b };
    if score.low_overlap() {
        log::warn!("score computed on {:.0}% of the disc", overlap * 100.0);
    }
    Ok(score)
}

/// Angular errors in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalScore {
    pub mean: f64,
    pub median: f64,
    pub rmse: f64,
    pub pixels: usize,
}

/// Angle between unit vectors in degrees. Same value as
/// `acos(clamp(a·b))`, but exact at zero.
pub fn angle_deg(a: crate::Vec3, b: crate::Vec3) -> f64 {
    a.cross(b).length().atan2(a.dot(b)).to_degrees()
}

pub fn normal_error_stats(pred: &NormalMap, gt: &NormalMap) -> Result<NormalScore, MetricError> {
    check_congruent((pred.width, pred.height, pred.mask.as_slice()), (gt.width, gt.height, gt.mask.as_slice()))?;
    let mut angles: Vec<f64> = (0..gt.len())
        .filter(|&k| gt.mask[k])
        .map(|k| angle_deg(pred.normals[k], gt.normals[k]))
        .collect();
    if angles.is_empty() {
        return Err(MetricError::EmptyMask);
    }
    let n = angles.len() as f64;
    let mean = angles.iter().sum::<f64>() / n;
    let rmse = (angles.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    angles.sort_by(f64::total_cmp);
    let m = angles.len();
    let median = if m % 2 == 1 { angles[m / 2] } else { 0.5 * (angles[m / 2 - 1] + angles[m / 2]) };
    Ok(NormalScore { mean, median, rmse, pixels: m })
}
