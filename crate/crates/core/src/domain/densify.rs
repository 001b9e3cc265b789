use std::path::PathBuf;
use std::process::Command;

use thiserror::Error;

use super::rbf::{rbf_reconstruct, RbfError};
use super::OrientedSample;
use crate::rmap::{cell_orientation, ReflectanceMap};
use crate::tensor::{TensorBlock, TensorError};

/// File-based hand-off to an external sparse-to-dense predictor.
///
/// The sparse map is written to `request` as an `R×R×4` tensor block; if
/// `command` is set it is run (with the request and response paths
/// appended); the dense prediction is then read from `response`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalDensifier {
    pub request: PathBuf,
    pub response: PathBuf,
    pub command: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensifyMethod {
    Rbf { sigma: f64 },
    External(ExternalDensifier),
}

#[derive(Debug, Error)]
pub enum DensifyError {
    #[error("sparse map has no defined cells")]
    Empty,
    #[error(transparent)]
    Rbf(#[from] RbfError),
    #[error("external predictor unavailable: {0}")]
    Unavailable(String),
    #[error("external prediction rejected: {0}")]
    BadPrediction(#[from] TensorError),
    #[error("external prediction leaves {missing} in-disc cells undefined")]
    NotDense { missing: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Densified {
    pub map: ReflectanceMap,
    pub fallback_cells: Vec<(usize, usize)>,
}

/// Defined cells as samples at their cell-center orientations.
pub fn map_samples(rm: &ReflectanceMap) -> Vec<OrientedSample> {
    let r = rm.resolution();
    rm.defined_cells()
        .map(|(i, j, radiance)| OrientedSample { omega: cell_orientation(i, j, r), radiance })
        .collect()
}

/// Fills every in-disc cell from a sparse map.
pub fn densify(sparse: &ReflectanceMap, method: &DensifyMethod) -> Result<Densified, DensifyError> {
    if sparse.defined_count() == 0 {
        return Err(DensifyError::Empty);
    }
    match method {
        DensifyMethod::Rbf { sigma } => {
            let out = rbf_reconstruct(&map_samples(sparse), *sigma, sparse.resolution())?;
            Ok(Densified { map: out.map, fallback_cells: out.fallback_cells })
        }
        DensifyMethod::External(ext) => run_external(sparse, ext),
    }
}

fn run_external(sparse: &ReflectanceMap, ext: &ExternalDensifier) -> Result<Densified, DensifyError> {
    TensorBlock::from_map(sparse).write(&ext.request)?;
    if let Some(cmd) = &ext.command {
        let (program, args) = cmd
            .split_first()
            .ok_or_else(|| DensifyError::Unavailable("empty predictor command".into()))?;
        let status = Command::new(program)
            .args(args)
            .arg(&ext.request)
            .arg(&ext.response)
            .status()
            .map_err(|e| DensifyError::Unavailable(format!("{program}: {e}")))?;
        if !status.success() {
            return Err(DensifyError::Unavailable(format!("{program} exited with {status}")));
        }
    }
    if !ext.response.exists() {
        return Err(DensifyError::Unavailable(format!("no prediction at {}", ext.response.display())));
    }
    let map = TensorBlock::read(&ext.response)?.to_map(sparse.resolution())?;
    let missing = map.disc_cell_count() - map.defined_count();
    if missing > 0 {
        return Err(DensifyError::NotDense { missing });
    }
    Ok(Densified { map, fallback_cells: Vec::new() })
}
