//! Change of domain from image space to the directional domain, and
//! sparse-to-dense reconstruction of reflectance maps.

mod densify;
mod rbf;
mod scatter;
mod sh;

pub use densify::{densify, map_samples, DensifyError, DensifyMethod, Densified, ExternalDensifier};
pub use rbf::{rbf_reconstruct, rbf_weight, RbfError, RbfOutput, DEFAULT_SIGMA};
pub use scatter::{scatter_max, MaxMode, SparseReflectanceMap, DEFAULT_EPS_DEG};
pub use sh::{sh_basis, sh_project, sh_reconstruct, ShCoefficients, ShError, DEFAULT_SH_ORDER};

use serde::{Deserialize, Serialize};

use crate::geom::{Orientation, Rgb};
use crate::image::{check_congruent, ImageError, NormalMap, RadianceImage};

/// One appearance observation at a known surface orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedSample {
    pub omega: Orientation,
    pub radiance: Rgb,
}

/// Pairs every jointly masked-in pixel's radiance with its normal, in
/// scanline order.
pub fn collect_samples(img: &RadianceImage, nm: &NormalMap) -> Result<Vec<OrientedSample>, ImageError> {
    check_congruent((img.width, img.height, &img.mask), (nm.width, nm.height, &nm.mask))?;
    Ok(img
        .rgb
        .iter()
        .zip(&nm.normals)
        .zip(&img.mask)
        .filter(|(_, &m)| m)
        .filter_map(|((&radiance, &n), _)| Orientation::from_vector(n).map(|omega| OrientedSample { omega, radiance }))
        .collect())
}
