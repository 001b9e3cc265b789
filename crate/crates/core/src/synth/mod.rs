//! Synthetic data: measured and analytic BRDFs, HDR environments,
//! ground-truth maps by hemispherical integration, procedural shapes,
//! tone mapping and dataset generation.

pub mod brdf;
pub mod convolve;
pub mod dataset;
pub mod envmap;
pub mod hdr;
pub mod merl;
pub mod shadow;
pub mod shapes;
pub mod tonemap;

pub use brdf::{eval_brdf, AnalyticBrdf, Brdf, BrdfValue};
pub use convolve::brdf_convolve;
pub use dataset::{generate_dataset, AssetRegistry, DatasetConfig, Manifest, SceneSample};
pub use envmap::EnvironmentMap;
pub use hdr::{encode_hdr, parse_hdr};
pub use merl::{parse_merl, BrdfTable};
pub use shapes::{procedural_normals, Shape};
pub use tonemap::reinhard_tonemap;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}
