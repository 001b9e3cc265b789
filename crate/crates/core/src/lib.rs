//! Reflectance maps: orientation-indexed appearance of a single material
//! under fixed distant illumination.
//!
//! The crate covers the full non-learned pipeline: building sparse maps from
//! images and normal maps, densifying them, generating synthetic training
//! data, scoring estimates, and image-based editing on top of the maps.

pub mod domain;
pub mod edit;
pub mod geom;
pub mod image;
pub mod metrics;
pub mod pfm;
pub mod rmap;
pub mod synth;
pub mod tensor;
pub mod upsample;

pub use geom::{Orientation, Rgb, StCoord, Vec3};
pub use image::{NormalMap, RadianceImage};
pub use rmap::ReflectanceMap;
