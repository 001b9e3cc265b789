//! Synthetic dataset generation with asset-disjoint train/test splits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::brdf::Brdf;
use super::convolve::{brdf_convolve, ConvolveError, MIN_SAMPLES};
use super::derive_seed;
use super::envmap::EnvironmentMap;
use super::shadow::random_shadow_mask;
use super::shapes::{procedural_normals, Shape, ShapeError};
use super::tonemap::Reinhard;
use crate::image::{NormalMap, RadianceImage};
use crate::pfm::{self, PfmError};
use crate::rmap::{shade_from_normals, ReflectanceMap};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

const SPLIT_STREAM: u64 = 0x5350_4c49;
const ITEM_STREAM: u64 = 0x4954_454d;
const RM_STREAM: u64 = 0x524d_4754;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("the {axis} registry is empty")]
    NoAssets { axis: &'static str },
    #[error("a disjoint split needs at least 2 {axis}, got {count}")]
    InsufficientAssets { axis: &'static str, count: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("shape {id}: {source}")]
    Shape { id: String, source: ShapeError },
    #[error(transparent)]
    Convolve(#[from] ConvolveError),
    #[error(transparent)]
    Pfm(#[from] PfmError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub samples: usize,
    pub seed: u64,
    pub image_size: usize,
    pub resolution: usize,
    pub mc_samples: usize,
    /// Share of each asset axis (and of the items) held out for testing.
    pub test_fraction: f64,
    pub key_min: f64,
    pub key_max: f64,
    pub shadow_augmentation: bool,
    pub max_shadow_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            seed: 0,
            image_size: 128,
            resolution: 32,
            mc_samples: 4096,
            test_fraction: 0.5,
            key_min: 0.4,
            key_max: 0.6,
            shadow_augmentation: true,
            max_shadow_fraction: 0.5,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::Config(m.to_string()));
        if self.samples == 0 {
            return bad("samples must be positive");
        }
        if self.image_size == 0 || self.resolution == 0 {
            return bad("image_size and resolution must be positive");
        }
        if self.mc_samples < MIN_SAMPLES {
            return bad("mc_samples must be at least 64");
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return bad("test_fraction must lie in [0, 1]");
        }
        if !(0.4 <= self.key_min && self.key_min <= self.key_max && self.key_max <= 0.6) {
            return bad("exposure keys must satisfy 0.4 <= key_min <= key_max <= 0.6");
        }
        if !(0.0..=1.0).contains(&self.max_shadow_fraction) {
            return bad("max_shadow_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Named assets available to the generator.
#[derive(Debug, Clone, Default)]
pub struct AssetRegistry {
    pub shapes: Vec<(String, Shape)>,
    pub materials: Vec<(String, Brdf)>,
    pub environments: Vec<(String, EnvironmentMap)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSample {
    pub shape: String,
    pub material: String,
    pub environment: String,
    pub rotation_y_deg: f64,
    pub key: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetIds {
    pub shapes: Vec<String>,
    pub materials: Vec<String>,
    pub environments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemFiles {
    pub normals: String,
    pub image: String,
    pub image_linear: String,
    pub rm_gt: String,
    pub rm_gt_linear: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_shadowed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestItem {
    pub id: String,
    pub split: Split,
    pub sample: SceneSample,
    pub files: ItemFiles,
    /// Scale of the fitted tone-mapping operator.
    pub tonemap_scale: f64,
    pub rejected_backfacing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadowed_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub config: DatasetConfig,
    pub train: AssetIds,
    pub test: AssetIds,
    pub items: Vec<ManifestItem>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn item(&self, id: &str) -> Option<&ManifestItem> {
        self.items.iter().find(|i| i.id == id)
    }
}

/// Everything rendered for one item, before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedItem {
    pub normals: NormalMap,
    pub image: RadianceImage,
    pub image_linear: RadianceImage,
    pub rm_gt: ReflectanceMap,
    pub rm_gt_linear: ReflectanceMap,
    pub image_shadowed: Option<RadianceImage>,
    pub shadowed_fraction: Option<f64>,
    pub tonemap_scale: f64,
    pub rejected_backfacing: usize,
}

/// Shuffled per-axis split: the first `n_test` ids go to the test side.
fn split_axis<T>(
    axis: &'static str,
    assets: &[(String, T)],
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    let n = assets.len();
    if n == 0 {
        return Err(DatasetError::NoAssets { axis });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_test = if fraction <= 0.0 {
        0
    } else if fraction >= 1.0 {
        n
    } else {
        if n < 2 {
            return Err(DatasetError::InsufficientAssets { axis, count: n });
        }
        ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
    };
    let (test, train) = order.split_at(n_test);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn item_split(index: usize, fraction: f64) -> Split {
    // spreads the test items evenly over the index range
    if ((index + 1) as f64 * fraction).floor() > (index as f64 * fraction).floor() {
        Split::Test
    } else {
        Split::Train
    }
}

struct Plan {
    splits: [(Vec<usize>, Vec<usize>); 3],
    items: Vec<(Split, [usize; 3], SceneSample)>,
}

fn plan(config: &DatasetConfig, reg: &AssetRegistry) -> Result<Plan, DatasetError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SPLIT_STREAM));
    let f = config.test_fraction;
    let splits = [
        split_axis("shapes", &reg.shapes, f, &mut rng)?,
        split_axis("materials", &reg.materials, f, &mut rng)?,
        split_axis("environments", &reg.environments, f, &mut rng)?,
    ];
    let items = (0..config.samples)
        .map(|i| {
            let seed = derive_seed(derive_seed(config.seed, ITEM_STREAM), i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let split = item_split(i, f);
            let mut pick = |(train, test): &(Vec<usize>, Vec<usize>)| {
                let pool = if split == Split::Test { test } else { train };
                pool[rng.random_range(0..pool.len())]
            };
            let idx = [pick(&splits[0]), pick(&splits[1]), pick(&splits[2])];
            let rotation_y_deg = rng.random_range(0.0..360.0);
            let key = if config.key_max > config.key_min { rng.random_range(config.key_min..=config.key_max) } else { config.key_min };
            let sample = SceneSample {
                shape: reg.shapes[idx[0]].0.clone(),
                material: reg.materials[idx[1]].0.clone(),
                environment: reg.environments[idx[2]].0.clone(),
                rotation_y_deg,
                key,
                seed,
            };
            (split, idx, sample)
        })
        .collect();
    Ok(Plan { splits, items })
}

/// Ground-truth linear map for a material/environment pair.
pub fn gt_map(config: &DatasetConfig, reg: &AssetRegistry, material: usize, env: usize) -> Result<ReflectanceMap, DatasetError> {
    let seed = derive_seed(derive_seed(config.seed, RM_STREAM), ((material as u64) << 32) | env as u64);
    Ok(brdf_convolve(&reg.environments[env].1, &reg.materials[material].1, config.resolution, config.mc_samples, seed)?)
}

/// Renders one item. The tone-mapping operator is fitted to the linear
/// image and applied to the map, so `image` equals
/// `shade_from_normals(normals, rm_gt)`.
pub fn render_item(
    config: &DatasetConfig,
    shape: &Shape,
    sample: &SceneSample,
    rm_linear: &ReflectanceMap,
) -> Result<RenderedItem, DatasetError> {
    let shape_out = procedural_normals(shape, sample.rotation_y_deg, config.image_size)
        .map_err(|source| DatasetError::Shape { id: sample.shape.clone(), source })?;
    let mut normals = shape_out.map;
    let mut linear = shade_from_normals(&normals, rm_linear);
    if linear.unknown_count() > 0 {
        // drop orientations the map cannot answer for
        for k in 0..linear.unknown.len() {
            if linear.unknown[k] {
                normals.mask[k] = false;
                normals.normals[k] = crate::geom::Vec3::ZERO;
            }
        }
        linear = shade_from_normals(&normals, rm_linear);
    }
    let image_linear = linear.image;
    let op = Reinhard::fit(&image_linear, sample.key).unwrap_or(Reinhard { scale: 1.0 });
    let rm_gt = rm_linear.map_defined(|c| op.apply(c));
    let image = shade_from_normals(&normals, &rm_gt).image;
    let (image_shadowed, shadowed_fraction) = if config.shadow_augmentation {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sample.seed, 1));
        let m = random_shadow_mask(image.width, image.height, &image.mask, config.max_shadow_fraction, &mut rng);
        let frac = m.shadowed_fraction(&image.mask);
        (Some(m.apply(&image)), Some(frac))
    } else {
        (None, None)
    };
    Ok(RenderedItem {
        normals,
        image,
        image_linear,
        rm_gt,
        rm_gt_linear: rm_linear.clone(),
        image_shadowed,
        shadowed_fraction,
        tonemap_scale: op.scale,
        rejected_backfacing: shape_out.rejected_backfacing,
    })
}

fn item_files(id: &str, shadowed: bool) -> ItemFiles {
    let f = |name: &str| format!("items/{id}/{name}.pfm");
    ItemFiles {
        normals: f("normals"),
        image: f("image"),
        image_linear: f("image_linear"),
        rm_gt: f("rm_gt"),
        rm_gt_linear: f("rm_gt_linear"),
        image_shadowed: shadowed.then(|| f("image_shadowed")),
    }
}

fn write_item(root: &Path, files: &ItemFiles, item: &RenderedItem) -> Result<(), DatasetError> {
    let dir = root.join(&files.normals).parent().expect("item directory").to_path_buf();
    std::fs::create_dir_all(&dir).map_err(|source| DatasetError::Io { path: dir.clone(), source })?;
    pfm::write_normals(&item.normals, &root.join(&files.normals))?;
    pfm::write_image(&item.image, &root.join(&files.image))?;
    pfm::write_image(&item.image_linear, &root.join(&files.image_linear))?;
    pfm::write_map(&item.rm_gt, &root.join(&files.rm_gt))?;
    pfm::write_map(&item.rm_gt_linear, &root.join(&files.rm_gt_linear))?;
    if let (Some(path), Some(img)) = (&files.image_shadowed, &item.image_shadowed) {
        pfm::write_image(img, &root.join(path))?;
    }
    Ok(())
}

/// Renders every item and writes the files plus `manifest.json` under
/// `out`. The output depends only on the config and the registry.
pub fn generate_dataset(config: &DatasetConfig, reg: &AssetRegistry, out: &Path) -> Result<Manifest, DatasetError> {
    let plan = plan(config, reg)?;
    for (id, shape) in &reg.shapes {
        shape.validate().map_err(|source| DatasetError::Shape { id: id.clone(), source })?;
    }

    let pairs: Vec<(usize, usize)> = {
        let mut p: Vec<_> = plan.items.iter().map(|(_, idx, _)| (idx[1], idx[2])).collect();
        p.sort_unstable();
        p.dedup();
        p
    };
    log::info!("computing {} ground-truth maps", pairs.len());
    let maps: BTreeMap<(usize, usize), ReflectanceMap> = pairs
        .par_iter()
        .map(|&(m, e)| gt_map(config, reg, m, e).map(|rm| ((m, e), rm)))
        .collect::<Result<_, _>>()?;

    std::fs::create_dir_all(out).map_err(|source| DatasetError::Io { path: out.to_path_buf(), source })?;
    let items: Vec<ManifestItem> = plan
        .items
        .par_iter()
        .enumerate()
        .map(|(i, (split, idx, sample))| {
            let id = format!("{i:05}");
            let rendered = render_item(config, &reg.shapes[idx[0]].1, sample, &maps[&(idx[1], idx[2])])?;
            let files = item_files(&id, rendered.image_shadowed.is_some());
            write_item(out, &files, &rendered)?;
            Ok(ManifestItem {
                id,
                split: *split,
                sample: sample.clone(),
                files,
                tonemap_scale: rendered.tonemap_scale,
                rejected_backfacing: rendered.rejected_backfacing,
                shadowed_fraction: rendered.shadowed_fraction,
            })
        })
        .collect::<Result<_, DatasetError>>()?;

    let ids = |pick: fn(&(Vec<usize>, Vec<usize>)) -> &Vec<usize>| AssetIds {
        shapes: pick(&plan.splits[0]).iter().map(|&k| reg.shapes[k].0.clone()).collect(),
        materials: pick(&plan.splits[1]).iter().map(|&k| reg.materials[k].0.clone()).collect(),
        environments: pick(&plan.splits[2]).iter().map(|&k| reg.environments[k].0.clone()).collect(),
    };
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        config: config.clone(),
        train: ids(|s| &s.0),
        test: ids(|s| &s.1),
        items,
    };
    let path = out.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    pfm::write_bytes(&path, text.as_bytes())?;
    Ok(manifest)
}

/// Shapes used when no explicit list is configured.
pub fn default_shapes() -> Vec<(String, Shape)> {
    vec![
        ("sphere".into(), Shape::Sphere),
        ("torus-thick".into(), Shape::Torus { minor: 0.35, major: 0.6 }),
        ("torus-thin".into(), Shape::Torus { minor: 0.2, major: 0.7 }),
        ("ellipsoid".into(), Shape::Superellipsoid { e1: 1.0, e2: 1.0 }),
        ("rounded-box".into(), Shape::Superellipsoid { e1: 0.3, e2: 0.3 }),
        ("cushion".into(), Shape::Superellipsoid { e1: 0.6, e2: 1.6 }),
    ]
}
