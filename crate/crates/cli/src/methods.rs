//! Named reconstruction methods and the prediction files they write.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use lumisphere::domain::{collect_samples, densify, scatter_max, sh_project, sh_reconstruct, DensifyMethod, ExternalDensifier};
use lumisphere::image::{NormalMap, RadianceImage};
use lumisphere::pfm;
use lumisphere::rmap::ReflectanceMap;
use lumisphere::synth::dataset::ManifestItem;
use lumisphere::synth::Manifest;
use lumisphere::tensor::TensorBlock;
use lumisphere::upsample::{joint_upsample, UpsampleParams};
use lumisphere::Vec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ReconstructConfig};
use crate::Outcome;

/// Method kinds. Unset parameters fall back to the `[reconstruct]`
/// section; relative paths resolve against the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodKind {
    /// The ground-truth map itself.
    Gt {},
    /// Low-order spherical harmonics fitted to the ground-truth map.
    Sh {
        #[serde(default)]
        order: Option<usize>,
    },
    /// Sparse map from ground-truth normals, RBF densified.
    GtNormals {
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        eps_deg: Option<f64>,
    },
    /// Sparse map from estimated normals, RBF densified. Normals come from
    /// `<normals>/<item>.tblk` (`[h, w, 3]`, upsampled with the image as
    /// guide when smaller than the image); ground truth when unset.
    IndirectRbf {
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        eps_deg: Option<f64>,
        #[serde(default)]
        normals: Option<PathBuf>,
    },
    /// Sparse map from ground-truth normals, densified by an external
    /// predictor that leaves `<predictions>/<item>.tblk`. With `command`
    /// set, the predictor is run per item with the request and response
    /// paths appended.
    IndirectSparseExternal {
        predictions: PathBuf,
        #[serde(default)]
        command: Option<Vec<String>>,
        #[serde(default)]
        eps_deg: Option<f64>,
    },
    /// Dense maps predicted straight from the image, read from
    /// `<predictions>/<item>.tblk`.
    DirectExternal { predictions: PathBuf },
}

impl MethodKind {
    pub fn validate(&self) -> anyhow::Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => bail!("{name} must be positive, got {v}"),
            _ => Ok(()),
        };
        let eps = |v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v < 90.0) => bail!("eps_deg must lie in (0, 90), got {v}"),
            _ => Ok(()),
        };
        match self {
            MethodKind::Gt {} => Ok(()),
            MethodKind::Sh { order } => match order {
                Some(0) => bail!("order must be at least 1"),
                _ => Ok(()),
            },
            MethodKind::GtNormals { sigma, eps_deg } | MethodKind::IndirectRbf { sigma, eps_deg, .. } => {
                positive("sigma", *sigma)?;
                eps(*eps_deg)
            }
            MethodKind::IndirectSparseExternal { command, eps_deg, .. } => {
                if command.as_ref().is_some_and(|c| c.is_empty()) {
                    bail!("command must not be empty");
                }
                eps(*eps_deg)
            }
            MethodKind::DirectExternal { .. } => Ok(()),
        }
    }
}

/// Names available without configuration.
pub const BUILTIN: [&str; 4] = ["gt", "sh", "indirect_rbf", "gt_normals"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
}

/// Looks `name` up among the configured methods, then the built-ins.
pub fn resolve(name: &str, config: &Config) -> anyhow::Result<MethodSpec> {
    let kind = match config.methods.get(name) {
        Some(k) => k.clone(),
        None => match name {
            "gt" => MethodKind::Gt {},
            "sh" => MethodKind::Sh { order: None },
            "indirect_rbf" => MethodKind::IndirectRbf { sigma: None, eps_deg: None, normals: None },
            "gt_normals" => MethodKind::GtNormals { sigma: None, eps_deg: None },
            _ => {
                let mut known: Vec<&str> = BUILTIN.to_vec();
                known.extend(config.methods.keys().map(String::as_str));
                bail!("unknown method {name:?} (known: {})", known.join(", "))
            }
        },
    };
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        bail!("method name {name:?} cannot be used as a directory name");
    }
    Ok(MethodSpec { name: name.to_string(), kind })
}

pub fn predictions_dir(root: &Path, method: &str, linear: bool) -> PathBuf {
    root.join(if linear { "predictions-linear" } else { "predictions" }).join(method)
}

pub fn prediction_path(root: &Path, method: &str, item: &str, linear: bool) -> PathBuf {
    predictions_dir(root, method, linear).join(format!("{item}.pfm"))
}

/// Estimated normals sit next to the map prediction.
pub fn normals_path(root: &Path, method: &str, item: &str, linear: bool) -> PathBuf {
    predictions_dir(root, method, linear).join(format!("{item}.normals.pfm"))
}

pub fn sparse_path(root: &Path, item: &str, linear: bool) -> PathBuf {
    root.join(if linear { "sparse-linear" } else { "sparse" }).join(format!("{item}.tblk"))
}

/// Paths of the ground-truth map and input image for the chosen domain.
pub fn item_inputs(root: &Path, item: &ManifestItem, linear: bool) -> (PathBuf, PathBuf) {
    let f = &item.files;
    if linear {
        (root.join(&f.rm_gt_linear), root.join(&f.image_linear))
    } else {
        (root.join(&f.rm_gt), root.join(&f.image))
    }
}

pub struct Prediction {
    pub map: ReflectanceMap,
    pub normals: Option<NormalMap>,
}

fn resolve_path(root: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        root.join(p)
    } else {
        p.to_path_buf()
    }
}

/// Reads a `[h, w, 3]` block and fits it onto the image's foreground.
pub fn external_normals(path: &Path, image: &RadianceImage) -> anyhow::Result<NormalMap> {
    let t = TensorBlock::read(path).with_context(|| format!("normals {}", path.display()))?;
    let [h, w, 3] = t.dims.as_slice() else {
        bail!("normals {}: expected [h, w, 3], found {:?}", path.display(), t.dims);
    };
    let (h, w) = (*h as usize, *w as usize);
    if h == 0 || w == 0 || image.width % w != 0 || image.height % h != 0 || image.width / w != image.height / h {
        bail!("normals {w}x{h} do not divide the {}x{} image by a common integer factor", image.width, image.height);
    }
    if t.data.iter().any(|v| !v.is_finite()) {
        bail!("normals {}: non-finite values", path.display());
    }
    let factor = image.width / w;
    let mask = NormalMap::constant(image.width, image.height, Vec3::Z);
    let mask = NormalMap { mask: image.mask.clone(), ..mask }.downsample_nearest(factor).mask;
    let normals = t
        .data
        .chunks_exact(3)
        .zip(&mask)
        .map(|(c, &m)| {
            if !m {
                return Vec3::ZERO;
            }
            let v = Vec3::new(c[0] as f64, c[1] as f64, (c[2] as f64).max(0.0));
            let len = v.length();
            if len > 0.0 {
                v / len
            } else {
                Vec3::Z
            }
        })
        .collect();
    let low = NormalMap::new(w, h, normals, mask)?;
    if factor == 1 {
        return Ok(low);
    }
    let up = joint_upsample(&low, image, &UpsampleParams::for_factor(factor as f64))?;
    if up.fallback_pixels > 0 {
        log::debug!("{}: {} pixels fell back to nearest normals", path.display(), up.fallback_pixels);
    }
    Ok(up.normals)
}

fn sparse_from(image: &RadianceImage, normals: &NormalMap, resolution: usize, eps_deg: f64, rc: &ReconstructConfig) -> anyhow::Result<ReflectanceMap> {
    let samples = collect_samples(image, normals)?;
    Ok(scatter_max(&samples, resolution, eps_deg, rc.max_mode).map)
}

fn read_dense(path: &Path, resolution: usize) -> anyhow::Result<ReflectanceMap> {
    let t = TensorBlock::read(path).with_context(|| format!("prediction {}", path.display()))?;
    Ok(t.to_map(resolution)?)
}

/// Runs `spec` on one item.
pub fn predict(root: &Path, item: &ManifestItem, spec: &MethodSpec, rc: &ReconstructConfig, linear: bool) -> anyhow::Result<Prediction> {
    let (gt_path, image_path) = item_inputs(root, item, linear);
    let gt_normals = || pfm::read_normals(&root.join(&item.files.normals)).map_err(anyhow::Error::from);
    let image = || pfm::read_image(&image_path).map_err(anyhow::Error::from);
    let gt = || pfm::read_map(&gt_path).map_err(anyhow::Error::from);
    let tblk = |dir: &Path| resolve_path(root, dir).join(format!("{}.tblk", item.id));
    match &spec.kind {
        MethodKind::Gt {} => Ok(Prediction { map: gt()?, normals: None }),
        MethodKind::Sh { order } => {
            let gt = gt()?;
            let sh = sh_project(&gt, order.unwrap_or(rc.sh_order))?;
            Ok(Prediction { map: sh_reconstruct(&sh, gt.resolution()), normals: None })
        }
        MethodKind::GtNormals { sigma, eps_deg } => {
            let r = gt()?.resolution();
            let sparse = sparse_from(&image()?, &gt_normals()?, r, eps_deg.unwrap_or(rc.eps_deg), rc)?;
            let dense = densify(&sparse, &DensifyMethod::Rbf { sigma: sigma.unwrap_or(rc.sigma) })?;
            Ok(Prediction { map: dense.map, normals: None })
        }
        MethodKind::IndirectRbf { sigma, eps_deg, normals } => {
            let r = gt()?.resolution();
            let image = image()?;
            let nm = match normals {
                Some(dir) => external_normals(&tblk(dir), &image)?,
                None => gt_normals()?,
            };
            let sparse = sparse_from(&image, &nm, r, eps_deg.unwrap_or(rc.eps_deg), rc)?;
            let dense = densify(&sparse, &DensifyMethod::Rbf { sigma: sigma.unwrap_or(rc.sigma) })?;
            Ok(Prediction { map: dense.map, normals: normals.as_ref().map(|_| nm) })
        }
        MethodKind::IndirectSparseExternal { predictions, command, eps_deg } => {
            let r = gt()?.resolution();
            let sparse = sparse_from(&image()?, &gt_normals()?, r, eps_deg.unwrap_or(rc.eps_deg), rc)?;
            let ext = ExternalDensifier { request: sparse_path(root, &item.id, linear), response: tblk(predictions), command: command.clone() };
            if command.is_none() && !ext.response.exists() {
                bail!("missing external prediction {}", ext.response.display());
            }
            Ok(Prediction { map: densify(&sparse, &DensifyMethod::External(ext))?.map, normals: None })
        }
        MethodKind::DirectExternal { predictions } => {
            let r = gt()?.resolution();
            let path = tblk(predictions);
            if !path.exists() {
                bail!("missing external prediction {}", path.display());
            }
            Ok(Prediction { map: read_dense(&path, r)?, normals: None })
        }
    }
}

/// Writes one prediction per item under `predictions/<method>/`. The gt
/// method copies the ground-truth files verbatim.
pub fn reconstruct(root: &Path, manifest: &Manifest, spec: &MethodSpec, rc: &ReconstructConfig, linear: bool) -> anyhow::Result<Outcome> {
    let dir = predictions_dir(root, &spec.name, linear);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let results: Vec<(String, anyhow::Result<()>)> = manifest
        .items
        .par_iter()
        .map(|item| {
            let out = prediction_path(root, &spec.name, &item.id, linear);
            let r = if matches!(spec.kind, MethodKind::Gt {}) {
                copy_map(&item_inputs(root, item, linear).0, &out)
            } else {
                predict(root, item, spec, rc, linear).and_then(|p| {
                    pfm::write_map(&p.map, &out)?;
                    if let Some(nm) = &p.normals {
                        pfm::write_normals(nm, &normals_path(root, &spec.name, &item.id, linear))?;
                    }
                    Ok(())
                })
            };
            (item.id.clone(), r)
        })
        .collect();
    let failures = results
        .into_iter()
        .filter_map(|(id, r)| r.err().map(|e| (id, format!("{e:#}"))))
        .collect();
    Ok(Outcome { failures })
}

fn copy_map(from: &Path, to: &Path) -> anyhow::Result<()> {
    for (a, b) in [(from.to_path_buf(), to.to_path_buf()), (pfm::mask_path(from), pfm::mask_path(to))] {
        std::fs::copy(&a, &b).map_err(|e| anyhow!("copying {} to {}: {e}", a.display(), b.display()))?;
    }
    Ok(())
}

/// Writes `sparse/<item>.tblk` (`R×R×4`) from ground-truth normals: the
/// inputs an external sparse-to-dense predictor trains and runs on.
pub fn emit_sparse(root: &Path, manifest: &Manifest, rc: &ReconstructConfig, linear: bool) -> Outcome {
    let r = manifest.config.resolution;
    let failures = manifest
        .items
        .par_iter()
        .filter_map(|item| {
            let run = || -> anyhow::Result<()> {
                let (_, image_path) = item_inputs(root, item, linear);
                let nm = pfm::read_normals(&root.join(&item.files.normals))?;
                let sparse = sparse_from(&pfm::read_image(&image_path)?, &nm, r, rc.eps_deg, rc)?;
                TensorBlock::from_map(&sparse).write(&sparse_path(root, &item.id, linear))?;
                Ok(())
            };
            run().err().map(|e| (item.id.clone(), format!("{e:#}")))
        })
        .collect();
    Outcome { failures }
}
