//! Asset root loading.
//!
//! Layout: `materials/*.toml` (analytic models), `materials/*.binary`
//! (measured tables), `envmaps/*.hdr`, and an optional `shapes.toml` with
//! one `[<id>]` table per shape; the built-in shapes are used without it.
//! Ids are file stems; every axis is sorted by id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use lumisphere::synth::dataset::default_shapes;
use lumisphere::synth::{encode_hdr, parse_hdr, parse_merl, AnalyticBrdf, AssetRegistry, Brdf, EnvironmentMap, Shape};
use lumisphere::Rgb;

use crate::sha256_hex;

pub struct LoadedAssets {
    pub registry: AssetRegistry,
    /// Path relative to the root → sha256 of the file.
    pub hashes: BTreeMap<String, String>,
}

fn files_with(dir: &Path, ext: &str) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading asset directory {}", dir.display()))? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == ext) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_assets(root: &Path) -> anyhow::Result<LoadedAssets> {
    if !root.is_dir() {
        bail!("asset directory {} does not exist", root.display());
    }
    let mut hashes = BTreeMap::new();
    let mut read = |p: &Path| -> anyhow::Result<Vec<u8>> {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        let rel = p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/");
        hashes.insert(rel, sha256_hex(&bytes));
        Ok(bytes)
    };

    let mdir = root.join("materials");
    let mut materials: Vec<(String, Brdf)> = Vec::new();
    for p in files_with(&mdir, "toml")? {
        let text = String::from_utf8(read(&p)?).with_context(|| format!("{} is not UTF-8", p.display()))?;
        let m: AnalyticBrdf = toml::from_str(&text).with_context(|| format!("material {}", p.display()))?;
        m.validate().with_context(|| format!("material {}", p.display()))?;
        materials.push((stem(&p), Brdf::Analytic(m)));
    }
    for p in files_with(&mdir, "binary")? {
        let table = parse_merl(&read(&p)?).with_context(|| format!("material {}", p.display()))?;
        if table.negative_count() > 0 {
            log::warn!("{}: {} negative entries clamped to zero", p.display(), table.negative_count());
        }
        materials.push((stem(&p), Brdf::Measured(Arc::new(table))));
    }
    materials.sort_by(|a, b| a.0.cmp(&b.0));
    for w in materials.windows(2) {
        if w[0].0 == w[1].0 {
            bail!("material id {} is defined twice in {}", w[0].0, mdir.display());
        }
    }

    let edir = root.join("envmaps");
    let mut environments = Vec::new();
    for p in files_with(&edir, "hdr")? {
        let env = parse_hdr(&read(&p)?).with_context(|| format!("environment {}", p.display()))?;
        environments.push((stem(&p), env));
    }

    let spath = root.join("shapes.toml");
    let shapes = if spath.is_file() {
        let text = String::from_utf8(read(&spath)?).with_context(|| format!("{} is not UTF-8", spath.display()))?;
        let table: BTreeMap<String, Shape> = toml::from_str(&text).with_context(|| format!("shapes {}", spath.display()))?;
        for (id, s) in &table {
            s.validate().with_context(|| format!("shape {id} in {}", spath.display()))?;
        }
        table.into_iter().collect()
    } else {
        let mut s = default_shapes();
        s.sort_by(|a, b| a.0.cmp(&b.0));
        s
    };
    Ok(LoadedAssets { registry: AssetRegistry { shapes, materials, environments }, hashes })
}

/// Starter materials: three diffuse, four glossy.
pub fn starter_materials() -> Vec<(&'static str, AnalyticBrdf)> {
    use AnalyticBrdf::*;
    vec![
        ("chalk", Lambert { albedo: Rgb::new(0.85, 0.84, 0.8) }),
        ("clay", Lambert { albedo: Rgb::new(0.7, 0.45, 0.3) }),
        ("slate", Lambert { albedo: Rgb::new(0.25, 0.27, 0.3) }),
        ("satin-green", BlinnPhong { diffuse: Rgb::new(0.1, 0.35, 0.1), specular: Rgb::splat(0.2), exponent: 40.0 }),
        ("plastic-red", BlinnPhong { diffuse: Rgb::new(0.5, 0.05, 0.05), specular: Rgb::splat(0.3), exponent: 150.0 }),
        ("plastic-blue", BlinnPhong { diffuse: Rgb::new(0.05, 0.1, 0.5), specular: Rgb::splat(0.35), exponent: 400.0 }),
        ("gold", BlinnPhong { diffuse: Rgb::new(0.2, 0.12, 0.02), specular: Rgb::new(0.8, 0.6, 0.2), exponent: 800.0 }),
    ]
}

/// Writes the starter materials and `count` procedural environments.
/// Existing files are kept unless `force` is set. Returns written paths.
pub fn init_assets(root: &Path, count: usize, force: bool) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |p: PathBuf, bytes: &[u8]| -> anyhow::Result<()> {
        if p.exists() && !force {
            return Ok(());
        }
        crate::write_file(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    for (id, m) in starter_materials() {
        put(root.join("materials").join(format!("{id}.toml")), toml::to_string(&m)?.as_bytes())?;
    }
    for k in 0..count {
        let env = EnvironmentMap::procedural(k as u64 + 1, 128, 64);
        put(root.join("envmaps").join(format!("sky-{k:02}.hdr")), &encode_hdr(&env))?;
    }
    Ok(written)
}
