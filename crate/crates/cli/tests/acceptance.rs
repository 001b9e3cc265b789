//! Acceptance suite. Each criterion prints one PASS/FAIL line; the run
//! exits nonzero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use lumisphere::domain::{collect_samples, rbf_reconstruct, scatter_max, MaxMode, OrientedSample, DEFAULT_EPS_DEG};
use lumisphere::edit::{material_transfer, shape_reshade, EditSession};
use lumisphere::metrics::{luminance_grid, mean_ssim, normal_error_stats, rm_dssim, rm_mse};
use lumisphere::rmap::{cell_in_disc, min_cell_spacing_deg, render_sphere, ReflectanceMap};
use lumisphere::synth::dataset::default_shapes;
use lumisphere::synth::{brdf_convolve, generate_dataset, AnalyticBrdf, AssetRegistry, Brdf, DatasetConfig, EnvironmentMap, Manifest};
use lumisphere::{NormalMap, Orientation, Rgb, Vec3};
use lumisphere_harness::config::{Config, ReconstructConfig};
use lumisphere_harness::methods::{predict, resolve};
use rand::Rng;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Result<String, String>,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_trip() -> Result<String, String> {
    let r = 32;
    let eps = 0.5 * min_cell_spacing_deg(r);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (env, brdf) = random_pair(seed);
        let gt = brdf_convolve(&env, &brdf, r, 128, seed).map_err(|e| e.to_string())?;
        let sphere = render_sphere(&gt, r);
        let samples = collect_samples(&sphere.image, &NormalMap::sphere(r)).map_err(|e| e.to_string())?;
        let rec = scatter_max(&samples, r, eps, MaxMode::PerChannel).map;
        ensure(rec.defined() == gt.defined(), || format!("pair {seed}: coverage differs"))?;
        for (i, j, c) in rec.defined_cells() {
            let want = gt.get(i, j).unwrap();
            worst = (0..3).map(|ch| (c[ch] - want[ch]).abs()).fold(worst, f64::max);
        }
    }
    ensure(worst < 1e-4, || format!("max abs error {worst:.3e}"))?;
    Ok(format!("max abs error {worst:.2e} over 20 pairs"))
}

fn rbf_oracle() -> Result<String, String> {
    let r = 32;
    let mut worst: f64 = 0.0;
    for inst in 0..50u64 {
        let mut g = rng(7000 + inst);
        let n = g.random_range(1..=500);
        let samples: Vec<OrientedSample> = (0..n)
            .map(|_| OrientedSample { omega: Orientation::new(random_unit_upper(&mut g)).unwrap(), radiance: random_rgb(&mut g, 2.0) })
            .collect();
        let sigma = g.random_range(2.0..16.0);
        let fast = rbf_reconstruct(&samples, sigma, r).map_err(|e| e.to_string())?.map;
        let slow = naive_rbf(&samples, sigma, r);
        for j in 0..r {
            for i in 0..r {
                match (fast.get(i, j), slow[j * r + i]) {
                    (Some(a), Some(b)) => {
                        for c in 0..3 {
                            worst = worst.max((a[c] - b[c]).abs() / b[c].abs().max(1e-3));
                        }
                    }
                    (None, None) => {}
                    _ => return Err(format!("instance {inst} cell ({i},{j}): definedness differs")),
                }
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.2e} over 50 instances"))
}

fn shadow_robustness() -> Result<String, String> {
    let mut fractions = Vec::new();
    for seed in 0..20 {
        let (env, brdf) = random_pair(seed + 300);
        let gt = brdf_convolve(&env, &brdf, 32, 128, seed).map_err(|e| e.to_string())?;
        let scene = twin_shadow_scene(&gt, 64, 0.45, seed);
        ensure(scene.shadowed_fraction <= 0.5, || format!("instance {seed}: {} shadowed", scene.shadowed_fraction))?;
        let run = |img| scatter_max(&collect_samples(img, &scene.normals).unwrap(), 32, DEFAULT_EPS_DEG, MaxMode::PerChannel);
        let (clean, shadowed) = (run(&scene.clean), run(&scene.shadowed));
        ensure(clean == shadowed, || format!("instance {seed}: outputs differ"))?;
        fractions.push(scene.shadowed_fraction);
    }
    let max = fractions.iter().cloned().fold(0.0, f64::max);
    Ok(format!("20 instances bit-equal, up to {:.0}% shadowed", 100.0 * max))
}

/// Generates `samples` items from `materials` and returns the manifest.
fn dataset(dir: &Path, materials: Vec<(String, Brdf)>, samples: usize, mc_samples: usize, seed: u64) -> Manifest {
    let reg = AssetRegistry {
        shapes: default_shapes(),
        materials,
        environments: (0..5).map(|k| (format!("env{k}"), EnvironmentMap::procedural(seed + k, 64, 32))).collect(),
    };
    let config = DatasetConfig {
        samples,
        seed,
        image_size: 96,
        resolution: 32,
        mc_samples,
        test_fraction: 0.0,
        shadow_augmentation: false,
        ..Default::default()
    };
    generate_dataset(&config, &reg, dir).unwrap()
}

/// Mean DSSIM of `method` predictions over the manifest.
fn mean_dssim(root: &Path, manifest: &Manifest, method: &str) -> Result<f64, String> {
    let spec = resolve(method, &Config::default()).map_err(|e| e.to_string())?;
    let rc = ReconstructConfig::default();
    let mut sum = 0.0;
    for item in &manifest.items {
        let pred = predict(root, item, &spec, &rc, false).map_err(|e| format!("{}: {e:#}", item.id))?;
        let gt = lumisphere::pfm::read_map(&root.join(&item.files.rm_gt)).map_err(|e| e.to_string())?;
        sum += rm_dssim(&pred.map, &gt).map_err(|e| e.to_string())?.dssim;
    }
    Ok(sum / manifest.items.len() as f64)
}

fn sh_ordering() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let mut g = rng(11);
    let materials = (0..6)
        .map(|k| {
            let brdf = AnalyticBrdf::BlinnPhong {
                diffuse: Rgb::splat(g.random_range(0.05..0.3)),
                specular: Rgb::splat(g.random_range(0.3..0.6)),
                exponent: g.random_range(100.0..1000.0),
            };
            (format!("glossy{k}"), Brdf::from(brdf))
        })
        .collect();
    let m = dataset(dir.path(), materials, 30, 256, 21);
    ensure(m.items.len() == 30, || format!("{} items", m.items.len()))?;
    let sh = mean_dssim(dir.path(), &m, "sh")?;
    let rbf = mean_dssim(dir.path(), &m, "gt_normals")?;
    ensure(sh > rbf, || format!("sh {sh:.4} vs rbf {rbf:.4}"))?;
    Ok(format!("mean DSSIM sh {sh:.4} > rbf {rbf:.4}"))
}

fn diffuse_sh() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let mut g = rng(12);
    let materials = (0..6)
        .map(|k| {
            let albedo = Rgb::new(g.random_range(0.2..0.9), g.random_range(0.2..0.9), g.random_range(0.2..0.9));
            (format!("matte{k}"), Brdf::from(AnalyticBrdf::Lambert { albedo }))
        })
        .collect();
    let m = dataset(dir.path(), materials, 30, 4096, 31);
    let sh = mean_dssim(dir.path(), &m, "sh")?;
    ensure(sh < 0.02, || format!("mean DSSIM {sh:.4}"))?;
    Ok(format!("mean DSSIM {sh:.4} over 30 items"))
}

fn metrics_oracles() -> Result<String, String> {
    let (mut mse_err, mut angle_err, mut ssim_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for inst in 0..20u64 {
        let mut g = rng(8000 + inst);
        let r = [11usize, 16, 24, 32][inst as usize % 4];
        let random = |g: &mut rand_chacha::ChaCha8Rng, p: f64| {
            let mut m = ReflectanceMap::empty(r);
            for (i, j) in ReflectanceMap::constant(r, Rgb::BLACK).disc_cells().collect::<Vec<_>>() {
                if g.random_bool(p) {
                    m.set(i, j, random_rgb(g, 3.0));
                }
            }
            m
        };
        let (a, b) = (random(&mut g, 0.8), random(&mut g, 0.8));
        mse_err = mse_err.max((rm_mse(&a, &b).unwrap() - naive_mse(&a, &b)).abs());

        let (a, b) = (random(&mut g, 1.0), random(&mut g, 1.0));
        let in_disc: Vec<bool> = (0..r * r).map(|k| cell_in_disc(k % r, k / r, r)).collect();
        let (la, lb) = (luminance_grid(&a), luminance_grid(&b));
        ssim_err = ssim_err.max((mean_ssim(&la, &lb, r, &in_disc).unwrap() - reference_ssim(&la, &lb, r, &in_disc)).abs());

        let gt = NormalMap::sphere(24 + inst as usize % 2);
        let mut pred = gt.clone();
        for k in 0..pred.len() {
            if pred.mask[k] {
                let axis = Vec3::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)).normalize();
                pred.normals[k] = pred.normals[k].rotate(axis, g.random_range(0.01..1.5));
            }
        }
        let s = normal_error_stats(&pred, &gt).unwrap();
        let (mean, median, rmse) = naive_angle_stats(&pred, &gt);
        angle_err = angle_err.max((s.mean - mean).abs()).max((s.median - median).abs()).max((s.rmse - rmse).abs());
    }
    ensure(mse_err < 1e-9 && angle_err < 1e-9, || format!("mse {mse_err:.2e}, angles {angle_err:.2e}"))?;
    ensure(ssim_err < 1e-6, || format!("ssim {ssim_err:.2e}"))?;
    Ok(format!("mse {mse_err:.1e}, angles {angle_err:.1e}, ssim {ssim_err:.1e} over 20 pairs"))
}

fn convolve_closed_form() -> Result<String, String> {
    let a = Rgb::new(0.8, 0.5, 0.2);
    let e = Rgb::new(1.5, 2.0, 0.7);
    let brdf = Brdf::from(AnalyticBrdf::Lambert { albedo: a });
    let rm = brdf_convolve(&EnvironmentMap::constant(64, 32, e), &brdf, 16, 4096, 3).map_err(|e| e.to_string())?;
    ensure(rm.is_dense(), || "map has undefined disc cells".into())?;
    let mut worst: f64 = 0.0;
    for (_, _, c) in rm.defined_cells() {
        for ch in 0..3 {
            worst = worst.max((c[ch] - a[ch] * e[ch]).abs() / (a[ch] * e[ch]));
        }
    }
    ensure(worst <= 0.01, || format!("max relative error {worst:.4}"))?;
    Ok(format!("max relative error {:.3}%", 100.0 * worst))
}

fn parsers() -> Result<String, String> {
    parsers::merl_golden_lookups();
    parsers::merl_round_trip_and_negatives();
    parsers::merl_malformed();
    parsers::hdr_flat_golden();
    parsers::hdr_rle_golden();
    parsers::hdr_encoder_round_trip();
    parsers::hdr_malformed();
    Ok("golden MERL and RGBE files, malformed corpora".into())
}

fn edit_identities() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let (img, nm, rm) = edit_scene(seed, 48);
        let s = EditSession::new(img.clone(), nm.clone(), rm.clone()).map_err(|e| e.to_string())?;
        for out in [material_transfer(&s, &rm).unwrap(), shape_reshade(&s, &nm).unwrap()] {
            ensure(out.unknown_pixels == 0, || format!("scene {seed}: {} unknown pixels", out.unknown_pixels))?;
            for (a, b) in out.image.rgb.iter().zip(&img.rgb) {
                worst = (0..3).map(|c| (a[c] - b[c]).abs()).fold(worst, f64::max);
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max abs error {worst:.3e}"))?;
    Ok(format!("max abs error {worst:.2e} over 10 scenes"))
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let assets = support::assets(dir.path(), 4);
    let mut trees = Vec::new();
    for out in ["a", "b"] {
        let o = support::small_dataset(&assets, &dir.path().join(out), 12, 99, &[]);
        ensure(o.status.success(), || support::stderr(&o))?;
        trees.push(support::tree(&dir.path().join(out)));
    }
    ensure(trees[0] == trees[1], || "trees differ".into())?;
    Ok(format!("{} files hash-identical", trees[0].len()))
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "round-trip identity", budget: Some(Duration::from_secs(10)), check: round_trip },
    Criterion { name: "rbf oracle equivalence", budget: Some(Duration::from_secs(5)), check: rbf_oracle },
    Criterion { name: "shadow robustness", budget: None, check: shadow_robustness },
    Criterion { name: "sh ordering on glossy items", budget: Some(Duration::from_secs(60)), check: sh_ordering },
    Criterion { name: "sh adequacy on diffuse items", budget: None, check: diffuse_sh },
    Criterion { name: "metrics oracles", budget: None, check: metrics_oracles },
    Criterion { name: "convolution closed form", budget: Some(Duration::from_secs(30)), check: convolve_closed_form },
    Criterion { name: "parsers", budget: None, check: parsers },
    Criterion { name: "edit identities", budget: None, check: edit_identities },
    Criterion { name: "synth determinism", budget: None, check: determinism },
];

fn main() {
    let mut failed = Vec::new();
    for c in CRITERIA {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if took > b => Err(format!("took {:.1}s, budget {}s", took.as_secs_f64(), b.as_secs())),
            (r, _) => r,
        };
        match &result {
            Ok(detail) => println!("PASS {} ({:.2}s): {detail}", c.name, took.as_secs_f64()),
            Err(why) => {
                println!("FAIL {} ({:.2}s): {why}", c.name, took.as_secs_f64());
                failed.push(c.name);
            }
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed.len(), CRITERIA.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
