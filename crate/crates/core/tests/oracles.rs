//! Library results against independent straightforward implementations.

mod common;

use common::*;
use lumisphere::domain::{rbf_reconstruct, OrientedSample};
use lumisphere::geom::{Orientation, Rgb, Vec3};
use lumisphere::image::NormalMap;
use lumisphere::metrics::{luminance_grid, mean_ssim, normal_error_stats, rm_mse};
use lumisphere::rmap::{cell_in_disc, ReflectanceMap};
use lumisphere::synth::merl::TABLE_LEN;
use lumisphere::synth::BrdfTable;
use rand::Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

#[test]
fn rbf_matches_double_loop() {
    let r = 32;
    for inst in 0..50u64 {
        let mut g = rng(1000 + inst);
        let n = g.random_range(1..=500);
        let samples: Vec<OrientedSample> = (0..n)
            .map(|_| OrientedSample { omega: Orientation::new(random_unit_upper(&mut g)).unwrap(), radiance: random_rgb(&mut g, 2.0) })
            .collect();
        let sigma = g.random_range(2.0..16.0);
        let fast = rbf_reconstruct(&samples, sigma, r).unwrap().map;
        let slow = naive_rbf(&samples, sigma, r);
        for j in 0..r {
            for i in 0..r {
                match (fast.get(i, j), slow[j * r + i]) {
                    (Some(a), Some(b)) => {
                        for c in 0..3 {
                            assert!((a[c] - b[c]).abs() <= 1e-6 * b[c].abs().max(1e-3), "instance {inst} cell ({i},{j}): {a:?} vs {b:?}");
                        }
                    }
                    (None, None) => {}
                    other => panic!("instance {inst} cell ({i},{j}) definedness differs: {other:?}"),
                }
            }
        }
    }
}

#[test]
fn measured_lookup_matches_rotation_reference() {
    let mut g = rng(77);
    let raw: Vec<f64> = (0..3 * TABLE_LEN).map(|_| g.random_range(0.5..2.0)).collect();
    let table = BrdfTable::from_raw(raw.clone()).unwrap();
    for _ in 0..1000 {
        let (wi, wo) = (random_unit_upper(&mut g), random_unit_upper(&mut g));
        let a = table.eval_local(wi, wo);
        let b = reference_merl_eval(&raw, wi, wo);
        for c in 0..3 {
            assert!(rel_err(a[c], b[c]) < 1e-6, "{wi:?} {wo:?}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn ssim_matches_two_dimensional_window() {
    for inst in 0..20u64 {
        let mut g = rng(500 + inst);
        let r = [11usize, 16, 24, 32][inst as usize % 4];
        let base = ReflectanceMap::constant(r, Rgb::BLACK);
        let mut fill = |base: &ReflectanceMap| {
            let mut m = base.clone();
            for (i, j) in base.disc_cells().collect::<Vec<_>>() {
                m.set(i, j, random_rgb(&mut g, 1.0));
            }
            m
        };
        let (a, b) = (fill(&base), fill(&base));
        let in_disc: Vec<bool> = (0..r * r).map(|k| cell_in_disc(k % r, k / r, r)).collect();
        let (la, lb) = (luminance_grid(&a), luminance_grid(&b));
        let fast = mean_ssim(&la, &lb, r, &in_disc).unwrap();
        let slow = reference_ssim(&la, &lb, r, &in_disc);
        assert!((fast - slow).abs() < 1e-6, "r {r}: {fast} vs {slow}");
    }
}

#[test]
fn mse_matches_naive() {
    for inst in 0..20u64 {
        let mut g = rng(900 + inst);
        let r = 24;
        let mut a = ReflectanceMap::empty(r);
        let mut b = ReflectanceMap::empty(r);
        for j in 0..r {
            for i in 0..r {
                if cell_in_disc(i, j, r) {
                    if g.random_bool(0.8) {
                        a.set(i, j, random_rgb(&mut g, 3.0));
                    }
                    if g.random_bool(0.8) {
                        b.set(i, j, random_rgb(&mut g, 3.0));
                    }
                }
            }
        }
        let fast = rm_mse(&a, &b).unwrap();
        assert!((fast - naive_mse(&a, &b)).abs() < 1e-9);
    }
}

#[test]
fn angle_statistics_match_naive() {
    for inst in 0..20u64 {
        let mut g = rng(300 + inst);
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
        assert!((s.mean - mean).abs() < 1e-9 && (s.median - median).abs() < 1e-9 && (s.rmse - rmse).abs() < 1e-9);
    }
}
