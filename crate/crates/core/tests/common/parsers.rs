//! Hand-assembled MERL and Radiance files with their expected decodings.

use std::f64::consts::FRAC_PI_4;

use lumisphere::geom::{Rgb, Vec3};
use lumisphere::synth::hdr::HdrError;
use lumisphere::synth::merl::{MerlError, CHANNEL_SCALE, FILE_LEN, PHI_D_RES, TABLE_LEN};
use lumisphere::synth::{encode_hdr, parse_hdr, parse_merl, EnvironmentMap};

fn merl_bytes(dims: [i32; 3], values: impl Iterator<Item = f64>) -> Vec<u8> {
    let mut out = Vec::new();
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn ramp_table() -> Vec<u8> {
    merl_bytes([90, 90, 180], (0..3 * TABLE_LEN).map(|k| (k % TABLE_LEN) as f64))
}

pub fn merl_golden_lookups() {
    let t = parse_merl(&ramp_table()).unwrap();
    assert_eq!(t.negative_count(), 0);
    // normal incidence and exit: bin (0, 0, 0)
    assert_eq!(t.eval_local(Vec3::Z, Vec3::Z), Rgb::BLACK);
    // mirror pair at 45 degrees: half vector on the pole, theta_d bin 45
    let wi = Vec3::new(FRAC_PI_4.sin(), 0.0, FRAC_PI_4.cos());
    let wo = Vec3::new(-wi.x, 0.0, wi.z);
    let v = t.eval_local(wi, wo);
    let raw = (45 * PHI_D_RES) as f64;
    for c in 0..3 {
        assert!((v[c] - raw * CHANNEL_SCALE[c]).abs() < 1e-9 * raw, "{v:?}");
    }
}

pub fn merl_round_trip_and_negatives() {
    let mut vals: Vec<f64> = (0..3 * TABLE_LEN).map(|k| (k % 7) as f64 * 0.25).collect();
    vals[3] = -1.0;
    vals[TABLE_LEN + 5] = -0.5;
    let bytes = merl_bytes([90, 90, 180], vals.into_iter());
    let t = parse_merl(&bytes).unwrap();
    assert_eq!(t.negative_count(), 2);
    assert_eq!(t.encode(), bytes);
}

pub fn merl_malformed() {
    let good = ramp_table();
    let mut nan = good.clone();
    nan[12 + 8 * 100..12 + 8 * 101].copy_from_slice(&f64::NAN.to_le_bytes());
    let mut trailing = good.clone();
    trailing.push(0);
    let cases: Vec<(&str, Vec<u8>, Box<dyn Fn(&MerlError) -> bool>)> = vec![
        ("empty", vec![], Box::new(|e| *e == MerlError::HeaderTruncated(0))),
        ("short header", good[..7].to_vec(), Box::new(|e| *e == MerlError::HeaderTruncated(7))),
        ("wrong dims", merl_bytes([90, 90, 360], std::iter::empty()), Box::new(|e| *e == MerlError::Dimensions([90, 90, 360]))),
        ("negative dims", merl_bytes([-90, 90, 180], std::iter::empty()), Box::new(|e| *e == MerlError::Dimensions([-90, 90, 180]))),
        ("truncated", good[..good.len() - 8].to_vec(), Box::new(|e| matches!(e, MerlError::Length { expected: FILE_LEN, .. }))),
        ("trailing", trailing, Box::new(|e| matches!(e, MerlError::Length { actual, .. } if *actual == FILE_LEN + 1))),
        ("nan", nan, Box::new(|e| *e == MerlError::NonFinite(1))),
    ];
    for (name, bytes, check) in cases {
        let err = parse_merl(&bytes).expect_err(name);
        assert!(check(&err), "{name}: {err:?}");
    }
}

const HEADER: &str = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n";

fn flat_4x2() -> Vec<u8> {
    let mut b = format!("{HEADER}-Y 2 +X 4\n").into_bytes();
    let pixels: [[u8; 4]; 8] = [
        [128, 64, 0, 129],
        [128, 128, 128, 128],
        [0, 0, 0, 0],
        [255, 0, 0, 130],
        [64, 32, 16, 120],
        [1, 2, 3, 136],
        [128, 128, 128, 0],
        [200, 100, 50, 127],
    ];
    pixels.iter().for_each(|p| b.extend_from_slice(p));
    b
}

pub fn hdr_flat_golden() {
    let env = parse_hdr(&flat_4x2()).unwrap();
    assert_eq!((env.width(), env.height()), (4, 2));
    let expect = |m: [f64; 3], e: i32| Rgb::new(m[0], m[1], m[2]) * 2f64.powi(e - 136);
    assert_eq!(env.texel(0, 0), Rgb::new(1.0, 0.5, 0.0));
    assert_eq!(env.texel(1, 0), Rgb::splat(0.5));
    assert_eq!(env.texel(2, 0), Rgb::BLACK);
    assert_eq!(env.texel(3, 0), Rgb::new(255.0 / 64.0, 0.0, 0.0));
    assert_eq!(env.texel(0, 1), expect([64.0, 32.0, 16.0], 120));
    assert_eq!(env.texel(1, 1), Rgb::new(1.0, 2.0, 3.0));
    assert_eq!(env.texel(2, 1), Rgb::BLACK);
    assert_eq!(env.texel(3, 1), expect([200.0, 100.0, 50.0], 127));
}

/// Offset of the first scanline's red run byte in [`rle_8x2`].
const RED_RUN_AT: usize = HEADER.len() + "-Y 2 +X 8\n".len() + 4;

fn rle_8x2() -> Vec<u8> {
    let mut b = format!("{HEADER}-Y 2 +X 8\n").into_bytes();
    for _ in 0..2 {
        b.extend_from_slice(&[2, 2, 0, 8]);
        b.extend_from_slice(&[128 + 8, 128]); // red: one run
        b.extend_from_slice(&[8, 0, 16, 32, 48, 64, 80, 96, 112]); // green: literals
        b.extend_from_slice(&[128 + 4, 0, 4, 10, 20, 30, 40]); // blue: run then literals
        b.extend_from_slice(&[128 + 8, 128]); // exponent
    }
    b
}

pub fn hdr_rle_golden() {
    let env = parse_hdr(&rle_8x2()).unwrap();
    assert_eq!((env.width(), env.height()), (8, 2));
    let blue = [0.0, 0.0, 0.0, 0.0, 10.0, 20.0, 30.0, 40.0];
    for y in 0..2 {
        for x in 0..8 {
            let want = Rgb::new(128.0, 16.0 * x as f64, blue[x]) / 256.0;
            assert_eq!(env.texel(x, y), want, "({x}, {y})");
        }
    }
}

pub fn hdr_encoder_round_trip() {
    for (w, h) in [(4, 3), (8, 2), (37, 5)] {
        let env = EnvironmentMap::from_fn(w, h, |d| Rgb::new(0.5 + 0.5 * d.x, 2.0 * d.y.abs(), 0.25));
        let bytes = encode_hdr(&env);
        let back = parse_hdr(&bytes).unwrap();
        assert_eq!(encode_hdr(&back), bytes);
        for (a, b) in back.texels().iter().zip(env.texels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= b.max_channel() / 128.0 + 1e-12);
            }
        }
    }
}

pub fn hdr_malformed() {
    let flat = flat_4x2();
    let rle = rle_8x2();
    let swap = |from: &str, to: &str| String::from_utf8_lossy(&flat).replacen(from, to, 1).into_bytes();
    let mut overrun = rle.clone();
    assert_eq!(overrun[RED_RUN_AT], 128 + 8);
    overrun[RED_RUN_AT] = 128 + 9;
    let mut trailing = flat.clone();
    trailing.push(7);
    let cases: Vec<(&str, Vec<u8>, Box<dyn Fn(&HdrError) -> bool>)> = vec![
        ("bad magic", swap("#?RADIANCE", "#?RADIANSE"), Box::new(|e| *e == HdrError::BadMagic)),
        ("bad format", swap("32-bit_rle_rgbe", "32-bit_rle_xyze"), Box::new(|e| matches!(e, HdrError::UnsupportedFormat(f) if f == "32-bit_rle_xyze"))),
        ("unterminated header", b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n".to_vec(), Box::new(|e| *e == HdrError::UnterminatedHeader)),
        ("flipped rows", swap("-Y 2", "+Y 2"), Box::new(|e| matches!(e, HdrError::UnsupportedOrientation(_)))),
        ("bad resolution", swap("+X 4", "+X four"), Box::new(|e| matches!(e, HdrError::BadResolution(_)))),
        ("truncated scanline", flat[..flat.len() - 3].to_vec(), Box::new(|e| *e == HdrError::TruncatedScanline { row: 1 })),
        ("rle overrun", overrun, Box::new(|e| *e == HdrError::RleOverrun { row: 0 })),
        ("trailing bytes", trailing, Box::new(|e| *e == HdrError::TrailingBytes(1))),
    ];
    for (name, bytes, check) in cases {
        let err = parse_hdr(&bytes).expect_err(name);
        assert!(check(&err), "{name}: {err:?}");
    }
}
