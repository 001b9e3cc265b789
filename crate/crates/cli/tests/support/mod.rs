#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lumisphere::image::RadianceImage;
use lumisphere::Rgb;
use sha2::{Digest, Sha256};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lumisphere"));
    c.env_remove("LUMISPHERE_ASSETS");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Starter assets with `envs` environments.
pub fn assets(dir: &Path, envs: usize) -> PathBuf {
    let root = dir.join("assets");
    let o = run(&["init-assets", "--assets", p(&root), "--environments", &envs.to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
    root
}

/// A small dataset: 32 px images, 16×16 maps.
pub fn small_dataset(assets: &Path, out: &Path, samples: usize, seed: u64, extra: &[&str]) -> Output {
    let mut args = vec![
        "synth".to_string(),
        "--assets".into(),
        p(assets).into(),
        "--out".into(),
        p(out).into(),
        "--samples".into(),
        samples.to_string(),
        "--seed".into(),
        seed.to_string(),
        "--image-size".into(),
        "32".into(),
        "--resolution".into(),
        "16".into(),
        "--mc-samples".into(),
        "64".into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    bin().args(&args).output().unwrap()
}

/// Relative path → sha256 for every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let hash: String = Sha256::digest(std::fs::read(&p).unwrap()).iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), hash);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn srgb_to_linear(v: u8) -> f64 {
    let e = v as f64 / 255.0;
    if e <= 0.04045 {
        e / 12.92
    } else {
        ((e + 0.055) / 1.055).powf(2.4)
    }
}

/// Decodes an RGBA PNG written by the editor back into a linear image
/// with row 0 at the bottom.
pub fn decode_png(bytes: &[u8]) -> RadianceImage {
    let dec = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = dec.read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    assert_eq!(info.color_type, png::ColorType::Rgba);
    let (w, h) = (info.width as usize, info.height as usize);
    let mut rgb = vec![Rgb::BLACK; w * h];
    let mut mask = vec![false; w * h];
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            let px = &buf[(row * w + x) * 4..][..4];
            rgb[y * w + x] = Rgb::new(srgb_to_linear(px[0]), srgb_to_linear(px[1]), srgb_to_linear(px[2]));
            mask[y * w + x] = px[3] > 127;
        }
    }
    RadianceImage::new(w, h, rgb, mask).unwrap()
}
