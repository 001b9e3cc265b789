//! Radiance RGBE (`.hdr`) reading and writing.

use thiserror::Error;

use super::envmap::{EnvError, EnvironmentMap};
use crate::geom::Rgb;

const MIN_RLE_WIDTH: usize = 8;
const MAX_RLE_WIDTH: usize = 0x7fff;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HdrError {
    #[error("not a Radiance file (missing #?RADIANCE magic)")]
    BadMagic,
    #[error("unsupported pixel format {0:?}")]
    UnsupportedFormat(String),
    #[error("header is not terminated by a blank line")]
    UnterminatedHeader,
    #[error("unsupported pixel ordering {0:?}, only \"-Y H +X W\" is read")]
    UnsupportedOrientation(String),
    #[error("malformed resolution line {0:?}")]
    BadResolution(String),
    #[error("scanline {row} is truncated")]
    TruncatedScanline { row: usize },
    #[error("run-length data overruns scanline {row}")]
    RleOverrun { row: usize },
    #[error("{0} trailing bytes after the last scanline")]
    TrailingBytes(usize),
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn rgbe_to_rgb(p: [u8; 4]) -> Rgb {
    if p[3] == 0 {
        return Rgb::BLACK;
    }
    let f = 2f64.powi(p[3] as i32 - 136);
    Rgb::new(p[0] as f64 * f, p[1] as f64 * f, p[2] as f64 * f)
}

fn rgb_to_rgbe(c: Rgb) -> [u8; 4] {
    let v = c.max_channel();
    if !(v > 1e-32) {
        return [0; 4];
    }
    // v = frac * 2^exp with frac in [0.5, 1)
    let mut exp = v.log2().floor() as i32 + 1;
    let mut frac = v / 2f64.powi(exp);
    if frac >= 1.0 {
        frac /= 2.0;
        exp += 1;
    } else if frac < 0.5 {
        frac *= 2.0;
        exp -= 1;
    }
    if exp + 128 > 255 {
        return [255, 255, 255, 255];
    }
    if exp + 128 < 1 {
        return [0; 4];
    }
    let scale = frac * 256.0 / v;
    let m = |x: f64| (x.max(0.0) * scale).min(255.0) as u8;
    [m(c[0]), m(c[1]), m(c[2]), (exp + 128) as u8]
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Option<&'a str> {
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n')?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).ok().map(|s| s.trim_end_matches('\r'))
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(out)
    }

    fn byte(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }
}

fn parse_resolution(line: &str) -> Result<(usize, usize), HdrError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let bad = || HdrError::BadResolution(line.to_string());
    if parts.len() != 4 {
        return Err(bad());
    }
    let axes = ["-Y", "+Y", "-X", "+X"];
    if !axes.contains(&parts[0]) || !axes.contains(&parts[2]) {
        return Err(bad());
    }
    let h: usize = parts[1].parse().map_err(|_| bad())?;
    let w: usize = parts[3].parse().map_err(|_| bad())?;
    if parts[0] != "-Y" || parts[2] != "+X" {
        return Err(HdrError::UnsupportedOrientation(line.to_string()));
    }
    Ok((w, h))
}

fn read_scanline(cur: &mut Cursor, width: usize, row: usize, out: &mut Vec<Rgb>) -> Result<(), HdrError> {
    let truncated = HdrError::TruncatedScanline { row };
    let head: [u8; 4] = cur.take(4).ok_or(truncated.clone())?.try_into().unwrap();
    let is_rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&width)
        && head[0] == 2
        && head[1] == 2
        && head[2] & 0x80 == 0;
    if !is_rle {
        out.push(rgbe_to_rgb(head));
        for _ in 1..width {
            let p = cur.take(4).ok_or(truncated.clone())?;
            out.push(rgbe_to_rgb(p.try_into().unwrap()));
        }
        return Ok(());
    }
    if ((head[2] as usize) << 8 | head[3] as usize) != width {
        return Err(HdrError::RleOverrun { row });
    }
    let mut planes = vec![[0u8; 4]; width];
    for ch in 0..4 {
        let mut x = 0;
        while x < width {
            let count = cur.byte().ok_or(truncated.clone())? as usize;
            if count > 128 {
                let run = count - 128;
                let v = cur.byte().ok_or(truncated.clone())?;
                if x + run > width {
                    return Err(HdrError::RleOverrun { row });
                }
                planes[x..x + run].iter_mut().for_each(|p| p[ch] = v);
                x += run;
            } else {
                if count == 0 || x + count > width {
                    return Err(HdrError::RleOverrun { row });
                }
                let lit = cur.take(count).ok_or(truncated.clone())?;
                for (p, &v) in planes[x..x + count].iter_mut().zip(lit) {
                    p[ch] = v;
                }
                x += count;
            }
        }
    }
    out.extend(planes.into_iter().map(rgbe_to_rgb));
    Ok(())
}

/// Decodes a Radiance file. Row 0 of the result is the first scanline in
/// the file (the top of the panorama).
pub fn parse_hdr(bytes: &[u8]) -> Result<EnvironmentMap, HdrError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.line().ok_or(HdrError::BadMagic)?;
    if !(magic.starts_with("#?RADIANCE") || magic.starts_with("#?RGBE")) {
        return Err(HdrError::BadMagic);
    }
    loop {
        let line = cur.line().ok_or(HdrError::UnterminatedHeader)?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(HdrError::UnsupportedFormat(fmt.trim().to_string()));
            }
        }
    }
    let res = cur.line().ok_or_else(|| HdrError::BadResolution(String::new()))?;
    let (width, height) = parse_resolution(res)?;
    let mut texels = Vec::with_capacity(width * height);
    for row in 0..height {
        read_scanline(&mut cur, width, row, &mut texels)?;
    }
    if cur.pos != bytes.len() {
        return Err(HdrError::TrailingBytes(bytes.len() - cur.pos));
    }
    Ok(EnvironmentMap::new(width, height, texels)?)
}

fn encode_plane(plane: &[u8], out: &mut Vec<u8>) {
    let n = plane.len();
    let mut x = 0;
    while x < n {
        // length of the run starting at x
        let mut run = 1;
        while x + run < n && run < 127 && plane[x + run] == plane[x] {
            run += 1;
        }
        if run >= 4 {
            out.push(128 + run as u8);
            out.push(plane[x]);
            x += run;
            continue;
        }
        // literal block up to the next run of four
        let start = x;
        let mut end = x;
        while end < n && end - start < 128 {
            let mut r = 1;
            while end + r < n && r < 4 && plane[end + r] == plane[end] {
                r += 1;
            }
            if r >= 4 {
                break;
            }
            end += 1;
        }
        out.push((end - start) as u8);
        out.extend_from_slice(&plane[start..end]);
        x = end;
    }
}

/// Encodes with adaptive run-length scanlines where the width allows it.
pub fn encode_hdr(env: &EnvironmentMap) -> Vec<u8> {
    let (w, h) = (env.width(), env.height());
    let mut out = format!("#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {h} +X {w}\n").into_bytes();
    let rle = (MIN_RLE_WIDTH..=MAX_RLE_WIDTH).contains(&w);
    for row in env.texels().chunks(w) {
        let px: Vec<[u8; 4]> = row.iter().map(|&c| rgb_to_rgbe(c)).collect();
        if !rle {
            px.iter().for_each(|p| out.extend_from_slice(p));
            continue;
        }
        out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xff) as u8]);
        for ch in 0..4 {
            let plane: Vec<u8> = px.iter().map(|p| p[ch]).collect();
            encode_plane(&plane, &mut out);
        }
    }
    out
}

/// The value an RGBE round trip stores for `c`.
pub fn quantize(c: Rgb) -> Rgb {
    rgbe_to_rgb(rgb_to_rgbe(c))
}
