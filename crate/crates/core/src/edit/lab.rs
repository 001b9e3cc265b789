//! CIE L*a*b* (D65) for linear RGB with sRGB primaries.

use std::sync::LazyLock;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::geom::Rgb;
use crate::image::RadianceImage;

static RGB_TO_XYZ: LazyLock<Matrix3<f64>> = LazyLock::new(|| {
    Matrix3::new(
        0.412_456_4, 0.357_576_1, 0.180_437_5, //
        0.212_672_9, 0.715_152_2, 0.072_175_0, //
        0.019_333_9, 0.119_192_0, 0.950_304_1,
    )
});

static XYZ_TO_RGB: LazyLock<Matrix3<f64>> = LazyLock::new(|| RGB_TO_XYZ.try_inverse().expect("invertible primaries"));

/// Reference white: the XYZ of linear RGB (1, 1, 1).
static WHITE: LazyLock<[f64; 3]> = LazyLock::new(|| {
    let m = &*RGB_TO_XYZ;
    [0, 1, 2].map(|r| m[(r, 0)] + m[(r, 1)] + m[(r, 2)])
});

const EPS: f64 = 6.0 / 29.0;

fn f(t: f64) -> f64 {
    if t > EPS * EPS * EPS {
        t.cbrt()
    } else {
        t / (3.0 * EPS * EPS) + 4.0 / 29.0
    }
}

fn f_inv(v: f64) -> f64 {
    if v > EPS {
        v * v * v
    } else {
        3.0 * EPS * EPS * (v - 4.0 / 29.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl std::ops::Add for Lab {
    type Output = Lab;
    fn add(self, o: Lab) -> Lab {
        Lab { l: self.l + o.l, a: self.a + o.a, b: self.b + o.b }
    }
}

impl std::ops::Sub for Lab {
    type Output = Lab;
    fn sub(self, o: Lab) -> Lab {
        Lab { l: self.l - o.l, a: self.a - o.a, b: self.b - o.b }
    }
}

pub fn rgb_to_lab(c: Rgb) -> Lab {
    let xyz = *RGB_TO_XYZ * nalgebra::Vector3::new(c[0], c[1], c[2]);
    let w = *WHITE;
    let (fx, fy, fz) = (f(xyz[0] / w[0]), f(xyz[1] / w[1]), f(xyz[2] / w[2]));
    Lab { l: 116.0 * fy - 16.0, a: 500.0 * (fx - fy), b: 200.0 * (fy - fz) }
}

/// Inverse of [`rgb_to_lab`]. The result is not clamped; see
/// [`in_gamut`].
pub fn lab_to_rgb(lab: Lab) -> Rgb {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let w = *WHITE;
    let xyz = nalgebra::Vector3::new(w[0] * f_inv(fx), w[1] * f_inv(fy), w[2] * f_inv(fz));
    let rgb = *XYZ_TO_RGB * xyz;
    Rgb::new(rgb[0], rgb[1], rgb[2])
}

pub fn in_gamut(c: Rgb) -> bool {
    c.0.iter().all(|v| (0.0..=1.0).contains(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub width: usize,
    pub height: usize,
    pub lab: Vec<Lab>,
    pub mask: Vec<bool>,
    /// Foreground pixels whose RGB lay outside `[0, 1]`.
    pub out_of_gamut: usize,
}

impl LabImage {
    pub fn from_rgb(img: &RadianceImage) -> Self {
        let lab = img.rgb.iter().map(|&c| rgb_to_lab(c)).collect();
        let out_of_gamut = img.rgb.iter().zip(&img.mask).filter(|(c, &m)| m && !in_gamut(**c)).count();
        Self { width: img.width, height: img.height, lab, mask: img.mask.clone(), out_of_gamut }
    }
}
