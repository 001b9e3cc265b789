//! Real spherical-harmonic fits restricted to the visible hemisphere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Rgb, Vec3};
use crate::rmap::{cell_orientation, ReflectanceMap};

pub const DEFAULT_SH_ORDER: usize = 2;

/// Smallest accepted ratio between the extreme singular values of the
/// design matrix.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShError {
    #[error("rank-deficient fit for a basis of {basis_size} functions ({defined} defined cells)")]
    RankDeficient { basis_size: usize, defined: usize },
    #[error("expected {expected} coefficients for order {order}, got {actual}")]
    CoefficientCount { order: usize, expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShCoefficients {
    order: usize,
    coeffs: Vec<Rgb>,
}

impl ShCoefficients {
    pub fn new(order: usize, coeffs: Vec<Rgb>) -> Result<Self, ShError> {
        let expected = (order + 1) * (order + 1);
        if coeffs.len() != expected {
            return Err(ShError::CoefficientCount { order, expected, actual: coeffs.len() });
        }
        Ok(Self { order, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Rgb] {
        &self.coeffs
    }

    pub fn eval(&self, dir: Vec3) -> Rgb {
        sh_basis(self.order, dir)
            .into_iter()
            .zip(&self.coeffs)
            .fold(Rgb::BLACK, |acc, (y, &c)| acc + c * y)
    }
}

/// Associated Legendre `P_l^m(x)` without the Condon–Shortley phase, for
/// all `0 <= m <= l <= order`, indexed `[l][m]`.
fn legendre(order: usize, x: f64) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; order + 1]; order + 1];
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0;
    for m in 0..=order {
        if m > 0 {
            pmm *= (2 * m - 1) as f64 * somx2;
        }
        p[m][m] = pmm;
        if m < order {
            p[m + 1][m] = x * (2 * m + 1) as f64 * pmm;
        }
        for l in m + 2..=order {
            p[l][m] = ((2 * l - 1) as f64 * x * p[l - 1][m] - (l + m - 1) as f64 * p[l - 2][m]) / (l - m) as f64;
        }
    }
    p
}

fn normalization(l: usize, m: usize) -> f64 {
    // (l - m)! / (l + m)!
    let ratio: f64 = ((l - m + 1)..=(l + m)).map(|k| 1.0 / k as f64).product();
    ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}

/// Orthonormal real SH basis `Y_l^m` at unit direction `dir`, index
/// `l*l + l + m`. The polar axis is +z (the viewing direction).
pub fn sh_basis(order: usize, dir: Vec3) -> Vec<f64> {
    let p = legendre(order, dir.z.clamp(-1.0, 1.0));
    let phi = dir.y.atan2(dir.x);
    let mut out = vec![0.0; (order + 1) * (order + 1)];
    for l in 0..=order {
        let base = l * l + l;
        out[base] = normalization(l, 0) * p[l][0];
        for m in 1..=l {
            let k = std::f64::consts::SQRT_2 * normalization(l, m) * p[l][m];
            let (s, c) = (m as f64 * phi).sin_cos();
            out[base + m] = k * c;
            out[base - m] = k * s;
        }
    }
    out
}

/// Per-channel least-squares fit of the SH expansion to the defined cells.
pub fn sh_project(rm: &ReflectanceMap, order: usize) -> Result<ShCoefficients, ShError> {
    let basis_size = (order + 1) * (order + 1);
    let r = rm.resolution();
    let cells: Vec<_> = rm.defined_cells().collect();
    let deficient = ShError::RankDeficient { basis_size, defined: cells.len() };
    if cells.len() < basis_size {
        return Err(deficient);
    }
    let mut design = DMatrix::zeros(cells.len(), basis_size);
    for (row, &(i, j, _)) in cells.iter().enumerate() {
        for (col, y) in sh_basis(order, cell_orientation(i, j, r).vector()).into_iter().enumerate() {
            design[(row, col)] = y;
        }
    }
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if !(max_sv > 0.0) || min_sv / max_sv < RANK_TOLERANCE {
        return Err(deficient);
    }
    let mut coeffs = vec![Rgb::BLACK; basis_size];
    for ch in 0..3 {
        let rhs = DVector::from_iterator(cells.len(), cells.iter().map(|c| c.2[ch]));
        let sol = svd.solve(&rhs, 0.0).map_err(|_| deficient.clone())?;
        for (c, v) in coeffs.iter_mut().zip(sol.iter()) {
            c.0[ch] = *v;
        }
    }
    ShCoefficients::new(order, coeffs)
}

/// Evaluates the expansion at every in-disc cell; negative lobes are
/// clamped to zero.
pub fn sh_reconstruct(c: &ShCoefficients, resolution: usize) -> ReflectanceMap {
    ReflectanceMap::from_fn(resolution, |o| c.eval(o.vector()).map(|v| v.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Orientation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Closed-form order-2 basis (the common graphics table).
    fn closed_form(d: Vec3) -> [f64; 9] {
        let (x, y, z) = (d.x, d.y, d.z);
        [
            0.282_094_791_773_878_1,
            0.488_602_511_902_919_9 * y,
            0.488_602_511_902_919_9 * z,
            0.488_602_511_902_919_9 * x,
            1.092_548_430_592_079_2 * x * y,
            1.092_548_430_592_079_2 * y * z,
            0.315_391_565_252_520_05 * (3.0 * z * z - 1.0),
            1.092_548_430_592_079_2 * x * z,
            0.546_274_215_296_039_6 * (x * x - y * y),
        ]
    }

    #[test]
    fn basis_matches_closed_form_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
            let got = sh_basis(2, d);
            for (a, b) in got.iter().zip(closed_form(d)) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_on_the_sphere() {
        // midpoint quadrature on a fine (theta, phi) grid
        let order = 3;
        let k = (order + 1) * (order + 1);
        let (nt, np) = (200, 400);
        let mut gram = vec![0.0; k * k];
        for a in 0..nt {
            let theta = (a as f64 + 0.5) / nt as f64 * std::f64::consts::PI;
            for b in 0..np {
                let phi = (b as f64 + 0.5) / np as f64 * 2.0 * std::f64::consts::PI;
                let d = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
                let y = sh_basis(order, d);
                let dw = theta.sin() * (std::f64::consts::PI / nt as f64) * (2.0 * std::f64::consts::PI / np as f64);
                for p in 0..k {
                    for q in 0..k {
                        gram[p * k + q] += y[p] * y[q] * dw;
                    }
                }
            }
        }
        for p in 0..k {
            for q in 0..k {
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((gram[p * k + q] - want).abs() < 1e-3, "({p},{q}) = {}", gram[p * k + q]);
            }
        }
    }

    #[test]
    fn constant_map_order_zero() {
        let c = Rgb::new(0.4, 0.5, 0.6);
        let rm = ReflectanceMap::constant(32, c);
        let coeffs = sh_project(&rm, 0).unwrap();
        assert_eq!(coeffs.coeffs().len(), 1);
        let back = sh_reconstruct(&coeffs, 32);
        for (_, _, v) in back.defined_cells() {
            assert!((v - c).0.iter().all(|d| d.abs() < 1e-6));
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let rm = ReflectanceMap::from_fn(32, |o: Orientation| {
            let v = o.vector();
            Rgb::new(1.0 + 0.5 * v.x + 0.3 * v.z * v.z, 2.0 + v.y * v.x, 1.5 + (3.0 * v.x).sin() * 0.2)
        });
        let first = sh_project(&rm, 2).unwrap();
        let second = sh_project(&sh_reconstruct(&first, 32), 2).unwrap();
        for (a, b) in first.coeffs().iter().zip(second.coeffs()) {
            assert!((*a - *b).0.iter().all(|d| d.abs() < 1e-6), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn exact_expansion_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in 0..=3 {
            let k = (order + 1) * (order + 1);
            let mut coeffs: Vec<Rgb> = (0..k)
                .map(|_| Rgb::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
                .collect();
            coeffs[0] = Rgb::splat(10.0); // keep the map positive
            let truth = ShCoefficients::new(order, coeffs).unwrap();
            let rm = sh_reconstruct(&truth, 32);
            for fit_order in order..=order + 1 {
                let fit = sh_project(&rm, fit_order).unwrap();
                let back = sh_reconstruct(&fit, 32);
                for ((_, _, a), (_, _, b)) in back.defined_cells().zip(rm.defined_cells()) {
                    assert!((a - b).0.iter().all(|d| d.abs() < 1e-5));
                }
            }
        }
    }

    #[test]
    fn too_few_cells_is_rank_deficient() {
        let mut rm = ReflectanceMap::empty(32);
        for i in 10..14 {
            rm.set(i, 16, Rgb::splat(1.0));
        }
        let err = sh_project(&rm, 2).unwrap_err();
        assert_eq!(err, ShError::RankDeficient { basis_size: 9, defined: 4 });
        // collinear cells: enough of them but not enough directions
        let mut rm = ReflectanceMap::empty(32);
        for i in 2..30 {
            rm.set(i, 16, Rgb::splat(1.0));
        }
        assert!(matches!(sh_project(&rm, 2), Err(ShError::RankDeficient { basis_size: 9, .. })));
    }

    #[test]
    fn coefficient_count_invariant() {
        assert!(ShCoefficients::new(2, vec![Rgb::BLACK; 8]).is_err());
    }
}
