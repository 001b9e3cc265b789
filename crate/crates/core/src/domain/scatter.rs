use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OrientedSample;
use crate::geom::Rgb;
use crate::rmap::{cell_in_disc, cell_orientation, ReflectanceMap};

pub const DEFAULT_EPS_DEG: f64 = 5.0;

/// How samples inside a cell's cone are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxMode {
    /// Independent maximum per color channel.
    #[default]
    PerChannel,
    /// The whole color of the sample with the largest luminance.
    Luminance,
}

/// A reflectance map built from scattered samples; `counts` holds the number
/// of samples that reached each cell (nonzero exactly on defined cells).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseReflectanceMap {
    pub map: ReflectanceMap,
    pub counts: Vec<u32>,
}

impl SparseReflectanceMap {
    pub fn coverage(&self) -> f64 {
        self.map.defined_count() as f64 / self.map.disc_cell_count().max(1) as f64
    }
}

/// Robust change of domain: every cell takes the maximum over samples whose
/// orientation is strictly closer than `eps_deg` to the cell-center
/// orientation. Cells without such samples stay undefined.
pub fn scatter_max(samples: &[OrientedSample], resolution: usize, eps_deg: f64, mode: MaxMode) -> SparseReflectanceMap {
    let threshold = eps_deg.to_radians().cos();
    let cells: Vec<Option<(Rgb, u32)>> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % resolution, k / resolution);
            if !cell_in_disc(i, j, resolution) {
                return None;
            }
            let omega = cell_orientation(i, j, resolution);
            let mut best: Option<Rgb> = None;
            let mut count = 0u32;
            for s in samples {
                if omega.dot(s.omega) <= threshold {
                    continue;
                }
                count += 1;
                best = Some(match (best, mode) {
                    (None, _) => s.radiance,
                    (Some(b), MaxMode::PerChannel) => b.channel_max(s.radiance),
                    (Some(b), MaxMode::Luminance) => {
                        if s.radiance.luminance() > b.luminance() {
                            s.radiance
                        } else {
                            b
                        }
                    }
                });
            }
            best.map(|b| (b, count))
        })
        .collect();

    let mut map = ReflectanceMap::empty(resolution);
    let mut counts = vec![0; resolution * resolution];
    for (k, cell) in cells.into_iter().enumerate() {
        if let Some((value, count)) = cell {
            map.set(k % resolution, k / resolution, value);
            counts[k] = count;
        }
    }
    SparseReflectanceMap { map, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Orientation, Vec3};
    use proptest::prelude::*;

    fn sample(n: Vec3, c: Rgb) -> OrientedSample {
        OrientedSample { omega: Orientation::from_vector(n).unwrap(), radiance: c }
    }

    #[test]
    fn pole_sample_defines_only_its_cone() {
        let v = Rgb::new(0.3, 0.6, 0.9);
        let sparse = scatter_max(&[sample(Vec3::Z, v)], 32, 5.0, MaxMode::PerChannel);
        let cos5 = 5f64.to_radians().cos();
        let mut defined = 0;
        for (i, j) in sparse.map.disc_cells().collect::<Vec<_>>() {
            let inside = cell_orientation(i, j, 32).vector().z > cos5;
            assert_eq!(sparse.map.get(i, j).is_some(), inside, "cell ({i},{j})");
            if let Some(c) = sparse.map.get(i, j) {
                assert_eq!(c, v);
                assert_eq!(sparse.counts[j * 32 + i], 1);
                defined += 1;
            }
        }
        // cone of 5° around the pole covers the four central cells
        assert_eq!(defined, 4);
    }

    #[test]
    fn per_channel_max_of_coincident_samples() {
        let n = Vec3::new(0.1, 0.2, 1.0).normalize();
        let s = [sample(n, Rgb::new(1.0, 0.0, 0.0)), sample(n, Rgb::new(0.0, 1.0, 0.0))];
        let sparse = scatter_max(&s, 32, 5.0, MaxMode::PerChannel);
        assert!(sparse.map.defined_cells().all(|(_, _, c)| c == Rgb::new(1.0, 1.0, 0.0)));
        let lum = scatter_max(&s, 32, 5.0, MaxMode::Luminance);
        assert!(lum.map.defined_cells().all(|(_, _, c)| c == Rgb::new(0.0, 1.0, 0.0)));
    }

    #[test]
    fn empty_input_gives_undefined_map() {
        let sparse = scatter_max(&[], 16, 5.0, MaxMode::PerChannel);
        assert_eq!(sparse.map.defined_count(), 0);
    }

    #[test]
    fn threshold_is_strict() {
        // a sample exactly eps away from the pole cell center... place the
        // sample at the center of cell (16,16) and use an eps equal to the
        // angle to cell (17,16): that neighbor must stay undefined.
        let a = cell_orientation(16, 16, 32);
        let b = cell_orientation(17, 16, 32);
        let eps = a.angle(b).to_degrees();
        let s = [OrientedSample { omega: a, radiance: Rgb::splat(1.0) }];
        let sparse = scatter_max(&s, 32, eps * (1.0 - 1e-9), MaxMode::PerChannel);
        assert!(sparse.map.get(16, 16).is_some());
        assert!(sparse.map.get(17, 16).is_none());
    }

    fn arb_sample() -> impl Strategy<Value = OrientedSample> {
        (-1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0, 0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0).prop_filter_map(
            "degenerate",
            |(x, y, z, r, g, b)| {
                Orientation::from_vector(Vec3::new(x, y, z)).map(|omega| OrientedSample { omega, radiance: Rgb::new(r, g, b) })
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn adding_a_sample_is_monotone(mut samples in proptest::collection::vec(arb_sample(), 1..40), extra in arb_sample()) {
            let before = scatter_max(&samples, 16, 8.0, MaxMode::PerChannel);
            samples.push(extra);
            let after = scatter_max(&samples, 16, 8.0, MaxMode::PerChannel);
            for (i, j, c) in before.map.defined_cells() {
                let d = after.map.get(i, j).expect("cell became undefined");
                prop_assert!(d.0.iter().zip(c.0).all(|(a, b)| *a >= b));
            }
        }
    }
}
