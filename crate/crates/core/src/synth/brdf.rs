use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::merl::BrdfTable;
use crate::geom::{Rgb, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrdfError {
    #[error("{field} must lie in [0, 1] per channel, got {value:?}")]
    OutOfRange { field: &'static str, value: Rgb },
    #[error("diffuse + specular exceeds 1 in some channel")]
    EnergyBudget,
    #[error("exponent must be positive and finite, got {0}")]
    Exponent(f64),
}

/// Closed-form test materials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticBrdf {
    Lambert { albedo: Rgb },
    /// Normalized Blinn-Phong: `kd/pi + ks N(n) cos^n(theta_h)`, where
    /// `N(n) = (n+2)(n+4) / (8 pi (2^(-n/2) + n))` makes the specular
    /// lobe reflect all energy at normal incidence.
    BlinnPhong { diffuse: Rgb, specular: Rgb, exponent: f64 },
}

fn unit_range(field: &'static str, value: Rgb) -> Result<(), BrdfError> {
    if value.0.iter().all(|v| (0.0..=1.0).contains(v)) {
        Ok(())
    } else {
        Err(BrdfError::OutOfRange { field, value })
    }
}

impl AnalyticBrdf {
    pub fn validate(&self) -> Result<(), BrdfError> {
        match *self {
            AnalyticBrdf::Lambert { albedo } => unit_range("albedo", albedo),
            AnalyticBrdf::BlinnPhong { diffuse, specular, exponent } => {
                unit_range("diffuse", diffuse)?;
                unit_range("specular", specular)?;
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(BrdfError::Exponent(exponent));
                }
                if (diffuse + specular).max_channel() > 1.0 {
                    return Err(BrdfError::EnergyBudget);
                }
                Ok(())
            }
        }
    }

    pub fn eval_local(&self, w_in: Vec3, w_out: Vec3) -> Rgb {
        match *self {
            AnalyticBrdf::Lambert { albedo } => albedo / PI,
            AnalyticBrdf::BlinnPhong { diffuse, specular, exponent } => {
                let h = (w_in + w_out).try_normalize().unwrap_or(Vec3::Z);
                let lobe = blinn_phong_norm(exponent) * h.z.max(0.0).powf(exponent);
                diffuse / PI + specular * lobe
            }
        }
    }
}

pub fn blinn_phong_norm(n: f64) -> f64 {
    (n + 2.0) * (n + 4.0) / (8.0 * PI * (2f64.powf(-n / 2.0) + n))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Brdf {
    Analytic(AnalyticBrdf),
    Measured(Arc<BrdfTable>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfValue {
    pub rgb: Rgb,
    /// Set when either direction was at or below the local horizon.
    pub below_horizon: bool,
}

/// Evaluates `b` for unit directions in the local frame (normal = +z).
pub fn eval_brdf(b: &Brdf, w_in: Vec3, w_out: Vec3) -> BrdfValue {
    if w_in.z <= 0.0 || w_out.z <= 0.0 {
        return BrdfValue { rgb: Rgb::BLACK, below_horizon: true };
    }
    let rgb = match b {
        Brdf::Analytic(a) => a.eval_local(w_in, w_out),
        Brdf::Measured(t) => t.eval_local(w_in, w_out),
    };
    BrdfValue { rgb: rgb.map(|v| v.max(0.0)), below_horizon: false }
}

impl From<AnalyticBrdf> for Brdf {
    fn from(a: AnalyticBrdf) -> Self {
        Brdf::Analytic(a)
    }
}
