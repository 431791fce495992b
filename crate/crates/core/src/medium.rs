//! Homogeneous fog: phase function, transmittance, free-flight sampling and the
//! visibility / laser-attenuation calibration formulas.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{spherical_direction, Aabb, Frame, Vec3};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

/// Constant relating meteorological optical range to the scattering coefficient
/// (5 % contrast threshold: `-ln 0.05 ~ 2.996`).
pub const MOR_CONSTANT: f64 = 2.996;

/// Default Henyey-Greenstein asymmetry for fog droplets.
pub const FOG_ASYMMETRY: f64 = 0.87;

/// Below this |g| the phase function is sampled as isotropic.
const ISOTROPIC_G: f64 = 1e-3;

/// Homogeneous participating medium. Scattering is wavelength independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    /// Scattering coefficient, 1/m.
    #[serde(default)]
    pub sigma_s: f64,
    /// Absorption coefficient, 1/m.
    #[serde(default)]
    pub sigma_a: f64,
    /// Henyey-Greenstein asymmetry parameter.
    #[serde(default = "default_g")]
    pub g: f64,
    /// Region filled with the medium; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Aabb>,
}

fn default_g() -> f64 {
    FOG_ASYMMETRY
}

impl Default for Medium {
    fn default() -> Self {
        Medium::vacuum()
    }
}

impl Medium {
    pub fn vacuum() -> Self {
        Medium {
            sigma_s: 0.0,
            sigma_a: 0.0,
            g: FOG_ASYMMETRY,
            extent: None,
        }
    }

    pub fn fog(sigma_s: f64) -> Self {
        Medium {
            sigma_s,
            ..Medium::vacuum()
        }
    }

    #[inline]
    pub fn sigma_t(&self) -> f64 {
        self.sigma_s + self.sigma_a
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s.is_finite() && self.sigma_s >= 0.0) {
            return Err(Error::invalid("medium.sigma_s", "must be finite and >= 0"));
        }
        if !(self.sigma_a.is_finite() && self.sigma_a >= 0.0) {
            return Err(Error::invalid("medium.sigma_a", "must be finite and >= 0"));
        }
        if !(self.g > -1.0 && self.g < 1.0) {
            return Err(Error::invalid("medium.g", "must lie in (-1, 1)"));
        }
        if let Some(b) = &self.extent {
            if !(b.min.x < b.max.x && b.min.y < b.max.y && b.min.z < b.max.z) {
                return Err(Error::invalid("medium.extent", "min must be below max on every axis"));
            }
        }
        Ok(())
    }
}

/// Named fog densities. `visibility_m` is always `MOR_CONSTANT / sigma_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FogTierName {
    Heavy,
    Thick,
    Dense,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogTier {
    pub name: FogTierName,
    pub sigma_s: f64,
    pub visibility_m: f64,
}

impl FogTier {
    pub const HEAVY_SIGMA: f64 = 0.005;
    pub const THICK_SIGMA: f64 = 0.01;
    pub const DENSE_SIGMA: f64 = 0.02;

    /// Builds a tier from its scattering coefficient, naming the three standard levels.
    pub fn from_sigma(sigma_s: f64) -> Result<Self> {
        let visibility_m = mor_from_sigma(sigma_s)?;
        let name = if sigma_s == Self::HEAVY_SIGMA {
            FogTierName::Heavy
        } else if sigma_s == Self::THICK_SIGMA {
            FogTierName::Thick
        } else if sigma_s == Self::DENSE_SIGMA {
            FogTierName::Dense
        } else {
            FogTierName::Custom
        };
        Ok(FogTier {
            name,
            sigma_s,
            visibility_m,
        })
    }

    pub fn from_visibility(visibility_m: f64) -> Result<Self> {
        FogTier::from_sigma(sigma_from_mor(visibility_m)?)
    }

    /// Heavy, thick and dense fog (600 m, 300 m and 150 m visibility).
    pub fn standard() -> Vec<FogTier> {
        [Self::HEAVY_SIGMA, Self::THICK_SIGMA, Self::DENSE_SIGMA]
            .into_iter()
            .map(|s| FogTier::from_sigma(s).expect("standard tiers are positive"))
            .collect()
    }

    /// Short tag used in file names.
    pub fn label(&self) -> String {
        match self.name {
            FogTierName::Heavy => "heavy".into(),
            FogTierName::Thick => "thick".into(),
            FogTierName::Dense => "dense".into(),
            FogTierName::Custom => format!("sigma{}", self.sigma_s),
        }
    }
}

/// Henyey-Greenstein phase function.
///
/// `cos_theta` is the cosine between the propagation direction before and
/// after scattering, so `g > 0` peaks at `cos_theta = 1` (forward) and the
/// mean cosine equals `g`.
pub fn hg_phase(cos_theta: f64, g: f64) -> Result<f64> {
    if !(cos_theta.abs() <= 1.0 + 1e-12) {
        return Err(Error::domain(format!("|cos_theta| = {} exceeds 1", cos_theta.abs())));
    }
    if !(g.abs() < 1.0) {
        return Err(Error::domain(format!("|g| = {} must be < 1", g.abs())));
    }
    Ok(hg_phase_unchecked(cos_theta.clamp(-1.0, 1.0), g))
}

#[inline]
pub(crate) fn hg_phase_unchecked(cos_theta: f64, g: f64) -> f64 {
    let denom = 1.0 + g * g - 2.0 * g * cos_theta;
    INV_4PI * (1.0 - g * g) / (denom * denom.sqrt())
}

/// Inverse-CDF sample of the cosine of the scattering angle.
#[inline]
pub fn sample_hg_cos(g: f64, u1: f64) -> f64 {
    if g.abs() < ISOTROPIC_G {
        return 1.0 - 2.0 * u1;
    }
    let s = (1.0 - g * g) / (1.0 - g + 2.0 * g * u1);
    ((1.0 + g * g - s * s) / (2.0 * g)).clamp(-1.0, 1.0)
}

/// Samples a scattered direction around `incident_dir` (the propagation
/// direction of the incoming light). Returns the direction and its solid-angle pdf.
pub fn sample_hg(g: f64, u1: f64, u2: f64, incident_dir: Vec3) -> (Vec3, f64) {
    let cos_theta = sample_hg_cos(g, u1);
    let phi = 2.0 * PI * u2;
    let dir = Frame::from_w(incident_dir)
        .to_world(spherical_direction(cos_theta, phi))
        .normalized();
    (dir, hg_phase_unchecked(cos_theta, g))
}

/// Beer-Lambert transmittance of a homogeneous segment.
#[inline]
pub fn transmittance(sigma_t: f64, distance: f64) -> f64 {
    if sigma_t == 0.0 || distance == 0.0 {
        return 1.0;
    }
    (-sigma_t * distance).exp()
}

/// Outcome of a free-flight sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlightEvent {
    /// Interaction at distance `t` with density `pdf` (1/m).
    Scatter { t: f64, pdf: f64 },
    /// No interaction before the surface; `prob` is the probability of this outcome.
    PassThrough { prob: f64 },
}

/// Exponential free-flight sampling up to `surface_hit_distance` (may be infinite).
#[inline]
pub fn sample_distance(sigma_t: f64, u: f64, surface_hit_distance: f64) -> FlightEvent {
    if sigma_t <= 0.0 {
        return FlightEvent::PassThrough { prob: 1.0 };
    }
    let t = -(1.0 - u).ln() / sigma_t;
    if t < surface_hit_distance {
        FlightEvent::Scatter {
            t,
            pdf: sigma_t * (-sigma_t * t).exp(),
        }
    } else {
        FlightEvent::PassThrough {
            prob: transmittance(sigma_t, surface_hit_distance),
        }
    }
}

/// Meteorological optical range (visibility) for a scattering coefficient.
pub fn mor_from_sigma(sigma_s: f64) -> Result<f64> {
    if !(sigma_s > 0.0 && sigma_s.is_finite()) {
        return Err(Error::domain(format!("scattering coefficient {sigma_s} must be > 0")));
    }
    Ok(MOR_CONSTANT / sigma_s)
}

pub fn sigma_from_mor(mor: f64) -> Result<f64> {
    if !(mor > 0.0 && mor.is_finite()) {
        return Err(Error::domain(format!("optical range {mor} must be > 0")));
    }
    Ok(MOR_CONSTANT / mor)
}

/// Scattering coefficient from laser power without fog (`p0`) and after
/// `path_length` metres of fog (`pu`).
pub fn sigma_from_power(p0: f64, pu: f64, path_length: f64) -> Result<f64> {
    if !(p0 > 0.0 && pu > 0.0 && path_length > 0.0) {
        return Err(Error::domain("laser powers and path length must be > 0"));
    }
    if pu > p0 {
        return Err(Error::domain(format!(
            "attenuated power {pu} exceeds reference power {p0}"
        )));
    }
    Ok((p0 / pu).ln() / path_length)
}
