use std::f64::consts::PI;

use super::{Light, LightKind};
use crate::math::{spherical_direction, Vec3};
use crate::spectrum::Spectrum;

/// Latitude-longitude radiance multiplier. Row 0 is the zenith (+y).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMap {
    pub width: usize,
    pub height: usize,
    pub texels: Vec<Spectrum>,
}

impl EnvironmentMap {
    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.width < 1 || self.height < 1 {
            return Err("environment map must be at least 1x1".into());
        }
        if self.texels.len() != self.width * self.height {
            return Err("environment map texel count does not match its dimensions".into());
        }
        if !self.texels.iter().all(Spectrum::is_valid) {
            return Err("environment map values must be finite and >= 0".into());
        }
        Ok(())
    }

    /// Nearest-texel lookup for a unit direction.
    pub fn lookup(&self, dir: Vec3) -> Spectrum {
        let theta = dir.y.clamp(-1.0, 1.0).acos();
        let phi = dir.z.atan2(dir.x) + PI;
        let row = ((theta / PI) * self.height as f64) as usize;
        let col = ((phi / (2.0 * PI)) * self.width as f64) as usize;
        self.texels[row.min(self.height - 1) * self.width + col.min(self.width - 1)]
    }
}

/// A light sample as seen from a shading point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSample {
    /// Unit direction from the shading point towards the light.
    pub direction: Vec3,
    /// Distance to the sampled point; infinite for environment lights.
    pub distance: f64,
    /// Incident radiance divided by the solid-angle pdf of `direction`.
    pub radiance_over_pdf: Spectrum,
    /// Solid-angle pdf of `direction`; infinite for point lights.
    pub pdf: f64,
}

/// Solid-angle density of a point sampled uniformly on an emitter of the
/// given area, seen at distance `sqrt(d2)` under `cos_light`.
#[inline]
pub fn area_pdf_to_solid_angle(area: f64, cos_light: f64, d2: f64) -> f64 {
    d2 / (area * cos_light)
}

/// Samples incident illumination from `light` at `shading_point`.
///
/// Point lights are deterministic, area lights are sampled uniformly by area
/// and converted to solid angle, environment lights uniformly over the sphere.
pub fn sample_light(light: &Light, shading_point: Vec3, u1: f64, u2: f64) -> LightSample {
    match &light.kind {
        LightKind::Point {
            position,
            intensity,
        } => {
            let to = *position - shading_point;
            let d2 = to.length_squared();
            let distance = d2.sqrt();
            LightSample {
                direction: to / distance,
                distance,
                radiance_over_pdf: *intensity / d2,
                pdf: f64::INFINITY,
            }
        }
        LightKind::Area { quad, radiance } => {
            let p = quad.point(u1, u2);
            let to = p - shading_point;
            let d2 = to.length_squared();
            let distance = d2.sqrt();
            let direction = to / distance;
            let cos_light = -quad.normal().dot(direction);
            let (radiance_over_pdf, pdf) = if cos_light > 0.0 {
                (*radiance * (quad.area() * cos_light / d2), area_pdf_to_solid_angle(quad.area(), cos_light, d2))
            } else {
                (Spectrum::ZERO, 0.0)
            };
            LightSample {
                direction,
                distance,
                radiance_over_pdf,
                pdf,
            }
        }
        LightKind::Environment { radiance, map } => {
            let local = spherical_direction(1.0 - 2.0 * u1, 2.0 * PI * u2);
            // z-up sphere sample relabelled to y-up
            let direction = Vec3::new(local.x, local.z, local.y);
            let l = match map {
                Some(m) => *radiance * m.lookup(direction),
                None => *radiance,
            };
            LightSample {
                direction,
                distance: f64::INFINITY,
                radiance_over_pdf: l * (4.0 * PI),
                pdf: 1.0 / (4.0 * PI),
            }
        }
    }
}
