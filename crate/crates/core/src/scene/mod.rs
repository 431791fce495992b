//! Scene description: geometry, materials, lights, camera pose and the
//! scene-file parser.

mod geometry;
mod light;
mod parse;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Ray, Vec3};
use crate::medium::Medium;
use crate::spectrum::Spectrum;

pub use geometry::{intersect, occluded, Hit, Surface, RAY_EPSILON};
pub use light::{area_pdf_to_solid_angle, sample_light, EnvironmentMap, LightSample};
pub use parse::{parse_scene, parse_scene_str};

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Quad(Quad),
    TriangleMesh { vertices: Vec<Vec3>, indices: Vec<[usize; 3]> },
}

/// Parallelogram spanned by two edges from `origin`. Its geometric normal is
/// `edge_u x edge_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub origin: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

impl Quad {
    pub fn normal(&self) -> Vec3 {
        self.edge_u.cross(self.edge_v).normalized()
    }

    pub fn area(&self) -> f64 {
        self.edge_u.cross(self.edge_v).length()
    }

    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        self.origin + self.edge_u * a + self.edge_v * b
    }

    pub fn center(&self) -> Vec3 {
        self.point(0.5, 0.5)
    }

    fn is_degenerate(&self) -> bool {
        let c = self.edge_u.cross(self.edge_v).length();
        !(c > 1e-12 * self.edge_u.length() * self.edge_v.length()) || !c.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub material_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    /// Diffuse reflector; per-band reflectance in `[0, 1]`.
    Lambertian { albedo: Spectrum },
    /// Two-sided emitter that does not reflect.
    Emissive { radiance: Spectrum },
}

/// Whether a light belongs to the natural sky illumination or is an active source
/// (street lamp, headlight).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightRole {
    Sky,
    Active,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LightKind {
    /// Isotropic point source; `intensity` in W/sr/nm.
    Point { position: Vec3, intensity: Spectrum },
    /// One-sided emitting quad, radiating towards its normal.
    Area { quad: Quad, radiance: Spectrum },
    /// Radiance arriving from infinity, optionally modulated by a lat-long map.
    Environment {
        radiance: Spectrum,
        map: Option<EnvironmentMap>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Light {
    pub kind: LightKind,
    pub role: LightRole,
}

impl Light {
    pub fn point(position: Vec3, intensity: Spectrum) -> Self {
        Light {
            kind: LightKind::Point {
                position,
                intensity,
            },
            role: LightRole::Active,
        }
    }

    pub fn area(quad: Quad, radiance: Spectrum) -> Self {
        Light {
            kind: LightKind::Area { quad, radiance },
            role: LightRole::Active,
        }
    }

    pub fn environment(radiance: Spectrum) -> Self {
        Light {
            kind: LightKind::Environment {
                radiance,
                map: None,
            },
            role: LightRole::Sky,
        }
    }

    pub fn with_role(mut self, role: LightRole) -> Self {
        self.role = role;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPose {
    pub position: Vec3,
    pub look_at: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub vertical_fov: f64,
    /// `(width, height)` in pixels.
    pub resolution: (u32, u32),
}

fn default_up() -> Vec3 {
    Vec3::new(0.0, 1.0, 0.0)
}

impl CameraPose {
    pub fn validate(&self) -> Result<()> {
        if !(self.position.is_finite() && self.look_at.is_finite() && self.up.is_finite()) {
            return Err(Error::invalid("camera", "position, look_at and up must be finite"));
        }
        let forward = self.look_at - self.position;
        if forward.length() == 0.0 {
            return Err(Error::invalid("camera.look_at", "must differ from camera.position"));
        }
        if forward.cross(self.up).length() <= 1e-9 * forward.length() * self.up.length() {
            return Err(Error::invalid("camera.up", "must not be parallel to the view direction"));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(Error::invalid("camera.vertical_fov", "must lie in (0, 180) degrees"));
        }
        if self.resolution.0 < 1 || self.resolution.1 < 1 {
            return Err(Error::invalid("camera.resolution", "must be at least 1x1"));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.resolution.0 as usize
    }

    pub fn height(&self) -> usize {
        self.resolution.1 as usize
    }

    pub fn rig(&self) -> CameraRig {
        let forward = (self.look_at - self.position).normalized();
        let right = forward.cross(self.up).normalized();
        let up = right.cross(forward);
        let tan_half = (self.vertical_fov.to_radians() * 0.5).tan();
        let aspect = self.resolution.0 as f64 / self.resolution.1 as f64;
        CameraRig {
            origin: self.position,
            forward,
            right,
            up,
            tan_half_y: tan_half,
            tan_half_x: tan_half * aspect,
            width: self.resolution.0 as f64,
            height: self.resolution.1 as f64,
        }
    }
}

/// Precomputed pinhole projection. Pixel `(0, 0)` is the top-left corner.
#[derive(Debug, Clone, Copy)]
pub struct CameraRig {
    origin: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half_x: f64,
    tan_half_y: f64,
    width: f64,
    height: f64,
}

impl CameraRig {
    /// Image-plane coordinates at unit focal distance for a continuous pixel position.
    #[inline]
    pub fn plane_coords(&self, px: f64, py: f64) -> (f64, f64) {
        (
            (2.0 * px / self.width - 1.0) * self.tan_half_x,
            (1.0 - 2.0 * py / self.height) * self.tan_half_y,
        )
    }

    #[inline]
    pub fn ray(&self, px: f64, py: f64) -> Ray {
        let (sx, sy) = self.plane_coords(px, py);
        let dir = (self.forward + self.right * sx + self.up * sy).normalized();
        Ray::new(self.origin, dir)
    }

    /// Angle between the optical axis and the chief ray through the centre of pixel `(x, y)`.
    pub fn field_angle(&self, x: usize, y: usize) -> f64 {
        let (sx, sy) = self.plane_coords(x as f64 + 0.5, y as f64 + 0.5);
        (sx * sx + sy * sy).sqrt().atan()
    }
}

/// A fully validated scene. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub camera: Option<CameraPose>,
    pub medium: Medium,
    pub materials: Vec<Material>,
    pub material_names: Vec<String>,
    pub primitives: Vec<Primitive>,
    pub lights: Vec<Light>,
}

impl Scene {
    pub fn with_medium(&self, medium: Medium) -> Scene {
        Scene {
            medium,
            ..self.clone()
        }
    }

    pub fn material_id(&self, name: &str) -> Option<usize> {
        self.material_names.iter().position(|n| n == name)
    }

    pub fn camera(&self) -> Result<&CameraPose> {
        self.camera
            .as_ref()
            .ok_or_else(|| Error::Config(format!("scene `{}` has no camera", self.name)))
    }

    /// Checks every structural invariant. Called by the parser; call it again
    /// after editing a scene programmatically.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.camera {
            c.validate()?;
        }
        self.medium.validate()?;
        for (i, m) in self.materials.iter().enumerate() {
            let name = self.material_names.get(i).map(String::as_str).unwrap_or("?");
            match m {
                Material::Lambertian { albedo } => {
                    if !albedo.iter().all(|v| (0.0..=1.0).contains(v)) {
                        return Err(Error::invalid(
                            format!("materials.{name}.albedo"),
                            "reflectance must lie in [0, 1]",
                        ));
                    }
                }
                Material::Emissive { radiance } => {
                    if !radiance.is_valid() {
                        return Err(Error::invalid(
                            format!("materials.{name}.radiance"),
                            "emission must be finite and >= 0",
                        ));
                    }
                }
            }
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if p.material_id >= self.materials.len() {
                return Err(Error::invalid(
                    format!("primitives[{i}].material"),
                    "unknown material",
                ));
            }
            match &p.shape {
                Shape::Sphere { center, radius } => {
                    if !(*radius > 0.0 && radius.is_finite()) {
                        return Err(Error::invalid(format!("primitives[{i}].radius"), "must be > 0"));
                    }
                    if !center.is_finite() {
                        return Err(Error::invalid(format!("primitives[{i}].center"), "must be finite"));
                    }
                }
                Shape::Quad(q) => {
                    if q.is_degenerate() {
                        return Err(Error::invalid(
                            format!("primitives[{i}].edge_v"),
                            "quad edges must be non-parallel and non-zero",
                        ));
                    }
                }
                Shape::TriangleMesh { vertices, indices } => {
                    if let Some(bad) = indices.iter().flatten().find(|&&k| k >= vertices.len()) {
                        return Err(Error::invalid(
                            format!("primitives[{i}].indices"),
                            format!("index {bad} out of range for {} vertices", vertices.len()),
                        ));
                    }
                }
            }
        }
        for (i, l) in self.lights.iter().enumerate() {
            match &l.kind {
                LightKind::Point { intensity, .. } => {
                    if !intensity.is_valid() {
                        return Err(Error::invalid(format!("lights[{i}].intensity"), "must be >= 0"));
                    }
                }
                LightKind::Area { quad, radiance } => {
                    if !radiance.is_valid() {
                        return Err(Error::invalid(format!("lights[{i}].radiance"), "must be >= 0"));
                    }
                    if quad.is_degenerate() {
                        return Err(Error::invalid(
                            format!("lights[{i}].edge_v"),
                            "quad edges must be non-parallel and non-zero",
                        ));
                    }
                }
                LightKind::Environment { radiance, map } => {
                    if !radiance.is_valid() {
                        return Err(Error::invalid(format!("lights[{i}].radiance"), "must be >= 0"));
                    }
                    if let Some(m) = map {
                        m.validate().map_err(|msg| Error::invalid(format!("lights[{i}].map"), msg))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Radiance arriving from infinity along `dir` (sum of environment lights).
    pub fn environment_radiance(&self, dir: Vec3) -> Spectrum {
        let mut total = Spectrum::ZERO;
        for l in &self.lights {
            if let LightKind::Environment { radiance, map } = &l.kind {
                total += match map {
                    Some(m) => *radiance * m.lookup(dir),
                    None => *radiance,
                };
            }
        }
        total
    }
}

/// Cosine-weighted hemisphere direction about `n`.
pub(crate) fn cosine_hemisphere(n: Vec3, u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let local = Vec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt());
    crate::math::Frame::from_w(n).to_world(local).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose() -> CameraPose {
        CameraPose {
            position: Vec3::ZERO,
            look_at: Vec3::new(0.0, 0.0, -1.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vertical_fov: 60.0,
            resolution: (4, 2),
        }
    }

    #[test]
    fn camera_centre_ray_is_forward() {
        let rig = pose().rig();
        let r = rig.ray(2.0, 1.0);
        assert!((r.dir - Vec3::new(0.0, 0.0, -1.0)).length() < 1e-12);
        // top-left pixel corner points up and left
        let r = rig.ray(0.0, 0.0);
        assert!(r.dir.x < 0.0 && r.dir.y > 0.0);
        let top = rig.ray(2.0, 0.0);
        let half = top.dir.y.atan2(-top.dir.z);
        assert!((half - 30f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn camera_validation() {
        let mut p = pose();
        p.look_at = p.position;
        assert!(p.validate().is_err());
        let mut p = pose();
        p.vertical_fov = 180.0;
        assert!(p.validate().is_err());
        let mut p = pose();
        p.resolution = (0, 3);
        assert!(p.validate().is_err());
    }
}
