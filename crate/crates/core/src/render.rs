//! Monte Carlo volumetric path tracer for homogeneous fog.
//!
//! Each camera path alternates free-flight sampling through the medium with
//! surface or medium interactions. Point and area lights are handled by
//! next-event estimation at every vertex (shadow rays carry the medium
//! transmittance). Area lights are also reached by phase and BSDF sampled
//! rays; the two strategies are combined with the power heuristic.
//! Environment lights and emissive primitives are picked up only when a
//! sampled ray hits them. Paths are limited to `max_bounces` segments: a value of 1
//! only sees emitters directly, 2 adds single scattering and direct surface
//! lighting, and so on.
//!
//! The image is split into tiles that may run on any number of threads. Each
//! sample draws from a counter-based stream keyed by
//! `(seed, x, y, sample_index)`, so the result is bit-identical regardless of
//! scheduling.

use std::f64::consts::FRAC_1_PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FloatImage;
use crate::math::{Ray, Vec3};
use crate::medium::{hg_phase_unchecked, sample_distance, sample_hg, transmittance, FlightEvent, FogTier, Medium};
use crate::rng::{domain, Stream};
use crate::scene::{
    area_pdf_to_solid_angle, cosine_hemisphere, intersect, occluded, sample_light, CameraRig, Hit, LightKind, Material, Scene,
    Surface,
};
use crate::spectrum::{wavelengths_nm, Spectrum, BANDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSettings {
    pub samples_per_pixel: u32,
    /// Maximum number of segments in a camera path (surface and medium events combined).
    pub max_bounces: u32,
    /// Events after which Russian roulette starts.
    pub rr_start_bounce: u32,
    pub seed: u64,
    pub tile_size: u32,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            samples_per_pixel: 64,
            max_bounces: 32,
            rr_start_bounce: 4,
            seed: 0,
            tile_size: 16,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_pixel < 1 {
            return Err(Error::invalid("render.samples_per_pixel", "must be >= 1"));
        }
        if self.max_bounces < 1 {
            return Err(Error::invalid("render.max_bounces", "must be >= 1"));
        }
        if self.tile_size < 1 {
            return Err(Error::invalid("render.tile_size", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-pixel spectral radiance, W sr^-1 m^-2 nm^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Spectrum>,
    pub samples: Vec<u32>,
}

impl RadianceImage {
    pub fn new(width: usize, height: usize) -> Self {
        RadianceImage {
            width,
            height,
            pixels: vec![Spectrum::ZERO; width * height],
            samples: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &Spectrum {
        &self.pixels[y * self.width + x]
    }

    /// Mean over bands at every pixel.
    pub fn band_mean(&self) -> Vec<f64> {
        self.pixels.iter().map(Spectrum::mean).collect()
    }

    pub fn to_container(&self) -> FloatImage {
        spectral_container("radiance", self.width, self.height, &self.pixels)
    }

    pub fn from_container(img: &FloatImage) -> Result<Self> {
        let pixels = spectral_from_container(img)?;
        Ok(RadianceImage {
            width: img.width,
            height: img.height,
            samples: vec![0; pixels.len()],
            pixels,
        })
    }
}

pub(crate) fn spectral_container(kind: &str, width: usize, height: usize, pixels: &[Spectrum]) -> FloatImage {
    let n = width * height;
    let mut data = vec![0f32; n * BANDS];
    for (p, s) in pixels.iter().enumerate() {
        for b in 0..BANDS {
            data[b * n + p] = s[b] as f32;
        }
    }
    FloatImage {
        kind: kind.into(),
        width,
        height,
        bands: BANDS,
        wavelengths: Some(wavelengths_nm().to_vec()),
        data,
    }
}

pub(crate) fn spectral_from_container(img: &FloatImage) -> Result<Vec<Spectrum>> {
    if img.bands != BANDS {
        return Err(Error::Dimension(format!(
            "spectral container has {} bands, expected {BANDS}",
            img.bands
        )));
    }
    let n = img.width * img.height;
    Ok((0..n)
        .map(|p| Spectrum::from_fn(|b| img.data[b * n + p] as f64))
        .collect())
}

/// Distance to the first surface per pixel; `f64::INFINITY` where only sky is seen.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl DepthMap {
    pub fn filled(width: usize, height: usize, d: f64) -> Self {
        DepthMap {
            width,
            height,
            depth: vec![d; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn to_container(&self) -> FloatImage {
        FloatImage {
            kind: "depth".into(),
            width: self.width,
            height: self.height,
            bands: 1,
            wavelengths: None,
            data: self.depth.iter().map(|&d| d as f32).collect(),
        }
    }

    pub fn from_container(img: &FloatImage) -> Result<Self> {
        if img.bands != 1 {
            return Err(Error::Dimension(format!("depth container has {} bands", img.bands)));
        }
        Ok(DepthMap {
            width: img.width,
            height: img.height,
            depth: img.data.iter().map(|&d| d as f64).collect(),
        })
    }
}

/// One camera path's contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub radiance: Spectrum,
    /// Distance along the primary ray to the first surface, if any.
    pub first_hit: Option<f64>,
}

/// Per-scene tracing state shared by all threads.
pub struct Integrator<'a> {
    scene: &'a Scene,
    settings: RenderSettings,
    rig: CameraRig,
    /// Point and area lights, sampled explicitly at every vertex.
    nee_lights: Vec<usize>,
}

impl<'a> Integrator<'a> {
    pub fn new(scene: &'a Scene, settings: RenderSettings) -> Result<Self> {
        settings.validate()?;
        let rig = scene.camera()?.rig();
        let nee_lights = scene
            .lights
            .iter()
            .enumerate()
            .filter(|(_, l)| !matches!(l.kind, LightKind::Environment { .. }))
            .map(|(i, _)| i)
            .collect();
        Ok(Integrator {
            scene,
            settings,
            rig,
            nee_lights,
        })
    }

    /// Medium-occupied part of `[0, t_max]` along `ray`.
    #[inline]
    fn medium_interval(medium: &Medium, ray: &Ray, t_max: f64) -> Option<(f64, f64)> {
        let (a, b) = match &medium.extent {
            Some(bx) => bx.clip(ray)?,
            None => (0.0, f64::INFINITY),
        };
        let b = b.min(t_max);
        (a < b).then_some((a, b))
    }

    #[inline]
    fn shadow_transmittance(&self, ray: &Ray, distance: f64) -> f64 {
        let medium = &self.scene.medium;
        let sigma_t = medium.sigma_t();
        if sigma_t == 0.0 {
            return 1.0;
        }
        match Self::medium_interval(medium, ray, distance) {
            Some((a, b)) => transmittance(sigma_t, b - a),
            None => 1.0,
        }
    }

    /// One shadow-ray estimate per explicitly sampled light at `p`.
    /// `scatter(dir)` is the phase function or cosine-weighted BSDF factor,
    /// which is also the density the path itself samples directions with.
    #[inline]
    fn light_nee(&self, p: Vec3, rng: &mut Stream, mut scatter: impl FnMut(Vec3) -> f64) -> Spectrum {
        let mut sum = Spectrum::ZERO;
        for &i in &self.nee_lights {
            let light = &self.scene.lights[i];
            let (u1, u2) = match light.kind {
                LightKind::Area { .. } => (rng.uniform(), rng.uniform()),
                _ => (0.0, 0.0),
            };
            let ls = sample_light(light, p, u1, u2);
            if ls.radiance_over_pdf.is_black() {
                continue;
            }
            let f = scatter(ls.direction);
            if f <= 0.0 {
                continue;
            }
            let shadow = Ray::new(p, ls.direction);
            if occluded(self.scene, &shadow, ls.distance) {
                continue;
            }
            let tr = self.shadow_transmittance(&shadow, ls.distance);
            let mis = if ls.pdf.is_infinite() { 1.0 } else { power_heuristic(ls.pdf, f) };
            sum += ls.radiance_over_pdf * (f * tr * mis);
        }
        sum
    }

    /// Traces one camera path through pixel `(x, y)`.
    pub fn sample(&self, x: usize, y: usize, sample_index: u32) -> PathSample {
        let s = &self.settings;
        let mut rng = Stream::from_words(&[domain::RENDER, s.seed, x as u64, y as u64, sample_index as u64]);
        let jx = rng.uniform();
        let jy = rng.uniform();
        let mut ray = self.rig.ray(x as f64 + jx, y as f64 + jy);
        let mut hit = intersect(self.scene, &ray);
        let first_hit = hit.map(|h| h.t);

        let medium = &self.scene.medium;
        let sigma_t = medium.sigma_t();
        let albedo_medium = if sigma_t > 0.0 { medium.sigma_s / sigma_t } else { 0.0 };
        let max_segments = s.max_bounces;

        let mut radiance = Spectrum::ZERO;
        let mut beta = Spectrum::ONE;
        let mut segments = 1u32;
        let mut last_pdf: Option<f64> = None;

        loop {
            let t_surface = hit.map_or(f64::INFINITY, |h| h.t);
            let mut scattered = None;
            if sigma_t > 0.0 {
                if let Some((a, b)) = Self::medium_interval(medium, &ray, t_surface) {
                    // PassThrough carries weight T / prob = 1
                    if let FlightEvent::Scatter { t, .. } = sample_distance(sigma_t, rng.uniform(), b - a) {
                        scattered = Some(ray.at(a + t));
                    }
                }
            }

            let next_dir;
            if let Some(p) = scattered {
                // T(t) / pdf(t) = 1 / sigma_t, times sigma_s
                beta *= albedo_medium;
                if beta.is_black() {
                    break;
                }
                if segments < max_segments {
                    let wo = ray.dir;
                    let g = medium.g;
                    radiance += beta * self.light_nee(p, &mut rng, |wi| hg_phase_unchecked(wi.dot(wo), g));
                } else {
                    break;
                }
                let (dir, pdf) = sample_hg(medium.g, rng.uniform(), rng.uniform(), ray.dir);
                last_pdf = Some(pdf);
                next_dir = (p, dir);
            } else {
                let Some(h) = hit else {
                    radiance += beta * self.scene.environment_radiance(ray.dir);
                    break;
                };
                match self.shade_surface(&h, &ray, last_pdf) {
                    SurfaceResponse::Emit(le) => {
                        radiance += beta * le;
                        break;
                    }
                    SurfaceResponse::Absorb => break,
                    SurfaceResponse::Diffuse(albedo) => {
                        if segments >= max_segments {
                            break;
                        }
                        let n = h.normal;
                        radiance += beta
                            * albedo
                            * self.light_nee(h.point, &mut rng, |wi| n.dot(wi).max(0.0) * FRAC_1_PI);
                        beta *= albedo;
                        let dir = cosine_hemisphere(n, rng.uniform(), rng.uniform());
                        last_pdf = Some(n.dot(dir).max(0.0) * FRAC_1_PI);
                        next_dir = (h.point, dir);
                    }
                }
            }

            let events = segments;
            segments += 1;
            if events >= s.rr_start_bounce {
                let q = beta.max_value().clamp(0.05, 0.95);
                if rng.uniform() >= q {
                    break;
                }
                beta = beta / q;
            }
            if beta.is_black() {
                break;
            }
            ray = Ray::new(next_dir.0, next_dir.1);
            hit = intersect(self.scene, &ray);
        }

        PathSample {
            radiance,
            first_hit,
        }
    }

    /// `sampled_pdf` is the solid-angle density `ray` was sampled with, or
    /// `None` for camera rays, which take area-light emission at full weight.
    fn shade_surface(&self, h: &Hit, ray: &Ray, sampled_pdf: Option<f64>) -> SurfaceResponse {
        match h.surface {
            Surface::Light(i) => match &self.scene.lights[i].kind {
                LightKind::Area { radiance, quad } if h.geometric_normal.dot(ray.dir) < 0.0 => {
                    let w = match sampled_pdf {
                        None => 1.0,
                        Some(p) => {
                            let cos_light = -h.geometric_normal.dot(ray.dir);
                            power_heuristic(p, area_pdf_to_solid_angle(quad.area(), cos_light, h.t * h.t))
                        }
                    };
                    SurfaceResponse::Emit(*radiance * w)
                }
                _ => SurfaceResponse::Absorb,
            },
            Surface::Material(m) => match &self.scene.materials[m] {
                Material::Emissive { radiance } => SurfaceResponse::Emit(*radiance),
                Material::Lambertian { albedo } => {
                    if albedo.is_black() {
                        SurfaceResponse::Absorb
                    } else {
                        SurfaceResponse::Diffuse(*albedo)
                    }
                }
            },
        }
    }

    /// Mean radiance and mean first-hit depth over all samples of one pixel.
    pub fn pixel(&self, x: usize, y: usize) -> (Spectrum, f64) {
        let spp = self.settings.samples_per_pixel;
        let mut sum = Spectrum::ZERO;
        let (mut depth_sum, mut depth_hits) = (0.0, 0u32);
        for i in 0..spp {
            let s = self.sample(x, y, i);
            sum += s.radiance;
            if let Some(t) = s.first_hit {
                depth_sum += t;
                depth_hits += 1;
            }
        }
        let depth = if depth_hits == 0 {
            f64::INFINITY
        } else {
            depth_sum / depth_hits as f64
        };
        (sum / spp as f64, depth)
    }
}

#[inline]
fn power_heuristic(pdf: f64, other: f64) -> f64 {
    let (a, b) = (pdf * pdf, other * other);
    if a + b > 0.0 {
        a / (a + b)
    } else {
        0.0
    }
}

enum SurfaceResponse {
    Emit(Spectrum),
    Absorb,
    Diffuse(Spectrum),
}

/// Renders the scene's camera view. Deterministic for fixed settings.
pub fn render(scene: &Scene, settings: &RenderSettings) -> Result<(RadianceImage, DepthMap)> {
    let cam = scene.camera()?;
    render_window(scene, settings, 0, 0, cam.width(), cam.height())
}

/// Renders the sub-window `[x0, x0 + width) x [y0, y0 + height)` of the full
/// frame. Pixels are identical to the same pixels of a full render.
pub fn render_window(
    scene: &Scene,
    settings: &RenderSettings,
    x0: usize,
    y0: usize,
    width: usize,
    height: usize,
) -> Result<(RadianceImage, DepthMap)> {
    let cam = scene.camera()?;
    if x0 + width > cam.width() || y0 + height > cam.height() || width == 0 || height == 0 {
        return Err(Error::Dimension(format!(
            "window {width}x{height}+{x0}+{y0} outside the {}x{} frame",
            cam.width(),
            cam.height()
        )));
    }
    let integrator = Integrator::new(scene, *settings)?;
    let ts = settings.tile_size as usize;
    let tiles_x = width.div_ceil(ts);
    let tiles_y = height.div_ceil(ts);

    let tiles: Vec<(usize, usize, Vec<(Spectrum, f64)>)> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|tile| {
            let tx = (tile % tiles_x) * ts;
            let ty = (tile / tiles_x) * ts;
            let mut out = Vec::with_capacity(ts * ts);
            for y in ty..(ty + ts).min(height) {
                for x in tx..(tx + ts).min(width) {
                    out.push(integrator.pixel(x0 + x, y0 + y));
                }
            }
            (tx, ty, out)
        })
        .collect();

    let mut image = RadianceImage::new(width, height);
    let mut depth = DepthMap::filled(width, height, f64::INFINITY);
    for (tx, ty, values) in tiles {
        let tw = (tx + ts).min(width) - tx;
        for (k, (l, d)) in values.into_iter().enumerate() {
            let (x, y) = (tx + k % tw, ty + k / tw);
            image.pixels[y * width + x] = l;
            image.samples[y * width + x] = settings.samples_per_pixel;
            depth.depth[y * width + x] = d;
        }
    }
    Ok((image, depth))
}

/// One clear render, one render per fog tier and the shared depth map.
#[derive(Debug, Clone)]
pub struct VariantSet {
    pub clear: RadianceImage,
    pub foggy: Vec<(FogTier, RadianceImage)>,
    pub depth: DepthMap,
}

/// The scene's medium with its scattering coefficient replaced.
pub fn medium_for_sigma(base: &Medium, sigma_s: f64) -> Medium {
    Medium { sigma_s, ..*base }
}

/// Renders the same scene, seeds and camera with the scattering coefficient
/// set to zero (clear) and to each tier's value.
pub fn render_variants(scene: &Scene, tiers: &[FogTier], settings: &RenderSettings) -> Result<VariantSet> {
    if tiers.is_empty() {
        return Err(Error::Config("at least one fog tier is required".into()));
    }
    let clear_scene = scene.with_medium(medium_for_sigma(&scene.medium, 0.0));
    let (clear, depth) = render(&clear_scene, settings)?;
    let foggy = tiers
        .iter()
        .map(|tier| {
            let s = scene.with_medium(medium_for_sigma(&scene.medium, tier.sigma_s));
            render(&s, settings).map(|(img, _)| (*tier, img))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VariantSet { clear, foggy, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::parse_scene_str;
    use std::path::Path;

    const SMALL: &str = r#"
[camera]
position = [0.0, 1.0, 6.0]
look_at = [0.0, 0.5, 0.0]
vertical_fov = 50.0
resolution = [12, 9]

[medium]
sigma_s = 0.05

[materials.white]
type = "lambertian"
albedo = "flat 0.8"

[[primitives]]
shape = "sphere"
center = [0.0, 0.5, 0.0]
radius = 1.0
material = "white"

[[primitives]]
shape = "quad"
origin = [-5.0, -0.5, 5.0]
edge_u = [10.0, 0.0, 0.0]
edge_v = [0.0, 0.0, -10.0]
material = "white"

[[lights]]
type = "point"
position = [2.0, 4.0, 2.0]
intensity = "flat 20"

[[lights]]
type = "environment"
radiance = "flat 0.2"
"#;

    fn scene() -> Scene {
        parse_scene_str(SMALL, "small", Path::new(".")).unwrap()
    }

    fn settings() -> RenderSettings {
        RenderSettings {
            samples_per_pixel: 4,
            seed: 7,
            tile_size: 5,
            ..Default::default()
        }
    }

    #[test]
    fn requires_camera() {
        let mut s = scene();
        s.camera = None;
        assert!(matches!(render(&s, &settings()), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_settings() {
        let bad = RenderSettings {
            samples_per_pixel: 0,
            ..settings()
        };
        assert!(render(&scene(), &bad).is_err());
    }

    #[test]
    fn deterministic_across_tile_sizes_and_threads() {
        let s = scene();
        let (a, da) = render(&s, &settings()).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let (b, db) = single.install(|| {
            render(
                &s,
                &RenderSettings {
                    tile_size: 3,
                    ..settings()
                },
            )
        })
        .unwrap();
        let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let (c, _) = multi.install(|| render(&s, &settings())).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(da, db);
        assert!(a.pixels.iter().all(Spectrum::is_valid));
    }

    #[test]
    fn window_matches_full_frame() {
        let s = scene();
        let (full, fd) = render(&s, &settings()).unwrap();
        let (win, wd) = render_window(&s, &settings(), 3, 2, 5, 4).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(win.get(x, y), full.get(x + 3, y + 2));
                assert_eq!(wd.get(x, y), fd.get(x + 3, y + 2));
            }
        }
        assert!(render_window(&s, &settings(), 10, 0, 5, 1).is_err());
    }

    #[test]
    fn variants_share_depth_and_zero_tier_equals_clear() {
        let s = scene();
        let zero = FogTier {
            name: crate::medium::FogTierName::Custom,
            sigma_s: 0.0,
            visibility_m: f64::INFINITY,
        };
        let tiers = [zero, FogTier::from_sigma(0.2).unwrap()];
        let v = render_variants(&s, &tiers, &settings()).unwrap();
        assert_eq!(v.foggy.len(), 2);
        assert_eq!(v.foggy[0].1, v.clear);
        assert_ne!(v.foggy[1].1, v.clear);
        let (_, d_fog) = render(&s.with_medium(Medium::fog(0.2)), &settings()).unwrap();
        assert_eq!(d_fog, v.depth);
        assert!(render_variants(&s, &[], &settings()).is_err());
    }

    #[test]
    fn depth_is_first_surface() {
        let mut s = scene();
        s.camera = Some(crate::scene::CameraPose {
            position: Vec3::new(0.0, 0.5, 6.0),
            look_at: Vec3::new(0.0, 0.5, 0.0),
            up: Vec3::new(0.0, 1.0, 0.0),
            vertical_fov: 0.1,
            resolution: (1, 1),
        });
        let (_, d) = render(&s, &settings()).unwrap();
        assert!((d.get(0, 0) - 5.0).abs() < 1e-3, "{}", d.get(0, 0));
    }

    /// Point form factor to a parallel rectangle with one corner above it.
    fn corner_form_factor(a: f64, b: f64, h: f64) -> f64 {
        let (x, y) = (a / h, b / h);
        let (sx, sy) = ((1.0 + x * x).sqrt(), (1.0 + y * y).sqrt());
        (x / sx * (y / sx).atan() + y / sy * (x / sy).atan()) / (2.0 * std::f64::consts::PI)
    }

    #[test]
    fn area_light_next_event_matches_form_factor() {
        let text = r#"
[camera]
position = [0.0, 1.0, 0.0]
look_at = [0.0, 0.0, 0.0]
up = [0.0, 0.0, -1.0]
vertical_fov = 0.01
resolution = [1, 1]

[materials.floor]
type = "lambertian"
albedo = "flat 0.5"

[[primitives]]
shape = "quad"
origin = [-50.0, 0.0, 50.0]
edge_u = [100.0, 0.0, 0.0]
edge_v = [0.0, 0.0, -100.0]
material = "floor"

[[lights]]
type = "area"
origin = [-1.0, 2.0, -1.0]
edge_u = [2.0, 0.0, 0.0]
edge_v = [0.0, 0.0, 2.0]
radiance = "flat 3.0"
"#;
        let s = parse_scene_str(text, "lamp", Path::new(".")).unwrap();
        let cfg = RenderSettings {
            samples_per_pixel: 20_000,
            max_bounces: 2,
            ..settings()
        };
        let (img, _) = render(&s, &cfg).unwrap();
        let expect = 0.5 * 3.0 * 4.0 * corner_form_factor(1.0, 1.0, 2.0);
        let got = img.get(0, 0)[0];
        assert!((got - expect).abs() < 0.01 * expect, "{got} vs {expect}");
    }

    #[test]
    fn containers_round_trip() {
        let (img, depth) = render(&scene(), &settings()).unwrap();
        let back = RadianceImage::from_container(&img.to_container()).unwrap();
        for (a, b) in back.pixels.iter().zip(&img.pixels) {
            for k in 0..BANDS {
                assert_eq!(a[k], b[k] as f32 as f64);
            }
        }
        let d = DepthMap::from_container(&depth.to_container()).unwrap();
        assert_eq!(d.width, depth.width);
    }
}
