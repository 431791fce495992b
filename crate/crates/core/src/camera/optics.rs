use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::{spectral_container, RadianceImage};
use crate::io::FloatImage;
use crate::spectrum::Spectrum;

/// Lens description. The field of view is copied from the scene camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSpec {
    pub f_number: f64,
    /// Negative ratio of image to object distance; 0 for distant scenes.
    pub magnification: f64,
    /// Vertical field of view in degrees.
    pub vertical_fov: f64,
    /// Standard deviation of an optional Gaussian blur in pixels; 0 disables it.
    pub psf_sigma_px: f64,
}

impl Default for OpticsSpec {
    fn default() -> Self {
        OpticsSpec {
            f_number: 2.0,
            magnification: 0.0,
            vertical_fov: 40.0,
            psf_sigma_px: 0.0,
        }
    }
}

impl OpticsSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_number > 0.0 && self.f_number.is_finite()) {
            return Err(Error::invalid("optics.f_number", "must be > 0"));
        }
        if !(self.magnification <= 0.0) {
            return Err(Error::invalid("optics.magnification", "must be <= 0 for a real image"));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(Error::invalid("optics.vertical_fov", "must lie in (0, 180) degrees"));
        }
        if !(self.psf_sigma_px >= 0.0) {
            return Err(Error::invalid("optics.psf_sigma_px", "must be >= 0"));
        }
        Ok(())
    }
}

/// Spectral irradiance on the sensor plane, W m^-2 nm^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Spectrum>,
}

impl IrradianceImage {
    pub fn filled(width: usize, height: usize, value: Spectrum) -> Self {
        IrradianceImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn to_container(&self) -> FloatImage {
        spectral_container("irradiance", self.width, self.height, &self.pixels)
    }
}

/// Radiance-to-irradiance gain of an ideal lens at field angle `phi` (radians):
/// `pi / (1 + 4 (N (1 - m))^2) * cos^4(phi)`.
#[inline]
pub fn irradiance_factor(f_number: f64, magnification: f64, phi: f64) -> f64 {
    let k = f_number * (1.0 - magnification);
    let c = phi.cos();
    PI / (1.0 + 4.0 * k * k) * (c * c) * (c * c)
}

/// Field angle of every pixel centre for a pinhole with the given vertical FOV.
pub fn field_angles(width: usize, height: usize, vertical_fov: f64) -> Vec<f64> {
    let tan_y = (vertical_fov.to_radians() * 0.5).tan();
    let tan_x = tan_y * width as f64 / height as f64;
    (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64 + 0.5, (i / width) as f64 + 0.5);
            let sx = (2.0 * x / width as f64 - 1.0) * tan_x;
            let sy = (1.0 - 2.0 * y / height as f64) * tan_y;
            (sx * sx + sy * sy).sqrt().atan()
        })
        .collect()
}

/// Converts scene radiance to sensor-plane irradiance with cos^4 fall-off.
pub fn optics_irradiance(radiance: &RadianceImage, spec: &OpticsSpec) -> Result<IrradianceImage> {
    spec.validate()?;
    let (w, h) = (radiance.width, radiance.height);
    let phis = field_angles(w, h, spec.vertical_fov);
    let mut pixels: Vec<Spectrum> = radiance
        .pixels
        .iter()
        .zip(&phis)
        .map(|(l, &phi)| *l * irradiance_factor(spec.f_number, spec.magnification, phi))
        .collect();
    if spec.psf_sigma_px > 0.0 {
        pixels = gaussian_blur(&pixels, w, h, spec.psf_sigma_px);
    }
    Ok(IrradianceImage {
        width: w,
        height: h,
        pixels,
    })
}

/// Separable, edge-clamped, normalised Gaussian blur.
fn gaussian_blur(src: &[Spectrum], w: usize, h: usize, sigma: f64) -> Vec<Spectrum> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-r..=r).map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);
    let pass = |src: &[Spectrum], horizontal: bool| -> Vec<Spectrum> {
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                let mut acc = Spectrum::ZERO;
                for (k, &wk) in kernel.iter().enumerate() {
                    let o = k as isize - r;
                    let (sx, sy) = if horizontal {
                        ((x + o).clamp(0, w as isize - 1), y)
                    } else {
                        (x, (y + o).clamp(0, h as isize - 1))
                    };
                    acc += src[sy as usize * w + sx as usize] * wk;
                }
                acc
            })
            .collect()
    };
    pass(&pass(src, true), false)
}
