//! Photon-to-digital-number conversion with shot, fixed-pattern and read noise.
//!
//! Per pixel: photons per band from irradiance (`E * dlambda * area * t * lambda / hc`),
//! electrons through the CFA channel's quantum efficiency, then
//! shot noise (Poisson, including dark signal) -> PRNU gain -> DSNU offset ->
//! read noise -> full-well clip -> gain and quantisation.

use std::path::Path;

use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optics::IrradianceImage;
use crate::error::{Error, Result};
use crate::io::{decode_pgm16_le, encode_pgm16_le, write_atomic};
use crate::rng::{domain, Stream};
use crate::spectrum::{wavelength_nm, Spectrum, BAND_WIDTH_NM};

const PLANCK: f64 = 6.626_070_15e-34;
const LIGHT_SPEED: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CfaChannel {
    R,
    G,
    B,
}

impl CfaChannel {
    pub fn index(self) -> usize {
        match self {
            CfaChannel::R => 0,
            CfaChannel::G => 1,
            CfaChannel::B => 2,
        }
    }
}

/// 2x2 Bayer layouts, named by the top-left, top-right, bottom-left and
/// bottom-right sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CfaPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl CfaPattern {
    #[inline]
    pub fn channel_at(self, x: usize, y: usize) -> CfaChannel {
        use CfaChannel::*;
        let layout = match self {
            CfaPattern::Rggb => [R, G, G, B],
            CfaPattern::Bggr => [B, G, G, R],
            CfaPattern::Grbg => [G, R, B, G],
            CfaPattern::Gbrg => [G, B, R, G],
        };
        layout[(y & 1) * 2 + (x & 1)]
    }
}

/// Full parametric sensor description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub width: usize,
    pub height: usize,
    pub cfa: CfaPattern,
    /// Quantum efficiency per CFA channel (R, G, B), electrons per photon.
    pub qe: [Spectrum; 3],
    /// Pixel area in m^2.
    pub pixel_area: f64,
    /// Exposure time in seconds.
    pub exposure_time: f64,
    /// Full-well capacity in electrons.
    pub full_well: f64,
    /// DN per electron before analog gain.
    pub conversion_gain: f64,
    pub analog_gain: f64,
    /// Read noise, electrons RMS.
    pub read_noise_std: f64,
    /// Dark current, electrons per second.
    pub dark_current: f64,
    /// Photo-response non-uniformity (fractional gain std).
    pub prnu_std: f64,
    /// Dark-signal non-uniformity (offset std, electrons).
    pub dsnu_std: f64,
    pub bit_depth: u32,
    pub black_level: u32,
}

impl SensorSpec {
    /// Generic smartphone-class sensor: RGGB, 1.6 um pixels, peak QE 0.6,
    /// 2 e- read noise, 6000 e- full well, 10-bit output with black level 64.
    /// Not calibrated against any particular device.
    pub fn smartphone(width: usize, height: usize) -> Self {
        let bit_depth = 10;
        let black_level = 64;
        let full_well = 6000.0;
        let white = ((1u32 << bit_depth) - 1) as f64;
        SensorSpec {
            width,
            height,
            cfa: CfaPattern::Rggb,
            qe: [
                smartphone_qe(605.0, 35.0),
                smartphone_qe(535.0, 40.0),
                smartphone_qe(460.0, 30.0),
            ],
            pixel_area: 1.6e-6 * 1.6e-6,
            exposure_time: 0.01,
            full_well,
            conversion_gain: (white - black_level as f64) / full_well,
            analog_gain: 1.0,
            read_noise_std: 2.0,
            dark_current: 5.0,
            prnu_std: 0.01,
            dsnu_std: 0.5,
            bit_depth,
            black_level,
        }
    }

    pub fn white_level(&self) -> u32 {
        (1u32 << self.bit_depth) - 1
    }

    /// DN per electron including analog gain.
    pub fn total_gain(&self) -> f64 {
        self.conversion_gain * self.analog_gain
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 1 || self.height < 1 {
            return Err(Error::invalid("sensor.width", "sensor must be at least 1x1"));
        }
        if !self.qe.iter().all(|q| q.iter().all(|v| (0.0..=1.0).contains(v))) {
            return Err(Error::invalid("sensor.qe", "quantum efficiency must lie in [0, 1]"));
        }
        if !(self.full_well > 0.0) {
            return Err(Error::invalid("sensor.full_well", "must be > 0"));
        }
        if !(8..=16).contains(&self.bit_depth) {
            return Err(Error::invalid("sensor.bit_depth", "must lie in 8..=16"));
        }
        if self.black_level >= 1 << self.bit_depth {
            return Err(Error::invalid("sensor.black_level", "must be below 2^bit_depth"));
        }
        let positive = [
            ("sensor.pixel_area", self.pixel_area),
            ("sensor.exposure_time", self.exposure_time),
            ("sensor.conversion_gain", self.conversion_gain),
            ("sensor.analog_gain", self.analog_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be > 0"));
            }
        }
        let non_negative = [
            ("sensor.read_noise_std", self.read_noise_std),
            ("sensor.dark_current", self.dark_current),
            ("sensor.prnu_std", self.prnu_std),
            ("sensor.dsnu_std", self.dsnu_std),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn dark_electrons(&self) -> f64 {
        self.dark_current * self.exposure_time
    }
}

/// Gaussian channel response with an infrared cut-off folded in.
fn smartphone_qe(centre_nm: f64, width_nm: f64) -> Spectrum {
    Spectrum::from_fn(|b| {
        let l = wavelength_nm(b);
        let ir_cut = 1.0 / (1.0 + ((l - 660.0) / 10.0).exp());
        (0.6 * (-0.5 * ((l - centre_nm) / width_nm).powi(2)).exp() + 0.01) * ir_cut
    })
}

/// Expected electrons per unit spectral irradiance, per band, for each CFA channel.
pub fn electrons_per_irradiance(spec: &SensorSpec) -> [Spectrum; 3] {
    let photons = Spectrum::from_fn(|b| {
        let lambda_m = wavelength_nm(b) * 1e-9;
        BAND_WIDTH_NM * spec.pixel_area * spec.exposure_time * lambda_m / (PLANCK * LIGHT_SPEED)
    });
    spec.qe.map(|q| q * photons)
}

/// Noise-free photo-electrons at each pixel (dark signal excluded).
pub fn mean_electrons(irradiance: &IrradianceImage, spec: &SensorSpec) -> Result<Vec<f64>> {
    if irradiance.width != spec.width || irradiance.height != spec.height {
        return Err(Error::Dimension(format!(
            "irradiance is {}x{}, sensor is {}x{}",
            irradiance.width, irradiance.height, spec.width, spec.height
        )));
    }
    if !irradiance.pixels.iter().all(|p| p.iter().all(|v| v.is_finite())) {
        return Err(Error::Dimension("irradiance contains non-finite values".into()));
    }
    let k = electrons_per_irradiance(spec);
    let w = spec.width;
    Ok(irradiance
        .pixels
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let c = spec.cfa.channel_at(i % w, i / w).index();
            e.weighted_sum(&k[c]).max(0.0)
        })
        .collect())
}

/// Per-pixel PRNU gain and DSNU offset, keyed only by `(seed, x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPattern {
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
}

impl FixedPattern {
    pub fn generate(spec: &SensorSpec, seed: u64) -> Self {
        let (gain, offset) = (0..spec.width * spec.height)
            .map(|i| {
                let (x, y) = (i % spec.width, i / spec.width);
                let mut rng = Stream::from_words(&[domain::SENSOR_FIXED, seed, x as u64, y as u64]);
                let g: f64 = StandardNormal.sample(&mut rng);
                let o: f64 = StandardNormal.sample(&mut rng);
                (1.0 + spec.prnu_std * g, spec.dsnu_std * o)
            })
            .unzip();
        FixedPattern { gain, offset }
    }
}

/// Noisy electron counts for one frame, after the full-well clip.
pub fn expose_electrons(mean: &[f64], spec: &SensorSpec, seed: u64, frame: u32) -> Result<Vec<f64>> {
    spec.validate()?;
    if mean.len() != spec.width * spec.height {
        return Err(Error::Dimension(format!(
            "{} means for a {}x{} sensor",
            mean.len(),
            spec.width,
            spec.height
        )));
    }
    let pattern = FixedPattern::generate(spec, seed);
    let dark = spec.dark_electrons();
    let w = spec.width;
    Ok(mean
        .par_iter()
        .enumerate()
        .map(|(i, &mu)| {
            let (x, y) = (i % w, i / w);
            let mut rng = Stream::from_words(&[domain::SENSOR_TEMPORAL, seed, frame as u64, x as u64, y as u64]);
            let lambda = mu + dark;
            let shot = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map(|p| p.sample(&mut rng))
                    .unwrap_or(lambda)
            } else {
                0.0
            };
            let read: f64 = StandardNormal.sample(&mut rng);
            let e = shot * pattern.gain[i] + pattern.offset[i] + spec.read_noise_std * read;
            e.clamp(0.0, spec.full_well)
        })
        .collect())
}

/// Gain, offset and quantisation to digital numbers.
pub fn digitize(electrons: &[f64], spec: &SensorSpec) -> Vec<u16> {
    let white = spec.white_level() as f64;
    let gain = spec.total_gain();
    let black = spec.black_level as f64;
    electrons
        .iter()
        .map(|&e| (black + e * gain).round().clamp(0.0, white) as u16)
        .collect()
}

/// Mosaicked sensor output.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub dn: Vec<u16>,
    pub meta: RawMetadata,
}

/// Sidecar contents: everything needed to interpret and reproduce the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMetadata {
    pub seed: u64,
    pub frame: u32,
    pub sensor: SensorSpec,
}

impl RawImage {
    pub fn cfa(&self) -> CfaPattern {
        self.meta.sensor.cfa
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.dn[y * self.width + x]
    }

    /// Writes `<path>` (16-bit little-endian PNM) and `<path>.toml` (metadata).
    pub fn write(&self, path: &Path) -> Result<()> {
        let maxval = self.meta.sensor.white_level().max(256) as u16;
        write_atomic(path, &encode_pgm16_le(self.width, self.height, maxval, &self.dn))?;
        let meta = toml::to_string(&self.meta).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(&sidecar_path(path), meta.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let (width, height, _, dn) = decode_pgm16_le(&bytes, path)?;
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: RawMetadata = toml::from_str(&text).map_err(|e| Error::Parse {
            path: side.clone(),
            message: e.to_string(),
        })?;
        if meta.sensor.width != width || meta.sensor.height != height {
            return Err(Error::Dimension("raw sidecar dimensions disagree with image".into()));
        }
        Ok(RawImage {
            width,
            height,
            dn,
            meta,
        })
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    s.into()
}

/// Frame 0 of [`expose_frame`].
pub fn expose(irradiance: &IrradianceImage, spec: &SensorSpec, seed: u64) -> Result<RawImage> {
    expose_frame(irradiance, spec, seed, 0)
}

/// Simulates one exposure. The fixed pattern depends only on `seed`; shot
/// and read noise additionally depend on `frame`.
pub fn expose_frame(irradiance: &IrradianceImage, spec: &SensorSpec, seed: u64, frame: u32) -> Result<RawImage> {
    spec.validate()?;
    let mean = mean_electrons(irradiance, spec)?;
    let electrons = expose_electrons(&mean, spec, seed, frame)?;
    Ok(RawImage {
        width: spec.width,
        height: spec.height,
        dn: digitize(&electrons, spec),
        meta: RawMetadata {
            seed,
            frame,
            sensor: spec.clone(),
        },
    })
}

/// Analytic SNR in dB for mean signal electrons `mu`:
/// `mu / sqrt(mu + read^2 + (prnu mu)^2 + dark + dsnu^2)`.
pub fn snr_curve(spec: &SensorSpec, mean_electron_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    mean_electron_grid
        .iter()
        .map(|&mu| {
            if !(mu > 0.0) {
                return Err(Error::domain(format!("signal level {mu} must be > 0")));
            }
            let var = mu
                + spec.read_noise_std.powi(2)
                + (spec.prnu_std * mu).powi(2)
                + spec.dark_electrons()
                + spec.dsnu_std.powi(2);
            Ok((mu, 20.0 * (mu / var.sqrt()).log10()))
        })
        .collect()
}
