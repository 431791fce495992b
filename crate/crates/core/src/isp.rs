//! Raw-to-RGB processing: black level, white balance, bilinear demosaic,
//! colour correction, gamma and 8-bit quantisation, in that order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CfaPattern, RawImage};
use crate::error::{Error, Result};
use crate::image::{ColorSpace, Rgb8Image, RgbImage};

pub const DEFAULT_GAMMA: f64 = 1.0 / 2.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WhiteBalance {
    /// Multipliers for the R, G and B sites.
    Gains([f64; 3]),
    /// The string `"gray-world"`.
    Auto(AutoWhiteBalance),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoWhiteBalance {
    #[serde(rename = "gray-world")]
    GrayWorld,
}

impl Default for WhiteBalance {
    fn default() -> Self {
        WhiteBalance::Gains([1.0; 3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IspConfig {
    pub wb_gains: WhiteBalance,
    /// Row-major 3x3 matrix applied to linear RGB column vectors.
    pub ccm: [[f64; 3]; 3],
    /// Encode exponent, `out = v^gamma`.
    pub gamma: f64,
}

impl Default for IspConfig {
    fn default() -> Self {
        IspConfig {
            wb_gains: WhiteBalance::default(),
            ccm: IDENTITY,
            gamma: DEFAULT_GAMMA,
        }
    }
}

pub const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl IspConfig {
    /// Identity processing: unit gains, identity matrix, linear output.
    pub fn identity() -> Self {
        IspConfig {
            gamma: 1.0,
            ..IspConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let WhiteBalance::Gains(g) = self.wb_gains {
            if !g.iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("isp.wb_gains", "gains must be finite and > 0"));
            }
        }
        for (i, row) in self.ccm.iter().enumerate() {
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("isp.ccm[{i}]"), "entries must be finite"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("isp.ccm[{i}]"), format!("row sums to {sum}, expected 1")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("isp.gamma", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Black-level subtraction and normalisation to the usable DN range.
pub fn normalize(raw: &RawImage) -> Result<Vec<f64>> {
    let s = &raw.meta.sensor;
    s.validate()?;
    if raw.dn.len() != raw.width * raw.height || s.width != raw.width || s.height != raw.height {
        return Err(Error::Dimension("raw buffer does not match its metadata".into()));
    }
    let black = s.black_level as f64;
    let range = s.white_level() as f64 - black;
    Ok(raw.dn.iter().map(|&d| ((d as f64 - black) / range).max(0.0)).collect())
}

/// Gains `mean(G) / mean(C)` measured on the black-subtracted raw.
pub fn gray_world_gains(raw: &RawImage) -> Result<[f64; 3]> {
    if raw.dn.is_empty() {
        return Err(Error::Dimension("empty raw image".into()));
    }
    let values = normalize(raw)?;
    let cfa = raw.cfa();
    let mut sum = [0.0; 3];
    let mut count = [0usize; 3];
    for (i, v) in values.iter().enumerate() {
        let c = cfa.channel_at(i % raw.width, i / raw.width).index();
        sum[c] += v;
        count[c] += 1;
    }
    let mean: Vec<f64> = (0..3)
        .map(|c| if count[c] == 0 { 0.0 } else { sum[c] / count[c] as f64 })
        .collect();
    if let Some(c) = (0..3).find(|&c| !(mean[c] > 0.0)) {
        return Err(Error::domain(format!("channel {} has zero mean; gray-world undefined", ["R", "G", "B"][c])));
    }
    Ok([mean[1] / mean[0], 1.0, mean[1] / mean[2]])
}

/// Samples a linear RGB image through a CFA.
pub fn mosaic(image: &RgbImage, cfa: CfaPattern) -> Vec<f64> {
    image
        .pixels
        .iter()
        .enumerate()
        .map(|(i, p)| p[cfa.channel_at(i % image.width, i / image.width).index()])
        .collect()
}

/// Each missing channel is the mean of the same-channel sites in the 3x3
/// neighbourhood that lie inside the image; known sites pass through.
pub fn demosaic_bilinear(mosaic: &[f64], width: usize, height: usize, cfa: CfaPattern) -> Result<RgbImage> {
    if width < 2 || height < 2 {
        return Err(Error::Dimension(format!("demosaic needs at least 2x2, got {width}x{height}")));
    }
    if mosaic.len() != width * height {
        return Err(Error::Dimension("mosaic length does not match dimensions".into()));
    }
    let mut pixels = vec![[0.0; 3]; width * height];
    pixels.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let own = cfa.channel_at(x, y).index();
            let mut sum = [0.0; 3];
            let mut n = [0u32; 3];
            for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    let c = cfa.channel_at(nx, ny).index();
                    sum[c] += mosaic[ny * width + nx];
                    n[c] += 1;
                }
            }
            for c in 0..3 {
                out[c] = if c == own {
                    mosaic[y * width + x]
                } else {
                    sum[c] / n[c] as f64
                };
            }
        }
    });
    Ok(RgbImage {
        width,
        height,
        pixels,
        colorspace: ColorSpace::Linear,
    })
}

pub fn apply_ccm(image: &RgbImage, ccm: &[[f64; 3]; 3]) -> RgbImage {
    RgbImage {
        pixels: image
            .pixels
            .iter()
            .map(|p| ccm.map(|row| row[0] * p[0] + row[1] * p[1] + row[2] * p[2]))
            .collect(),
        ..image.clone()
    }
}

/// Stages up to and including colour correction; values are linear and unclipped.
pub fn process_linear(raw: &RawImage, cfg: &IspConfig) -> Result<RgbImage> {
    cfg.validate()?;
    let mut values = normalize(raw)?;
    let gains = match cfg.wb_gains {
        WhiteBalance::Gains(g) => g,
        WhiteBalance::Auto(AutoWhiteBalance::GrayWorld) => gray_world_gains(raw)?,
    };
    let cfa = raw.cfa();
    for (i, v) in values.iter_mut().enumerate() {
        *v *= gains[cfa.channel_at(i % raw.width, i / raw.width).index()];
    }
    let rgb = demosaic_bilinear(&values, raw.width, raw.height, cfa)?;
    Ok(apply_ccm(&rgb, &cfg.ccm))
}

/// Full chain: clamp to `[0, 1]`, gamma encode and quantise to 8 bits.
pub fn process(raw: &RawImage, cfg: &IspConfig) -> Result<Rgb8Image> {
    Ok(process_linear(raw, cfg)?.encode_gamma(cfg.gamma).quantize())
}
