//! Three-channel image types shared by the ASM, ISP and analysis stages.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    /// Values proportional to radiance.
    Linear,
    /// Values after a power-law encode, still as floats in `[0, 1]`.
    GammaEncoded,
}

/// Float RGB image, row-major, pixel `(x, y)` at `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
    pub colorspace: ColorSpace,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, colorspace: ColorSpace) -> Self {
        RgbImage {
            width,
            height,
            pixels: vec![[0.0; 3]; width * height],
            colorspace,
        }
    }

    pub fn filled(width: usize, height: usize, value: [f64; 3], colorspace: ColorSpace) -> Self {
        RgbImage {
            width,
            height,
            pixels: vec![value; width * height],
            colorspace,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Self {
        let pixels = (0..width * height).map(|i| f(i % width, i / width)).collect();
        RgbImage {
            width,
            height,
            pixels,
            colorspace,
        }
    }

    /// Builds from interleaved RGB values.
    pub fn from_interleaved(width: usize, height: usize, values: &[f64], colorspace: ColorSpace) -> Result<Self> {
        if values.len() != width * height * 3 {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height} RGB image",
                values.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels: values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            colorspace,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f64; 3]) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn same_size(&self, other_w: usize, other_h: usize) -> bool {
        self.width == other_w && self.height == other_h
    }

    /// Power-law decode `v^(1/gamma)` of an encoded image (gamma is the encode exponent).
    pub fn decode_gamma(&self, gamma: f64) -> RgbImage {
        RgbImage {
            pixels: self
                .pixels
                .iter()
                .map(|p| p.map(|v| v.max(0.0).powf(1.0 / gamma)))
                .collect(),
            colorspace: ColorSpace::Linear,
            ..*self
        }
    }

    /// Power-law encode `clamp(v, 0, 1)^gamma`.
    pub fn encode_gamma(&self, gamma: f64) -> RgbImage {
        RgbImage {
            pixels: self
                .pixels
                .iter()
                .map(|p| p.map(|v| v.clamp(0.0, 1.0).powf(gamma)))
                .collect(),
            colorspace: ColorSpace::GammaEncoded,
            ..*self
        }
    }

    /// Mean of the three channels at each pixel.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels.iter().map(|p| (p[0] + p[1] + p[2]) / 3.0).collect()
    }

    /// Quantises values in `[0, 1]` to 8 bits, rounding half away from zero.
    pub fn quantize(&self) -> Rgb8Image {
        Rgb8Image {
            width: self.width,
            height: self.height,
            data: self
                .pixels
                .iter()
                .flat_map(|p| p.map(quantize_unit))
                .collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for RgbImage {
    type Output = [f64; 3];
    fn index(&self, (x, y): (usize, usize)) -> &[f64; 3] {
        &self.pixels[y * self.width + x]
    }
}

#[inline]
pub fn quantize_unit(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit interleaved RGB, always gamma encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Rgb8Image {
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Values divided by 255, still gamma encoded.
    pub fn to_unit(&self) -> RgbImage {
        let values: Vec<f64> = self.data.iter().map(|&v| v as f64 / 255.0).collect();
        RgbImage::from_interleaved(self.width, self.height, &values, ColorSpace::GammaEncoded)
            .expect("buffer length matches dimensions")
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        crate::io::encode_ppm8(self.width, self.height, &self.data)
    }
}

/// Reduces every clamped `(2r+1)^2` window of a `w x h` plane with `op`
/// (`f64::min` or `f64::max`), separably.
pub(crate) fn window_filter(values: &[f64], w: usize, h: usize, radius: usize, op: fn(f64, f64) -> f64) -> Vec<f64> {
    let reduce = |src: &[f64], at: &dyn Fn(usize) -> usize, i: usize, len: usize| {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(len - 1);
        (lo + 1..=hi).fold(src[at(lo)], |m, j| op(m, src[at(j)]))
    };
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = reduce(values, &|j| y * w + j, x, w);
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = reduce(&rows, &|j| j * w + x, y, h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_away() {
        assert_eq!(quantize_unit(0.5 / 255.0), 1);
        assert_eq!(quantize_unit(1.49 / 255.0), 1);
        assert_eq!(quantize_unit(2.5 / 255.0), 3);
        assert_eq!(quantize_unit(-0.3), 0);
        assert_eq!(quantize_unit(7.0), 255);
    }

    #[test]
    fn gamma_round_trip() {
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            let img = RgbImage::filled(1, 1, [v; 3], ColorSpace::Linear);
            let enc = img.encode_gamma(1.0 / 2.2).quantize().to_unit().decode_gamma(1.0 / 2.2);
            // half an 8-bit code, stretched by the decode slope (at most 2.2)
            let back = enc.pixels[0][0];
            assert!((back - v).abs() <= 0.5 / 255.0 * 2.2 + 1e-12, "v={v} back={back}");
            let exact = img.encode_gamma(1.0 / 2.2).decode_gamma(1.0 / 2.2).pixels[0][0];
            assert!((exact - v).abs() < 1.0 / 255.0);
            assert!((exact - v).abs() < 1e-12);
        }
    }
}
