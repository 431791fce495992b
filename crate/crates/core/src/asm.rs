//! Atmospheric scattering model: `out = clear * t + airlight * (1 - t)` with
//! `t = exp(-beta * d)`, plus dark-channel airlight estimation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{window_filter, ColorSpace, RgbImage};
use crate::render::DepthMap;

pub const DEFAULT_PATCH_RADIUS: usize = 7;
pub const DEFAULT_TOP_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsmParams {
    /// Scattering coefficient, 1/m.
    pub beta: f64,
    /// Airlight per channel, in the linear working space.
    pub airlight: [f64; 3],
}

impl AsmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("asm.beta", "must be finite and >= 0"));
        }
        if !self.airlight.iter().all(|a| *a >= 0.0 && a.is_finite()) {
            return Err(Error::invalid("asm.airlight", "channels must be finite and >= 0"));
        }
        Ok(())
    }

    /// Transmission along a path of length `depth`. A zero `beta` means no
    /// medium, so even infinite depth transmits fully.
    #[inline]
    pub fn transmission(&self, depth: f64) -> f64 {
        if self.beta == 0.0 {
            1.0
        } else if depth.is_infinite() {
            0.0
        } else {
            (-self.beta * depth).exp()
        }
    }
}

/// Applies the scattering model to a linear image.
pub fn synthesize_asm(clear: &RgbImage, depth: &DepthMap, params: &AsmParams) -> Result<RgbImage> {
    params.validate()?;
    if clear.width != depth.width || clear.height != depth.height {
        return Err(Error::Dimension(format!(
            "image is {}x{}, depth map is {}x{}",
            clear.width, clear.height, depth.width, depth.height
        )));
    }
    if let Some(d) = depth.depth.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::domain(format!("depth {d} must be >= 0")));
    }
    let a = params.airlight;
    let pixels = clear
        .pixels
        .par_iter()
        .zip(&depth.depth)
        .map(|(c, &d)| {
            let t = params.transmission(d);
            if t == 0.0 {
                a
            } else if t == 1.0 {
                *c
            } else {
                [0, 1, 2].map(|k| c[k] * t + a[k] * (1.0 - t))
            }
        })
        .collect();
    Ok(RgbImage {
        width: clear.width,
        height: clear.height,
        pixels,
        colorspace: ColorSpace::Linear,
    })
}

/// Per-pixel channel minimum followed by a `(2r+1)^2` minimum filter.
pub fn dark_channel(image: &RgbImage, patch_radius: usize) -> Vec<f64> {
    let (w, h) = (image.width, image.height);
    let channel_min: Vec<f64> = image
        .pixels
        .iter()
        .map(|p| p[0].min(p[1]).min(p[2]))
        .collect();
    if patch_radius == 0 || w * h == 0 {
        return channel_min;
    }
    window_filter(&channel_min, w, h, patch_radius, f64::min)
}

/// Lower median of a non-empty slice.
fn lower_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

/// Per-channel median colour of the `ceil(top_fraction * N)` pixels with the
/// largest dark-channel values. Ties go to the lower row-major index.
pub fn estimate_airlight(image: &RgbImage, patch_radius: usize, top_fraction: f64) -> Result<[f64; 3]> {
    let n = image.pixels.len();
    if n == 0 {
        return Err(Error::Dimension("cannot estimate airlight of an empty image".into()));
    }
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::invalid("asm.top_fraction", "must lie in (0, 1]"));
    }
    let dark = dark_channel(image, patch_radius);
    let k = ((top_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dark[b].total_cmp(&dark[a]).then(a.cmp(&b)));
    let chosen = &order[..k];
    Ok([0, 1, 2].map(|c| {
        let mut v: Vec<f64> = chosen.iter().map(|&i| image.pixels[i][c]).collect();
        lower_median(&mut v)
    }))
}

/// Collapses a per-channel airlight to its channel mean.
pub fn scalar_airlight(a: [f64; 3]) -> [f64; 3] {
    let m = (a[0] + a[1] + a[2]) / 3.0;
    [m; 3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, v: [f64; 3]) -> RgbImage {
        RgbImage::filled(w, h, v, ColorSpace::Linear)
    }

    #[test]
    fn zero_depth_is_identity() {
        let clear = RgbImage::from_fn(5, 4, ColorSpace::Linear, |x, y| [x as f64 * 0.1, y as f64 * 0.2, 0.3]);
        let out = synthesize_asm(&clear, &DepthMap::filled(5, 4, 0.0), &AsmParams { beta: 0.5, airlight: [0.9; 3] }).unwrap();
        assert_eq!(out.pixels, clear.pixels);
    }

    #[test]
    fn infinite_depth_is_airlight() {
        let a = [0.7, 0.8, 0.9];
        let out = synthesize_asm(&img(3, 3, [0.1; 3]), &DepthMap::filled(3, 3, f64::INFINITY), &AsmParams { beta: 0.02, airlight: a }).unwrap();
        assert!(out.pixels.iter().all(|p| *p == a));
    }

    #[test]
    fn plug_in_value() {
        let out = synthesize_asm(&img(1, 1, [0.8; 3]), &DepthMap::filled(1, 1, 150.0), &AsmParams { beta: 0.02, airlight: [0.9; 3] }).unwrap();
        assert!((out.pixels[0][0] - 0.8950212931632136).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let p = AsmParams { beta: 0.1, airlight: [1.0; 3] };
        assert!(matches!(synthesize_asm(&img(2, 2, [0.0; 3]), &DepthMap::filled(3, 2, 1.0), &p), Err(Error::Dimension(_))));
        assert!(synthesize_asm(&img(2, 2, [0.0; 3]), &DepthMap::filled(2, 2, -1.0), &p).is_err());
        assert!(synthesize_asm(&img(2, 2, [0.0; 3]), &DepthMap::filled(2, 2, 1.0), &AsmParams { beta: -1.0, airlight: [1.0; 3] }).is_err());
    }

    #[test]
    fn dark_channel_examples() {
        assert!(dark_channel(&img(4, 4, [0.3; 3]), 2).iter().all(|&v| v == 0.3));
        assert!(dark_channel(&img(4, 4, [1.0, 0.0, 0.0]), 1).iter().all(|&v| v == 0.0));
        let mut im = img(5, 5, [0.9; 3]);
        im.set(2, 2, [0.1; 3]);
        let d = dark_channel(&im, 1);
        for y in 0..5usize {
            for x in 0..5usize {
                let near = x.abs_diff(2) <= 1 && y.abs_diff(2) <= 1;
                assert_eq!(d[y * 5 + x], if near { 0.1 } else { 0.9 });
            }
        }
    }

    fn brute_dark(im: &RgbImage, r: usize) -> Vec<f64> {
        let (w, h) = (im.width as i64, im.height as i64);
        let mut out = vec![0.0; im.pixels.len()];
        for y in 0..h {
            for x in 0..w {
                let mut m = f64::INFINITY;
                for dy in -(r as i64)..=r as i64 {
                    for dx in -(r as i64)..=r as i64 {
                        let p = im.get((x + dx).clamp(0, w - 1) as usize, (y + dy).clamp(0, h - 1) as usize);
                        m = m.min(p[0].min(p[1]).min(p[2]));
                    }
                }
                out[(y * w + x) as usize] = m;
            }
        }
        out
    }

    #[test]
    fn constant_image_airlight() {
        let a = estimate_airlight(&img(20, 10, [0.2, 0.4, 0.6]), 7, 0.001).unwrap();
        assert_eq!(a, [0.2, 0.4, 0.6]);
    }

    #[test]
    fn tie_break_is_row_major() {
        // Two-valued dark channel: the top 5 of 8 bright pixels are the first five by index.
        let im = RgbImage::from_fn(4, 4, ColorSpace::Linear, |x, y| {
            if y < 2 {
                [0.9, 0.9 + 0.01 * (y * 4 + x) as f64, 0.9]
            } else {
                [0.1; 3]
            }
        });
        let a = estimate_airlight(&im, 0, 5.0 / 16.0).unwrap();
        // Selected G values: 0.90..0.94, lower median 0.92.
        assert!((a[1] - 0.92).abs() < 1e-12);
        assert_eq!(a[0], 0.9);
    }

    #[test]
    fn bad_fraction() {
        assert!(estimate_airlight(&img(2, 2, [0.0; 3]), 1, 0.0).is_err());
        assert!(estimate_airlight(&img(2, 2, [0.0; 3]), 1, 1.5).is_err());
        assert!(estimate_airlight(&img(0, 0, [0.0; 3]), 1, 0.5).is_err());
    }

    #[test]
    fn scalar_collapse() {
        assert_eq!(scalar_airlight([0.3, 0.6, 0.9]), [0.6; 3]);
    }

    proptest! {
        #[test]
        fn dark_channel_matches_brute_force(w in 1usize..9, h in 1usize..9, r in 0usize..4, seed in any::<u64>()) {
            let mut s = crate::rng::Stream::new(seed);
            let im = RgbImage::from_fn(w, h, ColorSpace::Linear, |_, _| [s.uniform(), s.uniform(), s.uniform()]);
            prop_assert_eq!(dark_channel(&im, r), brute_dark(&im, r));
        }

        #[test]
        fn monotone_in_beta(c in 0.0..1.0f64, a in 0.0..1.0f64, d in 0.0..500.0f64, b1 in 0.0..0.1f64, b2 in 0.0..0.1f64) {
            let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
            let f = |b| synthesize_asm(&img(1, 1, [c; 3]), &DepthMap::filled(1, 1, d), &AsmParams { beta: b, airlight: [a; 3] }).unwrap().pixels[0][0];
            prop_assert!((f(hi) - a).abs() <= (f(lo) - a).abs() + 1e-12);
        }

        #[test]
        fn commutes_with_scaling(c in 0.0..1.0f64, a in 0.0..1.0f64, d in 0.0..200.0f64, b in 0.0..0.05f64, k in 0.1..10.0f64) {
            let f = |c: f64, a: f64| synthesize_asm(&img(1, 1, [c; 3]), &DepthMap::filled(1, 1, d), &AsmParams { beta: b, airlight: [a; 3] }).unwrap().pixels[0][0];
            prop_assert!((f(k * c, k * a) - k * f(c, a)).abs() < 1e-9);
        }

        #[test]
        fn inversion_round_trip(c in 0.0..1.0f64, a in 0.0..1.0f64, d in 0.0..300.0f64, b in 0.0..0.02f64) {
            let p = AsmParams { beta: b, airlight: [a; 3] };
            let out = synthesize_asm(&img(1, 1, [c; 3]), &DepthMap::filled(1, 1, d), &p).unwrap().pixels[0][0];
            let t = (-b * d).exp();
            prop_assume!(t > 1e-3);
            prop_assert!(((out - a * (1.0 - t)) / t - c).abs() < 1e-6);
        }
    }
}
