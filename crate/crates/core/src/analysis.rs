//! Measurement tools: regional contrast stretching, detrended noise
//! estimation and per-patch trends across fog densities.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{window_filter, RgbImage};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Rect { x, y, width, height }
    }

    /// Square of side `size` centred on `(cx, cy)`.
    pub fn centered(cx: usize, cy: usize, size: usize) -> Self {
        Rect::new(cx - size / 2, cy - size / 2, size, size)
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= width && self.y + self.height <= height
    }

    fn check(&self, image: &RgbImage) -> Result<()> {
        if self.fits(image.width, image.height) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "region {self:?} outside {}x{} image",
                image.width, image.height
            )))
        }
    }

    fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.height).flat_map(move |y| (self.x..self.x + self.width).map(move |x| (x, y)))
    }
}

/// Per channel, `(v - min) / (max - min)` over a `window x window`
/// neighbourhood clipped to the image; flat windows map to 0.5.
pub fn regional_contrast_stretch(image: &RgbImage, window: usize) -> Result<RgbImage> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::invalid("analysis.window", "must be odd and >= 3"));
    }
    let (w, h) = (image.width, image.height);
    let r = window / 2;
    let mut out = image.clone();
    for c in 0..3 {
        let plane: Vec<f64> = image.pixels.iter().map(|p| p[c]).collect();
        let lo = window_filter(&plane, w, h, r, f64::min);
        let hi = window_filter(&plane, w, h, r, f64::max);
        for (i, p) in out.pixels.iter_mut().enumerate() {
            p[c] = if hi[i] > lo[i] {
                ((plane[i] - lo[i]) / (hi[i] - lo[i])).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
    }
    Ok(out)
}

/// Per-channel residual standard deviation after a least-squares plane fit
/// `a + b x + c y` over the region.
pub fn noise_std_estimate(image: &RgbImage, region: Rect) -> Result<[f64; 3]> {
    region.check(image)?;
    if region.width < 8 || region.height < 8 {
        return Err(Error::invalid("analysis.region", "must be at least 8x8"));
    }
    let n = region.area() as f64;
    // Centred coordinates make the normal equations diagonal.
    let cx = region.x as f64 + (region.width as f64 - 1.0) / 2.0;
    let cy = region.y as f64 + (region.height as f64 - 1.0) / 2.0;
    let (sxx, syy) = region.coords().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x as f64 - cx).powi(2), b + (y as f64 - cy).powi(2))
    });
    Ok([0, 1, 2].map(|c| {
        let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for (x, y) in region.coords() {
            let v = image.get(x, y)[c];
            s += v;
            sx += v * (x as f64 - cx);
            sy += v * (y as f64 - cy);
        }
        let (a, b, g) = (s / n, sx / sxx, sy / syy);
        let ss: f64 = region
            .coords()
            .map(|(x, y)| {
                let fit = a + b * (x as f64 - cx) + g * (y as f64 - cy);
                (image.get(x, y)[c] - fit).powi(2)
            })
            .sum();
        (ss / (n - 3.0)).sqrt()
    }))
}

/// Mean RGB over a region.
pub fn region_mean(image: &RgbImage, region: Rect) -> Result<[f64; 3]> {
    region.check(image)?;
    let mut sum = [0.0; 3];
    for (x, y) in region.coords() {
        let p = image.get(x, y);
        for c in 0..3 {
            sum[c] += p[c];
        }
    }
    Ok(sum.map(|s| s / region.area() as f64))
}

/// Standard deviation of patch luminances divided by their mean.
pub fn rms_contrast(image: &RgbImage, patches: &[Rect]) -> Result<f64> {
    let lum: Vec<f64> = patches
        .iter()
        .map(|r| region_mean(image, *r).map(|m| (m[0] + m[1] + m[2]) / 3.0))
        .collect::<Result<_>>()?;
    let n = lum.len() as f64;
    let mean = lum.iter().sum::<f64>() / n;
    let var = lum.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    /// Fewer than two densities.
    Insufficient,
    Increasing,
    Decreasing,
    /// Identical luminance at every density.
    Flat,
    NotMonotone,
}

impl TrendVerdict {
    pub fn is_monotone(self) -> bool {
        matches!(self, TrendVerdict::Increasing | TrendVerdict::Decreasing | TrendVerdict::Flat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchTrend {
    /// Mean RGB per density, in series order.
    pub means: Vec<[f64; 3]>,
    pub verdict: TrendVerdict,
}

impl PatchTrend {
    pub fn luminance(&self) -> Vec<f64> {
        self.means.iter().map(|m| (m[0] + m[1] + m[2]) / 3.0).collect()
    }

    /// Monotone and heading toward `asymptote` (a luminance) from the first density.
    pub fn moves_toward(&self, asymptote: f64) -> bool {
        let first = self.luminance()[0];
        match self.verdict {
            TrendVerdict::Increasing => first < asymptote,
            TrendVerdict::Decreasing => first > asymptote,
            TrendVerdict::Flat => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendTable {
    pub sigmas: Vec<f64>,
    pub patches: Vec<PatchTrend>,
}

impl TrendTable {
    /// `patch_id,sigma_s,mean_R,mean_G,mean_B`, one row per patch and density.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("patch_id,sigma_s,mean_R,mean_G,mean_B\n");
        for (id, p) in self.patches.iter().enumerate() {
            for (sigma, m) in self.sigmas.iter().zip(&p.means) {
                let _ = writeln!(s, "{id},{sigma},{},{},{}", m[0], m[1], m[2]);
            }
        }
        s
    }
}

fn verdict(lum: &[f64]) -> TrendVerdict {
    if lum.len() < 2 {
        return TrendVerdict::Insufficient;
    }
    let up = lum.windows(2).all(|p| p[1] >= p[0]);
    let down = lum.windows(2).all(|p| p[1] <= p[0]);
    match (up, down) {
        (true, true) => TrendVerdict::Flat,
        (true, false) => TrendVerdict::Increasing,
        (false, true) => TrendVerdict::Decreasing,
        (false, false) => TrendVerdict::NotMonotone,
    }
}

/// Mean colour of each patch at each density, plus a luminance monotonicity
/// verdict per patch. The series is sorted by density first.
pub fn patch_trend(series: &[(f64, RgbImage)], patches: &[Rect]) -> Result<TrendTable> {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| series[a].0.total_cmp(&series[b].0));
    let sigmas = order.iter().map(|&i| series[i].0).collect();
    let patches = patches
        .iter()
        .map(|r| {
            let means = order
                .iter()
                .map(|&i| region_mean(&series[i].1, *r))
                .collect::<Result<Vec<_>>>()?;
            let lum: Vec<f64> = means.iter().map(|m| (m[0] + m[1] + m[2]) / 3.0).collect();
            Ok(PatchTrend {
                verdict: verdict(&lum),
                means,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrendTable { sigmas, patches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ColorSpace;
    use crate::rng::Stream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn noisy(w: usize, h: usize, sigma: f64, plane: (f64, f64, f64), seed: u64) -> RgbImage {
        let mut rng = Stream::new(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        RgbImage::from_fn(w, h, ColorSpace::Linear, |x, y| {
            let base = plane.0 + plane.1 * x as f64 + plane.2 * y as f64;
            [0; 3].map(|_| base + n.sample(&mut rng))
        })
    }

    #[test]
    fn stretch_constant_is_half() {
        let out = regional_contrast_stretch(&RgbImage::filled(6, 5, [0.3; 3], ColorSpace::Linear), 3).unwrap();
        assert!(out.pixels.iter().all(|p| *p == [0.5; 3]));
    }

    #[test]
    fn stretch_two_valued() {
        let im = RgbImage::from_fn(6, 6, ColorSpace::Linear, |x, y| [if (x + y) % 2 == 0 { 0.4 } else { 0.6 }; 3]);
        let out = regional_contrast_stretch(&im, 3).unwrap();
        for (a, b) in im.pixels.iter().zip(&out.pixels) {
            assert_eq!(b[0], if a[0] == 0.4 { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn stretch_window_validation() {
        let im = RgbImage::filled(4, 4, [0.0; 3], ColorSpace::Linear);
        assert!(regional_contrast_stretch(&im, 4).is_err());
        assert!(regional_contrast_stretch(&im, 1).is_err());
    }

    #[test]
    fn noise_examples() {
        let flat = RgbImage::filled(16, 16, [0.4; 3], ColorSpace::Linear);
        assert!(noise_std_estimate(&flat, Rect::new(0, 0, 16, 16)).unwrap().iter().all(|s| s.abs() < 1e-9));
        let n = noisy(64, 64, 0.01, (0.5, 0.0, 0.0), 1);
        for s in noise_std_estimate(&n, Rect::new(0, 0, 64, 64)).unwrap() {
            assert!((s - 0.01).abs() < 0.001, "{s}");
        }
        let r = noisy(64, 64, 0.01, (0.2, 0.004, -0.003), 2);
        for s in noise_std_estimate(&r, Rect::new(0, 0, 64, 64)).unwrap() {
            assert!((s - 0.01).abs() < 0.001, "{s}");
        }
        assert!(noise_std_estimate(&flat, Rect::new(10, 10, 8, 8)).is_err());
        assert!(noise_std_estimate(&flat, Rect::new(0, 0, 7, 8)).is_err());
    }

    #[test]
    fn single_density_is_insufficient() {
        let im = RgbImage::filled(4, 4, [0.2; 3], ColorSpace::Linear);
        let t = patch_trend(&[(0.01, im)], &[Rect::new(0, 0, 2, 2)]).unwrap();
        assert_eq!(t.patches[0].verdict, TrendVerdict::Insufficient);
        assert_eq!(t.patches[0].means.len(), 1);
    }

    #[test]
    fn trend_sorts_and_writes_csv() {
        let a = RgbImage::filled(2, 2, [0.2; 3], ColorSpace::Linear);
        let b = RgbImage::filled(2, 2, [0.4; 3], ColorSpace::Linear);
        let t = patch_trend(&[(0.02, b), (0.01, a)], &[Rect::new(0, 0, 2, 2)]).unwrap();
        assert_eq!(t.sigmas, vec![0.01, 0.02]);
        assert_eq!(t.patches[0].verdict, TrendVerdict::Increasing);
        assert!(t.patches[0].moves_toward(0.9));
        assert!(!t.patches[0].moves_toward(0.1));
        let csv = t.to_csv();
        assert!(csv.starts_with("patch_id,sigma_s,mean_R,mean_G,mean_B\n0,0.01,0.2,0.2,0.2\n"));
    }

    #[test]
    fn rms_contrast_of_two_patches() {
        let im = RgbImage::from_fn(4, 2, ColorSpace::Linear, |x, _| [if x < 2 { 0.2 } else { 0.6 }; 3]);
        let c = rms_contrast(&im, &[Rect::new(0, 0, 2, 2), Rect::new(2, 0, 2, 2)]).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn stretch_in_unit_range(seed in any::<u64>(), win in 1usize..4) {
            let mut s = Stream::new(seed);
            let im = RgbImage::from_fn(9, 7, ColorSpace::Linear, |_, _| [s.uniform() * 3.0 - 1.0, s.uniform(), 0.5]);
            let out = regional_contrast_stretch(&im, 2 * win + 1).unwrap();
            prop_assert!(out.pixels.iter().all(|p| p.iter().all(|v| (0.0..=1.0).contains(v))));
        }

        #[test]
        fn noise_invariant_to_planes(seed in any::<u64>(), a in -1.0..1.0f64, b in -0.05..0.05f64, c in -0.05..0.05f64) {
            let base = noisy(12, 10, 0.02, (0.0, 0.0, 0.0), seed);
            let tilted = RgbImage::from_fn(12, 10, ColorSpace::Linear, |x, y| base.get(x, y).map(|v| v + a + b * x as f64 + c * y as f64));
            let r = Rect::new(1, 1, 10, 8);
            let (s0, s1) = (noise_std_estimate(&base, r).unwrap(), noise_std_estimate(&tilted, r).unwrap());
            for k in 0..3 {
                prop_assert!((s0[k] - s1[k]).abs() < 1e-6);
            }
        }

        #[test]
        fn verdict_invariant_to_exposure(seed in any::<u64>(), k in 0.01..100.0f64) {
            let mut s = Stream::new(seed);
            let series: Vec<(f64, RgbImage)> = (0..4)
                .map(|i| (i as f64 * 0.01, RgbImage::from_fn(4, 4, ColorSpace::Linear, |_, _| [s.uniform(); 3])))
                .collect();
            let scaled: Vec<(f64, RgbImage)> = series
                .iter()
                .map(|(sg, im)| (*sg, RgbImage { pixels: im.pixels.iter().map(|p| p.map(|v| v * k)).collect(), ..im.clone() }))
                .collect();
            let patches = [Rect::new(0, 0, 2, 2), Rect::new(1, 1, 3, 3)];
            let a = patch_trend(&series, &patches).unwrap();
            let b = patch_trend(&scaled, &patches).unwrap();
            for (p, q) in a.patches.iter().zip(&b.patches) {
                prop_assert_eq!(p.verdict, q.verdict);
            }
        }
    }
}
