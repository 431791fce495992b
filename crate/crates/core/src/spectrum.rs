//! Spectral radiometric quantities on the fixed 31-band grid (400-700 nm, 10 nm).

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

pub const BANDS: usize = 31;
pub const LAMBDA_MIN_NM: f64 = 400.0;
pub const BAND_WIDTH_NM: f64 = 10.0;

/// Centre wavelength of band `i` in nanometres.
#[inline]
pub fn wavelength_nm(i: usize) -> f64 {
    LAMBDA_MIN_NM + BAND_WIDTH_NM * i as f64
}

pub fn wavelengths_nm() -> [f64; BANDS] {
    std::array::from_fn(wavelength_nm)
}

/// Band-sampled spectrum. The grid is a compile-time constant, so two spectra
/// are always on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum(pub [f64; BANDS]);

impl Default for Spectrum {
    fn default() -> Self {
        Spectrum::ZERO
    }
}

impl Spectrum {
    pub const ZERO: Spectrum = Spectrum([0.0; BANDS]);
    pub const ONE: Spectrum = Spectrum([1.0; BANDS]);

    pub const fn flat(v: f64) -> Self {
        Spectrum([v; BANDS])
    }

    pub fn from_fn(f: impl FnMut(usize) -> f64) -> Self {
        Spectrum(std::array::from_fn(f))
    }

    pub fn max_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / BANDS as f64
    }

    pub fn is_black(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Non-negative and finite in every band.
    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Sum over bands of `self * weights`.
    pub fn weighted_sum(&self, weights: &Spectrum) -> f64 {
        self.0.iter().zip(&weights.0).map(|(a, b)| a * b).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }
}

impl Index<usize> for Spectrum {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Spectrum {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Spectrum {
    type Output = Spectrum;
    #[inline]
    fn add(mut self, o: Spectrum) -> Spectrum {
        self += o;
        self
    }
}

impl AddAssign for Spectrum {
    #[inline]
    fn add_assign(&mut self, o: Spectrum) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }
}

impl Mul for Spectrum {
    type Output = Spectrum;
    #[inline]
    fn mul(mut self, o: Spectrum) -> Spectrum {
        self *= o;
        self
    }
}

impl MulAssign for Spectrum {
    #[inline]
    fn mul_assign(&mut self, o: Spectrum) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a *= b;
        }
    }
}

impl Mul<f64> for Spectrum {
    type Output = Spectrum;
    #[inline]
    fn mul(mut self, s: f64) -> Spectrum {
        self *= s;
        self
    }
}

impl MulAssign<f64> for Spectrum {
    #[inline]
    fn mul_assign(&mut self, s: f64) {
        for a in self.0.iter_mut() {
            *a *= s;
        }
    }
}

impl Div<f64> for Spectrum {
    type Output = Spectrum;
    #[inline]
    fn div(self, s: f64) -> Spectrum {
        self * (1.0 / s)
    }
}

/// Text form used by scene files: either `"flat <value>"` or a list of 31 numbers.
#[derive(Deserialize)]
#[serde(untagged)]
enum SpectrumRepr {
    Text(String),
    List(Vec<f64>),
}

impl<'de> Deserialize<'de> for Spectrum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match SpectrumRepr::deserialize(d)? {
            SpectrumRepr::Text(s) => {
                let mut it = s.split_whitespace();
                match (it.next(), it.next(), it.next()) {
                    (Some("flat"), Some(v), None) => v
                        .parse::<f64>()
                        .map(Spectrum::flat)
                        .map_err(|_| de::Error::custom(format!("bad flat spectrum value `{v}`"))),
                    _ => Err(de::Error::custom(format!(
                        "spectrum must be `flat <value>` or a list of {BANDS} numbers, got `{s}`"
                    ))),
                }
            }
            SpectrumRepr::List(v) => {
                let n = v.len();
                let arr: [f64; BANDS] = v.try_into().map_err(|_| {
                    de::Error::custom(format!("spectrum list needs {BANDS} values, got {n}"))
                })?;
                Ok(Spectrum(arr))
            }
        }
    }
}

impl Serialize for Spectrum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.iter().all(|&v| v == self.0[0]) {
            s.serialize_str(&format!("flat {}", self.0[0]))
        } else {
            self.0.serialize(s)
        }
    }
}
