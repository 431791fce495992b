//! On-disk containers.
//!
//! * Float container: a short text header followed by little-endian `f32`
//!   samples, band-planar, rows top to bottom.
//!
//!   ```text
//!   FOGSIM-FLOAT 1
//!   kind radiance
//!   width 64
//!   height 48
//!   bands 31
//!   wavelengths 400 410 ... 700      (or `wavelengths -` for non-spectral data)
//!   end
//!   ```
//!
//! * Raw mosaic: `P5` PNM whose 16-bit samples are stored **little-endian**,
//!   with a TOML sidecar holding the sensor snapshot.
//! * Display images: binary 8-bit `P6` PPM.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const FLOAT_MAGIC: &str = "FOGSIM-FLOAT 1";

#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub kind: String,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub wavelengths: Option<Vec<f64>>,
    /// Band-planar samples: `data[(band * height + y) * width + x]`.
    pub data: Vec<f32>,
}

impl FloatImage {
    #[inline]
    pub fn at(&self, band: usize, x: usize, y: usize) -> f32 {
        self.data[(band * self.height + y) * self.width + x]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(256 + self.data.len() * 4);
        let wl = match &self.wavelengths {
            Some(w) => w.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" "),
            None => "-".to_string(),
        };
        out.extend_from_slice(
            format!(
                "{FLOAT_MAGIC}\nkind {}\nwidth {}\nheight {}\nbands {}\nwavelengths {}\nend\n",
                self.kind, self.width, self.height, self.bands, wl
            )
            .as_bytes(),
        );
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |m: &str| Error::Format {
            path: path.to_path_buf(),
            message: m.to_string(),
        };
        let mut pos = 0usize;
        let mut next_line = || -> Result<String> {
            let rest = &bytes[pos..];
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("truncated header"))?;
            pos += nl + 1;
            String::from_utf8(rest[..nl].to_vec()).map_err(|_| bad("header is not UTF-8"))
        };
        if next_line()? != FLOAT_MAGIC {
            return Err(bad("missing magic line"));
        }
        let mut kind = None;
        let (mut width, mut height, mut bands) = (None, None, None);
        let mut wavelengths = None;
        loop {
            let line = next_line()?;
            if line == "end" {
                break;
            }
            let (key, value) = line.split_once(' ').ok_or_else(|| bad("malformed header line"))?;
            let num = |v: &str| v.parse::<usize>().map_err(|_| bad("non-integer dimension"));
            match key {
                "kind" => kind = Some(value.to_string()),
                "width" => width = Some(num(value)?),
                "height" => height = Some(num(value)?),
                "bands" => bands = Some(num(value)?),
                "wavelengths" => {
                    wavelengths = Some(if value == "-" {
                        None
                    } else {
                        Some(
                            value
                                .split_whitespace()
                                .map(|w| w.parse::<f64>().map_err(|_| bad("bad wavelength")))
                                .collect::<Result<Vec<_>>>()?,
                        )
                    })
                }
                other => return Err(bad(&format!("unknown header key `{other}`"))),
            }
        }
        let (width, height, bands) = match (width, height, bands) {
            (Some(w), Some(h), Some(b)) => (w, h, b),
            _ => return Err(bad("header lacks width/height/bands")),
        };
        let wavelengths = wavelengths.ok_or_else(|| bad("header lacks wavelengths"))?;
        if let Some(w) = &wavelengths {
            if w.len() != bands {
                return Err(bad("wavelength count differs from band count"));
            }
        }
        let n = width * height * bands;
        let body = &bytes[pos..];
        if body.len() != n * 4 {
            return Err(bad(&format!("expected {} data bytes, found {}", n * 4, body.len())));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(FloatImage {
            kind: kind.unwrap_or_default(),
            width,
            height,
            bands,
            wavelengths,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        FloatImage::from_bytes(&bytes, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }
}

/// Writes via a sibling temp file and rename so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// 16-bit grayscale PNM body with little-endian samples.
pub fn encode_pgm16_le(width: usize, height: usize, maxval: u16, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Parsed PNM header plus offset of the binary body.
struct PnmHeader {
    magic: String,
    width: usize,
    height: usize,
    maxval: usize,
    body: usize,
}

fn parse_pnm_header(bytes: &[u8], path: &Path) -> Result<PnmHeader> {
    let bad = |m: &str| Error::Format {
        path: path.to_path_buf(),
        message: m.to_string(),
    };
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(bad("truncated PNM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the body
    i += 1;
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PNM header number"));
    Ok(PnmHeader {
        magic: fields[0].clone(),
        width: num(&fields[1])?,
        height: num(&fields[2])?,
        maxval: num(&fields[3])?,
        body: i,
    })
}

/// Reads the little-endian 16-bit PNM written by [`encode_pgm16_le`].
pub fn decode_pgm16_le(bytes: &[u8], path: &Path) -> Result<(usize, usize, u16, Vec<u16>)> {
    let h = parse_pnm_header(bytes, path)?;
    let bad = |m: &str| Error::Format {
        path: path.to_path_buf(),
        message: m.to_string(),
    };
    if h.magic != "P5" || h.maxval < 256 || h.maxval > 65535 {
        return Err(bad("expected a 16-bit P5 image"));
    }
    let body = &bytes[h.body.min(bytes.len())..];
    if body.len() != h.width * h.height * 2 {
        return Err(bad("raw body size does not match header"));
    }
    let samples = body.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok((h.width, h.height, h.maxval as u16, samples))
}

pub fn encode_ppm8(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Reads an RGB image into interleaved values normalised to `[0, 1]`
/// (still gamma-encoded). Accepts binary PPM (8 or 16-bit, standard
/// big-endian) and 8/16-bit PNG.
pub fn read_rgb_unit(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::Format {
        path: path.to_path_buf(),
        message: m,
    };
    if bytes.starts_with(b"P6") {
        let h = parse_pnm_header(&bytes, path)?;
        let body = &bytes[h.body.min(bytes.len())..];
        let n = h.width * h.height * 3;
        let max = h.maxval as f64;
        let values: Vec<f64> = if h.maxval < 256 {
            if body.len() != n {
                return Err(bad("PPM body size does not match header".into()));
            }
            body.iter().map(|&b| b as f64 / max).collect()
        } else {
            if body.len() != 2 * n {
                return Err(bad("PPM body size does not match header".into()));
            }
            body.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / max)
                .collect()
        };
        return Ok((h.width, h.height, values));
    }
    let img = image::load_from_memory(&bytes).map_err(|e| bad(e.to_string()))?;
    let rgb = img.to_rgb16();
    let (w, h) = rgb.dimensions();
    let values = rgb.as_raw().iter().map(|&v| v as f64 / 65535.0).collect();
    Ok((w as usize, h as usize, values))
}
