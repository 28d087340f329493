//! Grayscale image container, mirror padding and 8-bit PGM I/O.
//!
//! Intensities are kept as `f64` gray levels (nominally `[0, 255]`) and are
//! never rescaled on load. Clamping and rounding happen only when writing
//! a PGM file.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A row-major grid of finite real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Row/column position of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelIndex {
    pub row: usize,
    pub col: usize,
}

impl PixelIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite value at sample {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image with every pixel set to `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    /// Internal constructor for buffers whose length is already known to match.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn at(&self, idx: PixelIndex) -> f64 {
        self.get(idx.row, idx.col)
    }

    /// Sets a pixel. Panics on non-finite values.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(value.is_finite(), "non-finite intensity");
        self.data[row * self.width + col] = value;
    }

    pub fn same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Per-pixel absolute difference, as used for visual residual images.
    pub fn abs_diff(&self, other: &GrayImage) -> Result<GrayImage> {
        self.same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(Self::from_raw(self.width, self.height, data))
    }

    /// Mirror-extends the image by `margin` pixels on every side.
    ///
    /// Reflection does not repeat the edge sample: index `-1` maps to `1`.
    pub fn pad_symmetric(&self, margin: usize) -> Result<GrayImage> {
        if margin > 0 && (margin >= self.width || margin >= self.height) {
            return Err(Error::MarginTooLarge {
                margin,
                width: self.width,
                height: self.height,
            });
        }
        let pw = self.width + 2 * margin;
        let ph = self.height + 2 * margin;
        let mut data = Vec::with_capacity(pw * ph);
        for pr in 0..ph {
            let r = reflect(pr as isize - margin as isize, self.height);
            let row = &self.data[r * self.width..(r + 1) * self.width];
            for pc in 0..pw {
                data.push(row[reflect(pc as isize - margin as isize, self.width)]);
            }
        }
        Ok(Self::from_raw(pw, ph, data))
    }
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// Decodes a P5 (binary) or P2 (ASCII) PGM with maxval at most 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => {
            return Err(Error::MalformedHeader(
                "missing P5/P2 magic number".to_string(),
            ))
        }
    };
    cur.pos = 2;
    let width = cur.next_number("width")?;
    let height = cur.next_number("height")?;
    let maxval = cur.next_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval must be positive".to_string()));
    }
    if maxval > 255 {
        return Err(Error::MaxvalTooLarge(maxval));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width * height;

    let data = if binary {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            Some(_) => {
                return Err(Error::MalformedHeader(
                    "expected whitespace after maxval".to_string(),
                ))
            }
            None => {}
        }
        let raster = &bytes[cur.pos.min(bytes.len())..];
        if raster.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].iter().map(|&b| f64::from(b)).collect()
    } else {
        let mut data = Vec::with_capacity(expected);
        for found in 0..expected {
            match cur.try_number()? {
                Some(v) if v <= maxval => data.push(f64::from(v)),
                Some(v) => {
                    return Err(Error::MalformedHeader(format!(
                        "sample {v} exceeds maxval {maxval}"
                    )))
                }
                None => return Err(Error::TruncatedPayload { expected, found }),
            }
        }
        data
    };
    GrayImage::new(width, height, data)
}

/// Encodes as P5 with maxval 255, clamping to `[0, 255]` and rounding half away from zero.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.data.iter().map(|&v| to_byte(v)));
    out
}

#[inline]
pub(crate) fn to_byte(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    decode_pgm(&bytes)
}

pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn try_number(&mut self) -> Result<Option<u32>> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.bytes.get(self.pos) {
                None => Ok(None),
                Some(&b) => Err(Error::MalformedHeader(format!(
                    "unexpected byte 0x{b:02x} at offset {}",
                    self.pos
                ))),
            };
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse()
            .map(Some)
            .map_err(|_| Error::MalformedHeader(format!("number out of range: {text}")))
    }

    fn next_number(&mut self, what: &str) -> Result<u32> {
        self.try_number()?
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))
    }
}
