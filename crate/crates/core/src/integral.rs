//! Summed-area tables.
//!
//! An [`IntegralImage`] is one row and one column larger than its source;
//! entry `(r, c)` holds the sum of the source over rows `[0, r)` and columns
//! `[0, c)`, so the first row and column are zero. Any inclusive rectangle
//! sum then costs four lookups:
//!
//! `I(b+1, r+1) - I(t, r+1) - I(b+1, l) + I(t, l)`

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone)]
pub struct IntegralImage {
    /// source width
    width: usize,
    /// source height
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    /// Builds the table from a row-major grid in a single pass.
    pub fn build(values: &[f64], width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite sample".to_string()));
        }
        Ok(Self::build_unchecked(values, width, height))
    }

    pub fn from_image(image: &GrayImage) -> Self {
        Self::build_unchecked(image.data(), image.width(), image.height())
    }

    pub(crate) fn build_unchecked(values: &[f64], width: usize, height: usize) -> Self {
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for r in 0..height {
            let src = &values[r * width..(r + 1) * width];
            let (prev, cur) = table[r * stride..(r + 2) * stride].split_at_mut(stride);
            let mut row_sum = 0.0;
            for c in 0..width {
                row_sum += src[c];
                cur[c + 1] = prev[c + 1] + row_sum;
            }
        }
        Self {
            width,
            height,
            table,
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

    /// Cumulative entry: sum over `[0, row) x [0, col)`.
    #[inline]
    pub fn cumulative(&self, row: usize, col: usize) -> f64 {
        self.table[row * (self.width + 1) + col]
    }

    /// Sum over the inclusive rectangle `[top, bottom] x [left, right]`.
    pub fn rect_sum(&self, top: usize, left: usize, bottom: usize, right: usize) -> Result<f64> {
        if top > bottom || left > right || bottom >= self.height || right >= self.width {
            return Err(Error::RectOutOfRange {
                top,
                left,
                bottom,
                right,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.rect_sum_unchecked(top, left, bottom, right))
    }

    #[inline]
    pub(crate) fn rect_sum_unchecked(
        &self,
        top: usize,
        left: usize,
        bottom: usize,
        right: usize,
    ) -> f64 {
        let stride = self.width + 1;
        let t = &self.table;
        let lower = (bottom + 1) * stride;
        let upper = top * stride;
        t[lower + right + 1] - t[upper + right + 1] - t[lower + left] + t[upper + left]
    }
}
