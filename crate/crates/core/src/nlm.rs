//! Non-local means with per-pixel SURE intermediates.
//!
//! Every estimate is a weighted average over a square search window, with
//! weights `exp(-SSD / 2h)` computed from the squared distance between the
//! square patches around the two pixels. Borders are handled by mirror
//! padding the noisy image by `patch_radius + search_radius`.
//!
//! Two evaluation routes share the same accumulation order (displacements in
//! row-major order):
//!
//! * [`nlm_denoise`] builds one summed-area table of squared differences per
//!   displacement, so the patch distance costs four lookups regardless of
//!   patch size.
//! * [`nlm_denoise_brute`] evaluates every patch distance with a direct loop
//!   and is kept as the reference implementation.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, PixelIndex};
use crate::integral::IntegralImage;

/// Output rows per parallel work unit. Fixed so that results do not depend
/// on the number of worker threads.
const BAND_ROWS: usize = 16;

/// How the self-weight `w(l, l)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CenterWeight {
    /// `w(l, l) = 1`, the plain kernel value.
    Std,
    /// `w(l, l) = 0`.
    Zero,
    /// `w(l, l)` equals the largest weight among the other pixels in the window.
    Max,
}

impl CenterWeight {
    pub fn as_str(self) -> &'static str {
        match self {
            CenterWeight::Std => "std",
            CenterWeight::Zero => "zero",
            CenterWeight::Max => "max",
        }
    }
}

impl fmt::Display for CenterWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CenterWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std" => Ok(CenterWeight::Std),
            "zero" => Ok(CenterWeight::Zero),
            "max" => Ok(CenterWeight::Max),
            other => Err(Error::InvalidParam(format!(
                "unknown center weight mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmParams {
    /// Patch is the `(2r+1) x (2r+1)` square around a pixel.
    pub patch_radius: usize,
    /// Search window is the `(2s+1) x (2s+1)` square around a pixel.
    pub search_radius: usize,
    /// Bandwidth `h` in the kernel `exp(-SSD / 2h)`.
    pub h: f64,
    pub center_weight: CenterWeight,
}

impl NlmParams {
    pub fn new(patch_radius: usize, search_radius: usize, h: f64) -> Result<Self> {
        let params = Self {
            patch_radius,
            search_radius,
            h,
            center_weight: CenterWeight::Std,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_center_weight(mut self, center_weight: CenterWeight) -> Self {
        self.center_weight = center_weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParam(format!(
                "bandwidth h must be positive and finite, got {}",
                self.h
            )));
        }
        Ok(())
    }

    /// Number of pixels in a patch, `|P|`.
    pub fn patch_area(&self) -> usize {
        let side = 2 * self.patch_radius + 1;
        side * side
    }

    pub fn search_area(&self) -> usize {
        let side = 2 * self.search_radius + 1;
        side * side
    }

    pub fn margin(&self) -> usize {
        self.patch_radius + self.search_radius
    }
}

/// `h = fraction * |P| * sigma^2`, the parameterization used for bandwidth sweeps.
pub fn bandwidth_from_fraction(fraction: f64, patch_area: usize, sigma: f64) -> f64 {
    fraction * patch_area as f64 * sigma * sigma
}

/// Rule-of-thumb bandwidth `h = |P| * sigma^2 / 2`.
pub fn empirical_bandwidth(patch_area: usize, sigma: f64) -> f64 {
    bandwidth_from_fraction(0.5, patch_area, sigma)
}

/// Kernel weight for a patch distance: `exp(-ssd / 2h)`.
#[inline]
pub fn nlm_weight(ssd: f64, h: f64) -> f64 {
    (-ssd / (2.0 * h)).exp()
}

/// Per-pixel SURE contribution: `(y - x)^2 + 2 sigma^2 div - sigma^2`.
#[inline]
pub fn psure_pixel(y: f64, x_hat: f64, divergence: f64, sigma: f64) -> f64 {
    let r = y - x_hat;
    let s2 = sigma * sigma;
    r * r + 2.0 * s2 * divergence - s2
}

/// Global SURE as the mean of a per-pixel map.
pub fn sure_global(psure: &GrayImage) -> f64 {
    psure.mean()
}

/// SURE intermediates, only defined for [`CenterWeight::Std`].
#[derive(Debug, Clone)]
pub struct RiskMaps {
    /// `d x_hat(l) / d y(l)` per pixel.
    pub divergence: GrayImage,
    pub psure: GrayImage,
    /// Mean of `psure`.
    pub sure: f64,
}

#[derive(Debug, Clone)]
pub struct NlmOutput {
    pub x_hat: GrayImage,
    /// `W(l)`, the sum of weights in the window.
    pub weight_sum: GrayImage,
    /// Weighted mean of `y^2` over the window.
    pub second_moment: GrayImage,
    pub risk: Option<RiskMaps>,
    pub params: NlmParams,
    pub sigma: f64,
    pub timing: NlmTiming,
}

/// Wall time spent in the two phases of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NlmTiming {
    /// Weights and weighted averages.
    pub weights: Duration,
    /// Divergence, PSURE and SURE.
    pub risk: Duration,
}

impl NlmOutput {
    pub fn divergence(&self) -> Option<&GrayImage> {
        self.risk.as_ref().map(|r| &r.divergence)
    }

    pub fn psure(&self) -> Option<&GrayImage> {
        self.risk.as_ref().map(|r| &r.psure)
    }

    pub fn sure(&self) -> Option<f64> {
        self.risk.as_ref().map(|r| r.sure)
    }
}

/// Per-pixel running sums for one band of output rows.
struct BandSums {
    w: Vec<f64>,
    wy: Vec<f64>,
    wy2: Vec<f64>,
    wmax: Vec<f64>,
    /// sum of w(l, l-i) * (y(l) - y(l+i)) over patch offsets i
    t1: Vec<f64>,
    /// sum of w(l, l-i) * (y(l) - y(l+i)) * y(l-i)
    t2: Vec<f64>,
}

impl BandSums {
    fn new(n: usize) -> Self {
        Self {
            w: vec![0.0; n],
            wy: vec![0.0; n],
            wy2: vec![0.0; n],
            wmax: vec![0.0; n],
            t1: vec![0.0; n],
            t2: vec![0.0; n],
        }
    }
}

/// Noisy image with its mirror extension.
struct Padded {
    img: GrayImage,
    margin: usize,
}

impl Padded {
    #[inline]
    fn at(&self, r: isize, c: isize) -> f64 {
        let m = self.margin as isize;
        self.img.get((r + m) as usize, (c + m) as usize)
    }
}

fn check_inputs(y: &GrayImage, params: &NlmParams, sigma: f64) -> Result<Padded> {
    params.validate()?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    let margin = params.margin();
    Ok(Padded {
        img: y.pad_symmetric(margin)?,
        margin,
    })
}

/// Runs NLM using one summed-area table of squared differences per displacement.
pub fn nlm_denoise(y: &GrayImage, params: &NlmParams, sigma: f64) -> Result<NlmOutput> {
    let start = Instant::now();
    let padded = check_inputs(y, params, sigma)?;
    let (width, height) = (y.width(), y.height());
    let bands: Vec<(usize, usize)> = (0..height)
        .step_by(BAND_ROWS)
        .map(|r0| (r0, (r0 + BAND_ROWS).min(height)))
        .collect();
    let sums: Vec<BandSums> = bands
        .par_iter()
        .map(|&(r0, r1)| fast_band(&padded, params, width, r0, r1))
        .collect();
    let merged = merge_bands(sums, width * height);
    finish(y, params, sigma, merged, None, start)
}

fn fast_band(padded: &Padded, params: &NlmParams, width: usize, r0: usize, r1: usize) -> BandSums {
    let pr = params.patch_radius;
    let sr = params.search_radius as isize;
    let pw = padded.img.width();
    let pdata = padded.img.data();
    let m = padded.margin;
    let rows = r1 - r0;
    let mut sums = BandSums::new(rows * width);

    // difference plane covers every patch pixel of the band
    let plane_h = rows + 2 * pr;
    let plane_w = width + 2 * pr;
    let row0 = r0 + m - pr;
    let col0 = m - pr;
    let mut plane = vec![0.0; plane_h * plane_w];
    let two_h = 2.0 * params.h;
    let center = params.center_weight;
    let track_div = center == CenterWeight::Std;

    for dy in -sr..=sr {
        for dx in -sr..=sr {
            let is_center = dy == 0 && dx == 0;
            if is_center && center != CenterWeight::Std {
                continue;
            }
            let shift = dy * pw as isize + dx;
            for pr_ in 0..plane_h {
                let base = (row0 + pr_) * pw + col0;
                let out = &mut plane[pr_ * plane_w..(pr_ + 1) * plane_w];
                for (c, o) in out.iter_mut().enumerate() {
                    let q = base + c;
                    let d = pdata[q] - pdata[(q as isize + shift) as usize];
                    *o = d * d;
                }
            }
            let ii = IntegralImage::build_unchecked(&plane, plane_w, plane_h);
            let near = track_div && dy.unsigned_abs() <= pr && dx.unsigned_abs() <= pr;

            for r in 0..rows {
                let prow = (r0 + r + m) * pw + m;
                for c in 0..width {
                    let ssd = ii
                        .rect_sum_unchecked(r, c, r + 2 * pr, c + 2 * pr)
                        .max(0.0);
                    let w = (-ssd / two_h).exp();
                    let p = prow + c;
                    let yk = pdata[(p as isize + shift) as usize];
                    let i = r * width + c;
                    sums.w[i] += w;
                    sums.wy[i] += w * yk;
                    sums.wy2[i] += w * yk * yk;
                    if !is_center && w > sums.wmax[i] {
                        sums.wmax[i] = w;
                    }
                    if near {
                        // displacement d = -i for patch offset i
                        let yl = pdata[p];
                        let diff = yl - pdata[(p as isize - shift) as usize];
                        sums.t1[i] += w * diff;
                        sums.t2[i] += w * diff * yk;
                    }
                }
            }
        }
    }
    sums
}

/// Reference NLM: patch distances by direct summation.
pub fn nlm_denoise_brute(y: &GrayImage, params: &NlmParams, sigma: f64) -> Result<NlmOutput> {
    let start = Instant::now();
    let padded = check_inputs(y, params, sigma)?;
    let (width, height) = (y.width(), y.height());
    let n = width * height;
    let mut sums = BandSums::new(n);
    let sr = params.search_radius as isize;
    let pr = params.patch_radius as isize;
    let center = params.center_weight;

    for r in 0..height as isize {
        for c in 0..width as isize {
            let i = r as usize * width + c as usize;
            for dy in -sr..=sr {
                for dx in -sr..=sr {
                    let is_center = dy == 0 && dx == 0;
                    if is_center && center != CenterWeight::Std {
                        continue;
                    }
                    let ssd = patch_ssd(&padded, pr, r, c, r + dy, c + dx);
                    let w = nlm_weight(ssd, params.h);
                    let yk = padded.at(r + dy, c + dx);
                    sums.w[i] += w;
                    sums.wy[i] += w * yk;
                    sums.wy2[i] += w * yk * yk;
                    if !is_center && w > sums.wmax[i] {
                        sums.wmax[i] = w;
                    }
                }
            }
        }
    }

    let brute_div = |x_hat: f64, m2: f64, w_sum: f64, idx: PixelIndex| {
        divergence_pixel(&padded, params, idx, x_hat, m2, w_sum)
    };
    finish(y, params, sigma, sums, Some(&brute_div), start)
}

#[inline]
fn patch_ssd(padded: &Padded, pr: isize, r: isize, c: isize, rk: isize, ck: isize) -> f64 {
    let mut ssd = 0.0;
    for jy in -pr..=pr {
        for jx in -pr..=pr {
            let d = padded.at(r + jy, c + jx) - padded.at(rk + jy, ck + jx);
            ssd += d * d;
        }
    }
    ssd
}

/// Derivative of the std-mode estimate at `idx` with respect to its own
/// noisy value, evaluated term by term:
///
/// `(m2 - x^2)/h + w(l,l)/W + sum_i w(l,l-i) (y(l) - y(l+i)) (x - y(l-i)) / (W h)`
///
/// where `i` runs over patch offsets whose mirror `l - i` lies in the search
/// window (the `i = 0` term vanishes).
fn divergence_pixel(
    padded: &Padded,
    params: &NlmParams,
    idx: PixelIndex,
    x_hat: f64,
    second_moment: f64,
    weight_sum: f64,
) -> f64 {
    let h = params.h;
    let pr = params.patch_radius as isize;
    let reach = params.patch_radius.min(params.search_radius) as isize;
    let (r, c) = (idx.row as isize, idx.col as isize);
    let yl = padded.at(r, c);
    let mut third = 0.0;
    for iy in -reach..=reach {
        for ix in -reach..=reach {
            let w = nlm_weight(patch_ssd(padded, pr, r, c, r - iy, c - ix), h);
            third += w / (weight_sum * h)
                * (yl - padded.at(r + iy, c + ix))
                * (x_hat - padded.at(r - iy, c - ix));
        }
    }
    (second_moment - x_hat * x_hat) / h + 1.0 / weight_sum + third
}

fn merge_bands(bands: Vec<BandSums>, n: usize) -> BandSums {
    let mut all = BandSums {
        w: Vec::with_capacity(n),
        wy: Vec::with_capacity(n),
        wy2: Vec::with_capacity(n),
        wmax: Vec::with_capacity(n),
        t1: Vec::with_capacity(n),
        t2: Vec::with_capacity(n),
    };
    for b in bands {
        all.w.extend(b.w);
        all.wy.extend(b.wy);
        all.wy2.extend(b.wy2);
        all.wmax.extend(b.wmax);
        all.t1.extend(b.t1);
        all.t2.extend(b.t2);
    }
    all
}

type DivergenceFn<'a> = dyn Fn(f64, f64, f64, PixelIndex) -> f64 + 'a;

fn finish(
    y: &GrayImage,
    params: &NlmParams,
    sigma: f64,
    mut sums: BandSums,
    divergence_override: Option<&DivergenceFn<'_>>,
    start: Instant,
) -> Result<NlmOutput> {
    let (width, height) = (y.width(), y.height());
    let n = width * height;
    if params.center_weight == CenterWeight::Max {
        for i in 0..n {
            let yl = y.data()[i];
            // no neighbors at all: fall back to a unit self-weight
            let w = if params.search_radius == 0 { 1.0 } else { sums.wmax[i] };
            sums.w[i] += w;
            sums.wy[i] += w * yl;
            sums.wy2[i] += w * yl * yl;
        }
    }

    let mut x_hat = Vec::with_capacity(n);
    let mut m2 = Vec::with_capacity(n);
    for i in 0..n {
        let w = sums.w[i];
        if w > 0.0 {
            x_hat.push(sums.wy[i] / w);
            m2.push(sums.wy2[i] / w);
        } else {
            // zero-CPW with every weight underflowed
            let yl = y.data()[i];
            x_hat.push(yl);
            m2.push(yl * yl);
        }
    }

    let weights_done = Instant::now();
    let risk = if params.center_weight == CenterWeight::Std {
        let h = params.h;
        let mut div = Vec::with_capacity(n);
        let mut psure = Vec::with_capacity(n);
        for i in 0..n {
            let (xl, w) = (x_hat[i], sums.w[i]);
            let d = match divergence_override {
                Some(f) => f(xl, m2[i], w, PixelIndex::new(i / width, i % width)),
                None => (m2[i] - xl * xl) / h + 1.0 / w + (xl * sums.t1[i] - sums.t2[i]) / (w * h),
            };
            div.push(d);
            psure.push(psure_pixel(y.data()[i], xl, d, sigma));
        }
        let psure = GrayImage::new(width, height, psure)?;
        let sure = sure_global(&psure);
        Some(RiskMaps {
            divergence: GrayImage::new(width, height, div)?,
            psure,
            sure,
        })
    } else {
        None
    };

    Ok(NlmOutput {
        x_hat: GrayImage::new(width, height, x_hat)?,
        weight_sum: GrayImage::new(width, height, sums.w)?,
        second_moment: GrayImage::new(width, height, m2)?,
        risk,
        params: *params,
        sigma,
        timing: NlmTiming {
            weights: weights_done - start,
            risk: weights_done.elapsed(),
        },
    })
}
