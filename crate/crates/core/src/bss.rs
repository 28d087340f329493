//! Blockwise SURE shrinkage.
//!
//! Shrinking a denoised pixel back toward its noisy value,
//! `x' = (1 - q) x_hat + q y`, changes its SURE contribution to the quadratic
//! `a2 q^2 + 2 a1 q + a0` with
//!
//! * `a2 = (y - x_hat)^2`
//! * `a1 = sigma^2 div - psure`
//! * `a0 = psure`
//!
//! Summing the coefficients over a square block gives the block risk as a
//! quadratic in one shared shrinkage `p`, minimized at `-A1 / A2`. Each
//! block then votes for its pixels with weight `exp(-BSURE(p*) / sigma^2)`,
//! and the votes are accumulated over rounds of growing block size until the
//! estimate stops changing.
//!
//! Blocks are anchored at their top-left pixel and clipped at the right and
//! bottom borders, so every pixel anchors exactly one block. All block and
//! gather sums go through summed-area tables, which makes the cost of a
//! round independent of the block size.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, PixelIndex};
use crate::integral::IntegralImage;
use crate::nlm::NlmOutput;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_INITIAL_BLOCK: usize = 7;

/// Per-pixel coefficients of the risk-after-shrinkage quadratic.
#[derive(Debug, Clone)]
pub struct ShrinkCoeffs {
    pub a2: GrayImage,
    pub a1: GrayImage,
    pub a0: GrayImage,
    pub sigma: f64,
}

impl ShrinkCoeffs {
    /// Risk of pixel `i` after shrinking with parameter `q`.
    pub fn psure_at(&self, i: usize, q: f64) -> f64 {
        let (a2, a1, a0) = (self.a2.data()[i], self.a1.data()[i], self.a0.data()[i]);
        a2 * q * q + 2.0 * a1 * q + a0
    }
}

/// Computes the shrinkage coefficients from a std-mode NLM run on `y`.
pub fn pixel_coeffs(y: &GrayImage, nlm: &NlmOutput) -> Result<ShrinkCoeffs> {
    y.same_dims(&nlm.x_hat)?;
    let risk = nlm.risk.as_ref().ok_or_else(|| {
        Error::InvalidParam(format!(
            "shrinkage needs SURE maps, which the '{}' center weight does not provide",
            nlm.params.center_weight
        ))
    })?;
    let s2 = nlm.sigma * nlm.sigma;
    let n = y.len();
    let mut a2 = Vec::with_capacity(n);
    let mut a1 = Vec::with_capacity(n);
    let mut a0 = Vec::with_capacity(n);
    for i in 0..n {
        let r = y.data()[i] - nlm.x_hat.data()[i];
        let psure = risk.psure.data()[i];
        a2.push(r * r);
        a1.push(s2 * risk.divergence.data()[i] - psure);
        a0.push(psure);
    }
    let (w, h) = (y.width(), y.height());
    Ok(ShrinkCoeffs {
        a2: GrayImage::new(w, h, a2)?,
        a1: GrayImage::new(w, h, a1)?,
        a0: GrayImage::new(w, h, a0)?,
        sigma: nlm.sigma,
    })
}

/// Minimizer of `a2 p^2 + 2 a1 p` over `p` in `[0, 1]`.
///
/// With `a2 = 0` the objective is linear and the minimizer is an endpoint.
#[inline]
pub fn optimal_shrinkage(a1: f64, a2: f64) -> f64 {
    if a2 > 0.0 {
        (-a1 / a2).clamp(0.0, 1.0)
    } else if a1 < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Block risk under uniform shrinkage `p`: `(A2 p^2 + 2 A1 p + A0) / area`.
#[inline]
pub fn bsure_value(a2: f64, a1: f64, a0: f64, p: f64, area: usize) -> f64 {
    (a2 * p * p + 2.0 * a1 * p + a0) / area as f64
}

/// Aggregation weight `exp(-bsure / sigma^2)`.
#[inline]
pub fn block_weight(bsure: f64, sigma: f64) -> f64 {
    (-bsure / (sigma * sigma)).exp()
}

/// Summed-area tables over the three coefficient planes.
#[derive(Debug, Clone)]
pub struct CoeffTables {
    a2: IntegralImage,
    a1: IntegralImage,
    a0: IntegralImage,
}

impl CoeffTables {
    pub fn new(coeffs: &ShrinkCoeffs) -> Self {
        Self {
            a2: IntegralImage::from_image(&coeffs.a2),
            a1: IntegralImage::from_image(&coeffs.a1),
            a0: IntegralImage::from_image(&coeffs.a0),
        }
    }

    pub fn width(&self) -> usize {
        self.a2.width()
    }

    pub fn height(&self) -> usize {
        self.a2.height()
    }
}

/// Summed coefficients of one clipped block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCoeffs {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub area: usize,
}

impl BlockCoeffs {
    pub fn optimal(&self) -> f64 {
        optimal_shrinkage(self.a1, self.a2)
    }

    pub fn bsure(&self, p: f64) -> f64 {
        bsure_value(self.a2, self.a1, self.a0, p, self.area)
    }
}

/// Coefficient sums over the `block_size` square whose top-left corner is
/// `anchor`, clipped to the image.
pub fn block_coeffs(
    tables: &CoeffTables,
    anchor: PixelIndex,
    block_size: usize,
) -> Result<BlockCoeffs> {
    let (w, h) = (tables.width(), tables.height());
    if block_size == 0 || anchor.row >= h || anchor.col >= w {
        return Err(Error::InvalidParam(format!(
            "empty block at ({}, {}) of size {block_size}",
            anchor.row, anchor.col
        )));
    }
    Ok(block_coeffs_unchecked(tables, anchor.row, anchor.col, block_size))
}

#[inline]
fn block_coeffs_unchecked(t: &CoeffTables, row: usize, col: usize, block_size: usize) -> BlockCoeffs {
    let bottom = (row + block_size).min(t.height()) - 1;
    let right = (col + block_size).min(t.width()) - 1;
    BlockCoeffs {
        a2: t.a2.rect_sum_unchecked(row, col, bottom, right),
        a1: t.a1.rect_sum_unchecked(row, col, bottom, right),
        a0: t.a0.rect_sum_unchecked(row, col, bottom, right),
        area: (bottom - row + 1) * (right - col + 1),
    }
}

/// Shrinks the whole image with the single parameter that minimizes the
/// global SURE, the one-block special case of the blockwise scheme.
pub fn global_shrink(y: &GrayImage, x_hat: &GrayImage, coeffs: &ShrinkCoeffs) -> Result<(f64, GrayImage)> {
    y.same_dims(x_hat)?;
    let tables = CoeffTables::new(coeffs);
    let block = block_coeffs(&tables, PixelIndex::new(0, 0), y.width().max(y.height()))?;
    let p = block.optimal();
    let data = y
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(&yv, &xv)| (1.0 - p) * xv + p * yv)
        .collect();
    Ok((p, GrayImage::new(y.width(), y.height(), data)?))
}

/// Summary of one aggregation round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    /// 1-based
    pub round: usize,
    pub block_size: usize,
    pub mean_bsure: f64,
    pub mean_p_star: f64,
    /// Mean squared change of the estimate against the previous round.
    pub delta: f64,
}

/// Accumulators and per-round maps of the growing-block iteration.
#[derive(Debug, Clone)]
pub struct BssState {
    pub block_size: usize,
    pub tol: f64,
    pub rounds: usize,
    tables: CoeffTables,
    /// optimal shrinkage per anchor, last round
    pub p_star: GrayImage,
    /// block risk at `p_star` per anchor, last round
    pub bsure: GrayImage,
    /// aggregation weight per anchor, last round
    pub weights: GrayImage,
    acc_weight: Vec<f64>,
    acc_shrink: Vec<f64>,
    /// current estimate
    pub x_out: GrayImage,
    /// estimate before the last round
    pub prev: GrayImage,
}

impl BssState {
    pub fn new(
        x_hat: &GrayImage,
        coeffs: &ShrinkCoeffs,
        initial_block: usize,
        tol: f64,
    ) -> Result<Self> {
        x_hat.same_dims(&coeffs.a0)?;
        if initial_block == 0 {
            return Err(Error::InvalidParam("block size must be at least 1".to_string()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParam(format!("tolerance must be positive, got {tol}")));
        }
        let (w, h) = (x_hat.width(), x_hat.height());
        let n = w * h;
        Ok(Self {
            block_size: initial_block,
            tol,
            rounds: 0,
            tables: CoeffTables::new(coeffs),
            p_star: GrayImage::from_raw(w, h, vec![0.0; n]),
            bsure: GrayImage::from_raw(w, h, vec![0.0; n]),
            weights: GrayImage::from_raw(w, h, vec![0.0; n]),
            acc_weight: vec![0.0; n],
            acc_shrink: vec![0.0; n],
            x_out: x_hat.clone(),
            prev: x_hat.clone(),
        })
    }

    /// Accumulated aggregation weight per pixel.
    pub fn acc_weight(&self) -> &[f64] {
        &self.acc_weight
    }

    /// Accumulated weighted shrinkage per pixel.
    pub fn acc_shrink(&self) -> &[f64] {
        &self.acc_shrink
    }

    /// Runs one aggregation round at the current block size.
    ///
    /// Does not advance the block size; see [`BssState::advance`].
    pub fn round(&mut self, y: &GrayImage, x_hat: &GrayImage, sigma: f64) -> Result<RoundStats> {
        y.same_dims(x_hat)?;
        y.same_dims(&self.x_out)?;
        if !(sigma > 0.0) {
            return Err(Error::InvalidParam(format!(
                "aggregation weights need sigma > 0, got {sigma}"
            )));
        }
        let (w, h) = (y.width(), y.height());
        let b = self.block_size;
        let tables = &self.tables;

        // per-anchor optimum, risk and weight
        let mut p_star = vec![0.0; w * h];
        let mut bsure = vec![0.0; w * h];
        let mut weight = vec![0.0; w * h];
        p_star
            .par_chunks_mut(w)
            .zip(bsure.par_chunks_mut(w))
            .zip(weight.par_chunks_mut(w))
            .enumerate()
            .for_each(|(r, ((pr, br), vr))| {
                for c in 0..w {
                    let blk = block_coeffs_unchecked(tables, r, c, b);
                    let p = blk.optimal();
                    let risk = blk.bsure(p);
                    pr[c] = p;
                    br[c] = risk;
                    vr[c] = block_weight(risk, sigma);
                }
            });

        // gather over all anchors whose block covers each pixel
        let vp: Vec<f64> = weight.iter().zip(&p_star).map(|(v, p)| v * p).collect();
        let ii_v = IntegralImage::build_unchecked(&weight, w, h);
        let ii_vp = IntegralImage::build_unchecked(&vp, w, h);
        let mut out = vec![0.0; w * h];
        out.par_chunks_mut(w)
            .zip(self.acc_weight.par_chunks_mut(w))
            .zip(self.acc_shrink.par_chunks_mut(w))
            .enumerate()
            .for_each(|(r, ((or, vr), sr))| {
                let top = (r + 1).saturating_sub(b);
                for c in 0..w {
                    let left = (c + 1).saturating_sub(b);
                    vr[c] += ii_v.rect_sum_unchecked(top, left, r, c);
                    sr[c] += ii_vp.rect_sum_unchecked(top, left, r, c);
                    let i = r * w + c;
                    let xv = x_hat.data()[i];
                    or[c] = xv + (y.data()[i] - xv) * sr[c] / vr[c];
                }
            });

        let n = (w * h) as f64;
        let delta = out
            .iter()
            .zip(self.x_out.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        self.prev = std::mem::replace(&mut self.x_out, GrayImage::new(w, h, out)?);
        self.rounds += 1;
        let stats = RoundStats {
            round: self.rounds,
            block_size: b,
            mean_bsure: bsure.iter().sum::<f64>() / n,
            mean_p_star: p_star.iter().sum::<f64>() / n,
            delta,
        };
        self.p_star = GrayImage::new(w, h, p_star)?;
        self.bsure = GrayImage::new(w, h, bsure)?;
        self.weights = GrayImage::new(w, h, weight)?;
        Ok(stats)
    }

    /// Grows the block by one pixel for the next round.
    pub fn advance(&mut self) {
        self.block_size += 1;
    }

    pub fn converged(&self, stats: &RoundStats) -> bool {
        stats.delta <= self.tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BssConfig {
    pub tol: f64,
    pub initial_block: usize,
}

impl Default for BssConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            initial_block: DEFAULT_INITIAL_BLOCK,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BssOutput {
    pub image: GrayImage,
    pub rounds: Vec<RoundStats>,
}

/// Runs the growing-block iteration to convergence.
///
/// Stops once the mean squared change between rounds is at most `tol`, or
/// when the block would exceed the smaller image side. With `sigma == 0`
/// there is nothing to shrink against and `x_hat` is returned unchanged.
pub fn bss_shrink(y: &GrayImage, nlm: &NlmOutput, config: &BssConfig) -> Result<BssOutput> {
    bss_shrink_with(y, nlm, config, |_, _| {})
}

/// Like [`bss_shrink`], calling `on_round` after every round.
pub fn bss_shrink_with(
    y: &GrayImage,
    nlm: &NlmOutput,
    config: &BssConfig,
    mut on_round: impl FnMut(&RoundStats, &BssState),
) -> Result<BssOutput> {
    let coeffs = pixel_coeffs(y, nlm)?;
    if nlm.sigma == 0.0 {
        return Ok(BssOutput {
            image: nlm.x_hat.clone(),
            rounds: Vec::new(),
        });
    }
    let max_block = y.width().min(y.height());
    let initial = config.initial_block.min(max_block);
    let mut state = BssState::new(&nlm.x_hat, &coeffs, initial, config.tol)?;
    let mut rounds = Vec::new();
    loop {
        let stats = state.round(y, &nlm.x_hat, nlm.sigma)?;
        on_round(&stats, &state);
        rounds.push(stats);
        if state.converged(&stats) || state.block_size >= max_block {
            break;
        }
        state.advance();
    }
    Ok(BssOutput {
        image: state.x_out,
        rounds,
    })
}

pub const ROUND_CSV_HEADER: &str = "round,block_size,mean_bsure,mean_p_star,delta";

/// Writes per-round diagnostics as CSV.
pub fn write_round_csv(mut out: impl Write, rounds: &[RoundStats]) -> Result<()> {
    writeln!(out, "{ROUND_CSV_HEADER}")?;
    for s in rounds {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6e}",
            s.round, s.block_size, s.mean_bsure, s.mean_p_star, s.delta
        )?;
    }
    Ok(())
}
