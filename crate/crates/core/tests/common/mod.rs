//! Independent reference computations shared by the integration tests.
//!
//! Everything here is written as plain nested loops over the definitions,
//! without summed-area tables or the library's padding code.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sureshrink::GrayImage;

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn random_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = StdRng::seed_from_u64(seed);
    let data = (0..width * height).map(|_| rng.random_range(0.0..255.0)).collect();
    GrayImage::new(width, height, data).unwrap()
}

/// Piecewise-smooth test image with edges, closer to a natural image than
/// uniform noise.
pub fn structured_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = StdRng::seed_from_u64(seed);
    let (a, b, c): (f64, f64, f64) = (
        rng.random_range(0.05..0.3),
        rng.random_range(0.05..0.3),
        rng.random_range(40.0..200.0),
    );
    GrayImage::from_fn(width, height, |r, col| {
        let base = 60.0 + 40.0 * (a * r as f64).sin() + 30.0 * (b * col as f64).cos();
        if r + col > width / 2 && r < height * 3 / 4 {
            base + c * 0.5
        } else {
            base
        }
    })
    .unwrap()
}

/// Whole-sample mirror index: -1 -> 1, n -> n - 2.
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

pub fn mirrored(y: &GrayImage, r: isize, c: isize) -> f64 {
    y.get(reflect(r, y.height()), reflect(c, y.width()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelfWeight {
    One,
    Zero,
    MaxOther,
}

pub struct NaiveNlm {
    pub x_hat: Vec<f64>,
    pub weight_sum: Vec<f64>,
    pub second_moment: Vec<f64>,
}

fn naive_ssd(y: &GrayImage, pr: isize, r: isize, c: isize, rk: isize, ck: isize) -> f64 {
    let mut s = 0.0;
    for jy in -pr..=pr {
        for jx in -pr..=pr {
            let d = mirrored(y, r + jy, c + jx) - mirrored(y, rk + jy, ck + jx);
            s += d * d;
        }
    }
    s
}

/// NLM estimate of a single pixel: `(x_hat, W, second moment)`.
pub fn naive_nlm_pixel(
    y: &GrayImage,
    pr: usize,
    sr: usize,
    h: f64,
    mode: SelfWeight,
    r: usize,
    c: usize,
) -> (f64, f64, f64) {
    let (pr, sr) = (pr as isize, sr as isize);
    let (r, c) = (r as isize, c as isize);
    let (mut w_sum, mut wy, mut wy2, mut w_max) = (0.0, 0.0, 0.0, 0.0f64);
    for dy in -sr..=sr {
        for dx in -sr..=sr {
            if dy == 0 && dx == 0 {
                continue;
            }
            let w = (-naive_ssd(y, pr, r, c, r + dy, c + dx) / (2.0 * h)).exp();
            let v = mirrored(y, r + dy, c + dx);
            w_sum += w;
            wy += w * v;
            wy2 += w * v * v;
            w_max = w_max.max(w);
        }
    }
    let w0 = match mode {
        SelfWeight::One => 1.0,
        SelfWeight::Zero => 0.0,
        SelfWeight::MaxOther => w_max,
    };
    let v = y.get(r as usize, c as usize);
    w_sum += w0;
    wy += w0 * v;
    wy2 += w0 * v * v;
    (wy / w_sum, w_sum, wy2 / w_sum)
}

pub fn naive_nlm(y: &GrayImage, pr: usize, sr: usize, h: f64, mode: SelfWeight) -> NaiveNlm {
    let mut out = NaiveNlm {
        x_hat: Vec::new(),
        weight_sum: Vec::new(),
        second_moment: Vec::new(),
    };
    for r in 0..y.height() {
        for c in 0..y.width() {
            let (x, w, m) = naive_nlm_pixel(y, pr, sr, h, mode, r, c);
            out.x_hat.push(x);
            out.weight_sum.push(w);
            out.second_moment.push(m);
        }
    }
    out
}

/// Central difference of the estimate at `(r, c)` with respect to `y(r, c)`.
pub fn fd_divergence(y: &GrayImage, pr: usize, sr: usize, h: f64, r: usize, c: usize, step: f64) -> f64 {
    let mut plus = y.clone();
    plus.set(r, c, y.get(r, c) + step);
    let mut minus = y.clone();
    minus.set(r, c, y.get(r, c) - step);
    let xp = naive_nlm_pixel(&plus, pr, sr, h, SelfWeight::One, r, c).0;
    let xm = naive_nlm_pixel(&minus, pr, sr, h, SelfWeight::One, r, c).0;
    (xp - xm) / (2.0 * step)
}

/// Sum over the inclusive rectangle by direct iteration.
pub fn naive_rect_sum(values: &[f64], width: usize, top: usize, left: usize, bottom: usize, right: usize) -> f64 {
    let mut s = 0.0;
    for r in top..=bottom {
        for c in left..=right {
            s += values[r * width + c];
        }
    }
    s
}

/// Minimizer of `a2 p^2 + 2 a1 p` over the grid `0, step, 2 step, ..., 1`.
pub fn grid_minimizer(a1: f64, a2: f64, step: f64) -> (f64, f64) {
    let n = (1.0 / step).round() as usize;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=n {
        let p = k as f64 * step;
        let v = a2 * p * p + 2.0 * a1 * p;
        if v < best.1 {
            best = (p, v);
        }
    }
    best
}

/// One aggregation round from scratch, evaluated literally: for each pixel,
/// visit every anchor whose clipped top-left-anchored block covers it, solve
/// that block's quadratic and average the shrinkage factors with weights
/// `exp(-BSURE / sigma^2)`.
pub fn naive_round(
    y: &GrayImage,
    x_hat: &GrayImage,
    a2: &[f64],
    a1: &[f64],
    a0: &[f64],
    sigma: f64,
    block: usize,
) -> Vec<f64> {
    let (w, h) = (y.width(), y.height());
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (mut v_sum, mut s_sum) = (0.0, 0.0);
            for ar in r.saturating_sub(block - 1)..=r {
                for ac in c.saturating_sub(block - 1)..=c {
                    let bottom = (ar + block).min(h) - 1;
                    let right = (ac + block).min(w) - 1;
                    let s2 = naive_rect_sum(a2, w, ar, ac, bottom, right);
                    let s1 = naive_rect_sum(a1, w, ar, ac, bottom, right);
                    let s0 = naive_rect_sum(a0, w, ar, ac, bottom, right);
                    let area = ((bottom - ar + 1) * (right - ac + 1)) as f64;
                    let p = if s2 > 0.0 {
                        (-s1 / s2).clamp(0.0, 1.0)
                    } else if s1 < 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    let bsure = (s2 * p * p + 2.0 * s1 * p + s0) / area;
                    let v = (-bsure / (sigma * sigma)).exp();
                    v_sum += v;
                    s_sum += v * p;
                }
            }
            let i = r * w + c;
            let xv = x_hat.data()[i];
            out.push(xv + (y.data()[i] - xv) * s_sum / v_sum);
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
