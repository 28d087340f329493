//! Non-local means denoising with SURE risk maps and blockwise SURE shrinkage.
//!
//! The pipeline is:
//!
//! 1. [`nlm::nlm_denoise`] produces the NLM estimate together with the
//!    per-pixel divergence and SURE map.
//! 2. [`bss::bss_shrink`] blends the estimate back toward the noisy image,
//!    choosing one shrinkage per overlapping block so that the block's SURE
//!    is minimal, and aggregates the blocks with SURE-based weights.
//!
//! [`pipeline::denoise`] wraps both steps. See the crate's `examples/`
//! directory for runnable walkthroughs of each piece.

pub mod bss;
pub mod cli;
pub mod error;
pub mod image;
pub mod integral;
pub mod metrics;
pub mod nlm;
pub mod noise;
pub mod pipeline;

pub use error::{Error, Result};
pub use image::{load_pgm, save_pgm, GrayImage, PixelIndex};
pub use nlm::{CenterWeight, NlmOutput, NlmParams};
pub use pipeline::{denoise, Method};
