//! Watching the growing-block iteration: per-round diagnostics and the
//! single-parameter global shrinkage for comparison.

use std::path::Path;

use sureshrink::bss::{bss_shrink_with, global_shrink, pixel_coeffs, write_round_csv, BssConfig};
use sureshrink::metrics::psnr;
use sureshrink::nlm::nlm_denoise;
use sureshrink::noise::{add_gaussian, NoiseSpec};
use sureshrink::{load_pgm, NlmParams};

fn main() -> sureshrink::Result<()> {
    let clean = load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cameraman.pgm"))?;
    let sigma = 20.0;
    let noisy = add_gaussian(&clean, &NoiseSpec { sigma, seed: 0 })?;
    let nlm = nlm_denoise(&noisy, &NlmParams::new(1, 7, 2700.0)?, sigma)?;
    println!("NLM: {:.3} dB", psnr(&clean, &nlm.x_hat)?);

    let coeffs = pixel_coeffs(&noisy, &nlm)?;
    let (p, global) = global_shrink(&noisy, &nlm.x_hat, &coeffs)?;
    println!("one global p = {p:.4}: {:.3} dB", psnr(&clean, &global)?);

    let out = bss_shrink_with(&noisy, &nlm, &BssConfig::default(), |stats, state| {
        if stats.round % 5 == 1 {
            let db = psnr(&clean, &state.x_out).unwrap_or(f64::NAN);
            println!("round {:>3} block {:>3}: {db:.3} dB", stats.round, stats.block_size);
        }
    })?;
    println!("blockwise after {} rounds: {:.3} dB", out.rounds.len(), psnr(&clean, &out.image)?);
    write_round_csv(std::io::stdout().lock(), &out.rounds[..3.min(out.rounds.len())])?;
    Ok(())
}
