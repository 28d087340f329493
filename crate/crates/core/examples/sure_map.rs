//! Per-pixel risk estimates of an NLM run, compared against the true error
//! that is only available because we know the clean image.

use std::path::Path;

use sureshrink::metrics::mse;
use sureshrink::nlm::nlm_denoise;
use sureshrink::noise::{add_gaussian, NoiseSpec};
use sureshrink::{load_pgm, NlmParams};

fn main() -> sureshrink::Result<()> {
    let clean = load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cameraman.pgm"))?;
    let sigma = 20.0;
    let noisy = add_gaussian(&clean, &NoiseSpec { sigma, seed: 3 })?;

    println!("{:>8} {:>10} {:>10}", "h", "SURE", "true MSE");
    for h in [600.0, 1200.0, 1800.0, 3600.0, 7200.0] {
        let out = nlm_denoise(&noisy, &NlmParams::new(1, 7, h)?, sigma)?;
        let sure = out.sure().expect("std center weight gives risk maps");
        println!("{h:>8.0} {sure:>10.2} {:>10.2}", mse(&clean, &out.x_hat)?);
    }

    // where does the estimator expect to do badly?
    let out = nlm_denoise(&noisy, &NlmParams::new(1, 7, 1800.0)?, sigma)?;
    let psure = out.psure().unwrap();
    let div = out.divergence().unwrap();
    let (lo, hi) = psure.min_max();
    println!("PSURE range [{lo:.1}, {hi:.1}], mean divergence {:.3}", div.mean());
    Ok(())
}
