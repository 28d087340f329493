//! Noise the bundled cameraman, denoise it with plain NLM and with blockwise
//! shrinkage, and write the results next to the target directory.
//!
//! ```text
//! cargo run --release --example denoise_bss -- [sigma] [out_dir]
//! ```

use std::path::{Path, PathBuf};

use sureshrink::bss::BssConfig;
use sureshrink::metrics::quality;
use sureshrink::nlm::empirical_bandwidth;
use sureshrink::noise::{add_gaussian, NoiseSpec};
use sureshrink::{denoise, load_pgm, save_pgm, Method, NlmParams};

fn main() -> sureshrink::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map_or(20.0, |s| s.parse().expect("sigma"));
    let out_dir = args.next().map_or_else(|| PathBuf::from("target/examples-out"), PathBuf::from);
    std::fs::create_dir_all(&out_dir)?;

    let clean = load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cameraman.pgm"))?;
    let noisy = add_gaussian(&clean, &NoiseSpec { sigma, seed: 0 })?;
    save_pgm(&noisy, out_dir.join("noisy.pgm"))?;

    let params = NlmParams::new(1, 7, empirical_bandwidth(9, sigma))?;
    for method in [Method::Std, Method::Bss] {
        let out = denoise(&noisy, &params, sigma, method, &BssConfig::default())?;
        let q = quality(&clean, &out.image)?;
        println!(
            "{method}: PSNR {:.2} dB, SSIM {:.4}, {} shrinkage rounds",
            q.psnr,
            q.ssim,
            out.rounds.len()
        );
        save_pgm(&out.image, out_dir.join(format!("{method}.pgm")))?;
    }
    println!("images written to {}", out_dir.display());
    Ok(())
}
