//! MSE, PSNR and SSIM between a reference and progressively worse copies.

use std::path::Path;

use sureshrink::metrics::{format_psnr, quality};
use sureshrink::noise::{add_gaussian, NoiseSpec};
use sureshrink::{load_pgm, GrayImage};

fn main() -> sureshrink::Result<()> {
    let clean = load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cameraman.pgm"))?;
    println!("{:<14} {:>10} {:>9} {:>8}", "test image", "MSE", "PSNR", "SSIM");
    let shifted = GrayImage::from_fn(clean.width(), clean.height(), |r, c| clean.get(r, c) + 10.0)?;
    let mut cases = vec![("identical".to_string(), clean.clone()), ("offset +10".to_string(), shifted)];
    for sigma in [5.0, 20.0, 50.0] {
        cases.push((format!("sigma {sigma}"), add_gaussian(&clean, &NoiseSpec { sigma, seed: 1 })?));
    }
    for (name, img) in &cases {
        let q = quality(&clean, img)?;
        println!("{name:<14} {:>10.3} {:>9} {:>8.4}", q.mse, format_psnr(q.psnr), q.ssim);
    }
    Ok(())
}
