//! Bandwidth sweep for all four estimators, printing best-over-h scores.

use std::path::Path;

use sureshrink::bss::BssConfig;
use sureshrink::metrics::psnr;
use sureshrink::nlm::bandwidth_from_fraction;
use sureshrink::noise::{add_gaussian, NoiseSpec};
use sureshrink::{denoise, load_pgm, Method, NlmParams};

fn main() -> sureshrink::Result<()> {
    let clean = load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/astronaut.pgm"))?;
    let sigma = 20.0;
    let noisy = add_gaussian(&clean, &NoiseSpec { sigma, seed: 0 })?;
    let fractions = [0.25, 0.5, 0.75, 1.0, 1.25];

    print!("{:>6}", "h/|P|s2");
    for m in Method::ALL {
        print!("{:>9}", m.as_str());
    }
    println!();
    let mut best = [f64::NEG_INFINITY; 4];
    for frac in fractions {
        let params = NlmParams::new(1, 7, bandwidth_from_fraction(frac, 9, sigma))?;
        print!("{frac:>6.2}");
        for (i, m) in Method::ALL.into_iter().enumerate() {
            let out = denoise(&noisy, &params, sigma, m, &BssConfig::default())?;
            let p = psnr(&clean, &out.image)?;
            best[i] = best[i].max(p);
            print!("{p:>9.3}");
        }
        println!();
    }
    print!("{:>6}", "best");
    for b in best {
        print!("{b:>9.3}");
    }
    println!();
    Ok(())
}
