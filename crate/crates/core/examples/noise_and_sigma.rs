//! Seeded Gaussian noise and blind noise level estimation.

use std::path::Path;

use sureshrink::load_pgm;
use sureshrink::noise::{add_gaussian, estimate_sigma, GaussianStream, NoiseSpec};

fn main() -> sureshrink::Result<()> {
    let mut stream = GaussianStream::new(0);
    let first: Vec<String> = (0..4).map(|_| format!("{:.6}", stream.next_standard())).collect();
    println!("first draws for seed 0: {}", first.join(", "));

    let clean = load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cameraman.pgm"))?;
    println!("{:>6} {:>10}", "sigma", "estimated");
    for sigma in [0.0, 5.0, 10.0, 20.0, 40.0, 60.0] {
        let noisy = add_gaussian(&clean, &NoiseSpec { sigma, seed: 42 })?;
        println!("{sigma:>6.1} {:>10.2}", estimate_sigma(&noisy)?);
    }
    Ok(())
}
