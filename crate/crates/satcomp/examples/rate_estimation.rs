//! Compare the analytic bit estimate against the actual rANS-coded size
//! across sparsity levels, and show the Gaussian scale grid at work.
//!
//! Run with: `cargo run --release --example rate_estimation`

use satcomp::entropy::{
    bits_per_pixel, build_gaussian_cdf, estimate_bits, LatentSpec, ModelSize,
    SyntheticLatentConfig, SyntheticSource, DEFAULT_TAIL_MASS,
};
use satcomp::tile::encode_tile;

fn main() -> satcomp::Result<()> {
    // A few points of the quantized-Gaussian table family.
    for sigma in [0.25, 1.0, 4.0] {
        let table = build_gaussian_cdf(sigma, 16, DEFAULT_TAIL_MASS)?;
        let zero = table.index_of(0).unwrap();
        println!(
            "sigma {sigma:>4}: symbols [{}, {}], p(0) = {:.4}",
            -table.max_value(),
            table.max_value(),
            table.freq(zero) as f64 / table.total() as f64
        );
    }

    let tile_dim = 512;
    let spec = LatentSpec::for_size(ModelSize::M);
    println!("\nsparsity  estimate_bpp  coded_bpp  gap");
    for sparsity in [0.0, 0.5, 0.9] {
        let synth = SyntheticLatentConfig {
            sparsity,
            seed: 7,
            ..Default::default()
        };
        let source = SyntheticSource::new(spec, synth, tile_dim)?;
        let tile = source.generate(0);
        let est_bits = estimate_bits(&tile, source.gaussian(), source.factorized())?;
        let file = encode_tile(&tile, &spec, tile_dim, source.models())?;
        let coded_bits = file.stream_bytes() as f64 * 8.0;
        println!(
            "{sparsity:>8}  {:>12.4}  {:>9.4}  {:+.3}%",
            bits_per_pixel(est_bits, tile_dim),
            bits_per_pixel(coded_bits, tile_dim),
            100.0 * (coded_bits - est_bits) / est_bits
        );
    }
    Ok(())
}
