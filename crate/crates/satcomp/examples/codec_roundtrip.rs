//! Encode a seeded synthetic tile set to the coded-file format and decode
//! it back, checking bit-exactness, worst-case bounds, and CRC detection.
//!
//! Run with: `cargo run --release --example codec_roundtrip`

use satcomp::entropy::{LatentSpec, ModelSize, SyntheticLatentConfig, SyntheticSource};
use satcomp::tile::{bound_file_size, decode_tile, encode_tile, partition, tile_order, CodedFile};

fn main() -> satcomp::Result<()> {
    let tile_dim = 512;
    let spec = LatentSpec::for_size(ModelSize::M);
    let synth = SyntheticLatentConfig {
        sparsity: 0.9,
        seed: 42,
        ..Default::default()
    };
    let source = SyntheticSource::new(spec, synth, tile_dim)?;

    let grid = partition(1024, 1024, tile_dim)?;
    let bound = bound_file_size(&spec, tile_dim)?;
    println!(
        "image 1024x1024 -> {}x{} tiles of {tile_dim}px, worst-case {bound} B per tile",
        grid.rows, grid.cols
    );

    let mut total = 0usize;
    for (tile_id, (row, col)) in tile_order(&grid).into_iter().enumerate() {
        let tile = source.generate_at(tile_id as u64, row as u16, col as u16);
        let file = encode_tile(&tile, &spec, tile_dim, source.models())?;
        let bytes = file.serialize();
        total += bytes.len();

        let reparsed = CodedFile::parse(&bytes)?;
        let decoded = decode_tile(&reparsed, source.models())?;
        assert_eq!(decoded, tile, "round trip must be exact");

        // Any byte flip is caught by the CRC trailer (or an earlier
        // structural check).
        let mut corrupted = bytes.clone();
        corrupted[bytes.len() / 2] ^= 0x10;
        assert!(CodedFile::parse(&corrupted).is_err());

        println!(
            "tile ({row},{col}): {} B coded ({:.1}% of bound), bpp {:.4}",
            bytes.len(),
            100.0 * bytes.len() as f64 / bound as f64,
            bytes.len() as f64 * 8.0 / (tile_dim as f64 * tile_dim as f64)
        );
    }
    println!(
        "all {} tiles round-tripped bit-exactly; {total} B total",
        grid.tile_count()
    );
    Ok(())
}
