//! Sweep the shipped candidate grid and pick the TCR/s-maximizing
//! configuration that fits the device memory budget.
//!
//! Run with: `cargo run --release --example profile_select`

use std::path::Path;

use satcomp::config::{load_candidates, load_device};
use satcomp::mission::{profiler_select, tcr_per_second};

fn main() -> satcomp::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let (candidates, raw_bpp) = load_candidates(&data.join("candidates_orin_class.toml"))?;
    let device = load_device(&data.join("device_orin_class.toml"))?;

    println!("model  dims  tiles/s    bpp   memory_GB   TCR_MB/s");
    for c in &candidates {
        let tcr = tcr_per_second(c, c.input_dim, raw_bpp)?;
        let feasible = c.memory_bytes <= device.memory_budget_bytes;
        println!(
            "{:>5} {:>5} {:>8.1} {:>6.3} {:>10.2} {:>10.2}{}",
            c.model_size.as_str(),
            c.input_dim,
            c.tiles_per_second,
            c.bpp,
            c.memory_bytes as f64 / 1e9,
            tcr / 1e6,
            if feasible { "" } else { "  (over budget)" }
        );
    }

    let best = profiler_select(&candidates, device.memory_budget_bytes, raw_bpp)?;
    println!(
        "\nselected for {}: {}@{} with TCR/s {:.2} MB/s",
        device.id,
        best.model_size.as_str(),
        best.input_dim,
        tcr_per_second(best, best.input_dim, raw_bpp)? / 1e6
    );
    Ok(())
}
