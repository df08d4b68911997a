//! Drive the concurrent coding pipeline: a paced producer feeding entropy
//! coders through a bounded queue, first clean, then against CPU
//! stressors, reporting the TCR/s decrease.
//!
//! Run with: `cargo run --release --example pipeline_throughput`

use std::time::Duration;

use satcomp::entropy::{LatentSpec, ModelSize, SyntheticLatentConfig};
use satcomp::pipeline::{
    detect_backpressure, measure_solo_rate, run_with_stressors, PipelineConfig, ThroughputTrace,
};

fn main() -> satcomp::Result<()> {
    let latent = LatentSpec::for_size(ModelSize::S);
    let synth = SyntheticLatentConfig::default();
    let tile_dim = 512;

    let solo = measure_solo_rate(&latent, &synth, tile_dim, Duration::from_millis(800))?;
    println!("solo coding rate on this host: {solo:.1} tiles/s");

    // Producer at 40% of the solo rate with two workers: comfortably no
    // backpressure even with every remaining core saturated.
    let cfg = PipelineConfig {
        trace: ThroughputTrace::constant("host", ModelSize::S, 0.4 * solo),
        latent,
        synth,
        tile_dim,
        queue_capacity: 16,
        worker_count: 2,
        stressor_count: std::thread::available_parallelism().map_or(2, |n| n.get()),
        duration: Duration::from_secs(5),
        raw_bpp: 24.0,
    };
    let report = run_with_stressors(&cfg)?;
    for (role, m) in [("baseline", &report.baseline), ("stressed", &report.stressed)] {
        println!(
            "{role:>8}: {:>4} tiles at {:.2} tiles/s, stalls {}, max queue depth {}, \
             TCR {:.2} MB/s, backpressure {}",
            m.consumed,
            m.tiles_per_second,
            m.stalls,
            m.max_depth,
            m.tcr_per_second / 1e6,
            detect_backpressure(m)
        );
    }
    println!(
        "TCR/s decrease under {} stressors: {:.2}%",
        cfg.stressor_count, report.tcr_decrease_percent
    );
    Ok(())
}
