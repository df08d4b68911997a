//! Per-pass downlink and energy arithmetic for the shipped missions: how
//! much raw capture one pass is worth at a given coding rate, what it
//! costs to double the downlinkable data, and what transmission energy the
//! compression saves over a bent pipe.
//!
//! Run with: `cargo run --release --example mission_pass`

use std::path::Path;

use satcomp::config::{load_device, load_mission};
use satcomp::entropy::ModelSize;
use satcomp::mission::{pass_report, raw_equivalent, ConfigCandidate};

fn main() -> satcomp::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let device = load_device(&data.join("device_orin_class.toml"))?;
    let candidate = ConfigCandidate {
        model_size: ModelSize::M,
        input_dim: 512,
        tiles_per_second: 11.5,
        bpp: 0.24,
        memory_bytes: 2_200_000_000,
    };

    for mission_file in ["mission_worldview3.toml", "mission_dove.toml"] {
        let mission = load_mission(&data.join(mission_file))?;
        let report = pass_report(&mission, &device, &candidate, candidate.input_dim)?;
        println!("{} on {}:", mission.id, device.id);
        println!(
            "  pass capacity          {:>10.3} GB",
            report.capacity_bytes / 1e9
        );
        println!(
            "  raw equivalent         {:>10.3} GB  ({}x the bent pipe)",
            report.raw_equivalent_bytes / 1e9,
            (mission.raw_bpp / candidate.bpp) as u64
        );
        println!(
            "  tiles to saturation    {:>10}",
            report.tiles_to_saturation
        );
        println!(
            "  doubling the pass      {:>10.1} s, {:.1} kJ",
            report.time_to_double_s,
            report.energy_to_double_j / 1e3
        );
        println!(
            "  transmit energy saved  {:>10.1} kJ vs raw",
            report.transmission_savings_j / 1e3
        );
        println!("  computational deadline met: {}\n", report.deadline_met);

        // Bent pipe sanity: at the sensor-native rate nothing is gained.
        assert_eq!(
            raw_equivalent(&mission, mission.raw_bpp),
            report.capacity_bytes
        );
    }
    Ok(())
}
