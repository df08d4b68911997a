//! Subcommand implementations behind the `satcomp` binary: codec round
//! trips, pipeline runs, profiler sweeps, mission reports, and scheduler
//! simulations. Every run is deterministic in its content fields given the
//! seed and inputs; columns derived from wall-clock measurement
//! (`tiles_per_s`, `tcr_per_s`, `wall_s`) vary between hosts.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    csv_field, load_candidates, load_codec_config, load_device, load_graph, load_mission,
    load_trace, load_workload, resolve_workload, write_csv,
};
use crate::entropy::{
    bits_per_pixel, estimate_bits, LatentSpec, ModelSize, SyntheticLatentConfig, SyntheticSource,
};
use crate::error::{Error, Result};
use crate::mission::{pass_report, profiler_select, tcr_per_second, ConfigCandidate};
use crate::pipeline::{run_pipeline, run_with_stressors, PipelineConfig, ThroughputTrace};
use crate::scheduler::{simulate, SchedulerConfig};
use crate::subgraph::{get_unit_subgraphs, merge_subgraphs, PartitionConfig, SubgraphKind};
use crate::tile::{bound_file_size, decode_tile, encode_tile, partition, tile_order, CodedFile};

#[derive(Debug, Parser)]
#[command(
    name = "satcomp",
    version,
    about = "Onboard compression pipeline and downlink mission tooling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode or decode a seeded synthetic tile set against the coded-file
    /// format.
    #[command(subcommand)]
    Codec(CodecAction),
    /// Run the concurrent coding pipeline, optionally against CPU
    /// stressors.
    Pipeline(PipelineArgs),
    /// Sweep a candidate grid and select the TCR/s-maximizing
    /// configuration under the device memory budget.
    Profile(ProfileArgs),
    /// Per-pass downlink volume and energy report.
    Mission(MissionArgs),
    /// Partition an op graph and simulate priority scheduling over it.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Subcommand)]
pub enum CodecAction {
    /// Generate tiles, encode them to .fcf files, and write a size summary.
    Encode(CodecArgs),
    /// Parse and decode .fcf files, verifying them against the seeded
    /// source.
    Decode(CodecArgs),
}

#[derive(Debug, Args)]
pub struct CodecArgs {
    /// Codec run description (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for coded files and reports.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Directory holding coded files (decode only; defaults to --out).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Throughput trace (TOML). Either this or --rate is required.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Producer rate in tiles/second, overriding the trace scalar.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, default_value = "M")]
    pub model: ModelSizeArg,
    #[arg(long, default_value_t = 512)]
    pub tile_dim: u32,
    /// Run duration in seconds.
    #[arg(long, default_value_t = 4.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    /// CPU stressor threads for the stressed run; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub stressors: usize,
    #[arg(long, default_value_t = 16)]
    pub queue_capacity: usize,
    #[arg(long, default_value_t = 0.9)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 24.0)]
    pub raw_bpp: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Identifier written into the metrics CSV.
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Candidate grid (TOML).
    #[arg(long)]
    pub grid: PathBuf,
    /// Device profile (TOML) providing the memory budget.
    #[arg(long)]
    pub device: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MissionArgs {
    /// Mission parameters (TOML).
    #[arg(long)]
    pub mission: PathBuf,
    /// Device profile (TOML).
    #[arg(long)]
    pub device: PathBuf,
    /// Selection table from `profile` to take the configuration from.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Coded bits per pixel (alternative to --profile).
    #[arg(long)]
    pub bpp: Option<f64>,
    /// Processing throughput in tiles/second (required with --bpp).
    #[arg(long)]
    pub tiles_per_second: Option<f64>,
    #[arg(long, default_value = "M")]
    pub model: ModelSizeArg,
    #[arg(long, default_value_t = 512)]
    pub tile_dim: u32,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Op graph with processor support and thermal parameters (TOML).
    #[arg(long)]
    pub graph: PathBuf,
    /// Task workload referencing partition subgraphs (TOML).
    #[arg(long)]
    pub workload: PathBuf,
    /// Minimum ops per processor-specific subgraph.
    #[arg(long, default_value_t = 1)]
    pub ws: usize,
    #[arg(long, default_value_t = 10_000)]
    pub merge_cap: usize,
    #[arg(long, default_value_t = 5)]
    pub loop_call_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_avg: f64,
    /// Simulation horizon in milliseconds.
    #[arg(long, default_value_t = 1.0e9)]
    pub horizon: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Clap-friendly model size.
#[derive(Debug, Clone, Copy)]
pub struct ModelSizeArg(pub ModelSize);

impl std::str::FromStr for ModelSizeArg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(Self(s.parse()?))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Codec(CodecAction::Encode(args)) => cmd_codec_encode(&args),
        Command::Codec(CodecAction::Decode(args)) => cmd_codec_decode(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
        Command::Profile(args) => cmd_profile(&args),
        Command::Mission(args) => cmd_mission(&args),
        Command::Schedule(args) => cmd_schedule(&args),
    }
}

fn tile_file_name(row: u32, col: u32) -> String {
    format!("tile_r{row:04}_c{col:04}.fcf")
}

fn codec_setup(args: &CodecArgs) -> Result<(crate::config::CodecSetup, SyntheticSource)> {
    let mut setup = load_codec_config(&args.config)?;
    if let Some(seed) = args.seed {
        setup.synth.seed = seed;
    }
    let source = SyntheticSource::new(setup.latent, setup.synth, setup.tile_dim)?;
    Ok((setup, source))
}

pub fn cmd_codec_encode(args: &CodecArgs) -> Result<()> {
    let (setup, source) = codec_setup(args)?;
    let grid = partition(setup.image_width, setup.image_height, setup.tile_dim)?;
    let bound = bound_file_size(&setup.latent, setup.tile_dim)?;
    std::fs::create_dir_all(&args.out)?;

    let mut rows = Vec::new();
    let mut total_bytes = 0u64;
    for (tile_id, (row, col)) in tile_order(&grid).into_iter().enumerate() {
        let tile = source.generate_at(tile_id as u64, row as u16, col as u16);
        let est = estimate_bits(&tile, source.gaussian(), source.factorized())?;
        let file = encode_tile(&tile, &setup.latent, setup.tile_dim, source.models())?;
        let bytes = file.serialize();
        let name = tile_file_name(row, col);
        std::fs::write(args.out.join(&name), &bytes)?;
        total_bytes += bytes.len() as u64;
        rows.push(format!(
            "{row},{col},{name},{},{bound},{est:.1},{:.6}",
            bytes.len(),
            bits_per_pixel(est, setup.tile_dim)
        ));
    }
    write_csv(
        &args.out.join("encode_summary.csv"),
        "row,col,file,coded_bytes,bound_bytes,estimate_bits,bpp",
        rows,
    )?;
    let tiles = grid.tile_count();
    let mean_bpp = total_bytes as f64 * 8.0
        / (tiles as f64 * setup.tile_dim as f64 * setup.tile_dim as f64);
    println!(
        "encoded {tiles} tiles ({}x{} grid) to {}: {total_bytes} bytes, mean bpp {mean_bpp:.4}",
        grid.rows,
        grid.cols,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_codec_decode(args: &CodecArgs) -> Result<()> {
    let (setup, source) = codec_setup(args)?;
    let grid = partition(setup.image_width, setup.image_height, setup.tile_dim)?;
    let input = args.input.as_ref().unwrap_or(&args.out);

    let mut rows = Vec::new();
    let mut first_error: Option<Error> = None;
    let mut matched = 0u64;
    for (tile_id, (row, col)) in tile_order(&grid).into_iter().enumerate() {
        let name = tile_file_name(row, col);
        let path = input.join(&name);
        let status = std::fs::read(&path)
            .map_err(Error::from)
            .and_then(|bytes| CodedFile::parse(&bytes))
            .and_then(|file| decode_tile(&file, source.models()))
            .and_then(|decoded| {
                let expected = source.generate_at(tile_id as u64, row as u16, col as u16);
                if decoded == expected {
                    Ok(())
                } else {
                    Err(Error::CorruptStream("decoded tile differs from source"))
                }
            });
        match status {
            Ok(()) => {
                matched += 1;
                rows.push(format!("{row},{col},{name},ok"));
            }
            Err(e) => {
                rows.push(format!("{row},{col},{name},{}", csv_field(&e.to_string())));
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    std::fs::create_dir_all(&args.out)?;
    write_csv(
        &args.out.join("decode_report.csv"),
        "row,col,file,status",
        rows,
    )?;
    println!(
        "decoded {matched}/{} tiles byte-identically from {}",
        grid.tile_count(),
        input.display()
    );
    match first_error {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

fn metrics_row(run_id: &str, role: &str, m: &crate::pipeline::PipelineMetrics) -> String {
    format!(
        "{},{role},{},{},{},{:.3},{},{:.3},{},{:.1},{:.3}",
        csv_field(run_id),
        m.produced,
        m.consumed,
        m.stalls,
        m.mean_depth,
        m.max_depth,
        m.tiles_per_second,
        m.bytes_coded,
        m.tcr_per_second,
        m.wall.as_secs_f64()
    )
}

pub fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let mut trace = match &args.trace {
        Some(path) => load_trace(path)?,
        None => ThroughputTrace::constant("host", args.model.0, args.rate.unwrap_or(8.0)),
    };
    if let Some(rate) = args.rate {
        trace.tiles_per_second = rate;
    }
    let latent = LatentSpec::for_size(trace.model_size);
    let synth = SyntheticLatentConfig {
        sparsity: args.sparsity,
        seed: args.seed,
        ..Default::default()
    };
    let cfg = PipelineConfig {
        trace,
        latent,
        synth,
        tile_dim: args.tile_dim,
        queue_capacity: args.queue_capacity,
        worker_count: args.workers,
        stressor_count: args.stressors,
        duration: Duration::from_secs_f64(args.duration),
        raw_bpp: args.raw_bpp,
    };
    let run_id = args
        .run_id
        .clone()
        .unwrap_or_else(|| format!("pipeline-{}", args.seed));

    let mut rows = Vec::new();
    if args.stressors > 0 {
        let report = run_with_stressors(&cfg)?;
        rows.push(metrics_row(&run_id, "baseline", &report.baseline));
        rows.push(metrics_row(&run_id, "stressed", &report.stressed));
        println!(
            "baseline: {:.2} tiles/s, stalls {}; stressed ({} stressors): {:.2} tiles/s, stalls {}",
            report.baseline.tiles_per_second,
            report.baseline.stalls,
            args.stressors,
            report.stressed.tiles_per_second,
            report.stressed.stalls,
        );
        println!("tcr_decrease_percent: {:.3}", report.tcr_decrease_percent);
    } else {
        let m = run_pipeline(&cfg)?;
        println!(
            "baseline: {:.2} tiles/s, {} tiles, stalls {}, backpressure {}",
            m.tiles_per_second,
            m.consumed,
            m.stalls,
            crate::pipeline::detect_backpressure(&m)
        );
        rows.push(metrics_row(&run_id, "baseline", &m));
    }
    write_csv(
        &args.out.join("pipeline_metrics.csv"),
        "run_id,role,produced,consumed,stalls,mean_depth,max_depth,tiles_per_s,bytes,tcr_per_s,wall_s",
        rows,
    )?;
    Ok(())
}

pub fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    let (candidates, raw_bpp) = load_candidates(&args.grid)?;
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "candidate grid {} is empty",
            args.grid.display()
        )));
    }
    let device = load_device(&args.device)?;
    let selected = profiler_select(&candidates, device.memory_budget_bytes, raw_bpp)?;
    let rows: Vec<String> = candidates
        .iter()
        .map(|c| {
            let tcr = if c.bpp < raw_bpp {
                format!("{:.1}", tcr_per_second(c, c.input_dim, raw_bpp).expect("beneficial"))
            } else {
                String::new()
            };
            format!(
                "{},{},{},{},{},{},{tcr},{}",
                csv_field(&device.id),
                c.model_size.as_str(),
                c.input_dim,
                c.tiles_per_second,
                c.bpp,
                c.memory_bytes,
                c == selected
            )
        })
        .collect();
    write_csv(
        &args.out.join("profile_selection.csv"),
        "device,model_size,input_dim,tiles_per_s,bpp,memory_bytes,tcr_per_s,selected",
        rows,
    )?;
    println!(
        "selected {}@{} ({:.2} tiles/s, bpp {}, {} B) by TCR/s under {} B budget",
        selected.model_size.as_str(),
        selected.input_dim,
        selected.tiles_per_second,
        selected.bpp,
        selected.memory_bytes,
        device.memory_budget_bytes
    );
    Ok(())
}

/// Reads the `selected = true` row back out of a profile CSV.
fn candidate_from_profile(path: &Path) -> Result<ConfigCandidate> {
    let text = std::fs::read_to_string(path)?;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 8 || fields[7].trim() != "true" {
            continue;
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::ConfigParse {
                path: path.display().to_string(),
                message: format!("bad number '{s}'"),
            })
        };
        return Ok(ConfigCandidate {
            model_size: fields[1].trim().parse()?,
            input_dim: parse_f(fields[2])? as u32,
            tiles_per_second: parse_f(fields[3])?,
            bpp: parse_f(fields[4])?,
            memory_bytes: parse_f(fields[5])? as u64,
        });
    }
    Err(Error::ConfigParse {
        path: path.display().to_string(),
        message: "no selected row found".into(),
    })
}

pub fn cmd_mission(args: &MissionArgs) -> Result<()> {
    let mission = load_mission(&args.mission)?;
    let device = load_device(&args.device)?;
    let candidate = match (&args.profile, args.bpp, args.tiles_per_second) {
        (Some(path), None, None) => candidate_from_profile(path)?,
        (None, Some(bpp), Some(tps)) => ConfigCandidate {
            model_size: args.model.0,
            input_dim: args.tile_dim,
            tiles_per_second: tps,
            bpp,
            memory_bytes: 0,
        },
        _ => {
            return Err(Error::InvalidParameter(
                "give either --profile or both --bpp and --tiles-per-second".into(),
            ))
        }
    };
    let report = pass_report(&mission, &device, &candidate, args.tile_dim)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.3}"));
    let row = format!(
        "{},{},{},{:.0},{:.0},{},{},{},{:.3},{}",
        csv_field(&report.mission_id),
        csv_field(&report.device_id),
        report.model_size.as_str(),
        report.capacity_bytes,
        report.raw_equivalent_bytes,
        report.tiles_to_saturation,
        opt(report.time_to_double_s),
        opt(report.energy_to_double_j),
        report.transmission_savings_j,
        report.deadline_met
    );
    write_csv(
        &args.out.join("pass_report.csv"),
        "mission,device,model,capacity_B,raw_equiv_B,tiles,T_double_s,E_double_J,E_tx_saved_J,deadline_met",
        vec![row],
    )?;
    println!(
        "{}: capacity {:.3} GB, raw-equivalent {:.3} GB (ratio {:.1}), deadline_met {}",
        report.mission_id,
        report.capacity_bytes / 1e9,
        report.raw_equivalent_bytes / 1e9,
        mission.raw_bpp / candidate.bpp,
        report.deadline_met
    );
    Ok(())
}

pub fn cmd_schedule(args: &ScheduleArgs) -> Result<()> {
    let setup = load_graph(&args.graph)?;
    let partition_cfg = PartitionConfig {
        window_size: args.ws,
        merge_cap: args.merge_cap,
    };
    let units = get_unit_subgraphs(&setup.graph, &setup.table, &partition_cfg)?;
    let all = merge_subgraphs(&setup.graph, &units, &partition_cfg)?;
    let subgraph_rows: Vec<String> = all
        .iter()
        .enumerate()
        .map(|(i, sg)| {
            let procs: Vec<&str> = sg
                .processors
                .iter()
                .map(|&p| setup.processor_names[p].as_str())
                .collect();
            let ops: Vec<String> = sg.ops.iter().map(u32::to_string).collect();
            format!(
                "{i},{},{},{}",
                match sg.kind {
                    SubgraphKind::Unit => "unit",
                    SubgraphKind::Merged => "merged",
                },
                csv_field(&procs.join("|")),
                csv_field(&ops.join("|"))
            )
        })
        .collect();
    write_csv(
        &args.out.join("subgraphs.csv"),
        "subgraph_id,kind,processors,ops",
        subgraph_rows,
    )?;

    let entries = load_workload(&args.workload)?;
    let tasks = resolve_workload(&entries, &all)?;
    let cfg = SchedulerConfig {
        alpha: args.alpha,
        gamma: args.gamma,
        delta: args.delta,
        t_avg_ms: args.t_avg,
        loop_call_size: args.loop_call_size,
    };
    let report = simulate(&tasks, &setup.processors, &cfg, args.horizon)?;
    let rows: Vec<String> = report
        .records
        .iter()
        .map(|r| {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.3}"));
            let proc = r
                .processor
                .map_or(String::new(), |p| setup.processor_names[p].clone());
            format!(
                "{},{:.3},{},{},{},{}",
                r.task_id,
                r.enqueue_ms,
                opt(r.start_ms),
                opt(r.finish_ms),
                csv_field(&proc),
                r.slo_met
            )
        })
        .collect();
    write_csv(
        &args.out.join("schedule_report.csv"),
        "task_id,enqueue,start,finish,processor,slo_met",
        rows,
    )?;
    let busy: Vec<String> = report
        .busy_fraction
        .iter()
        .zip(&setup.processor_names)
        .map(|(f, n)| format!("{n}={f:.2}"))
        .collect();
    println!(
        "{} unit + {} merged subgraphs (ws={}); SLO satisfaction {:.1}%; busy {}",
        units.len(),
        all.len() - units.len(),
        args.ws,
        report.slo_satisfaction_pct,
        busy.join(" ")
    );
    Ok(())
}
