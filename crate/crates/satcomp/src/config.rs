//! TOML input schemas for missions, devices, candidate grids, throughput
//! traces, codec runs, op graphs, and scheduler workloads, plus the small
//! CSV writer the report emitters share.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::entropy::{LatentSpec, ModelSize, SyntheticLatentConfig};
use crate::error::{Error, Result};
use crate::mission::{ConfigCandidate, DeviceProfile, MissionSpec};
use crate::pipeline::ThroughputTrace;
use crate::scheduler::{ProcessorConfig, SimTask, Stage, DEFAULT_THROTTLE_THRESHOLD_C};
use crate::subgraph::{build_support_table, OpGraph, Subgraph, SupportTable};

fn parse_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::ConfigParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_mission(path: &Path) -> Result<MissionSpec> {
    let mission: MissionSpec = parse_file(path)?;
    mission.validate()?;
    Ok(mission)
}

pub fn load_device(path: &Path) -> Result<DeviceProfile> {
    let device: DeviceProfile = parse_file(path)?;
    device.validate()?;
    Ok(device)
}

#[derive(Debug, Deserialize)]
struct CandidateFile {
    #[serde(default = "default_raw_bpp")]
    raw_bpp: f64,
    #[serde(default)]
    candidate: Vec<ConfigCandidate>,
}

fn default_raw_bpp() -> f64 {
    24.0
}

/// Candidate grid plus the sensor-native raw bpp it is judged against.
pub fn load_candidates(path: &Path) -> Result<(Vec<ConfigCandidate>, f64)> {
    let file: CandidateFile = parse_file(path)?;
    for c in &file.candidate {
        c.validate()?;
    }
    Ok((file.candidate, file.raw_bpp))
}

pub fn load_trace(path: &Path) -> Result<ThroughputTrace> {
    let trace: ThroughputTrace = parse_file(path)?;
    trace.validate()?;
    Ok(trace)
}

#[derive(Debug, Default, Deserialize)]
struct SyntheticToml {
    sparsity: Option<f64>,
    sigma_min: Option<f64>,
    sigma_max: Option<f64>,
    z_sigma: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct GridToml {
    image_width: u32,
    image_height: u32,
}

#[derive(Debug, Deserialize)]
struct CodecConfigFile {
    #[serde(default = "default_tile_dim")]
    tile_dim: u32,
    #[serde(default = "default_model_size")]
    model_size: ModelSize,
    y_channels: Option<u32>,
    z_channels: Option<u32>,
    y_stride: Option<u32>,
    z_stride: Option<u32>,
    element_bits: Option<u32>,
    #[serde(default)]
    synthetic: SyntheticToml,
    grid: GridToml,
}

fn default_tile_dim() -> u32 {
    512
}

fn default_model_size() -> ModelSize {
    ModelSize::M
}

/// Fully resolved codec run parameters.
#[derive(Debug, Clone)]
pub struct CodecSetup {
    pub tile_dim: u32,
    pub latent: LatentSpec,
    pub synth: SyntheticLatentConfig,
    pub image_width: u32,
    pub image_height: u32,
}

pub fn load_codec_config(path: &Path) -> Result<CodecSetup> {
    let file: CodecConfigFile = parse_file(path)?;
    let mut latent = LatentSpec::for_size(file.model_size);
    if let Some(v) = file.y_channels {
        latent.y_channels = v;
    }
    if let Some(v) = file.z_channels {
        latent.z_channels = v;
    }
    if let Some(v) = file.y_stride {
        latent.y_stride = v;
    }
    if let Some(v) = file.z_stride {
        latent.z_stride = v;
    }
    if let Some(v) = file.element_bits {
        latent.element_bits = v;
    }
    latent.validate()?;
    let mut synth = SyntheticLatentConfig::default();
    if let Some(v) = file.synthetic.sparsity {
        synth.sparsity = v;
    }
    if let Some(v) = file.synthetic.sigma_min {
        synth.sigma_min = v;
    }
    if let Some(v) = file.synthetic.sigma_max {
        synth.sigma_max = v;
    }
    if let Some(v) = file.synthetic.z_sigma {
        synth.z_sigma = v;
    }
    if let Some(v) = file.synthetic.seed {
        synth.seed = v;
    }
    synth.validate()?;
    Ok(CodecSetup {
        tile_dim: file.tile_dim,
        latent,
        synth,
        image_width: file.grid.image_width,
        image_height: file.grid.image_height,
    })
}

#[derive(Debug, Deserialize)]
struct GraphProcessorToml {
    name: String,
    #[serde(default)]
    fallback: bool,
    #[serde(default)]
    unsupported: Vec<u32>,
    #[serde(default = "default_b_max")]
    b_max: f64,
    #[serde(default = "default_frequency")]
    frequency_mhz: f64,
    #[serde(default = "default_temp")]
    initial_temp_c: f64,
    #[serde(default = "default_throttle")]
    throttle_threshold_c: f64,
    #[serde(default)]
    heat_rate_c_per_s: f64,
    #[serde(default)]
    cool_rate_c_per_s: f64,
    ambient_c: Option<f64>,
}

fn default_b_max() -> f64 {
    10.0
}
fn default_frequency() -> f64 {
    2_000.0
}
fn default_temp() -> f64 {
    40.0
}
fn default_throttle() -> f64 {
    DEFAULT_THROTTLE_THRESHOLD_C
}

#[derive(Debug, Deserialize)]
struct GraphFile {
    op_count: usize,
    #[serde(default)]
    edges: Vec<[u32; 2]>,
    #[serde(default)]
    op_types: Vec<String>,
    processor: Vec<GraphProcessorToml>,
}

/// Parsed graph file: the DAG, its support table, and per-processor
/// runtime parameters aligned by index.
#[derive(Debug)]
pub struct GraphSetup {
    pub graph: OpGraph,
    pub table: SupportTable,
    pub processors: Vec<ProcessorConfig>,
    pub processor_names: Vec<String>,
}

pub fn load_graph(path: &Path) -> Result<GraphSetup> {
    let file: GraphFile = parse_file(path)?;
    let edges = file.edges.iter().map(|e| (e[0], e[1])).collect();
    let graph = OpGraph::new(file.op_count, edges, file.op_types)?;
    let fallbacks: Vec<usize> = file
        .processor
        .iter()
        .enumerate()
        .filter(|(_, p)| p.fallback)
        .map(|(i, _)| i)
        .collect();
    if fallbacks.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "graph file must mark exactly one fallback processor, found {}",
            fallbacks.len()
        )));
    }
    let unsupported: Vec<Vec<u32>> = file
        .processor
        .iter()
        .map(|p| p.unsupported.clone())
        .collect();
    let table = build_support_table(&graph, &unsupported, fallbacks[0])?;
    let processors = file
        .processor
        .iter()
        .map(|p| ProcessorConfig {
            name: p.name.clone(),
            b_max: p.b_max,
            frequency_mhz: p.frequency_mhz,
            initial_temp_c: p.initial_temp_c,
            throttle_threshold_c: p.throttle_threshold_c,
            heat_rate_c_per_s: p.heat_rate_c_per_s,
            cool_rate_c_per_s: p.cool_rate_c_per_s,
            ambient_c: p.ambient_c.unwrap_or(p.initial_temp_c),
        })
        .collect();
    let processor_names = file.processor.into_iter().map(|p| p.name).collect();
    Ok(GraphSetup {
        graph,
        table,
        processors,
        processor_names,
    })
}

#[derive(Debug, Deserialize)]
struct WorkloadStageToml {
    subgraph: usize,
    latency_ms: f64,
    #[serde(default = "default_complexity")]
    complexity: f64,
}

fn default_complexity() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct WorkloadTaskToml {
    id: u64,
    slo_ms: f64,
    #[serde(default)]
    enqueue_ms: f64,
    subgraph: Option<usize>,
    latency_ms: Option<f64>,
    #[serde(default = "default_complexity")]
    complexity: f64,
    #[serde(default)]
    stages: Vec<WorkloadStageToml>,
}

#[derive(Debug, Deserialize)]
struct WorkloadFile {
    task: Vec<WorkloadTaskToml>,
}

/// A workload task before subgraph indices are resolved against a
/// partition: `(subgraph index, latency_ms, complexity)` per stage.
#[derive(Debug, Clone)]
pub struct WorkloadEntry {
    pub id: u64,
    pub slo_ms: f64,
    pub enqueue_ms: f64,
    pub stages: Vec<(usize, f64, f64)>,
}

pub fn load_workload(path: &Path) -> Result<Vec<WorkloadEntry>> {
    let file: WorkloadFile = parse_file(path)?;
    let mut out = Vec::with_capacity(file.task.len());
    for t in file.task {
        let stages: Vec<(usize, f64, f64)> = if !t.stages.is_empty() {
            t.stages
                .iter()
                .map(|s| (s.subgraph, s.latency_ms, s.complexity))
                .collect()
        } else {
            match (t.subgraph, t.latency_ms) {
                (Some(sg), Some(lat)) => vec![(sg, lat, t.complexity)],
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "task {}: needs either stages or subgraph + latency_ms",
                        t.id
                    )))
                }
            }
        };
        out.push(WorkloadEntry {
            id: t.id,
            slo_ms: t.slo_ms,
            enqueue_ms: t.enqueue_ms,
            stages,
        });
    }
    Ok(out)
}

/// Resolves workload entries against a partition's subgraph list; each
/// stage's eligible processors come from its subgraph.
pub fn resolve_workload(
    entries: &[WorkloadEntry],
    subgraphs: &[Subgraph],
) -> Result<Vec<SimTask>> {
    entries
        .iter()
        .map(|e| {
            let stages = e
                .stages
                .iter()
                .map(|&(sg, latency_ms, complexity)| {
                    let subgraph = subgraphs.get(sg).ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "task {}: subgraph {sg} out of range ({} available)",
                            e.id,
                            subgraphs.len()
                        ))
                    })?;
                    Ok(Stage {
                        subgraph_id: sg as u32,
                        eligible: subgraph.processors.clone(),
                        latency_ms,
                        complexity,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SimTask {
                id: e.id,
                slo_ms: e.slo_ms,
                enqueue_ms: e.enqueue_ms,
                stages,
            })
        })
        .collect()
}

/// Quotes a CSV field only when it needs it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes a header line plus pre-formatted rows.
pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<()> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    file.flush()?;
    Ok(())
}
