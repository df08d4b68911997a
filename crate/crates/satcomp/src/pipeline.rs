//! Concurrent compression pipeline: a paced producer emitting latent tiles
//! (simulating a GPU-bound inference stage) feeds CPU-bound entropy-coding
//! workers through a bounded blocking queue. Optional stressor threads
//! saturate the remaining cores to measure interference as a TCR/s drop.
//!
//! The producer paces emission with a token bucket instead of burning CPU,
//! so it never competes with the coders for cycles. Tile content is seeded
//! and reproducible; timing numbers are host-dependent.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::entropy::{rng_for, LatentSpec, ModelSize, SyntheticLatentConfig, SyntheticSource, DOMAIN_STRESSOR};
use crate::error::{Error, Result};
use crate::tile::{encode_tile, LatentTile};

/// Piecewise-constant rate segment: `tiles_per_second` applies from `t_s`
/// onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub t_s: f64,
    pub tiles_per_second: f64,
}

/// Measured (or assumed) inference throughput of one device/model pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputTrace {
    pub device_id: String,
    pub model_size: ModelSize,
    pub tiles_per_second: f64,
    /// Optional piecewise-constant rate series overriding the scalar rate
    /// from each point's `t_s` onward.
    #[serde(default)]
    pub rate_series: Option<Vec<RatePoint>>,
    pub memory_bytes: u64,
}

impl ThroughputTrace {
    pub fn constant(device_id: impl Into<String>, model_size: ModelSize, tps: f64) -> Self {
        Self {
            device_id: device_id.into(),
            model_size,
            tiles_per_second: tps,
            rate_series: None,
            memory_bytes: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tiles_per_second > 0.0 && self.tiles_per_second.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "trace rate must be positive, got {}",
                self.tiles_per_second
            )));
        }
        if let Some(series) = &self.rate_series {
            let mut last = -f64::INFINITY;
            for p in series {
                if !p.tiles_per_second.is_finite() || p.tiles_per_second <= 0.0 || p.t_s < 0.0 || p.t_s <= last {
                    return Err(Error::InvalidParameter(
                        "rate series must be increasing in time with positive rates".into(),
                    ));
                }
                last = p.t_s;
            }
        }
        Ok(())
    }

    /// Tiles the trace calls for within `[0, elapsed_s)`: the integral of
    /// the piecewise-constant rate, floored.
    pub fn target_tiles(&self, elapsed_s: f64) -> u64 {
        let series = match &self.rate_series {
            None => return (elapsed_s * self.tiles_per_second).floor().max(0.0) as u64,
            Some(s) => s,
        };
        let mut area = 0.0;
        let mut t = 0.0;
        let mut rate = self.tiles_per_second;
        for p in series {
            if p.t_s >= elapsed_s {
                break;
            }
            area += rate * (p.t_s - t);
            t = p.t_s;
            rate = p.tiles_per_second;
        }
        area += rate * (elapsed_s - t).max(0.0);
        area.floor().max(0.0) as u64
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub trace: ThroughputTrace,
    pub latent: LatentSpec,
    pub synth: SyntheticLatentConfig,
    pub tile_dim: u32,
    pub queue_capacity: usize,
    pub worker_count: usize,
    pub stressor_count: usize,
    pub duration: Duration,
    /// Sensor-native bits per pixel for TCR accounting.
    pub raw_bpp: f64,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.trace.validate()?;
        self.latent.validate()?;
        self.synth.validate()?;
        if self.queue_capacity == 0 {
            return Err(Error::InvalidParameter("queue_capacity must be >= 1".into()));
        }
        if self.worker_count == 0 {
            return Err(Error::InvalidParameter("worker_count must be >= 1".into()));
        }
        if !self.raw_bpp.is_finite() || self.raw_bpp <= 0.0 {
            return Err(Error::InvalidParameter("raw_bpp must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one pipeline run. Counters are exact; the per-second figures
/// depend on host timing.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineMetrics {
    pub produced: u64,
    pub consumed: u64,
    /// Enqueue attempts that found the queue full.
    pub stalls: u64,
    pub mean_depth: f64,
    pub max_depth: usize,
    pub tiles_per_second: f64,
    pub bytes_coded: u64,
    pub bpp_achieved: f64,
    pub tcr_per_second: f64,
    pub wall: Duration,
}

impl PipelineMetrics {
    fn empty() -> Self {
        Self {
            produced: 0,
            consumed: 0,
            stalls: 0,
            mean_depth: 0.0,
            max_depth: 0,
            tiles_per_second: 0.0,
            bytes_coded: 0,
            bpp_achieved: 0.0,
            tcr_per_second: 0.0,
            wall: Duration::ZERO,
        }
    }
}

/// True iff the producer ever blocked on a full queue.
pub fn detect_backpressure(m: &PipelineMetrics) -> bool {
    m.stalls > 0
}

struct QueueInner<T> {
    items: std::collections::VecDeque<T>,
    closed: bool,
    stalls: u64,
    depth_sum: u128,
    depth_samples: u64,
    max_depth: usize,
}

/// Bounded blocking MPMC queue with stall and depth instrumentation.
/// Enqueue blocks while full, so backpressure shows up as producer stalls.
struct BoundedQueue<T> {
    inner: Mutex<QueueInner<T>>,
    not_full: Condvar,
    not_empty: Condvar,
    capacity: usize,
}

impl<T> BoundedQueue<T> {
    fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(QueueInner {
                items: std::collections::VecDeque::with_capacity(capacity),
                closed: false,
                stalls: 0,
                depth_sum: 0,
                depth_samples: 0,
                max_depth: 0,
            }),
            not_full: Condvar::new(),
            not_empty: Condvar::new(),
            capacity,
        }
    }

    /// Blocking enqueue; returns false once the queue is closed.
    fn push(&self, item: T) -> bool {
        let mut inner = self.inner.lock().unwrap();
        if inner.items.len() >= self.capacity && !inner.closed {
            inner.stalls += 1;
            while inner.items.len() >= self.capacity && !inner.closed {
                inner = self.not_full.wait(inner).unwrap();
            }
        }
        if inner.closed {
            return false;
        }
        inner.items.push_back(item);
        let depth = inner.items.len();
        inner.depth_sum += depth as u128;
        inner.depth_samples += 1;
        inner.max_depth = inner.max_depth.max(depth);
        drop(inner);
        self.not_empty.notify_one();
        true
    }

    /// Blocking dequeue; returns None once closed and drained.
    fn pop(&self) -> Option<T> {
        let mut inner = self.inner.lock().unwrap();
        loop {
            if let Some(item) = inner.items.pop_front() {
                drop(inner);
                self.not_full.notify_one();
                return Some(item);
            }
            if inner.closed {
                return None;
            }
            inner = self.not_empty.wait(inner).unwrap();
        }
    }

    fn close(&self) {
        let mut inner = self.inner.lock().unwrap();
        inner.closed = true;
        drop(inner);
        self.not_full.notify_all();
        self.not_empty.notify_all();
    }

    fn stats(&self) -> (u64, f64, usize) {
        let inner = self.inner.lock().unwrap();
        let mean = if inner.depth_samples > 0 {
            inner.depth_sum as f64 / inner.depth_samples as f64
        } else {
            0.0
        };
        (inner.stalls, mean, inner.max_depth)
    }
}

struct WorkItem {
    id: u64,
    tile: Arc<LatentTile>,
}

struct WorkerStats {
    consumed: u64,
    bytes: u64,
    ids: Vec<u64>,
}

const TILE_POOL_SIZE: u64 = 16;
/// Producer wake-up granularity; short enough to track the token bucket,
/// long enough to stay off the CPU.
const PRODUCER_NAP: Duration = Duration::from_millis(2);

fn stressor_loop(seed: u64, index: u64, stop: &AtomicBool) -> u64 {
    use rand_core::RngCore;
    let mut rng = rng_for(seed, DOMAIN_STRESSOR, index);
    let mut state = rng.next_u64() | 1;
    let mut iterations = 0u64;
    while !stop.load(Ordering::Relaxed) {
        for _ in 0..4096 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            state ^= state >> 29;
        }
        std::hint::black_box(state);
        iterations += 4096;
    }
    iterations
}

/// Runs the pipeline for the configured duration.
///
/// The producer emits pre-generated tiles at the trace rate through the
/// bounded queue; each tile is encoded by exactly one worker. Stressor
/// threads, when configured, spin for the whole run. Tile content is
/// reproducible from the seed; throughput numbers are not.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineMetrics> {
    cfg.validate()?;
    if cfg.duration.is_zero() {
        return Ok(PipelineMetrics::empty());
    }
    let source = SyntheticSource::new(cfg.latent, cfg.synth, cfg.tile_dim)?;
    let pool: Vec<Arc<LatentTile>> = (0..TILE_POOL_SIZE)
        .map(|id| Arc::new(source.generate(id)))
        .collect();
    let queue = BoundedQueue::<WorkItem>::new(cfg.queue_capacity);
    let stop_stress = AtomicBool::new(false);
    let duration_s = cfg.duration.as_secs_f64();

    let mut produced = 0u64;
    let mut worker_results: Vec<Result<WorkerStats>> = Vec::new();
    let start = Instant::now();

    std::thread::scope(|scope| {
        let mut workers = Vec::new();
        for _ in 0..cfg.worker_count {
            let queue = &queue;
            let source = &source;
            let cfg = &cfg;
            workers.push(scope.spawn(move || -> Result<WorkerStats> {
                let mut stats = WorkerStats {
                    consumed: 0,
                    bytes: 0,
                    ids: Vec::new(),
                };
                while let Some(item) = queue.pop() {
                    match encode_tile(&item.tile, &cfg.latent, cfg.tile_dim, source.models()) {
                        Ok(file) => {
                            stats.bytes += file.coded_len() as u64;
                            stats.consumed += 1;
                            stats.ids.push(item.id);
                        }
                        Err(e) => {
                            queue.close();
                            return Err(Error::PipelineWorker {
                                tile_id: item.id,
                                source: Box::new(e),
                            });
                        }
                    }
                }
                Ok(stats)
            }));
        }

        let mut stressors = Vec::new();
        for i in 0..cfg.stressor_count {
            let stop = &stop_stress;
            let seed = cfg.synth.seed;
            stressors.push(scope.spawn(move || stressor_loop(seed, i as u64, stop)));
        }

        // Token-bucket producer: emit whatever the integral of the trace
        // rate says is due, then nap until the next token.
        loop {
            let elapsed = start.elapsed().as_secs_f64();
            if elapsed >= duration_s {
                break;
            }
            let target = cfg.trace.target_tiles(elapsed);
            let mut closed = false;
            while produced < target {
                let item = WorkItem {
                    id: produced,
                    tile: Arc::clone(&pool[(produced % TILE_POOL_SIZE) as usize]),
                };
                if !queue.push(item) {
                    closed = true;
                    break;
                }
                produced += 1;
            }
            if closed {
                break;
            }
            std::thread::sleep(PRODUCER_NAP);
        }
        queue.close();

        worker_results = workers.into_iter().map(|h| h.join().unwrap()).collect();
        stop_stress.store(true, Ordering::Relaxed);
        for s in stressors {
            let _ = s.join();
        }
    });

    let wall = start.elapsed();
    let mut consumed = 0u64;
    let mut bytes = 0u64;
    let mut all_ids = Vec::with_capacity(produced as usize);
    for r in worker_results {
        let stats = r?;
        consumed += stats.consumed;
        bytes += stats.bytes;
        all_ids.extend(stats.ids);
    }
    // Conservation: every produced tile was consumed exactly once. The
    // queue drains on close, so nothing is left in flight.
    all_ids.sort_unstable();
    assert_eq!(consumed, produced, "pipeline lost or duplicated tiles");
    assert!(
        all_ids.iter().copied().eq(0..produced),
        "tile id accounting broken"
    );

    let (stalls, mean_depth, max_depth) = queue.stats();
    let wall_s = wall.as_secs_f64();
    let tiles_per_second = if wall_s > 0.0 {
        consumed as f64 / wall_s
    } else {
        0.0
    };
    let pixels = cfg.tile_dim as f64 * cfg.tile_dim as f64;
    let bpp_achieved = if consumed > 0 {
        bytes as f64 * 8.0 / (consumed as f64 * pixels)
    } else {
        0.0
    };
    let tcr_per_second = if consumed > 0 {
        tiles_per_second * pixels * (cfg.raw_bpp - bpp_achieved) / 8.0
    } else {
        0.0
    };
    Ok(PipelineMetrics {
        produced,
        consumed,
        stalls,
        mean_depth,
        max_depth,
        tiles_per_second,
        bytes_coded: bytes,
        bpp_achieved,
        tcr_per_second,
        wall,
    })
}

/// Baseline-vs-stressed comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct StressReport {
    pub baseline: PipelineMetrics,
    pub stressed: PipelineMetrics,
    /// `100 * (1 - stressed.tcr / baseline.tcr)`.
    pub tcr_decrease_percent: f64,
}

/// Runs the pipeline twice: once clean, once with the configured stressors
/// saturating the CPUs from an additional synthetic work stream.
pub fn run_with_stressors(cfg: &PipelineConfig) -> Result<StressReport> {
    let baseline_cfg = PipelineConfig {
        stressor_count: 0,
        ..cfg.clone()
    };
    let baseline = run_pipeline(&baseline_cfg)?;
    let stressed = run_pipeline(cfg)?;
    let tcr_decrease_percent = if baseline.tcr_per_second > 0.0 {
        100.0 * (1.0 - stressed.tcr_per_second / baseline.tcr_per_second)
    } else {
        0.0
    };
    Ok(StressReport {
        baseline,
        stressed,
        tcr_decrease_percent,
    })
}

/// Single-threaded coding throughput of this host for the given settings,
/// in tiles per second. Used to pick producer rates that a desk-scale run
/// can sustain.
pub fn measure_solo_rate(
    latent: &LatentSpec,
    synth: &SyntheticLatentConfig,
    tile_dim: u32,
    duration: Duration,
) -> Result<f64> {
    let source = SyntheticSource::new(*latent, *synth, tile_dim)?;
    let pool: Vec<LatentTile> = (0..TILE_POOL_SIZE).map(|id| source.generate(id)).collect();
    let start = Instant::now();
    let mut coded = 0u64;
    while start.elapsed() < duration {
        let tile = &pool[(coded % TILE_POOL_SIZE) as usize];
        let file = encode_tile(tile, latent, tile_dim, source.models())?;
        std::hint::black_box(file.stream_bytes());
        coded += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(coded as f64 / elapsed.max(1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_latent() -> LatentSpec {
        LatentSpec {
            model_size: ModelSize::S,
            y_channels: 12,
            z_channels: 6,
            y_stride: 16,
            z_stride: 64,
            element_bits: 16,
        }
    }

    fn base_cfg(rate: f64, duration_ms: u64) -> PipelineConfig {
        PipelineConfig {
            trace: ThroughputTrace::constant("host", ModelSize::S, rate),
            latent: small_latent(),
            synth: SyntheticLatentConfig::default(),
            tile_dim: 256,
            queue_capacity: 8,
            worker_count: 2,
            stressor_count: 0,
            duration: Duration::from_millis(duration_ms),
            raw_bpp: 24.0,
        }
    }

    #[test]
    fn zero_duration_runs_empty() {
        let cfg = base_cfg(10.0, 0);
        let m = run_pipeline(&cfg).unwrap();
        assert_eq!(m.produced, 0);
        assert_eq!(m.consumed, 0);
        assert!(!detect_backpressure(&m));
    }

    #[test]
    fn fast_workers_never_stall() {
        // Two workers against a rate far below this host's solo coding
        // throughput: no backpressure, queue stays shallow.
        let cfg = base_cfg(20.0, 1_500);
        let m = run_pipeline(&cfg).unwrap();
        assert_eq!(m.stalls, 0, "{m:?}");
        assert!(!detect_backpressure(&m));
        assert!(m.max_depth <= 4, "queue depth {}", m.max_depth);
        assert!(m.consumed > 0);
        // Achieved rate never exceeds the trace rate by more than 5%.
        assert!(m.tiles_per_second <= 20.0 * 1.05, "{}", m.tiles_per_second);
    }

    #[test]
    fn overdriven_single_worker_stalls() {
        let mut cfg = base_cfg(100_000.0, 400);
        // Full-size tiles make coding far slower than the demanded rate.
        cfg.latent = LatentSpec::for_size(ModelSize::M);
        cfg.tile_dim = 512;
        cfg.queue_capacity = 1;
        cfg.worker_count = 1;
        let m = run_pipeline(&cfg).unwrap();
        assert!(m.stalls > 0, "{m:?}");
        assert!(detect_backpressure(&m));
        assert_eq!(m.consumed, m.produced);
    }

    #[test]
    fn rate_series_integrates_piecewise() {
        let trace = ThroughputTrace {
            device_id: "host".into(),
            model_size: ModelSize::S,
            tiles_per_second: 10.0,
            rate_series: Some(vec![RatePoint {
                t_s: 1.0,
                tiles_per_second: 40.0,
            }]),
            memory_bytes: 0,
        };
        assert_eq!(trace.target_tiles(0.5), 5);
        assert_eq!(trace.target_tiles(1.0), 10);
        assert_eq!(trace.target_tiles(2.0), 50);
    }

    #[test]
    fn backpressure_detector_reads_stall_count() {
        let mut m = PipelineMetrics::empty();
        assert!(!detect_backpressure(&m));
        m.stalls = 7;
        assert!(detect_backpressure(&m));
    }

    #[test]
    fn stressed_run_reports_decrease() {
        let mut cfg = base_cfg(12.0, 900);
        cfg.stressor_count = 2;
        let report = run_with_stressors(&cfg).unwrap();
        assert!(report.baseline.consumed > 0);
        assert!(report.stressed.consumed > 0);
        assert!(report.tcr_decrease_percent.is_finite());
        // Identical seeds: identical bytes per tile either way.
        assert_eq!(
            report.baseline.bytes_coded / report.baseline.consumed,
            report.stressed.bytes_coded / report.stressed.consumed
        );
    }

    #[test]
    fn solo_rate_is_measurable() {
        let rate = measure_solo_rate(
            &small_latent(),
            &SyntheticLatentConfig::default(),
            256,
            Duration::from_millis(300),
        )
        .unwrap();
        assert!(rate > 1.0, "solo rate {rate}");
    }
}

