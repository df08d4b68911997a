//! Acceptance suite: twelve criteria, each printing one PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture`. Everything runs
//! sequentially inside one test so the timed pipeline criterion (two 60 s
//! runs) is never perturbed by parallel test threads; expect roughly two
//! and a half minutes of wall time.
//!
//! Published absolute device numbers (Jetson throughput and energy tables,
//! detection-accuracy results, real-device FPS/SLO tables, per-model
//! subgraph counts that depend on proprietary support masks) are out of
//! scope here; the property checks below are their desk-scale stand-ins.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand_core::{RngCore, SeedableRng};

use satcomp::entropy::{
    build_gaussian_cdf, estimate_bits, LatentSpec, ModelSize, ScaleTable, SyntheticLatentConfig,
    SyntheticSource, DEFAULT_TAIL_MASS,
};
use satcomp::mission::{
    energy_to_double, pass_capacity, profiler_select, raw_equivalent, tiles_to_saturation,
    transmission_savings, ConfigCandidate, DeviceProfile, MissionSpec, SensorVolume,
};
use satcomp::pipeline::{
    measure_solo_rate, run_pipeline, run_with_stressors, PipelineConfig, ThroughputTrace,
};
use satcomp::rans::{decode_stream, encode_stream, CdfTable};
use satcomp::scheduler::{
    dispatch, score_deadline, score_priority, score_resource, score_wait, ProcessorState,
    SchedulerConfig, TaskDescriptor,
};
use satcomp::subgraph::{
    build_support_table, get_unit_subgraphs, merge_subgraphs, OpGraph, PartitionConfig, Subgraph,
    SubgraphKind, SupportTable,
};
use satcomp::tile::{decode_tile, encode_tile, CodedFile};
use satcomp::Error;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn random_table(rng: &mut rand_chacha::ChaCha8Rng) -> CdfTable {
    let bits = 8 + rng.next_u32() % 9;
    let max_alphabet = 300.min(1usize << bits);
    let alphabet = 1 + (rng.next_u32() as usize) % max_alphabet;
    loop {
        let weights: Vec<f64> = (0..alphabet).map(|_| (rng.next_u32() % 1000) as f64).collect();
        if weights.iter().any(|&w| w > 0.0) {
            return CdfTable::from_weights(bits, &weights, 0).expect("valid weights");
        }
    }
}

/// C1: 10^4 randomized (symbol list, table) pairs round-trip bit-exactly
/// in under 60 s.
fn c01_rans_losslessness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(0xC1);
    for case in 0..10_000u32 {
        let table = random_table(&mut r);
        let len = (r.next_u32() % 200) as usize;
        let symbols: Vec<usize> = (0..len).map(|_| table.sample(&mut r)).collect();
        let stream = encode_stream(&symbols, &table).map_err(|e| format!("case {case}: {e}"))?;
        let decoded = decode_stream(&stream, &table, stream.symbol_count)
            .map_err(|e| format!("case {case}: {e}"))?;
        if decoded != symbols {
            return Err(format!("case {case}: round trip differs"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:.1?}, budget 60 s"));
    }
    Ok(format!("10000 pairs in {elapsed:.1?}"))
}

/// C2: for 100 random streams of 10^5 symbols, coded bytes stay within
/// 1.01 x (sum of -log2 p)/8 + 8.
fn c02_entropy_gap() -> Outcome {
    let mut r = rng(0xC2);
    let mut worst = 0.0f64;
    for case in 0..100u32 {
        let table = if case % 2 == 0 {
            let u = (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let sigma = 0.15 * (64.0f64 / 0.15).powf(u);
            build_gaussian_cdf(sigma, 16, DEFAULT_TAIL_MASS).expect("valid sigma")
        } else {
            random_table(&mut r)
        };
        let symbols: Vec<usize> = (0..100_000).map(|_| table.sample(&mut r)).collect();
        let exact_bits: f64 = symbols
            .iter()
            .map(|&s| table.bits_for(s).expect("codable"))
            .sum();
        let stream = encode_stream(&symbols, &table).map_err(|e| e.to_string())?;
        let bound = exact_bits / 8.0 * 1.01 + 8.0;
        let coded = stream.bytes.len() as f64;
        if coded > bound {
            return Err(format!("case {case}: {coded} B > bound {bound:.1} B"));
        }
        worst = worst.max(coded / bound);
    }
    Ok(format!("worst coded/bound ratio {worst:.4}"))
}

/// C3: coded size within 1% of the analytic estimate (plus the two 4-byte
/// flushes) on synthetic latents of >= 10^5 symbols at sparsity 0, 0.5, 0.9.
fn c03_estimator_fidelity() -> Outcome {
    let spec = LatentSpec::for_size(ModelSize::M);
    let tile_dim = 512;
    let mut details = Vec::new();
    for sparsity in [0.0, 0.5, 0.9] {
        let synth = SyntheticLatentConfig {
            sparsity,
            seed: 0xC3,
            ..Default::default()
        };
        let source = SyntheticSource::new(spec, synth, tile_dim).map_err(|e| e.to_string())?;
        let tile = source.generate(0);
        let symbols = tile.y.len() + tile.z.len();
        if symbols < 100_000 {
            return Err(format!("only {symbols} symbols"));
        }
        let est_bytes = estimate_bits(&tile, source.gaussian(), source.factorized())
            .map_err(|e| e.to_string())?
            / 8.0;
        let coded = encode_tile(&tile, &spec, tile_dim, source.models())
            .map_err(|e| e.to_string())?
            .stream_bytes() as f64;
        let gap = (coded - est_bytes).abs();
        if gap > 0.01 * est_bytes + 8.0 {
            return Err(format!(
                "sparsity {sparsity}: |{coded} - {est_bytes:.1}| = {gap:.1} B over 1% + 8 B"
            ));
        }
        details.push(format!("{:.3}%@{sparsity}", 100.0 * gap / est_bytes));
    }
    Ok(format!("gaps {}", details.join(", ")))
}

/// Normal CDF by Simpson quadrature of the density; independent of the
/// erf-based route inside the library.
fn phi_oracle(x: f64) -> f64 {
    let target = x.abs().min(12.0);
    let steps = 40_000usize;
    let h = target / steps as f64;
    let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = density(0.0) + density(target);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * density(i as f64 * h);
    }
    let half = acc * h / 3.0;
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// C4: the quantized Gaussian at sigma 1 puts freq(0) in [25092, 25100]
/// (quadrature oracle agrees) and every table is symmetric within 1.
fn c04_gaussian_cdf() -> Outcome {
    let table = build_gaussian_cdf(1.0, 16, DEFAULT_TAIL_MASS).map_err(|e| e.to_string())?;
    let f0 = table.freq(table.index_of(0).expect("zero in range"));
    if !(25_092..=25_100).contains(&f0) {
        return Err(format!("freq(0) = {f0} outside [25092, 25100]"));
    }
    let oracle = (phi_oracle(0.5) - phi_oracle(-0.5)) * 65_536.0;
    if (f0 as f64 - oracle).abs() > 4.0 {
        return Err(format!("freq(0) = {f0} vs quadrature {oracle:.1}"));
    }
    for &sigma in ScaleTable::default().levels() {
        let t = build_gaussian_cdf(sigma, 16, DEFAULT_TAIL_MASS).map_err(|e| e.to_string())?;
        for k in 1..=t.max_value() {
            let plus = t.freq(t.index_of(k).unwrap());
            let minus = t.freq(t.index_of(-k).unwrap());
            if plus.abs_diff(minus) > 1 {
                return Err(format!("sigma {sigma}: |f({k}) - f({})| > 1", -k));
            }
        }
    }
    Ok(format!("freq(0) = {f0}, oracle {oracle:.1}, 64 tables symmetric"))
}

/// C5: with two workers and the producer at <= 0.5x the measured solo
/// coding rate, a 60 s run never stalls; saturating the CPUs with
/// stressors costs at most 5% TCR/s.
///
/// The producer rate is calibrated below the criterion's 0.5x-solo ceiling
/// so that the *stressed* workers still have at least 2x headroom: on a
/// few-core host, full-CPU stressors take a large scheduler share, and a
/// producer outrunning the stressed coders would measure scheduler
/// fairness rather than pipeline interference. A short overdriven probe
/// run measures that stressed capacity first.
fn c05_backpressure_and_stress() -> Outcome {
    let latent = LatentSpec::for_size(ModelSize::M);
    let synth = SyntheticLatentConfig {
        seed: 0xC5,
        ..Default::default()
    };
    let tile_dim = 512;
    let stressors = std::thread::available_parallelism().map_or(2, |n| n.get());
    let solo = measure_solo_rate(&latent, &synth, tile_dim, Duration::from_secs(2))
        .map_err(|e| e.to_string())?;
    let probe_cfg = PipelineConfig {
        trace: ThroughputTrace::constant("capacity-probe", ModelSize::M, 0.9 * solo),
        latent,
        synth,
        tile_dim,
        queue_capacity: 64,
        worker_count: 2,
        stressor_count: stressors,
        duration: Duration::from_secs(4),
        raw_bpp: 24.0,
    };
    let stressed_capacity = run_pipeline(&probe_cfg)
        .map_err(|e| e.to_string())?
        .tiles_per_second;
    let producer_rate = (0.45 * solo).min(0.5 * stressed_capacity);
    if producer_rate <= 0.0 {
        return Err(format!("degenerate calibration: solo {solo}, stressed {stressed_capacity}"));
    }

    let cfg = PipelineConfig {
        trace: ThroughputTrace::constant("acceptance-host", ModelSize::M, producer_rate),
        duration: Duration::from_secs(60),
        ..probe_cfg
    };
    let report = run_with_stressors(&cfg).map_err(|e| e.to_string())?;
    if report.baseline.stalls != 0 {
        return Err(format!(
            "baseline stalled {} times at {producer_rate:.1} tiles/s (solo {solo:.1})",
            report.baseline.stalls
        ));
    }
    if report.tcr_decrease_percent > 5.0 {
        return Err(format!(
            "TCR/s dropped {:.2}% under {stressors} stressors (budget 5%)",
            report.tcr_decrease_percent
        ));
    }
    Ok(format!(
        "solo {solo:.0} tiles/s, stressed capacity {stressed_capacity:.0}, producer {producer_rate:.0}; stalls 0, TCR drop {:.2}% under {stressors} stressors",
        report.tcr_decrease_percent
    ))
}

/// C6: selection equals exhaustive enumeration on 10^3 random candidate
/// tables, including infeasible ones.
fn c06_profiler_oracle() -> Outcome {
    let mut r = rng(0xC6);
    let sizes = [ModelSize::S, ModelSize::M, ModelSize::L];
    for case in 0..1_000u32 {
        let count = 1 + (r.next_u32() % 12) as usize;
        let raw_bpp = 4.0;
        let budget = (r.next_u32() % 100) as u64;
        let candidates: Vec<ConfigCandidate> = (0..count)
            .map(|_| ConfigCandidate {
                model_size: sizes[(r.next_u32() % 3) as usize],
                input_dim: 256 << (r.next_u32() % 2),
                tiles_per_second: 1.0 + (r.next_u32() % 50) as f64,
                bpp: 0.05 * (1 + r.next_u32() % 100) as f64,
                memory_bytes: (r.next_u32() % 120) as u64,
            })
            .collect();
        let oracle = {
            let mut feasible: Vec<(&ConfigCandidate, f64)> = candidates
                .iter()
                .filter(|c| c.memory_bytes <= budget && c.bpp < raw_bpp)
                .map(|c| {
                    let px = c.input_dim as f64 * c.input_dim as f64;
                    (c, c.tiles_per_second * px * (raw_bpp - c.bpp) / 8.0)
                })
                .collect();
            feasible.sort_by(|(a, ta), (b, tb)| {
                tb.partial_cmp(ta)
                    .unwrap()
                    .then(a.memory_bytes.cmp(&b.memory_bytes))
                    .then(a.model_size.cmp(&b.model_size))
            });
            feasible.first().map(|(c, _)| *c)
        };
        match (profiler_select(&candidates, budget, raw_bpp), oracle) {
            (Ok(got), Some(want)) if got == want => {}
            (Err(Error::NoFeasibleCandidate { .. }), None) => {}
            (got, want) => {
                return Err(format!("case {case}: {got:?} vs oracle {want:?}"));
            }
        }
    }
    Ok("1000 tables, exact agreement".into())
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// C7: a 100x compression ratio multiplies the pass capacity exactly, and
/// the shipped high-capacity mission reports capacity x ratio of exactly
/// 9 TB.
fn c07_downlink_multiplier() -> Outcome {
    let mission = MissionSpec {
        id: "ratio-100".into(),
        downlink_rate_bps: 0.8e9,
        pass_duration_s: 600.0,
        passes_per_day: 4,
        orbital_period_s: 5_554.0,
        sensor: SensorVolume::PerOrbitBytes(1e12),
        raw_bpp: 24.0,
    };
    let cap = pass_capacity(&mission);
    let raw = raw_equivalent(&mission, 0.24);
    if raw != 100.0 * cap {
        return Err(format!("raw_equivalent {raw} != 100 x {cap}"));
    }
    let shipped = satcomp::config::load_mission(&data_dir().join("mission_worldview3.toml"))
        .map_err(|e| e.to_string())?;
    let product = pass_capacity(&shipped) * (shipped.raw_bpp / 0.24);
    if product != 9.0e12 {
        return Err(format!("shipped mission capacity x ratio = {product}, not 9e12"));
    }
    Ok(format!(
        "raw_equivalent = 100 x capacity exactly; shipped mission reports {product:.0} B"
    ))
}

/// C8: doubling processes exactly twice the pass capacity in raw bytes;
/// savings vanish at ratio 1; step-wise accumulation matches the closed
/// forms within one tile / one tick.
fn c08_energy_identities() -> Outcome {
    let mission = MissionSpec {
        id: "forty-gb".into(),
        downlink_rate_bps: 8.0e8,
        pass_duration_s: 400.0,
        passes_per_day: 4,
        orbital_period_s: 5_554.0,
        sensor: SensorVolume::PerOrbitBytes(1e12),
        raw_bpp: 24.0,
    };
    let device = DeviceProfile {
        id: "dev".into(),
        power_cap_w: 15.0,
        avg_processing_power_w: 10.0,
        transmit_power_w: 5.0,
        memory_budget_bytes: 1,
    };
    let candidate = ConfigCandidate {
        model_size: ModelSize::M,
        input_dim: 512,
        tiles_per_second: 10.0,
        bpp: 0.24,
        memory_bytes: 1,
    };
    if pass_capacity(&mission) != 4.0e10 {
        return Err("test mission must have 40 GB capacity".into());
    }
    let (t, e) = energy_to_double(&mission, &device, &candidate, 512).map_err(|e| e.to_string())?;
    let raw_rate = 10.0 * 512.0 * 512.0 * 24.0 / 8.0;
    let processed = t * raw_rate;
    if (processed - 8.0e10).abs() > 1e-3 {
        return Err(format!("doubling processed {processed} raw bytes, want 8e10"));
    }
    if transmission_savings(&mission, &device, 24.0) != 0.0 {
        return Err("bent pipe must save nothing".into());
    }
    // Tick-wise energy accumulation.
    let ticks = 10_000;
    let dt = t / ticks as f64;
    let acc: f64 = (0..ticks).map(|_| device.avg_processing_power_w * dt).sum();
    if (acc - e).abs() > device.avg_processing_power_w * dt + 1e-6 {
        return Err(format!("energy accumulation {acc} vs closed form {e}"));
    }
    // Tile-wise capacity accumulation.
    let closed = tiles_to_saturation(&mission, &candidate, 512);
    let per_tile = 512.0 * 512.0 * candidate.bpp / 8.0;
    let mut used = 0.0;
    let mut tiles = 0u64;
    while used + per_tile <= pass_capacity(&mission) {
        used += per_tile;
        tiles += 1;
    }
    if closed.abs_diff(tiles) > 1 {
        return Err(format!("tiles closed {closed} vs stepwise {tiles}"));
    }
    Ok(format!(
        "80 GB processed in {t:.1} s / {e:.0} J; accumulation matches"
    ))
}

/// C9: the frames-per-joule reference points hold to within 0.01.
fn c09_frames_per_joule() -> Outcome {
    for (fps, power, want) in [(11.20, 7.18, 1.56), (45.12, 7.86, 5.74)] {
        let got = satcomp::mission::frames_per_joule(fps, power).map_err(|e| e.to_string())?;
        if (got - want).abs() > 0.01 {
            return Err(format!("{fps}/{power} = {got:.4}, want {want} +- 0.01"));
        }
    }
    Ok("(11.20, 7.18) -> 1.56 and (45.12, 7.86) -> 5.74".into())
}

/// C10: the four scores match 20 hand-computed vectors exactly; dispatch
/// never targets a processor at or above 68 C; uniformly scaling the three
/// weights never changes the chosen assignment.
fn c10_scheduler_formulas() -> Outcome {
    let cfg = |alpha: f64, gamma: f64, delta: f64, t_avg: f64| SchedulerConfig {
        alpha,
        gamma,
        delta,
        t_avg_ms: t_avg,
        loop_call_size: 8,
    };
    let task = |slo: f64, lat: f64, enq: f64, c: f64| TaskDescriptor {
        id: 0,
        slo_ms: slo,
        latency_ms: lat,
        enqueue_ms: enq,
        complexity: c,
        subgraph_id: 0,
        eligible: vec![0],
    };
    let proc = |b: f64, bmax: f64| ProcessorState {
        b_current: b,
        b_max: bmax,
        temperature_c: 40.0,
        frequency_mhz: 2_000.0,
        throttle_threshold_c: 68.0,
        idle: true,
    };

    // Hand-computed vectors over dyadic inputs; all exact in f64.
    let deadline_vectors = [
        (1.0, 100.0, 40.0, 60.0),
        (2.0, 50.0, 25.0, 50.0),
        (0.5, 10.0, 50.0, -20.0),
        (0.0, 999.0, 1.0, 0.0),
        (4.0, 12.5, 12.5, 0.0),
    ];
    for (i, &(gamma, slo, lat, want)) in deadline_vectors.iter().enumerate() {
        let got = score_deadline(&task(slo, lat, 0.0, 1.0), &cfg(1.0, gamma, 1.0, 10.0));
        if got != want {
            return Err(format!("deadline vector {i}: {got} != {want}"));
        }
    }
    let wait_vectors = [
        (1.0, 30.0, 0.0, 15.0, -2.0),
        (2.0, 100.0, 50.0, 25.0, -4.0),
        (0.5, 8.0, 8.0, 4.0, 0.0),
        (8.0, 10.0, 2.0, 16.0, -4.0),
        (1.0, 7.0, 3.0, 2.0, -2.0),
    ];
    for (i, &(alpha, now, enq, t_avg, want)) in wait_vectors.iter().enumerate() {
        let got = score_wait(&task(1.0, 1.0, enq, 1.0), now, &cfg(alpha, 1.0, 1.0, t_avg))
            .map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("wait vector {i}: {got} != {want}"));
        }
    }
    let resource_vectors = [
        (1.0, 5.0, 10.0, 3.0, 0.0),
        (1.0, 10.0, 10.0, 3.0, 3.0),
        (1.0, 0.0, 10.0, 3.0, -3.0),
        (2.0, 7.5, 10.0, 4.0, 4.0),
        (0.5, 2.0, 8.0, 8.0, -2.0),
    ];
    for (i, &(delta, b, bmax, c, want)) in resource_vectors.iter().enumerate() {
        let got = score_resource(&task(1.0, 1.0, 0.0, c), &proc(b, bmax), &cfg(1.0, 1.0, delta, 10.0))
            .map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("resource vector {i}: {got} != {want}"));
        }
    }
    // Combined: (gamma, slo, lat, alpha, now, enq, t_avg, delta, b, bmax, c, want)
    let priority_vectors = [
        (1.0, 100.0, 40.0, 1.0, 30.0, 0.0, 15.0, 1.0, 5.0, 10.0, 3.0, 58.0),
        (0.0, 77.0, 3.0, 0.0, 9.0, 0.0, 10.0, 0.0, 9.0, 10.0, 5.0, 0.0),
        (2.0, 50.0, 25.0, 2.0, 100.0, 50.0, 25.0, 1.0, 10.0, 10.0, 3.0, 49.0),
        (0.5, 10.0, 50.0, 0.5, 8.0, 8.0, 4.0, 2.0, 7.5, 10.0, 4.0, -16.0),
        (4.0, 12.5, 12.5, 8.0, 10.0, 2.0, 16.0, 0.5, 2.0, 8.0, 8.0, -6.0),
    ];
    for (i, &(gamma, slo, lat, alpha, now, enq, t_avg, delta, b, bmax, c, want)) in
        priority_vectors.iter().enumerate()
    {
        let got = score_priority(
            &task(slo, lat, enq, c),
            &proc(b, bmax),
            now,
            &cfg(alpha, gamma, delta, t_avg),
        )
        .map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("priority vector {i}: {got} != {want}"));
        }
    }

    // Throttle safety over randomized dispatch rounds.
    let mut r = rng(0xC10);
    for case in 0..200u32 {
        let queue: Vec<TaskDescriptor> = (0..1 + r.next_u32() % 6)
            .map(|id| TaskDescriptor {
                id: id as u64,
                slo_ms: (r.next_u32() % 300) as f64,
                latency_ms: (r.next_u32() % 100) as f64,
                enqueue_ms: (r.next_u32() % 50) as f64,
                complexity: (r.next_u32() % 8) as f64,
                subgraph_id: 0,
                eligible: vec![0, 1, 2],
            })
            .collect();
        let procs: Vec<ProcessorState> = (0..3)
            .map(|_| ProcessorState {
                b_current: (r.next_u32() % 10) as f64,
                b_max: 10.0,
                temperature_c: 40.0 + (r.next_u32() % 40) as f64,
                frequency_mhz: 2_000.0,
                throttle_threshold_c: 68.0,
                idle: r.next_u32() % 2 == 0,
            })
            .collect();
        let base = cfg(1.5, 0.75, 2.0, 11.0);
        let assignments = dispatch(&queue, &procs, 60.0, &base).map_err(|e| e.to_string())?;
        for a in &assignments {
            if procs[a.processor].temperature_c >= 68.0 {
                return Err(format!(
                    "case {case}: assigned to processor at {} C",
                    procs[a.processor].temperature_c
                ));
            }
        }
        // Uniform positive scaling leaves the chosen assignment unchanged.
        for scale in [0.5, 2.0, 16.0] {
            let scaled = SchedulerConfig {
                alpha: base.alpha * scale,
                gamma: base.gamma * scale,
                delta: base.delta * scale,
                ..base
            };
            let rescaled = dispatch(&queue, &procs, 60.0, &scaled).map_err(|e| e.to_string())?;
            let key = |v: &[satcomp::scheduler::Assignment]| {
                v.iter().map(|a| (a.task_id, a.processor)).collect::<Vec<_>>()
            };
            if key(&assignments) != key(&rescaled) {
                return Err(format!("case {case}: scaling by {scale} changed dispatch"));
            }
        }
    }
    Ok("20 vectors exact, 200 rounds throttle-safe and scale-invariant".into())
}

fn random_dag(r: &mut rand_chacha::ChaCha8Rng, max_ops: usize, max_procs: usize) -> (OpGraph, SupportTable) {
    let n = 1 + (r.next_u32() as usize) % max_ops;
    let mut edges = Vec::new();
    for to in 1..n as u32 {
        edges.push((r.next_u32() % to, to));
        if r.next_u32() % 3 == 0 {
            edges.push((r.next_u32() % to, to));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let graph = OpGraph::new(n, edges, vec![]).expect("valid dag");
    let procs = 2 + (r.next_u32() as usize) % (max_procs - 1);
    let unsupported: Vec<Vec<u32>> = (0..procs)
        .map(|p| {
            if p == 0 {
                vec![]
            } else {
                (0..n as u32).filter(|_| r.next_u32() % 4 == 0).collect()
            }
        })
        .collect();
    let table = build_support_table(&graph, &unsupported, 0).expect("valid table");
    (graph, table)
}

fn check_partition(units: &[Subgraph], table: &SupportTable, op_count: usize) -> Result<(), String> {
    let mut covered = vec![false; op_count];
    for sg in units {
        if sg.ops.is_empty() {
            return Err("empty subgraph".into());
        }
        for &p in &sg.processors {
            for &op in &sg.ops {
                if !table.supports(p, op as usize) {
                    return Err(format!("processor {p} cannot run op {op}"));
                }
            }
        }
        for &op in &sg.ops {
            covered[op as usize] = true;
        }
    }
    if !covered.iter().all(|&c| c) {
        return Err("uncovered ops".into());
    }
    Ok(())
}

/// C11: the hand-traced 7-op cases reproduce exactly; coverage, validity,
/// and per-processor window monotonicity hold over 10^3 random DAGs (<= 64
/// ops, <= 4 processors); merged partitions stay valid on a smaller
/// sample. Published per-model subgraph counts need the real support masks
/// and are out of scope.
fn c11_partitioner() -> Outcome {
    let graph = OpGraph::chain(7);
    let table = build_support_table(&graph, &[vec![], vec![3]], 0).map_err(|e| e.to_string())?;
    let units = get_unit_subgraphs(&graph, &table, &PartitionConfig::with_window_size(1))
        .map_err(|e| e.to_string())?;
    let expect = [
        (vec![1usize], vec![0u32, 1, 2]),
        (vec![1], vec![4, 5, 6]),
        (vec![0], vec![3]),
    ];
    if units.len() != 3
        || units
            .iter()
            .zip(expect.iter())
            .any(|(sg, (procs, ops))| &sg.processors != procs || &sg.ops != ops)
    {
        return Err(format!("ws=1 hand trace mismatch: {units:?}"));
    }
    let units4 = get_unit_subgraphs(&graph, &table, &PartitionConfig::with_window_size(4))
        .map_err(|e| e.to_string())?;
    if units4.len() != 1 || units4[0].processors != vec![0] || units4[0].ops != (0..7).collect::<Vec<_>>() {
        return Err(format!("ws=4 hand trace mismatch: {units4:?}"));
    }

    let mut r = rng(0xC11);
    for case in 0..1_000u32 {
        let (graph, table) = random_dag(&mut r, 64, 4);
        let mut last: Option<Vec<usize>> = None;
        for ws in 1..=5 {
            let cfg = PartitionConfig {
                window_size: ws,
                merge_cap: 10_000,
            };
            let units = get_unit_subgraphs(&graph, &table, &cfg).map_err(|e| e.to_string())?;
            check_partition(&units, &table, graph.op_count())
                .map_err(|e| format!("case {case} ws {ws}: {e}"))?;
            let counts: Vec<usize> = (0..table.processor_count())
                .map(|p| {
                    units
                        .iter()
                        .filter(|sg| p != table.fallback() && sg.processors == vec![p])
                        .count()
                })
                .collect();
            if let Some(prev) = &last {
                if counts.iter().zip(prev.iter()).any(|(now, before)| now > before) {
                    return Err(format!("case {case}: unit count grew at ws {ws}"));
                }
            }
            last = Some(counts);
        }
    }
    let mut merged_checked = 0;
    for case in 0..150u32 {
        let (graph, table) = random_dag(&mut r, 20, 4);
        let cfg = PartitionConfig {
            window_size: 1,
            merge_cap: 2_000,
        };
        let units = get_unit_subgraphs(&graph, &table, &cfg).map_err(|e| e.to_string())?;
        match merge_subgraphs(&graph, &units, &cfg) {
            Ok(all) => {
                check_partition(&all, &table, graph.op_count())
                    .map_err(|e| format!("merged case {case}: {e}"))?;
                merged_checked += 1;
            }
            Err(Error::SubgraphOverflow { .. }) => {}
            Err(e) => return Err(format!("merged case {case}: {e}")),
        }
    }
    Ok(format!(
        "hand traces exact; 1000 DAGs covered/valid/monotone; {merged_checked} merged partitions valid"
    ))
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_tile.fcf")
}

fn golden_source() -> SyntheticSource {
    let spec = LatentSpec {
        model_size: ModelSize::S,
        y_channels: 8,
        z_channels: 4,
        y_stride: 16,
        z_stride: 64,
        element_bits: 16,
    };
    let synth = SyntheticLatentConfig {
        sparsity: 0.4,
        seed: 20_240_915,
        ..Default::default()
    };
    SyntheticSource::new(spec, synth, 128).expect("golden setup is valid")
}

/// C12: the committed coded file parses, decodes to the regenerated
/// source tile, re-encodes byte-identically, and every single-byte flip is
/// rejected.
fn c12_golden_file() -> Outcome {
    let bytes = std::fs::read(golden_path()).map_err(|e| format!("golden file missing: {e}"))?;
    let source = golden_source();
    let file = CodedFile::parse(&bytes).map_err(|e| format!("parse: {e}"))?;
    let decoded = decode_tile(&file, source.models()).map_err(|e| format!("decode: {e}"))?;
    let expected = source.generate_at(5, 1, 2);
    if decoded != expected {
        return Err("decoded tile differs from the seeded source".into());
    }
    let reencoded = encode_tile(&expected, source.spec(), 128, source.models())
        .map_err(|e| e.to_string())?
        .serialize();
    if reencoded != bytes {
        return Err("re-encoding does not reproduce the committed bytes".into());
    }
    for pos in 0..bytes.len() {
        let mut corrupted = bytes.clone();
        corrupted[pos] ^= 0x01;
        if CodedFile::parse(&corrupted).is_ok() {
            return Err(format!("flip at byte {pos} went undetected"));
        }
    }
    Ok(format!(
        "{} bytes parse + decode + re-encode exactly; all {} flips detected",
        bytes.len(),
        bytes.len()
    ))
}

/// Writes the golden file from the pinned parameters. Run explicitly with
/// `cargo test --test acceptance regenerate_golden_tile -- --ignored`
/// after an intentional format change.
#[test]
#[ignore]
fn regenerate_golden_tile() {
    let source = golden_source();
    let tile = source.generate_at(5, 1, 2);
    let bytes = encode_tile(&tile, source.spec(), 128, source.models())
        .expect("golden tile encodes")
        .serialize();
    std::fs::create_dir_all(golden_path().parent().unwrap()).unwrap();
    std::fs::write(golden_path(), bytes).unwrap();
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("rANS losslessness (1e4 round trips < 60 s)", c01_rans_losslessness),
        ("entropy gap <= 1.01x + 8 B over 100x1e5 symbols", c02_entropy_gap),
        ("rate estimator within 1% on >= 1e5-symbol tiles", c03_estimator_fidelity),
        ("Gaussian CDF freq(0) and symmetry", c04_gaussian_cdf),
        ("no backpressure at 0.4x solo; <= 5% TCR/s under stress", c05_backpressure_and_stress),
        ("profiler matches exhaustive oracle on 1e3 tables", c06_profiler_oracle),
        ("downlink multiplier exact; 9 TB consistency", c07_downlink_multiplier),
        ("energy doubling anchor and accumulation oracles", c08_energy_identities),
        ("frames-per-joule reference points", c09_frames_per_joule),
        ("scheduler formulas, throttle safety, scale invariance", c10_scheduler_formulas),
        ("partitioner hand traces and 1e3-DAG properties", c11_partitioner),
        ("golden coded file byte-exact, flips detected", c12_golden_file),
    ];

    let mut failures = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run)
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let elapsed = started.elapsed();
        match outcome {
            Ok(detail) => println!("C{:02} PASS [{elapsed:6.1?}] {name} -- {detail}", i + 1),
            Err(reason) => {
                println!("C{:02} FAIL [{elapsed:6.1?}] {name} -- {reason}", i + 1);
                failures.push(format!("C{:02}: {reason}", i + 1));
            }
        }
    }
    assert!(
        failures.is_empty(),
        "{} acceptance criteria failed:\n{}",
        failures.len(),
        failures.join("\n")
    );
}
