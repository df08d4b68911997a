//! Multi-factor priority scheduling of subgraph tasks across heterogeneous
//! processors, plus a deterministic discrete-event simulator around it.
//!
//! A task's priority is the sum of three scores: deadline slack scaled by
//! gamma, a negative waiting term scaled by alpha and normalized by the
//! average execution time, and a load term scaled by delta that is positive
//! when a processor is more than half loaded. Lower scores dispatch first.
//! Time is in milliseconds throughout; gamma and delta double as unit
//! conversion factors since the deadline term carries milliseconds while
//! the resource term is dimensionless.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Throttling onset temperature used when a processor does not override it.
pub const DEFAULT_THROTTLE_THRESHOLD_C: f64 = 68.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Average task execution time used to normalize waiting, ms.
    pub t_avg_ms: f64,
    /// How many tasks from the queue head each dispatch round examines.
    pub loop_call_size: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 1.0,
            delta: 1.0,
            t_avg_ms: 10.0,
            loop_call_size: 5,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma), ("delta", self.delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.t_avg_ms > 0.0 && self.t_avg_ms.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_avg_ms must be positive, got {}",
                self.t_avg_ms
            )));
        }
        if self.loop_call_size == 0 {
            return Err(Error::InvalidParameter(
                "loop_call_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// A queued subgraph task as the dispatcher sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDescriptor {
    pub id: u64,
    /// Expected response time bound, ms.
    pub slo_ms: f64,
    /// Estimated execution latency of the current stage, ms.
    pub latency_ms: f64,
    /// When the task entered the queue, ms.
    pub enqueue_ms: f64,
    /// Remaining-complexity score across all outstanding stages.
    pub complexity: f64,
    pub subgraph_id: u32,
    /// Processors able to execute the current stage's subgraph.
    pub eligible: Vec<usize>,
}

/// Live processor state the dispatcher consults.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorState {
    pub b_current: f64,
    pub b_max: f64,
    pub temperature_c: f64,
    pub frequency_mhz: f64,
    pub throttle_threshold_c: f64,
    pub idle: bool,
}

/// Deadline urgency: `gamma * (T_SLO - T_latency)`.
pub fn score_deadline(t: &TaskDescriptor, cfg: &SchedulerConfig) -> f64 {
    cfg.gamma * (t.slo_ms - t.latency_ms)
}

/// Waiting fairness: `-alpha * (now - T_enqueue) / T_avg`.
pub fn score_wait(t: &TaskDescriptor, now_ms: f64, cfg: &SchedulerConfig) -> Result<f64> {
    if now_ms < t.enqueue_ms {
        return Err(Error::TimeBeforeEnqueue {
            now: now_ms,
            enqueue: t.enqueue_ms,
        });
    }
    Ok(-cfg.alpha * (now_ms - t.enqueue_ms) / cfg.t_avg_ms)
}

/// Resource efficiency: `delta * ((2*B_current - B_max) / B_max) * C_remaining`.
/// Zero at half load, positive above, negative below.
pub fn score_resource(
    t: &TaskDescriptor,
    p: &ProcessorState,
    cfg: &SchedulerConfig,
) -> Result<f64> {
    if !p.b_max.is_finite() || p.b_max <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "B_max must be positive, got {}",
            p.b_max
        )));
    }
    Ok(cfg.delta * ((2.0 * p.b_current - p.b_max) / p.b_max) * t.complexity)
}

/// Integrated priority: the sum of the three component scores.
pub fn score_priority(
    t: &TaskDescriptor,
    p: &ProcessorState,
    now_ms: f64,
    cfg: &SchedulerConfig,
) -> Result<f64> {
    Ok(score_deadline(t, cfg) + score_wait(t, now_ms, cfg)? + score_resource(t, p, cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub task_id: u64,
    pub processor: usize,
    pub score: f64,
}

/// One dispatch round.
///
/// Only the first `loop_call_size` queued tasks are considered. Processors
/// are visited in id order; each idle processor below its throttle
/// threshold takes the eligible task with the minimum priority score, ties
/// broken by earlier enqueue time, then lower task id. The queue itself is
/// not mutated; callers remove assigned tasks.
pub fn dispatch(
    queue: &[TaskDescriptor],
    processors: &[ProcessorState],
    now_ms: f64,
    cfg: &SchedulerConfig,
) -> Result<Vec<Assignment>> {
    cfg.validate()?;
    let window = queue.len().min(cfg.loop_call_size);
    let mut taken = vec![false; window];
    let mut out = Vec::new();
    for (pid, p) in processors.iter().enumerate() {
        if !p.idle || p.temperature_c >= p.throttle_threshold_c {
            continue;
        }
        let mut best: Option<(f64, f64, u64, usize)> = None;
        for (slot, t) in queue[..window].iter().enumerate() {
            if taken[slot] || !t.eligible.contains(&pid) {
                continue;
            }
            let score = score_priority(t, p, now_ms, cfg)?;
            let better = match best {
                None => true,
                Some((bs, be, bi, _)) => (score, t.enqueue_ms, t.id) < (bs, be, bi),
            };
            if better {
                best = Some((score, t.enqueue_ms, t.id, slot));
            }
        }
        if let Some((score, _, task_id, slot)) = best {
            taken[slot] = true;
            out.push(Assignment {
                task_id,
                processor: pid,
                score,
            });
        }
    }
    Ok(out)
}

/// One execution stage of a workload task.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub subgraph_id: u32,
    pub eligible: Vec<usize>,
    pub latency_ms: f64,
    pub complexity: f64,
}

/// A workload entry: one or more stages executed in order. When a stage
/// completes with stages outstanding, the remainder re-enters the queue at
/// the front.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTask {
    pub id: u64,
    pub slo_ms: f64,
    pub enqueue_ms: f64,
    pub stages: Vec<Stage>,
}

impl SimTask {
    pub fn single(
        id: u64,
        slo_ms: f64,
        enqueue_ms: f64,
        latency_ms: f64,
        complexity: f64,
        subgraph_id: u32,
        eligible: Vec<usize>,
    ) -> Self {
        Self {
            id,
            slo_ms,
            enqueue_ms,
            stages: vec![Stage {
                subgraph_id,
                eligible,
                latency_ms,
                complexity,
            }],
        }
    }
}

/// Static processor parameters for the simulator, including the linear
/// heat/cool thermal model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorConfig {
    pub name: String,
    pub b_max: f64,
    pub frequency_mhz: f64,
    pub initial_temp_c: f64,
    pub throttle_threshold_c: f64,
    pub heat_rate_c_per_s: f64,
    pub cool_rate_c_per_s: f64,
    pub ambient_c: f64,
}

impl ProcessorConfig {
    pub fn basic(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            b_max: 10.0,
            frequency_mhz: 2_000.0,
            initial_temp_c: 40.0,
            throttle_threshold_c: DEFAULT_THROTTLE_THRESHOLD_C,
            heat_rate_c_per_s: 0.0,
            cool_rate_c_per_s: 0.0,
            ambient_c: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task_id: u64,
    pub enqueue_ms: f64,
    pub start_ms: Option<f64>,
    pub finish_ms: Option<f64>,
    /// Processor that executed the final stage.
    pub processor: Option<usize>,
    pub slo_met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub records: Vec<TaskRecord>,
    pub slo_satisfaction_pct: f64,
    pub busy_fraction: Vec<f64>,
    pub sim_end_ms: f64,
    /// Largest first-dispatch wait among started tasks, ms.
    pub max_wait_ms: f64,
}

struct Running {
    pending: Pending,
    started_ms: f64,
    finish_ms: f64,
    complexity: f64,
}

struct ProcSim {
    state: ProcessorState,
    thermal: ProcessorConfig,
    running: Option<Running>,
    busy_ms: f64,
}

#[derive(Clone)]
struct Pending {
    task: SimTask,
    next_stage: usize,
    started: bool,
}

impl Pending {
    fn descriptor(&self) -> TaskDescriptor {
        let stage = &self.task.stages[self.next_stage];
        let remaining: f64 = self.task.stages[self.next_stage..]
            .iter()
            .map(|s| s.complexity)
            .sum();
        TaskDescriptor {
            id: self.task.id,
            slo_ms: self.task.slo_ms,
            latency_ms: stage.latency_ms,
            enqueue_ms: self.task.enqueue_ms,
            complexity: remaining,
            subgraph_id: stage.subgraph_id,
            eligible: stage.eligible.clone(),
        }
    }
}

/// Runs the workload to completion or `horizon_ms`, whichever comes first.
/// Deterministic: ties break on processor index and task id.
pub fn simulate(
    tasks: &[SimTask],
    processors: &[ProcessorConfig],
    cfg: &SchedulerConfig,
    horizon_ms: f64,
) -> Result<ScheduleReport> {
    cfg.validate()?;
    if processors.is_empty() {
        return Err(Error::InvalidParameter("no processors".into()));
    }
    for t in tasks {
        if t.stages.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "task {} has no stages",
                t.id
            )));
        }
        for s in &t.stages {
            if !(s.latency_ms > 0.0 && s.latency_ms.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "task {}: stage latency must be positive",
                    t.id
                )));
            }
            if s.eligible.is_empty() || s.eligible.iter().any(|&p| p >= processors.len()) {
                return Err(Error::InvalidParameter(format!(
                    "task {}: eligible processors invalid",
                    t.id
                )));
            }
        }
    }

    let mut procs: Vec<ProcSim> = processors
        .iter()
        .map(|pc| ProcSim {
            state: ProcessorState {
                b_current: 0.0,
                b_max: pc.b_max,
                temperature_c: pc.initial_temp_c,
                frequency_mhz: pc.frequency_mhz,
                throttle_threshold_c: pc.throttle_threshold_c,
                idle: true,
            },
            thermal: pc.clone(),
            running: None,
            busy_ms: 0.0,
        })
        .collect();

    let mut arrivals: Vec<Pending> = tasks
        .iter()
        .map(|t| Pending {
            task: t.clone(),
            next_stage: 0,
            started: false,
        })
        .collect();
    arrivals.sort_by(|a, b| {
        a.task
            .enqueue_ms
            .total_cmp(&b.task.enqueue_ms)
            .then(a.task.id.cmp(&b.task.id))
    });
    let mut next_arrival = 0usize;

    let mut queue: VecDeque<Pending> = VecDeque::new();
    let mut records: std::collections::BTreeMap<u64, TaskRecord> = tasks
        .iter()
        .map(|t| {
            (
                t.id,
                TaskRecord {
                    task_id: t.id,
                    enqueue_ms: t.enqueue_ms,
                    start_ms: None,
                    finish_ms: None,
                    processor: None,
                    slo_met: false,
                },
            )
        })
        .collect();

    let mut last_update = 0.0f64;
    let mut sim_end = 0.0f64;

    loop {
        let next_completion = procs
            .iter()
            .filter_map(|p| p.running.as_ref().map(|r| r.finish_ms))
            .fold(f64::INFINITY, f64::min);
        let next_arrival_ms = arrivals
            .get(next_arrival)
            .map_or(f64::INFINITY, |p| p.task.enqueue_ms);
        // A queue stuck behind throttled-but-cooling processors needs a
        // wake-up event at the de-throttle time; nothing else re-triggers
        // dispatch.
        let next_cooldown = if queue.is_empty() {
            f64::INFINITY
        } else {
            procs
                .iter()
                .filter(|p| {
                    p.running.is_none()
                        && p.state.temperature_c >= p.state.throttle_threshold_c
                        && p.thermal.cool_rate_c_per_s > 0.0
                        && p.thermal.ambient_c < p.state.throttle_threshold_c - 0.5
                })
                .map(|p| {
                    let target = p.state.throttle_threshold_c - 0.5;
                    let excess = (p.state.temperature_c - target).max(0.0);
                    last_update + excess / p.thermal.cool_rate_c_per_s * 1_000.0
                })
                .fold(f64::INFINITY, f64::min)
        };
        let now = next_completion.min(next_arrival_ms).min(next_cooldown);
        if !now.is_finite() || now > horizon_ms {
            break;
        }
        sim_end = sim_end.max(now);

        // Linear thermal model: heat while busy, cool toward ambient while
        // idle.
        let dt_s = (now - last_update) / 1_000.0;
        for p in procs.iter_mut() {
            if p.running.is_some() {
                p.state.temperature_c += p.thermal.heat_rate_c_per_s * dt_s;
            } else {
                p.state.temperature_c = (p.state.temperature_c
                    - p.thermal.cool_rate_c_per_s * dt_s)
                    .max(p.thermal.ambient_c);
            }
        }
        last_update = now;

        // Completions first: they free processors and may reinsert the
        // remainder of a multi-stage task at the queue front.
        for (pid, proc) in procs.iter_mut().enumerate() {
            let done = proc.running.as_ref().is_some_and(|r| r.finish_ms <= now);
            if !done {
                continue;
            }
            let running = proc.running.take().unwrap();
            proc.state.idle = true;
            proc.state.b_current -= running.complexity;
            proc.busy_ms += running.finish_ms - running.started_ms;
            let mut pending = running.pending;
            pending.next_stage += 1;
            let record = records.get_mut(&pending.task.id).unwrap();
            record.processor = Some(pid);
            if pending.next_stage == pending.task.stages.len() {
                record.finish_ms = Some(now);
                record.slo_met = now - pending.task.enqueue_ms <= pending.task.slo_ms;
            } else {
                queue.push_front(pending);
            }
        }

        while next_arrival < arrivals.len() && arrivals[next_arrival].task.enqueue_ms <= now {
            queue.push_back(arrivals[next_arrival].clone());
            next_arrival += 1;
        }

        let descriptors: Vec<TaskDescriptor> = queue.iter().map(Pending::descriptor).collect();
        let states: Vec<ProcessorState> = procs.iter().map(|p| p.state.clone()).collect();
        let assignments = dispatch(&descriptors, &states, now, cfg)?;
        let mut picks: Vec<(usize, usize)> = assignments
            .iter()
            .map(|a| {
                let idx = queue
                    .iter()
                    .position(|p| p.task.id == a.task_id)
                    .expect("assigned task is in the queue");
                (idx, a.processor)
            })
            .collect();
        // Remove back-to-front so queue indices stay valid.
        picks.sort_by_key(|p| std::cmp::Reverse(p.0));
        for (idx, pid) in picks {
            let mut pending = queue.remove(idx).unwrap();
            if !pending.started {
                pending.started = true;
                records.get_mut(&pending.task.id).unwrap().start_ms = Some(now);
            }
            let stage = pending.task.stages[pending.next_stage].clone();
            procs[pid].state.idle = false;
            procs[pid].state.b_current += stage.complexity;
            procs[pid].running = Some(Running {
                pending,
                started_ms: now,
                finish_ms: now + stage.latency_ms,
                complexity: stage.complexity,
            });
        }
    }

    let records: Vec<TaskRecord> = records.into_values().collect();
    let met = records.iter().filter(|r| r.slo_met).count();
    let slo_satisfaction_pct = if records.is_empty() {
        100.0
    } else {
        100.0 * met as f64 / records.len() as f64
    };
    let max_wait_ms = records
        .iter()
        .filter_map(|r| r.start_ms.map(|s| s - r.enqueue_ms))
        .fold(0.0, f64::max);
    let busy_fraction = procs
        .iter()
        .map(|p| {
            if sim_end > 0.0 {
                (p.busy_ms / sim_end).min(1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(ScheduleReport {
        records,
        slo_satisfaction_pct,
        busy_fraction,
        sim_end_ms: sim_end,
        max_wait_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn task(id: u64, slo: f64, latency: f64, enqueue: f64, complexity: f64) -> TaskDescriptor {
        TaskDescriptor {
            id,
            slo_ms: slo,
            latency_ms: latency,
            enqueue_ms: enqueue,
            complexity,
            subgraph_id: 0,
            eligible: vec![0],
        }
    }

    fn processor(b_current: f64, b_max: f64, temp: f64) -> ProcessorState {
        ProcessorState {
            b_current,
            b_max,
            temperature_c: temp,
            frequency_mhz: 2_000.0,
            throttle_threshold_c: DEFAULT_THROTTLE_THRESHOLD_C,
            idle: true,
        }
    }

    #[test]
    fn deadline_score_plug_ins() {
        let cfg = SchedulerConfig::default();
        assert_eq!(score_deadline(&task(0, 100.0, 40.0, 0.0, 1.0), &cfg), 60.0);
        assert_eq!(score_deadline(&task(0, 50.0, 50.0, 0.0, 1.0), &cfg), 0.0);
        let zero_gamma = SchedulerConfig {
            gamma: 0.0,
            ..cfg
        };
        assert_eq!(
            score_deadline(&task(0, 1e6, -3.0, 0.0, 1.0), &zero_gamma),
            0.0
        );
    }

    #[test]
    fn wait_score_plug_ins() {
        let cfg = SchedulerConfig {
            t_avg_ms: 15.0,
            ..Default::default()
        };
        let t = task(0, 100.0, 10.0, 10.0, 1.0);
        assert_eq!(score_wait(&t, 40.0, &cfg).unwrap(), -2.0);
        assert_eq!(score_wait(&t, 10.0, &cfg).unwrap(), 0.0);
        let doubled = SchedulerConfig {
            alpha: 2.0,
            ..cfg
        };
        assert_eq!(score_wait(&t, 40.0, &doubled).unwrap(), -4.0);
        assert!(matches!(
            score_wait(&t, 5.0, &cfg),
            Err(Error::TimeBeforeEnqueue { .. })
        ));
    }

    #[test]
    fn resource_score_plug_ins() {
        let cfg = SchedulerConfig::default();
        let t = task(0, 100.0, 10.0, 0.0, 3.0);
        assert_eq!(
            score_resource(&t, &processor(5.0, 10.0, 40.0), &cfg).unwrap(),
            0.0
        );
        assert_eq!(
            score_resource(&t, &processor(10.0, 10.0, 40.0), &cfg).unwrap(),
            3.0
        );
        assert_eq!(
            score_resource(&t, &processor(0.0, 10.0, 40.0), &cfg).unwrap(),
            -3.0
        );
        assert!(score_resource(&t, &processor(0.0, 0.0, 40.0), &cfg).is_err());
    }

    #[test]
    fn priority_is_the_component_sum() {
        let cfg = SchedulerConfig {
            t_avg_ms: 15.0,
            ..Default::default()
        };
        let t = task(0, 100.0, 40.0, 10.0, 4.0);
        let p = processor(5.0, 10.0, 40.0);
        let total = score_priority(&t, &p, 40.0, &cfg).unwrap();
        assert_eq!(total, 60.0 - 2.0 + 0.0);
        let zero = SchedulerConfig {
            alpha: 0.0,
            gamma: 0.0,
            delta: 0.0,
            ..cfg
        };
        assert_eq!(score_priority(&t, &p, 40.0, &zero).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn priority_matches_independent_recomputation(
            slo in -100.0f64..100.0,
            latency in 0.0f64..100.0,
            wait in 0.0f64..50.0,
            complexity in 0.0f64..10.0,
            load in 0.0f64..10.0,
            alpha in 0.0f64..4.0,
            gamma in 0.0f64..4.0,
            delta in 0.0f64..4.0,
        ) {
            let cfg = SchedulerConfig { alpha, gamma, delta, t_avg_ms: 7.0, loop_call_size: 5 };
            let t = task(1, slo, latency, 3.0, complexity);
            let p = processor(load, 10.0, 40.0);
            let now = 3.0 + wait;
            let direct = score_priority(&t, &p, now, &cfg).unwrap();
            let recomputed = gamma * (slo - latency)
                - alpha * wait / 7.0
                + delta * ((2.0 * load - 10.0) / 10.0) * complexity;
            prop_assert!((direct - recomputed).abs() <= 1e-12 * (1.0 + recomputed.abs()));
        }

        #[test]
        fn uniform_weight_scaling_keeps_dispatch_choice(
            seed in any::<u64>(),
            scale in prop::sample::select(vec![0.25f64, 0.5, 2.0, 8.0, 64.0]),
        ) {
            use rand_core::{RngCore, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut f = |hi: u32| (rng.next_u32() % hi) as f64;
            let queue: Vec<TaskDescriptor> = (0..6)
                .map(|id| TaskDescriptor {
                    id,
                    slo_ms: f(200),
                    latency_ms: f(100),
                    enqueue_ms: f(50),
                    complexity: f(8),
                    subgraph_id: 0,
                    eligible: vec![0, 1],
                })
                .collect();
            let procs = vec![
                processor(f(10), 10.0, 40.0),
                processor(f(10), 10.0, 40.0),
            ];
            let base = SchedulerConfig { alpha: 1.5, gamma: 0.75, delta: 2.0, t_avg_ms: 11.0, loop_call_size: 6 };
            let scaled = SchedulerConfig {
                alpha: base.alpha * scale,
                gamma: base.gamma * scale,
                delta: base.delta * scale,
                ..base
            };
            let a = dispatch(&queue, &procs, 60.0, &base).unwrap();
            let b = dispatch(&queue, &procs, 60.0, &scaled).unwrap();
            let pairs = |v: &[Assignment]| v.iter().map(|x| (x.task_id, x.processor)).collect::<Vec<_>>();
            prop_assert_eq!(pairs(&a), pairs(&b));
        }
    }

    #[test]
    fn dispatch_single_pair() {
        let cfg = SchedulerConfig::default();
        let queue = vec![task(7, 100.0, 10.0, 0.0, 1.0)];
        let procs = vec![processor(0.0, 10.0, 40.0)];
        let out = dispatch(&queue, &procs, 0.0, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].task_id, out[0].processor), (7, 0));
    }

    #[test]
    fn dispatch_skips_throttled_processors() {
        let cfg = SchedulerConfig::default();
        let queue = vec![task(1, 100.0, 10.0, 0.0, 1.0)];
        for temp in [68.0, 70.0, 90.0] {
            let procs = vec![processor(0.0, 10.0, temp)];
            assert!(dispatch(&queue, &procs, 0.0, &cfg).unwrap().is_empty());
        }
        let procs = vec![processor(0.0, 10.0, 67.9)];
        assert_eq!(dispatch(&queue, &procs, 0.0, &cfg).unwrap().len(), 1);
    }

    #[test]
    fn dispatch_honours_loop_call_size() {
        let cfg = SchedulerConfig {
            loop_call_size: 1,
            ..Default::default()
        };
        // The second task has far better (lower) score but sits outside the
        // window.
        let queue = vec![
            task(0, 1_000.0, 10.0, 0.0, 1.0),
            task(1, 1.0, 10.0, 0.0, 1.0),
        ];
        let procs = vec![processor(0.0, 10.0, 40.0)];
        let out = dispatch(&queue, &procs, 0.0, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].task_id, 0);
    }

    #[test]
    fn dispatch_breaks_ties_by_enqueue_then_id() {
        let cfg = SchedulerConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let mut a = task(5, 100.0, 10.0, 3.0, 1.0);
        let mut b = task(2, 100.0, 10.0, 1.0, 1.0);
        let procs = vec![processor(0.0, 10.0, 40.0)];
        let out = dispatch(&[a.clone(), b.clone()], &procs, 10.0, &cfg).unwrap();
        assert_eq!(out[0].task_id, 2, "earlier enqueue wins");
        a.enqueue_ms = 1.0;
        b.enqueue_ms = 1.0;
        b.id = 9;
        let out = dispatch(&[a, b], &procs, 10.0, &cfg).unwrap();
        assert_eq!(out[0].task_id, 5, "lower id wins on enqueue tie");
    }

    #[test]
    fn simulate_single_task_completes_after_latency() {
        let tasks = vec![SimTask::single(0, 100.0, 0.0, 25.0, 1.0, 0, vec![0])];
        let procs = vec![ProcessorConfig::basic("cpu")];
        let report = simulate(&tasks, &procs, &SchedulerConfig::default(), 1e6).unwrap();
        let r = &report.records[0];
        assert_eq!(r.start_ms, Some(0.0));
        assert_eq!(r.finish_ms, Some(25.0));
        assert!(r.slo_met);
    }

    #[test]
    fn simulate_serializes_on_one_processor() {
        let tasks = vec![
            SimTask::single(0, 1_000.0, 0.0, 30.0, 1.0, 0, vec![0]),
            SimTask::single(1, 1_000.0, 0.0, 30.0, 1.0, 0, vec![0]),
        ];
        let procs = vec![ProcessorConfig::basic("cpu")];
        let report = simulate(&tasks, &procs, &SchedulerConfig::default(), 1e6).unwrap();
        assert_eq!(report.records[0].finish_ms, Some(30.0));
        assert_eq!(report.records[1].finish_ms, Some(60.0));
    }

    #[test]
    fn simulate_reinserts_multi_stage_tasks_at_queue_front() {
        // A has two stages, B one. A's remainder must run before B.
        let a = SimTask {
            id: 0,
            slo_ms: 1_000.0,
            enqueue_ms: 0.0,
            stages: vec![
                Stage {
                    subgraph_id: 0,
                    eligible: vec![0],
                    latency_ms: 10.0,
                    complexity: 1.0,
                },
                Stage {
                    subgraph_id: 1,
                    eligible: vec![0],
                    latency_ms: 10.0,
                    complexity: 1.0,
                },
            ],
        };
        let b = SimTask::single(1, 1_000.0, 0.0, 10.0, 1.0, 0, vec![0]);
        let procs = vec![ProcessorConfig::basic("cpu")];
        // Disable the wait term so B cannot outrank A's remainder.
        let cfg = SchedulerConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let report = simulate(&[a, b], &procs, &cfg, 1e6).unwrap();
        assert_eq!(report.records[0].finish_ms, Some(20.0));
        assert_eq!(report.records[1].finish_ms, Some(30.0));
    }

    #[test]
    fn simulate_throttles_and_recovers() {
        // Heating makes the processor cross 68 C during the first task;
        // the second must wait for cooldown.
        let procs = vec![ProcessorConfig {
            initial_temp_c: 67.0,
            heat_rate_c_per_s: 100.0,
            cool_rate_c_per_s: 10.0,
            ambient_c: 40.0,
            ..ProcessorConfig::basic("hot")
        }];
        let tasks = vec![
            SimTask::single(0, 1e6, 0.0, 50.0, 1.0, 0, vec![0]),
            SimTask::single(1, 1e6, 0.0, 50.0, 1.0, 0, vec![0]),
        ];
        let report = simulate(&tasks, &procs, &SchedulerConfig::default(), 1e6).unwrap();
        // First task: 0..50 ms, temp 67 + 5 = 72. Second waits until temp
        // falls below 68 (with the 0.5 C dispatch margin).
        let second_start = report.records[1].start_ms.unwrap();
        assert!(second_start > 50.0 + 400.0, "started at {second_start}");
        assert_eq!(
            report.records[1].finish_ms.unwrap(),
            second_start + 50.0
        );
    }

    #[test]
    fn simulate_respects_horizon() {
        let tasks = vec![
            SimTask::single(0, 1_000.0, 0.0, 30.0, 1.0, 0, vec![0]),
            SimTask::single(1, 1_000.0, 0.0, 30.0, 1.0, 0, vec![0]),
        ];
        let procs = vec![ProcessorConfig::basic("cpu")];
        let report = simulate(&tasks, &procs, &SchedulerConfig::default(), 10.0).unwrap();
        assert!(report.records[1].finish_ms.is_none());
    }

    fn starvation_workload(seed: u64, n: u64) -> Vec<SimTask> {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|id| {
                let latency = 1.0 + (rng.next_u32() % 20) as f64;
                let slo = 5.0 + (rng.next_u32() % 500) as f64;
                let enqueue = (rng.next_u32() % 2_000) as f64;
                SimTask::single(id, slo, enqueue, latency, 1.0 + (rng.next_u32() % 5) as f64, 0, vec![0, 1])
            })
            .collect()
    }

    #[test]
    fn waiting_weight_bounds_starvation() {
        let procs = vec![
            ProcessorConfig::basic("cpu"),
            ProcessorConfig::basic("gpu"),
        ];
        let median_max_wait = |alpha: f64| {
            let mut waits: Vec<f64> = (0..3)
                .map(|seed| {
                    let tasks = starvation_workload(seed, 1_000);
                    let cfg = SchedulerConfig {
                        alpha,
                        gamma: 1.0,
                        delta: 1.0,
                        t_avg_ms: 10.0,
                        loop_call_size: 24,
                    };
                    let report = simulate(&tasks, &procs, &cfg, 1e9).unwrap();
                    assert!(
                        report.records.iter().all(|r| r.finish_ms.is_some()),
                        "all tasks finish"
                    );
                    report.max_wait_ms
                })
                .collect();
            waits.sort_by(f64::total_cmp);
            waits[1]
        };
        let relaxed = median_max_wait(0.02);
        let strict = median_max_wait(20.0);
        assert!(relaxed.is_finite() && strict.is_finite());
        assert!(
            strict <= relaxed,
            "max wait should not grow with alpha: {strict} vs {relaxed}"
        );
    }
}
