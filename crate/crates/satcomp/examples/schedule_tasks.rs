//! Partition the shipped 7-op graph at two window sizes, then simulate
//! priority scheduling of a workload over the resulting subgraphs,
//! including a thermally throttled processor.
//!
//! Run with: `cargo run --release --example schedule_tasks`

use std::path::Path;

use satcomp::config::{load_graph, load_workload, resolve_workload};
use satcomp::scheduler::{simulate, SchedulerConfig};
use satcomp::subgraph::{get_unit_subgraphs, merge_subgraphs, PartitionConfig};

fn main() -> satcomp::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let setup = load_graph(&data.join("graph_7op.toml"))?;

    for ws in [1, 4] {
        let cfg = PartitionConfig::with_window_size(ws);
        let units = get_unit_subgraphs(&setup.graph, &setup.table, &cfg)?;
        let all = merge_subgraphs(&setup.graph, &units, &cfg)?;
        println!("window size {ws}: {} subgraphs", all.len());
        for (i, sg) in all.iter().enumerate() {
            let procs: Vec<&str> = sg
                .processors
                .iter()
                .map(|&p| setup.processor_names[p].as_str())
                .collect();
            println!("  #{i} {:?} on {:?}", sg.ops, procs.join("+"));
        }
    }

    let cfg = PartitionConfig::with_window_size(1);
    let units = get_unit_subgraphs(&setup.graph, &setup.table, &cfg)?;
    let all = merge_subgraphs(&setup.graph, &units, &cfg)?;
    let tasks = resolve_workload(&load_workload(&data.join("workload_basic.toml"))?, &all)?;

    let report = simulate(&tasks, &setup.processors, &SchedulerConfig::default(), 1e6)?;
    println!("\ntask  enqueue   start  finish  proc  slo_met");
    for r in &report.records {
        println!(
            "{:>4} {:>8.1} {:>7.1} {:>7.1} {:>5} {:>8}",
            r.task_id,
            r.enqueue_ms,
            r.start_ms.unwrap_or(f64::NAN),
            r.finish_ms.unwrap_or(f64::NAN),
            r.processor
                .map_or("-", |p| setup.processor_names[p].as_str()),
            r.slo_met
        );
    }
    println!(
        "SLO satisfaction {:.1}%, busy fractions {:?}",
        report.slo_satisfaction_pct, report.busy_fraction
    );
    Ok(())
}
