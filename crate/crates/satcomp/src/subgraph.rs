//! Window-size-controlled subgraph partitioning of an operation DAG over
//! heterogeneous processors.
//!
//! Ops are indexed in a topological-compatible order (every edge goes from a
//! lower to a higher index). For each non-fallback processor, maximal runs
//! of consecutively supported ops become unit subgraphs, runs shorter than
//! the window size are dropped, and ops left uncovered fall back to the
//! universal processor, one unit per contiguous gap. Dependency-adjacent
//! subgraphs with overlapping processor support are then merged, closed
//! transitively.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Operation DAG with per-op type tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpGraph {
    op_count: usize,
    edges: Vec<(u32, u32)>,
    op_types: Vec<String>,
}

impl OpGraph {
    /// `op_types` may be empty (untagged) or one tag per op.
    pub fn new(op_count: usize, edges: Vec<(u32, u32)>, op_types: Vec<String>) -> Result<Self> {
        if !op_types.is_empty() && op_types.len() != op_count {
            return Err(Error::InvalidParameter(format!(
                "{} op types for {op_count} ops",
                op_types.len()
            )));
        }
        for &(from, to) in &edges {
            for idx in [from, to] {
                if idx as usize >= op_count {
                    return Err(Error::OpIndexOutOfRange {
                        index: idx,
                        op_count,
                    });
                }
            }
            if from >= to {
                return Err(Error::NotTopological { from, to });
            }
        }
        Ok(Self {
            op_count,
            edges,
            op_types,
        })
    }

    /// Linear chain of `op_count` ops.
    pub fn chain(op_count: usize) -> Self {
        let edges = (1..op_count as u32).map(|i| (i - 1, i)).collect();
        Self {
            op_count,
            edges,
            op_types: Vec::new(),
        }
    }

    pub fn op_count(&self) -> usize {
        self.op_count
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn op_type(&self, op: usize) -> Option<&str> {
        self.op_types.get(op).map(String::as_str)
    }
}

/// Per-processor support masks; the fallback processor supports every op.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportTable {
    masks: Vec<Vec<bool>>,
    fallback: usize,
}

impl SupportTable {
    pub fn processor_count(&self) -> usize {
        self.masks.len()
    }

    pub fn fallback(&self) -> usize {
        self.fallback
    }

    pub fn supports(&self, processor: usize, op: usize) -> bool {
        self.masks[processor][op]
    }

    pub fn mask(&self, processor: usize) -> &[bool] {
        &self.masks[processor]
    }
}

pub const MAX_PROCESSORS: usize = 32;

/// Builds the support table from per-processor unsupported-op sets.
pub fn build_support_table(
    graph: &OpGraph,
    unsupported: &[Vec<u32>],
    fallback: usize,
) -> Result<SupportTable> {
    if unsupported.is_empty() || unsupported.len() > MAX_PROCESSORS {
        return Err(Error::InvalidParameter(format!(
            "processor count {} outside [1, {MAX_PROCESSORS}]",
            unsupported.len()
        )));
    }
    if fallback >= unsupported.len() {
        return Err(Error::InvalidParameter(format!(
            "fallback processor {fallback} out of range"
        )));
    }
    if !unsupported[fallback].is_empty() {
        return Err(Error::FallbackNotUniversal(fallback));
    }
    let mut masks = vec![vec![true; graph.op_count()]; unsupported.len()];
    for (p, set) in unsupported.iter().enumerate() {
        for &op in set {
            if op as usize >= graph.op_count() {
                return Err(Error::OpIndexOutOfRange {
                    index: op,
                    op_count: graph.op_count(),
                });
            }
            masks[p][op as usize] = false;
        }
    }
    Ok(SupportTable { masks, fallback })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionConfig {
    /// Minimum ops a processor-specific run needs to become a unit subgraph.
    pub window_size: usize,
    /// Hard bound on the number of merged subgraphs.
    pub merge_cap: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            window_size: 1,
            merge_cap: 10_000,
        }
    }
}

impl PartitionConfig {
    pub fn with_window_size(window_size: usize) -> Self {
        Self {
            window_size,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 {
            return Err(Error::InvalidParameter("window_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgraphKind {
    Unit,
    Merged,
}

/// A set of ops executable by every processor in its processor set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub processors: Vec<usize>,
    pub ops: Vec<u32>,
    pub kind: SubgraphKind,
}

impl Subgraph {
    fn unit(processor: usize, ops: Vec<u32>) -> Self {
        Self {
            processors: vec![processor],
            ops,
            kind: SubgraphKind::Unit,
        }
    }
}

/// Unit-subgraph formation.
///
/// Fast path: when every processor supports every op, each processor gets
/// one unit containing the whole graph. Otherwise runs are formed per
/// non-fallback processor, filtered by the window size, and uncovered ops
/// are grouped into fallback units, one per contiguous gap. Every op ends
/// up covered by at least one unit.
pub fn get_unit_subgraphs(
    graph: &OpGraph,
    table: &SupportTable,
    cfg: &PartitionConfig,
) -> Result<Vec<Subgraph>> {
    cfg.validate()?;
    let n = graph.op_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let all_supported = table.masks.iter().all(|m| m.iter().all(|&s| s));
    if all_supported {
        let every_op: Vec<u32> = (0..n as u32).collect();
        return Ok((0..table.processor_count())
            .map(|p| Subgraph::unit(p, every_op.clone()))
            .collect());
    }

    let mut units = Vec::new();
    let mut covered = vec![false; n];
    for p in 0..table.processor_count() {
        if p == table.fallback() {
            continue;
        }
        let mut run_start = None;
        for op in 0..=n {
            let supported = op < n && table.supports(p, op);
            match (run_start, supported) {
                (None, true) => run_start = Some(op),
                (Some(start), false) => {
                    let len = op - start;
                    if len >= cfg.window_size {
                        let ops: Vec<u32> = (start as u32..op as u32).collect();
                        covered[start..op].fill(true);
                        units.push(Subgraph::unit(p, ops));
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    // Fallback fills whatever no processor-specific unit covers.
    let mut gap_start = None;
    for (op, uncovered) in covered
        .iter()
        .map(|&c| !c)
        .chain(std::iter::once(false))
        .enumerate()
    {
        match (gap_start, uncovered) {
            (None, true) => gap_start = Some(op),
            (Some(start), false) => {
                let ops: Vec<u32> = (start as u32..op as u32).collect();
                units.push(Subgraph::unit(table.fallback(), ops));
                gap_start = None;
            }
            _ => {}
        }
    }
    Ok(units)
}

/// Compact subgraph representation used during merging.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Packed {
    ops: Vec<u64>,
    procs: u32,
}

impl Packed {
    fn from_subgraph(sg: &Subgraph, blocks: usize) -> Self {
        let mut ops = vec![0u64; blocks];
        for &op in &sg.ops {
            ops[op as usize / 64] |= 1 << (op % 64);
        }
        let mut procs = 0u32;
        for &p in &sg.processors {
            procs |= 1 << p;
        }
        Self { ops, procs }
    }

    fn disjoint(&self, other: &Self) -> bool {
        self.ops.iter().zip(&other.ops).all(|(a, b)| a & b == 0)
    }

    fn contains(&self, op: u32) -> bool {
        self.ops[op as usize / 64] >> (op % 64) & 1 == 1
    }

    fn union_ops(&self, other: &Self) -> Vec<u64> {
        self.ops.iter().zip(&other.ops).map(|(a, b)| a | b).collect()
    }

    fn to_subgraph(&self, kind: SubgraphKind) -> Subgraph {
        let mut ops = Vec::new();
        for (block, &bits) in self.ops.iter().enumerate() {
            for bit in 0..64 {
                if bits >> bit & 1 == 1 {
                    ops.push((block * 64 + bit) as u32);
                }
            }
        }
        let processors = (0..32).filter(|&p| self.procs >> p & 1 == 1).collect();
        Subgraph {
            processors,
            ops,
            kind,
        }
    }
}

/// Returns the input units plus every transitive merge of dependency-
/// adjacent, op-disjoint subgraphs whose processor sets intersect; a merged
/// subgraph's processor set is the intersection.
pub fn merge_subgraphs(
    graph: &OpGraph,
    units: &[Subgraph],
    cfg: &PartitionConfig,
) -> Result<Vec<Subgraph>> {
    let blocks = graph.op_count().div_ceil(64).max(1);
    let mut all: Vec<Packed> = units
        .iter()
        .map(|sg| Packed::from_subgraph(sg, blocks))
        .collect();
    let mut seen: HashSet<Packed> = all.iter().cloned().collect();

    let adjacent = |a: &Packed, b: &Packed| {
        graph.edges().iter().any(|&(u, v)| {
            (a.contains(u) && b.contains(v)) || (b.contains(u) && a.contains(v))
        })
    };

    let mut i = 0;
    while i < all.len() {
        for j in 0..i {
            let procs = all[i].procs & all[j].procs;
            if procs == 0 || !all[i].disjoint(&all[j]) || !adjacent(&all[i], &all[j]) {
                continue;
            }
            let merged = Packed {
                ops: all[i].union_ops(&all[j]),
                procs,
            };
            if seen.insert(merged.clone()) {
                if all.len() + 1 - units.len() > cfg.merge_cap {
                    return Err(Error::SubgraphOverflow { cap: cfg.merge_cap });
                }
                all.push(merged);
            }
        }
        i += 1;
    }

    let mut out: Vec<Subgraph> = units.to_vec();
    out.extend(
        all[units.len()..]
            .iter()
            .map(|p| p.to_subgraph(SubgraphKind::Merged)),
    );
    Ok(out)
}

/// Convenience wrapper: units plus merges in one call.
pub fn partition_graph(
    graph: &OpGraph,
    table: &SupportTable,
    cfg: &PartitionConfig,
) -> Result<Vec<Subgraph>> {
    let units = get_unit_subgraphs(graph, table, cfg)?;
    merge_subgraphs(graph, &units, cfg)
}
