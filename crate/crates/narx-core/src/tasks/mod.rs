//! Instance samplers, exact executors and independent brute-force oracles
//! for the 24 supported classical algorithms, producing typed supervision
//! traces for pretraining.
//!
//! Every instance is carried as a [`GraphInstance`]: arrays become complete
//! digraphs with position/value node features, strings become two chained
//! node groups, and geometry tasks carry (x, y) coordinates on a `1/2^20`
//! grid so predicates can run on exact integers. Numeric features live on
//! power-of-two grids, which keeps path sums and subarray sums exact in f32
//! and makes executor/oracle comparisons meaningful at full precision.

mod exec;
mod oracle;
mod sample;

pub use exec::{emit_hints, execute};
pub use oracle::{oracle_check, OracleReport};
pub use sample::sample_instance;

use crate::graph::GraphInstance;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("unknown algorithm '{0}'; valid names: {valid}", valid = AlgoName::ALL.map(|a| a.cli_name()).join(", "))]
    UnknownAlgo(String),
    #[error("instance size {size} out of range [{min}, {max}] for {algo}")]
    SizeOutOfRange {
        algo: AlgoName,
        size: usize,
        min: usize,
        max: usize,
    },
    #[error("hints are not enabled for {0}; hint-enabled set: bfs, bellman-ford, dijkstra, bubble-sort, insertion-sort, naive-string-matcher")]
    HintsNotEnabled(AlgoName),
    #[error("invalid instance for {algo}: {what}")]
    InvalidInstance { algo: AlgoName, what: String },
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace encoding: {0}")]
    Json(#[from] serde_json::Error),
}

/// The 24 supported classical algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AlgoName {
    ActivitySelector,
    ArticulationPoints,
    BellmanFord,
    Bfs,
    BinarySearch,
    Bridges,
    BubbleSort,
    DagShortestPaths,
    Dijkstra,
    FindMaxSubarray,
    GrahamScan,
    InsertionSort,
    JarvisMarch,
    LcsLength,
    MatrixChainOrder,
    Minimum,
    MstKruskal,
    MstPrim,
    NaiveStringMatcher,
    OptimalBst,
    Quicksort,
    SegmentsIntersect,
    TaskScheduling,
    TopologicalSort,
}

impl AlgoName {
    pub const ALL: [AlgoName; 24] = [
        AlgoName::ActivitySelector,
        AlgoName::ArticulationPoints,
        AlgoName::BellmanFord,
        AlgoName::Bfs,
        AlgoName::BinarySearch,
        AlgoName::Bridges,
        AlgoName::BubbleSort,
        AlgoName::DagShortestPaths,
        AlgoName::Dijkstra,
        AlgoName::FindMaxSubarray,
        AlgoName::GrahamScan,
        AlgoName::InsertionSort,
        AlgoName::JarvisMarch,
        AlgoName::LcsLength,
        AlgoName::MatrixChainOrder,
        AlgoName::Minimum,
        AlgoName::MstKruskal,
        AlgoName::MstPrim,
        AlgoName::NaiveStringMatcher,
        AlgoName::OptimalBst,
        AlgoName::Quicksort,
        AlgoName::SegmentsIntersect,
        AlgoName::TaskScheduling,
        AlgoName::TopologicalSort,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            AlgoName::ActivitySelector => "activity-selector",
            AlgoName::ArticulationPoints => "articulation-points",
            AlgoName::BellmanFord => "bellman-ford",
            AlgoName::Bfs => "bfs",
            AlgoName::BinarySearch => "binary-search",
            AlgoName::Bridges => "bridges",
            AlgoName::BubbleSort => "bubble-sort",
            AlgoName::DagShortestPaths => "dag-shortest-paths",
            AlgoName::Dijkstra => "dijkstra",
            AlgoName::FindMaxSubarray => "find-max-subarray",
            AlgoName::GrahamScan => "graham-scan",
            AlgoName::InsertionSort => "insertion-sort",
            AlgoName::JarvisMarch => "jarvis-march",
            AlgoName::LcsLength => "lcs-length",
            AlgoName::MatrixChainOrder => "matrix-chain-order",
            AlgoName::Minimum => "minimum",
            AlgoName::MstKruskal => "mst-kruskal",
            AlgoName::MstPrim => "mst-prim",
            AlgoName::NaiveStringMatcher => "naive-string-matcher",
            AlgoName::OptimalBst => "optimal-bst",
            AlgoName::Quicksort => "quicksort",
            AlgoName::SegmentsIntersect => "segments-intersect",
            AlgoName::TaskScheduling => "task-scheduling",
            AlgoName::TopologicalSort => "topological-sort",
        }
    }

    /// Hint trajectories exist for this subset; the rest are supervised on
    /// outputs only.
    pub fn hints_enabled(self) -> bool {
        matches!(
            self,
            AlgoName::Bfs
                | AlgoName::BellmanFord
                | AlgoName::Dijkstra
                | AlgoName::BubbleSort
                | AlgoName::InsertionSort
                | AlgoName::NaiveStringMatcher
        )
    }
}

impl std::fmt::Display for AlgoName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl std::str::FromStr for AlgoName {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgoName::ALL
            .iter()
            .copied()
            .find(|a| a.cli_name() == s)
            .ok_or_else(|| TaskError::UnknownAlgo(s.to_string()))
    }
}

/// Where a probe lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeLoc {
    Node,
    Edge,
    Graph,
}

/// Typed supervision target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeKind {
    /// per-node index in [0, num_nodes)
    Pointer,
    /// {0,1} per node or per edge
    Mask,
    /// graph-level class in [0, k)
    Categorical(usize),
    /// graph-level (or per-node, for hints) real value
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeSpec {
    pub name: &'static str,
    pub location: ProbeLoc,
    pub kind: ProbeKind,
}

/// Concrete probe values; the shape follows the probe's location and kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProbeValue {
    Pointer(Vec<usize>),
    Mask(Vec<u8>),
    Categorical(usize),
    Scalar(f32),
    NodeScalars(Vec<f32>),
    EdgeScalars(Vec<f32>),
}

impl ProbeValue {
    pub fn as_pointer(&self) -> Option<&[usize]> {
        match self {
            ProbeValue::Pointer(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_mask(&self) -> Option<&[u8]> {
        match self {
            ProbeValue::Mask(m) => Some(m),
            _ => None,
        }
    }
}

/// A sampled problem instance, fully encoded as a graph.
#[derive(Debug, Clone)]
pub struct AlgoInstance {
    pub algo: AlgoName,
    pub size: usize,
    pub seed: u64,
    pub graph: GraphInstance,
}

pub type ProbeMap = BTreeMap<String, ProbeValue>;

/// Inputs, optional per-step hint states, and outputs for one algorithm run.
#[derive(Debug, Clone, Serialize)]
pub struct AlgoTrace {
    pub algo: AlgoName,
    pub seed: u64,
    pub n: usize,
    pub inputs: ProbeMap,
    pub hints: Vec<ProbeMap>,
    pub outputs: ProbeMap,
    pub steps: usize,
}

/// The single output probe an algorithm is supervised on.
pub fn output_probe(algo: AlgoName) -> ProbeSpec {
    use AlgoName::*;
    match algo {
        Bfs | BellmanFord | Dijkstra | DagShortestPaths | MstPrim | TopologicalSort
        | BubbleSort | InsertionSort | Quicksort | NaiveStringMatcher => ProbeSpec {
            name: "pi",
            location: ProbeLoc::Node,
            kind: ProbeKind::Pointer,
        },
        ArticulationPoints | Minimum | BinarySearch | FindMaxSubarray | GrahamScan
        | JarvisMarch | ActivitySelector | TaskScheduling => ProbeSpec {
            name: "mask",
            location: ProbeLoc::Node,
            kind: ProbeKind::Mask,
        },
        MstKruskal | Bridges => ProbeSpec {
            name: "mask",
            location: ProbeLoc::Edge,
            kind: ProbeKind::Mask,
        },
        SegmentsIntersect => ProbeSpec {
            name: "class",
            location: ProbeLoc::Graph,
            kind: ProbeKind::Categorical(2),
        },
        LcsLength | MatrixChainOrder | OptimalBst => ProbeSpec {
            name: "value",
            location: ProbeLoc::Graph,
            kind: ProbeKind::Scalar,
        },
    }
}

/// Full trace for an instance: outputs always, hints when enabled.
pub fn full_trace(algo: AlgoName, inst: &AlgoInstance) -> Result<AlgoTrace, TaskError> {
    let mut trace = execute(algo, inst)?;
    if algo.hints_enabled() {
        let hints = emit_hints(algo, inst)?;
        trace.steps = hints.len();
        trace.hints = hints;
    }
    Ok(trace)
}

/// Write traces as JSON lines with stable field order.
pub fn write_traces_jsonl<W: std::io::Write>(
    out: &mut W,
    traces: &[AlgoTrace],
) -> Result<(), TaskError> {
    for t in traces {
        serde_json::to_writer(&mut *out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_24_algorithms() {
        assert_eq!(AlgoName::ALL.len(), 24);
        let mut names: Vec<&str> = AlgoName::ALL.iter().map(|a| a.cli_name()).collect();
        names.dedup();
        assert_eq!(names.len(), 24);
    }

    #[test]
    fn parse_round_trip() {
        for a in AlgoName::ALL {
            assert_eq!(a.cli_name().parse::<AlgoName>().unwrap(), a);
        }
        assert!(matches!(
            "quickselect".parse::<AlgoName>(),
            Err(TaskError::UnknownAlgo(_))
        ));
    }

    #[test]
    fn unknown_algo_error_lists_valid_names() {
        let err = "quickselect".parse::<AlgoName>().unwrap_err().to_string();
        assert!(err.contains("bfs"));
        assert!(err.contains("segments-intersect"));
    }

    #[test]
    fn hint_set_is_the_six() {
        let enabled: Vec<AlgoName> = AlgoName::ALL
            .into_iter()
            .filter(|a| a.hints_enabled())
            .collect();
        assert_eq!(
            enabled,
            vec![
                AlgoName::BellmanFord,
                AlgoName::Bfs,
                AlgoName::BubbleSort,
                AlgoName::Dijkstra,
                AlgoName::InsertionSort,
                AlgoName::NaiveStringMatcher,
            ]
        );
    }
}
