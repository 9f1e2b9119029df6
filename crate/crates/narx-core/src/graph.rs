//! Graph containers shared by the algorithmic tasks and the molecular
//! datasets, plus flat batching with node-offset-shifted edges.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graphs in a batch must share feature dims: {0}")]
    MixedDims(String),
    #[error("cannot batch an empty graph list")]
    EmptyBatch,
}

/// Plain row-major feature matrix (no autodiff tracking).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Features {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(rows * cols, data.len(), "feature buffer length mismatch");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Graph-level label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Int(i64),
    Vector(Vec<f32>),
}

/// One graph: directed edge list plus node / edge / graph features.
/// Undirected inputs are stored as both (u,v) and (v,u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub num_nodes: usize,
    pub edges: Vec<(u32, u32)>,
    pub node_feats: Features,
    pub edge_feats: Features,
    pub graph_feats: Vec<f32>,
    pub label: Option<Label>,
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EdgeIndexOutOfRange { edge: usize, src: u32, dst: u32 },
    NodeFeatureRows { expected: usize, got: usize },
    EdgeFeatureRows { expected: usize, got: usize },
    NonFiniteFeature { which: &'static str, index: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EdgeIndexOutOfRange { edge, src, dst } => {
                write!(f, "edge {edge} = ({src},{dst}) references a missing node")
            }
            Violation::NodeFeatureRows { expected, got } => {
                write!(f, "node_feats has {got} rows, expected {expected}")
            }
            Violation::EdgeFeatureRows { expected, got } => {
                write!(f, "edge_feats has {got} rows, expected {expected}")
            }
            Violation::NonFiniteFeature { which, index } => {
                write!(f, "{which} feature {index} is not finite")
            }
        }
    }
}

/// Report every invariant violation; an empty list means the graph is valid.
pub fn validate(g: &GraphInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, &(s, d)) in g.edges.iter().enumerate() {
        if s as usize >= g.num_nodes || d as usize >= g.num_nodes {
            out.push(Violation::EdgeIndexOutOfRange {
                edge: i,
                src: s,
                dst: d,
            });
        }
    }
    if g.node_feats.rows != g.num_nodes {
        out.push(Violation::NodeFeatureRows {
            expected: g.num_nodes,
            got: g.node_feats.rows,
        });
    }
    if g.edge_feats.rows != g.edges.len() {
        out.push(Violation::EdgeFeatureRows {
            expected: g.edges.len(),
            got: g.edge_feats.rows,
        });
    }
    for (which, data) in [
        ("node", &g.node_feats.data),
        ("edge", &g.edge_feats.data),
        ("graph", &g.graph_feats),
    ] {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            out.push(Violation::NonFiniteFeature { which, index: i });
        }
    }
    out
}

/// Graphs concatenated with node-offset-shifted edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub num_graphs: usize,
    pub num_nodes: usize,
    pub edges: Vec<(u32, u32)>,
    pub node_feats: Features,
    pub edge_feats: Features,
    pub graph_feats: Features,
    /// node -> graph, nondecreasing
    pub graph_index: Vec<u32>,
    /// per-graph node ranges, len num_graphs + 1
    pub node_offsets: Vec<usize>,
    /// per-graph edge ranges, len num_graphs + 1
    pub edge_offsets: Vec<usize>,
    pub labels: Vec<Option<Label>>,
}

impl GraphBatch {
    pub fn graph_nodes(&self, g: usize) -> std::ops::Range<usize> {
        self.node_offsets[g]..self.node_offsets[g + 1]
    }

    pub fn graph_size(&self, g: usize) -> usize {
        self.node_offsets[g + 1] - self.node_offsets[g]
    }
}

/// Concatenate graphs; all must share feature dims.
pub fn batch(gs: &[GraphInstance]) -> Result<GraphBatch, GraphError> {
    let first = gs.first().ok_or(GraphError::EmptyBatch)?;
    let (dn, de, dg) = (
        first.node_feats.cols,
        first.edge_feats.cols,
        first.graph_feats.len(),
    );
    for (i, g) in gs.iter().enumerate() {
        if g.node_feats.cols != dn || g.edge_feats.cols != de || g.graph_feats.len() != dg {
            return Err(GraphError::MixedDims(format!(
                "graph {i}: ({}, {}, {}) vs ({dn}, {de}, {dg})",
                g.node_feats.cols,
                g.edge_feats.cols,
                g.graph_feats.len()
            )));
        }
    }
    let mut out = GraphBatch {
        num_graphs: gs.len(),
        num_nodes: 0,
        edges: Vec::new(),
        node_feats: Features::zeros(0, dn),
        edge_feats: Features::zeros(0, de),
        graph_feats: Features::zeros(0, dg),
        graph_index: Vec::new(),
        node_offsets: vec![0],
        edge_offsets: vec![0],
        labels: Vec::new(),
    };
    for (gi, g) in gs.iter().enumerate() {
        let off = out.num_nodes as u32;
        for &(s, d) in &g.edges {
            out.edges.push((s + off, d + off));
        }
        out.num_nodes += g.num_nodes;
        out.node_feats.data.extend_from_slice(&g.node_feats.data);
        out.node_feats.rows += g.num_nodes;
        out.edge_feats.data.extend_from_slice(&g.edge_feats.data);
        out.edge_feats.rows += g.edges.len();
        out.graph_feats.data.extend_from_slice(&g.graph_feats);
        out.graph_feats.rows += 1;
        out.graph_index
            .extend(std::iter::repeat_n(gi as u32, g.num_nodes));
        out.node_offsets.push(out.num_nodes);
        out.edge_offsets.push(out.edges.len());
        out.labels.push(g.label.clone());
    }
    Ok(out)
}

/// Recover the original graphs from a batch, exactly.
pub fn unbatch(b: &GraphBatch) -> Vec<GraphInstance> {
    let mut out = Vec::with_capacity(b.num_graphs);
    for g in 0..b.num_graphs {
        let nodes = b.graph_nodes(g);
        let n = nodes.len();
        let er = b.edge_offsets[g]..b.edge_offsets[g + 1];
        let off = b.node_offsets[g] as u32;
        let dn = b.node_feats.cols;
        let de = b.edge_feats.cols;
        let dg = b.graph_feats.cols;
        out.push(GraphInstance {
            num_nodes: n,
            edges: b.edges[er.clone()]
                .iter()
                .map(|&(s, d)| (s - off, d - off))
                .collect(),
            node_feats: Features::new(
                n,
                dn,
                b.node_feats.data[nodes.start * dn..nodes.end * dn].to_vec(),
            ),
            edge_feats: Features::new(
                er.len(),
                de,
                b.edge_feats.data[er.start * de..er.end * de].to_vec(),
            ),
            graph_feats: b.graph_feats.data[g * dg..(g + 1) * dg].to_vec(),
            label: b.labels[g].clone(),
        });
    }
    out
}
