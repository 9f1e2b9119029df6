//! Molecular-graph ingestion in the raw CSV layout (edge lists with
//! per-graph node/edge counts, integer categorical features), synthetic
//! desk-scale dataset generation, and reproducible splits.
//!
//! Integer categorical features are one-hot expanded at ingestion (the
//! expansion tables are kept in the metadata) so the model encoder stays
//! a plain linear map. Undirected bond rows become two directed edges.

use crate::graph::{Features, GraphInstance, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("ingestion error in {file} line {line}: {what}")]
    Ingestion {
        file: String,
        line: usize,
        what: String,
    },
    #[error("i/o on {file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
    #[error("split config: {0}")]
    SplitConfig(String),
    #[error("generation error: {0}")]
    Generation(String),
}

/// Train/valid/test index lists (disjoint, within range).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// The raw integer tables exactly as they appear in the CSV layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTables {
    pub num_nodes: Vec<usize>,
    pub num_edges: Vec<usize>,
    /// concatenated edge rows, graph-local node ids
    pub edges: Vec<(u32, u32)>,
    /// concatenated node feature rows
    pub node_feats: Vec<Vec<i64>>,
    /// concatenated edge feature rows, when present
    pub edge_feats: Option<Vec<Vec<i64>>>,
    /// one row per graph; missing values are None
    pub labels: Vec<Vec<Option<f64>>>,
}

/// One-hot expansion tables and ingestion notes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMeta {
    pub node_expansion: Vec<Vec<i64>>,
    pub edge_expansion: Vec<Vec<i64>>,
    pub dropped_missing_labels: usize,
}

/// A binary-labelled molecular-style graph dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MolDataset {
    pub name: String,
    pub graphs: Vec<GraphInstance>,
    pub labels: Vec<u8>,
    pub split: Split,
    pub raw: RawTables,
    pub meta: DatasetMeta,
}

impl MolDataset {
    pub fn feature_dims(&self) -> (usize, usize, usize) {
        let g = &self.graphs[0];
        (g.node_feats.cols, g.edge_feats.cols, g.graph_feats.len())
    }
}

// ── CSV plumbing ─────────────────────────────────────────────────────

fn read_lines(dir: &Path, file: &str) -> Result<Vec<String>, DataError> {
    let path = dir.join(file);
    let f = std::fs::File::open(&path).map_err(|source| DataError::Io {
        file: file.to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line.map_err(|source| DataError::Io {
            file: file.to_string(),
            source,
        })?;
        if !line.trim().is_empty() {
            out.push(line);
        }
    }
    Ok(out)
}

fn parse_int_row(file: &str, line_no: usize, line: &str) -> Result<Vec<i64>, DataError> {
    line.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<i64>()
                .map_err(|_| DataError::Ingestion {
                    file: file.to_string(),
                    line: line_no + 1,
                    what: format!("'{tok}' is not an integer"),
                })
        })
        .collect()
}

fn parse_label_row(file: &str, line_no: usize, line: &str) -> Result<Vec<Option<f64>>, DataError> {
    line.split(',')
        .map(|tok| {
            let t = tok.trim();
            if t.is_empty() || t.eq_ignore_ascii_case("nan") {
                return Ok(None);
            }
            t.parse::<f64>().map(Some).map_err(|_| DataError::Ingestion {
                file: file.to_string(),
                line: line_no + 1,
                what: format!("'{tok}' is not a number"),
            })
        })
        .collect()
}

fn read_int_table(dir: &Path, file: &str, cols: Option<usize>) -> Result<Vec<Vec<i64>>, DataError> {
    let lines = read_lines(dir, file)?;
    let mut rows = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let row = parse_int_row(file, i, line)?;
        if let Some(c) = cols.or_else(|| rows.first().map(|r: &Vec<i64>| r.len())) {
            if row.len() != c {
                return Err(DataError::Ingestion {
                    file: file.to_string(),
                    line: i + 1,
                    what: format!("expected {c} columns, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

// ── load / export ────────────────────────────────────────────────────

/// Load a dataset directory: edge.csv, num-node-list.csv,
/// num-edge-list.csv, node-feat.csv, graph-label.csv, optional
/// edge-feat.csv, and split/{train,valid,test}.csv.
pub fn load_ogb_csv_dir(dir: &Path) -> Result<MolDataset, DataError> {
    let num_nodes: Vec<usize> = read_int_table(dir, "num-node-list.csv", Some(1))?
        .into_iter()
        .map(|r| r[0] as usize)
        .collect();
    let num_edges: Vec<usize> = read_int_table(dir, "num-edge-list.csv", Some(1))?
        .into_iter()
        .map(|r| r[0] as usize)
        .collect();
    if num_nodes.len() != num_edges.len() {
        return Err(DataError::Ingestion {
            file: "num-edge-list.csv".to_string(),
            line: num_edges.len(),
            what: format!(
                "{} edge counts for {} graphs",
                num_edges.len(),
                num_nodes.len()
            ),
        });
    }
    let edge_rows = read_int_table(dir, "edge.csv", Some(2))?;
    let total_edges: usize = num_edges.iter().sum();
    if edge_rows.len() != total_edges {
        return Err(DataError::Ingestion {
            file: "edge.csv".to_string(),
            line: edge_rows.len(),
            what: format!("expected {total_edges} rows, found {}", edge_rows.len()),
        });
    }
    let node_rows = read_int_table(dir, "node-feat.csv", None)?;
    let total_nodes: usize = num_nodes.iter().sum();
    if node_rows.len() != total_nodes {
        return Err(DataError::Ingestion {
            file: "node-feat.csv".to_string(),
            line: node_rows.len(),
            what: format!("expected {total_nodes} rows, found {}", node_rows.len()),
        });
    }
    let edge_feat_rows = if dir.join("edge-feat.csv").exists() {
        let rows = read_int_table(dir, "edge-feat.csv", None)?;
        if rows.len() != total_edges {
            return Err(DataError::Ingestion {
                file: "edge-feat.csv".to_string(),
                line: rows.len(),
                what: format!("expected {total_edges} rows, found {}", rows.len()),
            });
        }
        Some(rows)
    } else {
        None
    };
    let label_lines = read_lines(dir, "graph-label.csv")?;
    if label_lines.len() != num_nodes.len() {
        return Err(DataError::Ingestion {
            file: "graph-label.csv".to_string(),
            line: label_lines.len(),
            what: format!(
                "expected {} rows, found {}",
                num_nodes.len(),
                label_lines.len()
            ),
        });
    }
    let mut labels = Vec::with_capacity(label_lines.len());
    for (i, line) in label_lines.iter().enumerate() {
        labels.push(parse_label_row("graph-label.csv", i, line)?);
    }
    let split = Split {
        train: read_index_file(dir, "split/train.csv")?,
        valid: read_index_file(dir, "split/valid.csv")?,
        test: read_index_file(dir, "split/test.csv")?,
    };
    let raw = RawTables {
        num_nodes,
        num_edges,
        edges: edge_rows.iter().map(|r| (r[0] as u32, r[1] as u32)).collect(),
        node_feats: node_rows,
        edge_feats: edge_feat_rows,
        labels,
    };
    assemble(
        dir.file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "dataset".to_string()),
        raw,
        split,
    )
}

fn read_index_file(dir: &Path, file: &str) -> Result<Vec<usize>, DataError> {
    read_int_table(dir, file, Some(1)).map(|rows| rows.into_iter().map(|r| r[0] as usize).collect())
}

/// Build processed graphs from raw tables: validate indices, one-hot
/// expand features, duplicate undirected rows both ways, drop graphs with
/// a missing label (remapping split indices).
pub fn assemble(name: String, raw: RawTables, split: Split) -> Result<MolDataset, DataError> {
    let g_count = raw.num_nodes.len();
    // expansion tables over all observed values, per column
    let node_expansion = expansion_tables(&raw.node_feats);
    let edge_expansion = raw
        .edge_feats
        .as_ref()
        .map(|rows| expansion_tables(rows))
        .unwrap_or_default();
    let dn: usize = node_expansion.iter().map(|t| t.len()).sum::<usize>().max(1);
    let de: usize = edge_expansion.iter().map(|t| t.len()).sum::<usize>().max(1);

    let mut graphs = Vec::with_capacity(g_count);
    let mut labels = Vec::with_capacity(g_count);
    let mut keep = Vec::with_capacity(g_count);
    let mut node_off = 0usize;
    let mut edge_off = 0usize;
    let mut dropped = 0usize;
    for g in 0..g_count {
        let n = raw.num_nodes[g];
        let e = raw.num_edges[g];
        // label policy: last column is the task; missing -> drop
        let label = raw.labels[g].last().copied().flatten();
        let mut nf = Features::zeros(n, dn);
        for i in 0..n {
            one_hot_row(&raw.node_feats[node_off + i], &node_expansion, nf.row_mut(i));
        }
        let mut dir_edges: Vec<((u32, u32), Vec<f32>)> = Vec::with_capacity(2 * e);
        for r in 0..e {
            let (u, v) = raw.edges[edge_off + r];
            if u as usize >= n || v as usize >= n {
                return Err(DataError::Ingestion {
                    file: "edge.csv".to_string(),
                    line: edge_off + r + 1,
                    what: format!("edge ({u},{v}) out of range for a {n}-node graph"),
                });
            }
            let mut ef = vec![0.0f32; de];
            if let Some(rows) = &raw.edge_feats {
                one_hot_row(&rows[edge_off + r], &edge_expansion, &mut ef);
            } else {
                ef[0] = 1.0;
            }
            dir_edges.push(((u, v), ef.clone()));
            if u != v {
                dir_edges.push(((v, u), ef));
            }
        }
        dir_edges.sort_by_key(|&((s, d), _)| (s, d));
        let graph = GraphInstance {
            num_nodes: n,
            edges: dir_edges.iter().map(|&(e, _)| e).collect(),
            node_feats: nf,
            edge_feats: Features::new(
                dir_edges.len(),
                de,
                dir_edges.iter().flat_map(|(_, f)| f.clone()).collect(),
            ),
            graph_feats: vec![1.0],
            label: label.map(|l| Label::Int(l as i64)),
        };
        match label {
            Some(l) => {
                keep.push(Some(graphs.len()));
                graphs.push(graph);
                labels.push(u8::from(l != 0.0));
            }
            None => {
                keep.push(None);
                dropped += 1;
            }
        }
        node_off += n;
        edge_off += e;
    }
    let remap = |idx: &[usize]| -> Result<Vec<usize>, DataError> {
        let mut out = Vec::with_capacity(idx.len());
        for &i in idx {
            if i >= g_count {
                return Err(DataError::SplitConfig(format!(
                    "split index {i} out of range for {g_count} graphs"
                )));
            }
            if let Some(new) = keep[i] {
                out.push(new);
            }
        }
        Ok(out)
    };
    let split = Split {
        train: remap(&split.train)?,
        valid: remap(&split.valid)?,
        test: remap(&split.test)?,
    };
    Ok(MolDataset {
        name,
        graphs,
        labels,
        split,
        raw,
        meta: DatasetMeta {
            node_expansion,
            edge_expansion,
            dropped_missing_labels: dropped,
        },
    })
}

fn expansion_tables(rows: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut tables = vec![BTreeSet::new(); cols];
    for row in rows {
        for (c, &v) in row.iter().enumerate() {
            tables[c].insert(v);
        }
    }
    tables
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect()
}

fn one_hot_row(raw: &[i64], tables: &[Vec<i64>], out: &mut [f32]) {
    let mut base = 0usize;
    for (c, table) in tables.iter().enumerate() {
        if let Ok(pos) = table.binary_search(&raw[c]) {
            out[base + pos] = 1.0;
        }
        base += table.len();
    }
}

/// Write a dataset back out in the same CSV layout.
pub fn export_ogb_csv_dir(ds: &MolDataset, dir: &Path) -> Result<(), DataError> {
    let write = |file: &str, body: String| -> Result<(), DataError> {
        let path = dir.join(file);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| DataError::Io {
                file: file.to_string(),
                source,
            })?;
        }
        let mut f = std::fs::File::create(&path).map_err(|source| DataError::Io {
            file: file.to_string(),
            source,
        })?;
        f.write_all(body.as_bytes()).map_err(|source| DataError::Io {
            file: file.to_string(),
            source,
        })
    };
    let ints = |vals: &[usize]| {
        vals.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    };
    write("num-node-list.csv", ints(&ds.raw.num_nodes))?;
    write("num-edge-list.csv", ints(&ds.raw.num_edges))?;
    write(
        "edge.csv",
        ds.raw
            .edges
            .iter()
            .map(|&(u, v)| format!("{u},{v}"))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n",
    )?;
    let int_rows = |rows: &[Vec<i64>]| {
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    };
    write("node-feat.csv", int_rows(&ds.raw.node_feats))?;
    if let Some(ef) = &ds.raw.edge_feats {
        write("edge-feat.csv", int_rows(ef))?;
    }
    write(
        "graph-label.csv",
        ds.raw
            .labels
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| match v {
                        Some(x) => format!("{x}"),
                        None => "nan".to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n",
    )?;
    // split files refer to raw graph indices; recover them from kept order
    let mut kept_raw_indices = Vec::new();
    {
        let mut next = 0usize;
        for (i, row) in ds.raw.labels.iter().enumerate() {
            if row.last().copied().flatten().is_some() {
                kept_raw_indices.push(i);
                next += 1;
            }
            let _ = next;
        }
    }
    let to_raw = |idx: &[usize]| ints(&idx.iter().map(|&i| kept_raw_indices[i]).collect::<Vec<_>>());
    write("split/train.csv", to_raw(&ds.split.train))?;
    write("split/valid.csv", to_raw(&ds.split.valid))?;
    write("split/test.csv", to_raw(&ds.split.test))?;
    Ok(())
}

// ── splits ───────────────────────────────────────────────────────────

/// Disjoint random split by fractions (must sum to 1); sizes are floored
/// with the remainder distributed to the earliest parts.
pub fn make_split(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<Split, DataError> {
    let (a, b, c) = fractions;
    if (a + b + c - 1.0).abs() > 1e-9 || a < 0.0 || b < 0.0 || c < 0.0 {
        return Err(DataError::SplitConfig(format!(
            "fractions {fractions:?} must be non-negative and sum to 1"
        )));
    }
    let mut sizes = [
        (a * n as f64).floor() as usize,
        (b * n as f64).floor() as usize,
        (c * n as f64).floor() as usize,
    ];
    let mut rem = n - sizes.iter().sum::<usize>();
    for s in sizes.iter_mut() {
        if rem == 0 {
            break;
        }
        *s += 1;
        rem -= 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let train = order[..sizes[0]].to_vec();
    let valid = order[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let test = order[sizes[0] + sizes[1]..].to_vec();
    Ok(Split { train, valid, test })
}

// ── synthetic generation ─────────────────────────────────────────────

/// Deterministic graph predicate used as the label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LabelRule {
    /// the graph contains a simple cycle of exactly this length
    MotifPresence { cycle_len: usize },
    /// shortest path between the two marked nodes exceeds k
    PathLengthThreshold { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// raw integer node feature columns (first column is the node marker)
    pub feature_dims: usize,
    #[serde(flatten)]
    pub rule: LabelRule,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_graphs: 200,
            min_nodes: 6,
            max_nodes: 12,
            feature_dims: 2,
            rule: LabelRule::PathLengthThreshold { k: 2 },
            seed: 0,
        }
    }
}

struct RawGraph {
    n: usize,
    pairs: Vec<(u32, u32)>,
    node_feats: Vec<Vec<i64>>,
    label: bool,
}

/// Generate a balanced synthetic dataset: graphs are accepted into the
/// positive/negative quota (half each) by rejection; if one class cannot
/// be produced the spec is unbalanceable and generation fails.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<MolDataset, DataError> {
    if spec.num_graphs == 0 || spec.min_nodes < 2 || spec.max_nodes < spec.min_nodes {
        return Err(DataError::Generation(format!("invalid spec {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let want_pos = spec.num_graphs / 2;
    let want_neg = spec.num_graphs - want_pos;
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut accepted: Vec<RawGraph> = Vec::with_capacity(spec.num_graphs);
    let max_attempts = 500 * spec.num_graphs;
    let mut attempts = 0usize;
    while accepted.len() < spec.num_graphs {
        attempts += 1;
        if attempts > max_attempts {
            return Err(DataError::Generation(format!(
                "could not balance labels after {max_attempts} attempts \
                 ({pos}/{want_pos} positive, {neg}/{want_neg} negative); \
                 the rule may be degenerate for these sizes"
            )));
        }
        let g = sample_raw_graph(spec, &mut rng);
        if g.label && pos < want_pos {
            pos += 1;
            accepted.push(g);
        } else if !g.label && neg < want_neg {
            neg += 1;
            accepted.push(g);
        }
    }
    let split = make_split(spec.num_graphs, (0.8, 0.1, 0.1), spec.seed)?;
    let raw = RawTables {
        num_nodes: accepted.iter().map(|g| g.n).collect(),
        num_edges: accepted.iter().map(|g| g.pairs.len()).collect(),
        edges: accepted.iter().flat_map(|g| g.pairs.iter().copied()).collect(),
        node_feats: accepted
            .iter()
            .flat_map(|g| g.node_feats.iter().cloned())
            .collect(),
        edge_feats: None,
        labels: accepted
            .iter()
            .map(|g| vec![Some(f64::from(u8::from(g.label)))])
            .collect(),
    };
    assemble("synthetic".to_string(), raw, split)
}

fn sample_raw_graph(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> RawGraph {
    let n = rng.random_range(spec.min_nodes..=spec.max_nodes);
    // connected ER graph over unique undirected pairs
    let p = (1.5 * (n as f64).ln() / n as f64).min(1.0);
    let pairs: Vec<(u32, u32)> = loop {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_range(0.0..1.0) < p {
                    pairs.push((u as u32, v as u32));
                }
            }
        }
        if connected(n, &pairs) {
            break pairs;
        }
    };
    let mut node_feats: Vec<Vec<i64>> = (0..n)
        .map(|_| {
            let mut row = vec![0i64];
            for _ in 1..spec.feature_dims.max(1) {
                row.push(rng.random_range(0..4));
            }
            row
        })
        .collect();
    let label = match spec.rule {
        LabelRule::PathLengthThreshold { k } => {
            let u = rng.random_range(0..n);
            let mut v = rng.random_range(0..n);
            while v == u {
                v = rng.random_range(0..n);
            }
            node_feats[u][0] = 1;
            node_feats[v][0] = 1;
            bfs_distance(n, &pairs, u, v) > k
        }
        LabelRule::MotifPresence { cycle_len } => has_simple_cycle(n, &pairs, cycle_len),
    };
    RawGraph {
        n,
        pairs,
        node_feats,
        label,
    }
}

fn adjacency(n: usize, pairs: &[(u32, u32)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in pairs {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    adj
}

fn connected(n: usize, pairs: &[(u32, u32)]) -> bool {
    let adj = adjacency(n, pairs);
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

fn bfs_distance(n: usize, pairs: &[(u32, u32)], from: usize, to: usize) -> usize {
    let adj = adjacency(n, pairs);
    let mut dist = vec![usize::MAX; n];
    dist[from] = 0;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist[to]
}

/// DFS-based simple-cycle detection (generator route).
fn has_simple_cycle(n: usize, pairs: &[(u32, u32)], len: usize) -> bool {
    let adj = adjacency(n, pairs);
    let mut path = Vec::with_capacity(len);
    let mut on_path = vec![false; n];
    fn dfs(
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        start: usize,
        len: usize,
    ) -> bool {
        let u = *path.last().unwrap();
        if path.len() == len {
            return adj[u].contains(&start);
        }
        for &v in &adj[u] {
            // enumerate each cycle once: keep ids above the start node
            if !on_path[v] && v > start {
                path.push(v);
                on_path[v] = true;
                if dfs(adj, path, on_path, start, len) {
                    return true;
                }
                on_path[v] = false;
                path.pop();
            }
        }
        false
    }
    for start in 0..n {
        path.clear();
        path.push(start);
        on_path.iter_mut().for_each(|b| *b = false);
        on_path[start] = true;
        if dfs(&adj, &mut path, &mut on_path, start, len) {
            return true;
        }
    }
    false
}

/// Independent label recomputation: all-pairs distances by repeated
/// matrix-style relaxation for the path rule, exhaustive subset checks
/// for the motif rule.
pub fn synthetic_label_oracle(
    n: usize,
    pairs: &[(u32, u32)],
    node_feats: &[Vec<i64>],
    rule: LabelRule,
) -> bool {
    match rule {
        LabelRule::PathLengthThreshold { k } => {
            let marked: Vec<usize> = (0..n).filter(|&i| node_feats[i][0] == 1).collect();
            assert_eq!(marked.len(), 2, "path rule marks exactly two nodes");
            // Floyd-Warshall over the full matrix
            let inf = usize::MAX / 2;
            let mut d = vec![vec![inf; n]; n];
            for (i, row) in d.iter_mut().enumerate() {
                row[i] = 0;
            }
            for &(u, v) in pairs {
                d[u as usize][v as usize] = 1;
                d[v as usize][u as usize] = 1;
            }
            for m in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = d[i][m] + d[m][j];
                        if via < d[i][j] {
                            d[i][j] = via;
                        }
                    }
                }
            }
            d[marked[0]][marked[1]] > k
        }
        LabelRule::MotifPresence { cycle_len } => {
            // enumerate node subsets of the right size and test for a cycle
            let adj = adjacency(n, pairs);
            let nodes: Vec<usize> = (0..n).collect();
            subsets_of(&nodes, cycle_len).iter().any(|subset| {
                permutations_contain_cycle(&adj, subset)
            })
        }
    }
}

fn subsets_of(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

fn permutations_contain_cycle(adj: &[Vec<usize>], subset: &[usize]) -> bool {
    // fix the first element, permute the rest, test ring adjacency
    let k = subset.len();
    let mut rest: Vec<usize> = subset[1..].to_vec();
    fn rec(adj: &[Vec<usize>], first: usize, rest: &mut Vec<usize>, fixed: usize) -> bool {
        let k = rest.len();
        if fixed == k {
            let mut ring = vec![first];
            ring.extend(rest.iter().copied());
            return ring
                .iter()
                .zip(ring.iter().cycle().skip(1))
                .all(|(&a, &b)| adj[a].contains(&b));
        }
        for i in fixed..k {
            rest.swap(fixed, i);
            if rec(adj, first, rest, fixed + 1) {
                rest.swap(fixed, i);
                return true;
            }
            rest.swap(fixed, i);
        }
        false
    }
    rec(adj, subset[0], &mut rest, 0) && k >= 3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate;

    #[test]
    fn split_sizes_and_determinism() {
        let s = make_split(10, (0.8, 0.1, 0.1), 3).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        assert_eq!(s, make_split(10, (0.8, 0.1, 0.1), 3).unwrap());
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.valid)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(make_split(10, (0.5, 0.1, 0.1), 3).is_err());
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let spec = SyntheticSpec {
            num_graphs: 40,
            seed: 5,
            ..Default::default()
        };
        let a = gen_synthetic(&spec).unwrap();
        let b = gen_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let pos: usize = a.labels.iter().map(|&l| l as usize).sum();
        let frac = pos as f64 / a.labels.len() as f64;
        assert!((0.4..=0.6).contains(&frac), "positive fraction {frac}");
    }

    #[test]
    fn degenerate_path_rule_fails_generation() {
        let spec = SyntheticSpec {
            num_graphs: 10,
            rule: LabelRule::PathLengthThreshold { k: 0 },
            ..Default::default()
        };
        // distance between two distinct nodes is always > 0: all positive
        assert!(matches!(
            gen_synthetic(&spec),
            Err(DataError::Generation(_))
        ));
    }

    #[test]
    fn synthetic_labels_match_independent_oracle() {
        for rule in [
            LabelRule::PathLengthThreshold { k: 2 },
            LabelRule::MotifPresence { cycle_len: 5 },
        ] {
            let spec = SyntheticSpec {
                num_graphs: 30,
                rule,
                seed: 9,
                ..Default::default()
            };
            let ds = gen_synthetic(&spec).unwrap();
            let mut node_off = 0usize;
            let mut edge_off = 0usize;
            for g in 0..ds.raw.num_nodes.len() {
                let n = ds.raw.num_nodes[g];
                let e = ds.raw.num_edges[g];
                let pairs = &ds.raw.edges[edge_off..edge_off + e];
                let feats = &ds.raw.node_feats[node_off..node_off + n];
                let want = synthetic_label_oracle(n, pairs, feats, rule);
                assert_eq!(
                    ds.labels[g],
                    u8::from(want),
                    "graph {g} rule {rule:?}"
                );
                node_off += n;
                edge_off += e;
            }
        }
    }

    #[test]
    fn export_load_round_trip_is_exact() {
        let spec = SyntheticSpec {
            num_graphs: 25,
            seed: 13,
            ..Default::default()
        };
        let ds = gen_synthetic(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_ogb_csv_dir(&ds, dir.path()).unwrap();
        let loaded = load_ogb_csv_dir(dir.path()).unwrap();
        assert_eq!(loaded.graphs, ds.graphs);
        assert_eq!(loaded.labels, ds.labels);
        assert_eq!(loaded.split, ds.split);
        assert_eq!(loaded.raw, ds.raw);
    }

    #[test]
    fn ingested_graphs_pass_validation() {
        let ds = gen_synthetic(&SyntheticSpec {
            num_graphs: 20,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        for g in &ds.graphs {
            assert!(validate(g).is_empty());
        }
        let total_nodes: usize = ds.raw.num_nodes.iter().sum();
        assert_eq!(ds.raw.node_feats.len(), total_nodes);
    }

    #[test]
    fn offsets_example_two_graphs() {
        // node counts [2,3], edge counts [1,2]
        let raw = RawTables {
            num_nodes: vec![2, 3],
            num_edges: vec![1, 2],
            edges: vec![(0, 1), (0, 1), (1, 2)],
            node_feats: vec![vec![0], vec![1], vec![0], vec![1], vec![2]],
            edge_feats: None,
            labels: vec![vec![Some(1.0)], vec![Some(0.0)]],
        };
        let split = Split {
            train: vec![0, 1],
            valid: vec![],
            test: vec![],
        };
        let ds = assemble("t".into(), raw, split).unwrap();
        assert_eq!(ds.graphs.len(), 2);
        assert_eq!(ds.graphs[0].edges, vec![(0, 1), (1, 0)]);
        assert_eq!(ds.graphs[1].edges, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn missing_label_drops_graph_and_remaps_split() {
        let raw = RawTables {
            num_nodes: vec![2, 2, 2],
            num_edges: vec![1, 1, 1],
            edges: vec![(0, 1), (0, 1), (0, 1)],
            node_feats: vec![vec![0]; 6],
            edge_feats: None,
            labels: vec![vec![Some(1.0)], vec![None], vec![Some(0.0)]],
        };
        let split = Split {
            train: vec![0, 1],
            valid: vec![2],
            test: vec![],
        };
        let ds = assemble("t".into(), raw, split).unwrap();
        assert_eq!(ds.graphs.len(), 2);
        assert_eq!(ds.meta.dropped_missing_labels, 1);
        assert_eq!(ds.split.train, vec![0]);
        assert_eq!(ds.split.valid, vec![1]);
    }

    #[test]
    fn malformed_rows_name_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("num-node-list.csv"), "2\nx\n").unwrap();
        match load_ogb_csv_dir(dir.path()) {
            Err(DataError::Ingestion { file, line, .. }) => {
                assert_eq!(file, "num-node-list.csv");
                assert_eq!(line, 2);
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }
}
