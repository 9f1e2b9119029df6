//! Instance samplers. Deterministic in (algo, size, seed).
//!
//! Feature layouts (node feature columns) per family:
//!
//! - weighted/unweighted graphs: `[pos, is_source]`, edge `[weight]`
//! - arrays: `[pos, value]` (+ extra columns per task), edge `[(j-i)/n]`
//! - strings: `[pos_in_group, is_pattern, c0..c3]`, edge `[is_cross]`
//! - geometry: `[pos, x, y]` (+ segment id), edge `[same_segment]` or
//!   `[(j-i)/n]`
//!
//! All sampled numbers sit on power-of-two grids (`1/2^14` for weights and
//! array values, `1/2^20` for coordinates) so that the executors' f32 sums
//! are exact and oracle comparisons can demand bitwise equality.

use super::{AlgoInstance, AlgoName, TaskError};
use crate::graph::{Features, GraphInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

pub(crate) const VALUE_GRID: f32 = 16384.0; // 2^14
pub(crate) const COORD_GRID: f32 = 1_048_576.0; // 2^20

pub const MIN_SIZE: usize = 4;
pub const MAX_SIZE: usize = 64;

fn rng_for(algo: AlgoName, size: usize, seed: u64) -> ChaCha8Rng {
    // splitmix64-style fold of the three inputs into one stream seed
    let mut x = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(size as u64)
        .wrapping_mul(0xbf58_476d_1ce4_e5b9)
        .wrapping_add(algo as u64 + 1);
    x ^= x >> 31;
    ChaCha8Rng::seed_from_u64(x)
}

/// Sample a deterministic instance for `algo` with `size` nodes.
pub fn sample_instance(algo: AlgoName, size: usize, seed: u64) -> Result<AlgoInstance, TaskError> {
    if !(MIN_SIZE..=MAX_SIZE).contains(&size) {
        return Err(TaskError::SizeOutOfRange {
            algo,
            size,
            min: MIN_SIZE,
            max: MAX_SIZE,
        });
    }
    let mut rng = rng_for(algo, size, seed);
    let graph = match algo {
        AlgoName::Bfs | AlgoName::ArticulationPoints | AlgoName::Bridges => {
            sample_unweighted_connected(size, &mut rng, algo != AlgoName::Bfs)
        }
        AlgoName::BellmanFord | AlgoName::Dijkstra => {
            sample_weighted_connected(size, &mut rng, true, false)
        }
        AlgoName::MstPrim => sample_weighted_connected(size, &mut rng, true, true),
        AlgoName::MstKruskal => sample_weighted_connected(size, &mut rng, false, true),
        AlgoName::DagShortestPaths => sample_dag(size, &mut rng, true),
        AlgoName::TopologicalSort => sample_dag(size, &mut rng, false),
        AlgoName::BubbleSort | AlgoName::InsertionSort | AlgoName::Quicksort
        | AlgoName::Minimum => sample_array(size, &mut rng),
        AlgoName::BinarySearch => sample_binary_search(size, &mut rng),
        AlgoName::FindMaxSubarray => sample_signed_array(size, &mut rng),
        AlgoName::ActivitySelector => sample_activities(size, &mut rng),
        AlgoName::TaskScheduling => sample_tasks(size, &mut rng),
        AlgoName::GrahamScan | AlgoName::JarvisMarch => sample_points(size, &mut rng),
        AlgoName::SegmentsIntersect => sample_segments(&mut rng),
        AlgoName::NaiveStringMatcher => sample_strings(size, &mut rng, true),
        AlgoName::LcsLength => sample_strings(size, &mut rng, false),
        AlgoName::MatrixChainOrder => sample_matrix_chain(size, &mut rng),
        AlgoName::OptimalBst => sample_bst(size, &mut rng),
    };
    Ok(AlgoInstance {
        algo,
        size,
        seed,
        graph,
    })
}

// ── shared helpers ───────────────────────────────────────────────────

fn pos_scalar(i: usize, n: usize) -> f32 {
    i as f32 / n as f32
}

/// Distinct integers in [lo, hi], order randomized by the rng.
fn distinct_ints(rng: &mut ChaCha8Rng, count: usize, lo: i64, hi: i64) -> Vec<i64> {
    assert!((hi - lo + 1) as usize >= count, "range too small");
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = rng.random_range(lo..=hi);
        if seen.insert(v) {
            out.push(v);
        }
    }
    out
}

/// Erdős–Rényi undirected edge set with p = min(1, 1.5 ln n / n),
/// resampled until connected when `require_connected`.
fn er_undirected(n: usize, rng: &mut ChaCha8Rng, require_connected: bool) -> Vec<(usize, usize)> {
    let p = (1.5 * (n as f64).ln() / n as f64).min(1.0);
    for _ in 0..10_000 {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_range(0.0..1.0) < p {
                    pairs.push((u, v));
                }
            }
        }
        if !require_connected || undirected_connected(n, &pairs) {
            return pairs;
        }
    }
    // deterministic fallback: a chain is always connected
    (0..n - 1).map(|i| (i, i + 1)).collect()
}

fn undirected_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in pairs {
        adj[u].push(v);
        adj[v].push(u);
    }
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

/// Both directions of each undirected pair, sorted by (src, dst).
fn directed_both_ways(pairs: &[(usize, usize)]) -> Vec<(u32, u32)> {
    let mut edges: Vec<(u32, u32)> = pairs
        .iter()
        .flat_map(|&(u, v)| [(u as u32, v as u32), (v as u32, u as u32)])
        .collect();
    edges.sort_unstable();
    edges
}

fn complete_digraph(n: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::with_capacity(n * (n - 1));
    for i in 0..n as u32 {
        for j in 0..n as u32 {
            if i != j {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn relative_position_edge_feats(edges: &[(u32, u32)], n: usize) -> Features {
    let data: Vec<f32> = edges
        .iter()
        .map(|&(s, d)| (d as f32 - s as f32) / n as f32)
        .collect();
    Features::new(edges.len(), 1, data)
}

// ── graph family ─────────────────────────────────────────────────────

fn sample_unweighted_connected(n: usize, rng: &mut ChaCha8Rng, no_source: bool) -> GraphInstance {
    let pairs = er_undirected(n, rng, true);
    let edges = directed_both_ways(&pairs);
    let source = if no_source { usize::MAX } else { rng.random_range(0..n) };
    let mut nf = Features::zeros(n, 2);
    for i in 0..n {
        nf.row_mut(i)[0] = pos_scalar(i, n);
        nf.row_mut(i)[1] = if i == source { 1.0 } else { 0.0 };
    }
    let ef = Features::new(edges.len(), 1, vec![1.0; edges.len()]);
    GraphInstance {
        num_nodes: n,
        edges,
        node_feats: nf,
        edge_feats: ef,
        graph_feats: vec![1.0],
        label: None,
    }
}

fn sample_weighted_connected(
    n: usize,
    rng: &mut ChaCha8Rng,
    with_source: bool,
    distinct_weights: bool,
) -> GraphInstance {
    let pairs = er_undirected(n, rng, true);
    // weights on the 1/2^14 grid in [0.1, 1.0]
    let ks: Vec<i64> = if distinct_weights {
        distinct_ints(rng, pairs.len(), 1639, 16384)
    } else {
        (0..pairs.len())
            .map(|_| rng.random_range(1639..=16384))
            .collect()
    };
    let mut weighted: Vec<(u32, u32, f32)> = Vec::with_capacity(pairs.len() * 2);
    for (&(u, v), &k) in pairs.iter().zip(&ks) {
        let w = k as f32 / VALUE_GRID;
        weighted.push((u as u32, v as u32, w));
        weighted.push((v as u32, u as u32, w));
    }
    weighted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let edges: Vec<(u32, u32)> = weighted.iter().map(|&(s, d, _)| (s, d)).collect();
    let ef = Features::new(
        edges.len(),
        1,
        weighted.iter().map(|&(_, _, w)| w).collect(),
    );
    let source = if with_source { rng.random_range(0..n) } else { usize::MAX };
    let mut nf = Features::zeros(n, 2);
    for i in 0..n {
        nf.row_mut(i)[0] = pos_scalar(i, n);
        nf.row_mut(i)[1] = if i == source { 1.0 } else { 0.0 };
    }
    GraphInstance {
        num_nodes: n,
        edges,
        node_feats: nf,
        edge_feats: ef,
        graph_feats: vec![1.0],
        label: None,
    }
}

fn sample_dag(n: usize, rng: &mut ChaCha8Rng, weighted: bool) -> GraphInstance {
    // random topological order; edges only point forward in it
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let p = (1.5 * (n as f64).ln() / n as f64).min(1.0);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rank[u] < rank[v] && rng.random_range(0.0..1.0) < p {
                pairs.push((u, v));
            }
        }
    }
    let mut triples: Vec<(u32, u32, f32)> = pairs
        .iter()
        .map(|&(u, v)| {
            let w = if weighted {
                rng.random_range(1639..=16384) as f32 / VALUE_GRID
            } else {
                1.0
            };
            (u as u32, v as u32, w)
        })
        .collect();
    triples.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let edges: Vec<(u32, u32)> = triples.iter().map(|&(s, d, _)| (s, d)).collect();
    let ef = Features::new(edges.len(), 1, triples.iter().map(|&(_, _, w)| w).collect());
    // the source (only meaningful for shortest paths) is the first node in
    // topological order; nodes it cannot reach point to themselves
    let source = if weighted { order[0] } else { usize::MAX };
    let mut nf = Features::zeros(n, 2);
    for i in 0..n {
        nf.row_mut(i)[0] = pos_scalar(i, n);
        nf.row_mut(i)[1] = if i == source { 1.0 } else { 0.0 };
    }
    GraphInstance {
        num_nodes: n,
        edges,
        node_feats: nf,
        edge_feats: ef,
        graph_feats: vec![1.0],
        label: None,
    }
}

// ── array family ─────────────────────────────────────────────────────

fn array_graph(n: usize, columns: &[Vec<f32>], graph_feats: Vec<f32>) -> GraphInstance {
    let edges = complete_digraph(n);
    let ef = relative_position_edge_feats(&edges, n);
    let cols = 1 + columns.len();
    let mut nf = Features::zeros(n, cols);
    for i in 0..n {
        nf.row_mut(i)[0] = pos_scalar(i, n);
        for (c, col) in columns.iter().enumerate() {
            nf.row_mut(i)[1 + c] = col[i];
        }
    }
    GraphInstance {
        num_nodes: n,
        edges,
        node_feats: nf,
        edge_feats: ef,
        graph_feats,
        label: None,
    }
}

fn sample_array(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    let values: Vec<f32> = distinct_ints(rng, n, 1, 16384)
        .into_iter()
        .map(|k| k as f32 / VALUE_GRID)
        .collect();
    array_graph(n, &[values], vec![1.0])
}

fn sample_signed_array(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    let values: Vec<f32> = (0..n)
        .map(|_| rng.random_range(-16384i64..=16384) as f32 / VALUE_GRID)
        .collect();
    array_graph(n, &[values], vec![1.0])
}

fn sample_binary_search(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    let mut ks = distinct_ints(rng, n, 1, 16384);
    ks.sort_unstable();
    let values: Vec<f32> = ks.iter().map(|&k| k as f32 / VALUE_GRID).collect();
    let target = rng.random_range(1..=16384) as f32 / VALUE_GRID;
    array_graph(n, &[values], vec![target])
}

fn sample_activities(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    // distinct finish times keep the greedy selection unique
    let finish_ks = distinct_ints(rng, n, 2, 16384);
    let mut start = Vec::with_capacity(n);
    let mut finish = Vec::with_capacity(n);
    for &fk in &finish_ks {
        let sk = rng.random_range(0..fk);
        start.push(sk as f32 / VALUE_GRID);
        finish.push(fk as f32 / VALUE_GRID);
    }
    array_graph(n, &[start, finish], vec![1.0])
}

fn sample_tasks(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    // unit-time tasks: deadline in [1, n], distinct penalties on a 1/128 grid
    let deadlines: Vec<f32> = (0..n)
        .map(|_| rng.random_range(1..=n) as f32 / n as f32)
        .collect();
    let penalties: Vec<f32> = distinct_ints(rng, n, 1, 128)
        .into_iter()
        .map(|k| k as f32 / 128.0)
        .collect();
    array_graph(n, &[deadlines, penalties], vec![1.0])
}

fn sample_matrix_chain(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    // node i = matrix i with dims (p[i], p[i+1]), dims in [2, 16]
    let dims: Vec<i64> = (0..=n).map(|_| rng.random_range(2..=16)).collect();
    let prev: Vec<f32> = (0..n).map(|i| dims[i] as f32 / 16.0).collect();
    let cur: Vec<f32> = (0..n).map(|i| dims[i + 1] as f32 / 16.0).collect();
    array_graph(n, &[prev, cur], vec![1.0])
}

fn sample_bst(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    // keys are ordered by node index; integer access weights in [1, 64]
    let weights: Vec<f32> = (0..n)
        .map(|_| rng.random_range(1i64..=64) as f32 / 64.0)
        .collect();
    array_graph(n, &[weights], vec![1.0])
}

// ── geometry family ──────────────────────────────────────────────────

fn collinear(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> bool {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) == 0
}

fn sample_points(n: usize, rng: &mut ChaCha8Rng) -> GraphInstance {
    // general position: no duplicates, no 3 collinear
    let mut pts: Vec<(i64, i64)> = Vec::with_capacity(n);
    'outer: while pts.len() < n {
        let cand = (
            rng.random_range(0..=COORD_GRID as i64),
            rng.random_range(0..=COORD_GRID as i64),
        );
        if pts.contains(&cand) {
            continue;
        }
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if collinear(pts[i], pts[j], cand) {
                    continue 'outer;
                }
            }
        }
        pts.push(cand);
    }
    let xs: Vec<f32> = pts.iter().map(|p| p.0 as f32 / COORD_GRID).collect();
    let ys: Vec<f32> = pts.iter().map(|p| p.1 as f32 / COORD_GRID).collect();
    array_graph(n, &[xs, ys], vec![1.0])
}

/// Two segments as 4 nodes (endpoints of segment 0, then segment 1).
/// 30% of samples are adversarial configurations: shared endpoints,
/// T-junctions, collinear overlaps, degenerate points.
fn sample_segments(rng: &mut ChaCha8Rng) -> GraphInstance {
    let m = COORD_GRID as i64;
    let rand_pt = |rng: &mut ChaCha8Rng| (rng.random_range(0..=m), rng.random_range(0..=m));
    let pts: [(i64, i64); 4] = if rng.random_range(0.0..1.0) < 0.3 {
        adversarial_segments(rng)
    } else {
        [rand_pt(rng), rand_pt(rng), rand_pt(rng), rand_pt(rng)]
    };
    let n = 4;
    let xs: Vec<f32> = pts.iter().map(|p| p.0 as f32 / COORD_GRID).collect();
    let ys: Vec<f32> = pts.iter().map(|p| p.1 as f32 / COORD_GRID).collect();
    let seg: Vec<f32> = vec![0.0, 0.0, 1.0, 1.0];
    let edges = complete_digraph(n);
    let ef_data: Vec<f32> = edges
        .iter()
        .map(|&(s, d)| {
            if (s < 2) == (d < 2) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut nf = Features::zeros(n, 4);
    for i in 0..n {
        let r = nf.row_mut(i);
        r[0] = pos_scalar(i, n);
        r[1] = xs[i];
        r[2] = ys[i];
        r[3] = seg[i];
    }
    GraphInstance {
        num_nodes: n,
        edges: edges.clone(),
        node_feats: nf,
        edge_feats: Features::new(edges.len(), 1, ef_data),
        graph_feats: vec![1.0],
        label: None,
    }
}

pub(crate) fn adversarial_segments(rng: &mut ChaCha8Rng) -> [(i64, i64); 4] {
    let m = COORD_GRID as i64;
    let base = (rng.random_range(m / 4..m / 2), rng.random_range(m / 4..m / 2));
    let d = (rng.random_range(1..=64i64), rng.random_range(-64..=64i64));
    let at = |k: i64| (base.0 + k * d.0, base.1 + k * d.1);
    let rand_pt = |rng: &mut ChaCha8Rng| (rng.random_range(0..=m), rng.random_range(0..=m));
    match rng.random_range(0..8) {
        // shared endpoint
        0 => [base, rand_pt(rng), base, rand_pt(rng)],
        // T-junction: endpoint of segment 1 in the interior of segment 0
        1 => [at(0), at(4), at(2), rand_pt(rng)],
        // collinear overlapping
        2 => [at(0), at(4), at(2), at(6)],
        // collinear disjoint
        3 => [at(0), at(2), at(4), at(6)],
        // collinear touching at one point
        4 => [at(0), at(2), at(2), at(5)],
        // identical segments
        5 => [at(0), at(3), at(0), at(3)],
        // degenerate: segment 1 is a single point, on segment 0
        6 => [at(0), at(4), at(1), at(1)],
        // degenerate: single point strictly off the support line
        // (perpendicular offset, cross product = |d|^2 > 0)
        _ => {
            let off = (base.0 - d.1, base.1 + d.0);
            [at(0), at(4), off, off]
        }
    }
}

// ── string family ────────────────────────────────────────────────────

const ALPHABET: usize = 4;

fn sample_strings(n: usize, rng: &mut ChaCha8Rng, plant_pattern: bool) -> GraphInstance {
    let pat_len = (n / 4).max(1);
    let text_len = n - pat_len;
    let mut text: Vec<usize> = (0..text_len).map(|_| rng.random_range(0..ALPHABET)).collect();
    let pattern: Vec<usize> = if plant_pattern {
        let pat: Vec<usize> = (0..pat_len).map(|_| rng.random_range(0..ALPHABET)).collect();
        let pos = rng.random_range(0..=text_len - pat_len);
        text[pos..pos + pat_len].copy_from_slice(&pat);
        pat
    } else {
        (0..pat_len).map(|_| rng.random_range(0..ALPHABET)).collect()
    };

    // nodes: text group then pattern group; chain edges inside groups,
    // complete bipartite edges between the groups
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut kinds: Vec<f32> = Vec::new();
    let push = |edges: &mut Vec<(u32, u32)>, kinds: &mut Vec<f32>, a: usize, b: usize, k: f32| {
        edges.push((a as u32, b as u32));
        kinds.push(k);
    };
    for i in 0..text_len.saturating_sub(1) {
        push(&mut edges, &mut kinds, i, i + 1, 0.0);
        push(&mut edges, &mut kinds, i + 1, i, 0.0);
    }
    for i in 0..pat_len.saturating_sub(1) {
        push(&mut edges, &mut kinds, text_len + i, text_len + i + 1, 0.0);
        push(&mut edges, &mut kinds, text_len + i + 1, text_len + i, 0.0);
    }
    for t in 0..text_len {
        for p in 0..pat_len {
            push(&mut edges, &mut kinds, t, text_len + p, 1.0);
            push(&mut edges, &mut kinds, text_len + p, t, 1.0);
        }
    }
    let mut idx: Vec<usize> = (0..edges.len()).collect();
    idx.sort_unstable_by_key(|&i| edges[i]);
    let edges_sorted: Vec<(u32, u32)> = idx.iter().map(|&i| edges[i]).collect();
    let kinds_sorted: Vec<f32> = idx.iter().map(|&i| kinds[i]).collect();

    let cols = 2 + ALPHABET;
    let mut nf = Features::zeros(n, cols);
    for (i, &c) in text.iter().chain(pattern.iter()).enumerate() {
        let in_pattern = i >= text_len;
        let group_pos = if in_pattern { i - text_len } else { i };
        let group_len = if in_pattern { pat_len } else { text_len };
        let r = nf.row_mut(i);
        r[0] = pos_scalar(group_pos, group_len);
        r[1] = if in_pattern { 1.0 } else { 0.0 };
        r[2 + c] = 1.0;
    }
    GraphInstance {
        num_nodes: n,
        edges: edges_sorted.clone(),
        node_feats: nf,
        edge_feats: Features::new(edges_sorted.len(), 1, kinds_sorted),
        graph_feats: vec![1.0],
        label: None,
    }
}

// ── decoded instance views (shared by executors and oracles) ─────────

pub(crate) struct WeightedGraphView {
    pub n: usize,
    /// directed edges in stored (sorted) order
    pub edges: Vec<(usize, usize, f32)>,
    /// adjacency in edge order: adj[u] = (v, w)
    pub adj: Vec<Vec<(usize, f32)>>,
    /// unique undirected pairs (u < v, weight), in (u,v) order
    pub pairs: Vec<(usize, usize, f32)>,
    pub source: Option<usize>,
}

pub(crate) fn decode_weighted_graph(g: &GraphInstance) -> WeightedGraphView {
    let n = g.num_nodes;
    let mut edges = Vec::with_capacity(g.edges.len());
    let mut adj = vec![Vec::new(); n];
    let mut pairs = Vec::new();
    for (i, &(s, d)) in g.edges.iter().enumerate() {
        let w = g.edge_feats.row(i)[0];
        edges.push((s as usize, d as usize, w));
        adj[s as usize].push((d as usize, w));
        if s < d {
            pairs.push((s as usize, d as usize, w));
        }
    }
    let source = (0..n).find(|&i| g.node_feats.row(i)[1] == 1.0);
    WeightedGraphView {
        n,
        edges,
        adj,
        pairs,
        source,
    }
}

pub(crate) fn decode_array_column(g: &GraphInstance, col: usize) -> Vec<f32> {
    (0..g.num_nodes).map(|i| g.node_feats.row(i)[col]).collect()
}

pub(crate) struct StringView {
    pub text: Vec<usize>,
    pub pattern: Vec<usize>,
}

pub(crate) fn decode_strings(g: &GraphInstance) -> StringView {
    let mut text = Vec::new();
    let mut pattern = Vec::new();
    for i in 0..g.num_nodes {
        let r = g.node_feats.row(i);
        let c = (0..ALPHABET)
            .max_by(|&a, &b| r[2 + a].partial_cmp(&r[2 + b]).unwrap())
            .unwrap();
        if r[1] == 1.0 {
            pattern.push(c);
        } else {
            text.push(c);
        }
    }
    StringView { text, pattern }
}

pub(crate) fn decode_points(g: &GraphInstance) -> Vec<(i64, i64)> {
    (0..g.num_nodes)
        .map(|i| {
            let r = g.node_feats.row(i);
            (
                (r[1] * COORD_GRID).round() as i64,
                (r[2] * COORD_GRID).round() as i64,
            )
        })
        .collect()
}

pub(crate) fn decode_grid_ints(g: &GraphInstance, col: usize, denom: f32) -> Vec<i64> {
    (0..g.num_nodes)
        .map(|i| (g.node_feats.row(i)[col] * denom).round() as i64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate;

    #[test]
    fn sampling_is_deterministic() {
        for algo in [AlgoName::Bfs, AlgoName::Quicksort, AlgoName::SegmentsIntersect] {
            let a = sample_instance(algo, 8, 42).unwrap();
            let b = sample_instance(algo, 8, 42).unwrap();
            assert_eq!(a.graph, b.graph, "{algo}");
            let c = sample_instance(algo, 8, 43).unwrap();
            assert!(a.graph != c.graph || algo == AlgoName::SegmentsIntersect);
        }
    }

    #[test]
    fn size_bounds_enforced() {
        assert!(matches!(
            sample_instance(AlgoName::Bfs, 3, 0),
            Err(TaskError::SizeOutOfRange { .. })
        ));
        assert!(matches!(
            sample_instance(AlgoName::Bfs, 65, 0),
            Err(TaskError::SizeOutOfRange { .. })
        ));
    }

    #[test]
    fn every_sample_is_a_valid_graph() {
        for algo in AlgoName::ALL {
            for seed in 0..5 {
                let inst = sample_instance(algo, 8, seed).unwrap();
                let violations = validate(&inst.graph);
                assert!(violations.is_empty(), "{algo} seed {seed}: {violations:?}");
            }
        }
    }

    #[test]
    fn dijkstra_weights_strictly_positive() {
        for seed in 0..10 {
            let inst = sample_instance(AlgoName::Dijkstra, 8, seed).unwrap();
            let view = decode_weighted_graph(&inst.graph);
            assert!(view.edges.iter().all(|&(_, _, w)| w > 0.0));
        }
    }

    #[test]
    fn mst_weights_distinct() {
        for seed in 0..10 {
            let inst = sample_instance(AlgoName::MstKruskal, 12, seed).unwrap();
            let view = decode_weighted_graph(&inst.graph);
            let mut ws: Vec<u32> = view
                .pairs
                .iter()
                .map(|&(_, _, w)| (w * VALUE_GRID) as u32)
                .collect();
            ws.sort_unstable();
            let before = ws.len();
            ws.dedup();
            assert_eq!(ws.len(), before);
        }
    }

    #[test]
    fn string_sampler_plants_the_pattern() {
        for seed in 0..20 {
            let inst = sample_instance(AlgoName::NaiveStringMatcher, 12, seed).unwrap();
            let s = decode_strings(&inst.graph);
            assert!(s
                .text
                .windows(s.pattern.len())
                .any(|w| w == s.pattern.as_slice()));
        }
    }

    #[test]
    fn point_sampler_avoids_collinear_triples() {
        let inst = sample_instance(AlgoName::GrahamScan, 10, 3).unwrap();
        let pts = decode_points(&inst.graph);
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                for k in (j + 1)..pts.len() {
                    assert!(!collinear(pts[i], pts[j], pts[k]));
                }
            }
        }
    }
}
