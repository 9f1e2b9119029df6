//! Exact executors for the 24 algorithms, plus step-wise hint states for
//! the hint-enabled subset.
//!
//! Pointer outputs use canonical tie-breaking so they are a pure function
//! of the instance: shortest-path predecessors are the first edge in the
//! stored (sorted) edge order that is tight for the final distances, sorted
//! orders break value ties by node index, and topological orders are
//! lexicographically smallest.

use super::sample::{
    decode_array_column, decode_grid_ints, decode_points, decode_strings, decode_weighted_graph,
    WeightedGraphView,
};
use super::{output_probe, AlgoInstance, AlgoName, AlgoTrace, ProbeMap, ProbeValue, TaskError};
use std::collections::BTreeMap;

/// Run the classical algorithm and return its trace (outputs only; use
/// [`emit_hints`] or [`super::full_trace`] for step states).
pub fn execute(algo: AlgoName, inst: &AlgoInstance) -> Result<AlgoTrace, TaskError> {
    if inst.algo != algo {
        return Err(TaskError::InvalidInstance {
            algo,
            what: format!("instance was sampled for {}", inst.algo),
        });
    }
    let g = &inst.graph;
    let n = g.num_nodes;
    let out_name = output_probe(algo).name.to_string();
    let output = match algo {
        AlgoName::Bfs => ProbeValue::Pointer(bfs_parents(&decode_weighted_graph(g))),
        AlgoName::BellmanFord => {
            let view = decode_weighted_graph(g);
            let (dist, _) = bellman_ford_rounds(&view);
            ProbeValue::Pointer(canonical_parents(&view, &dist))
        }
        AlgoName::Dijkstra => {
            let view = decode_weighted_graph(g);
            let dist = dijkstra_distances(&view);
            ProbeValue::Pointer(canonical_parents(&view, &dist))
        }
        AlgoName::DagShortestPaths => {
            let view = decode_weighted_graph(g);
            let dist = dag_shortest_distances(&view)?;
            ProbeValue::Pointer(canonical_parents(&view, &dist))
        }
        AlgoName::MstPrim => ProbeValue::Pointer(prim_parents(&decode_weighted_graph(g))),
        AlgoName::MstKruskal => ProbeValue::Mask(kruskal_edge_mask(&decode_weighted_graph(g))),
        AlgoName::Bridges => ProbeValue::Mask(bridges_edge_mask(&decode_weighted_graph(g))),
        AlgoName::ArticulationPoints => {
            ProbeValue::Mask(articulation_points_mask(&decode_weighted_graph(g)))
        }
        AlgoName::TopologicalSort => {
            ProbeValue::Pointer(order_chain(&topological_order(&decode_weighted_graph(g))?, n))
        }
        AlgoName::BubbleSort | AlgoName::InsertionSort | AlgoName::Quicksort => {
            let values = decode_array_column(g, 1);
            let arrangement = match algo {
                AlgoName::BubbleSort => bubble_sort_passes(&values).pop().unwrap(),
                AlgoName::InsertionSort => insertion_sort_steps(&values).pop().unwrap(),
                _ => quicksort_arrangement(&values),
            };
            ProbeValue::Pointer(arrangement_pred(&arrangement))
        }
        AlgoName::Minimum => {
            let values = decode_array_column(g, 1);
            let mut best = 0;
            for i in 1..n {
                if values[i] < values[best] {
                    best = i;
                }
            }
            ProbeValue::Mask(single_mask(n, best))
        }
        AlgoName::BinarySearch => {
            let values = decode_array_column(g, 1);
            let target = g.graph_feats[0];
            ProbeValue::Mask(single_mask(n, binary_search_slot(&values, target)))
        }
        AlgoName::FindMaxSubarray => {
            let values = decode_array_column(g, 1);
            let (s, e) = kadane_range(&values);
            let mut mask = vec![0u8; n];
            for m in mask.iter_mut().take(e + 1).skip(s) {
                *m = 1;
            }
            ProbeValue::Mask(mask)
        }
        AlgoName::GrahamScan => ProbeValue::Mask(set_mask(n, &graham_scan(&decode_points(g)))),
        AlgoName::JarvisMarch => ProbeValue::Mask(set_mask(n, &jarvis_march(&decode_points(g)))),
        AlgoName::SegmentsIntersect => {
            let p = decode_points(g);
            ProbeValue::Categorical(usize::from(segments_intersect(p[0], p[1], p[2], p[3])))
        }
        AlgoName::ActivitySelector => {
            let start = decode_array_column(g, 1);
            let finish = decode_array_column(g, 2);
            ProbeValue::Mask(set_mask(n, &activity_selection(&start, &finish)))
        }
        AlgoName::TaskScheduling => {
            let deadlines: Vec<usize> = decode_grid_ints(g, 1, n as f32)
                .into_iter()
                .map(|d| d as usize)
                .collect();
            let penalties = decode_grid_ints(g, 2, 128.0);
            ProbeValue::Mask(set_mask(n, &task_scheduling(&deadlines, &penalties)))
        }
        AlgoName::NaiveStringMatcher => {
            let s = decode_strings(g);
            let pos = naive_string_match(&s.text, &s.pattern).ok_or_else(|| {
                TaskError::InvalidInstance {
                    algo,
                    what: "pattern does not occur in text".into(),
                }
            })?;
            ProbeValue::Pointer(vec![pos; n])
        }
        AlgoName::LcsLength => {
            let s = decode_strings(g);
            ProbeValue::Scalar(lcs_length(&s.text, &s.pattern) as f32)
        }
        AlgoName::MatrixChainOrder => {
            let prev = decode_grid_ints(g, 1, 16.0);
            let cur = decode_grid_ints(g, 2, 16.0);
            let mut dims = vec![prev[0]];
            dims.extend(cur);
            ProbeValue::Scalar(matrix_chain_cost(&dims) as f32)
        }
        AlgoName::OptimalBst => {
            let weights = decode_grid_ints(g, 1, 64.0);
            let total: i64 = weights.iter().sum();
            ProbeValue::Scalar(optimal_bst_cost(&weights) as f32 / total as f32)
        }
    };
    let mut outputs = BTreeMap::new();
    outputs.insert(out_name, output);
    Ok(AlgoTrace {
        algo,
        seed: inst.seed,
        n,
        inputs: input_probes(inst),
        hints: Vec::new(),
        outputs,
        steps: 1,
    })
}

fn input_probes(inst: &AlgoInstance) -> ProbeMap {
    let g = &inst.graph;
    let mut m = BTreeMap::new();
    m.insert(
        "pos".to_string(),
        ProbeValue::NodeScalars(decode_array_column(g, 0)),
    );
    match inst.algo {
        AlgoName::Bfs
        | AlgoName::BellmanFord
        | AlgoName::Dijkstra
        | AlgoName::DagShortestPaths
        | AlgoName::MstPrim => {
            m.insert(
                "source".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
            m.insert(
                "weight".to_string(),
                ProbeValue::EdgeScalars(edge_column(g)),
            );
        }
        AlgoName::MstKruskal | AlgoName::Bridges | AlgoName::ArticulationPoints
        | AlgoName::TopologicalSort => {
            m.insert(
                "weight".to_string(),
                ProbeValue::EdgeScalars(edge_column(g)),
            );
        }
        AlgoName::SegmentsIntersect | AlgoName::GrahamScan | AlgoName::JarvisMarch => {
            m.insert(
                "x".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
            m.insert(
                "y".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 2)),
            );
        }
        AlgoName::NaiveStringMatcher | AlgoName::LcsLength => {
            m.insert(
                "group".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
        }
        AlgoName::ActivitySelector => {
            m.insert(
                "start".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
            m.insert(
                "finish".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 2)),
            );
        }
        AlgoName::TaskScheduling => {
            m.insert(
                "deadline".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
            m.insert(
                "penalty".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 2)),
            );
        }
        AlgoName::MatrixChainOrder => {
            m.insert(
                "dim_in".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
            m.insert(
                "dim_out".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 2)),
            );
        }
        AlgoName::BinarySearch => {
            m.insert(
                "key".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
            m.insert("target".to_string(), ProbeValue::Scalar(g.graph_feats[0]));
        }
        _ => {
            m.insert(
                "key".to_string(),
                ProbeValue::NodeScalars(decode_array_column(g, 1)),
            );
        }
    }
    m
}

fn edge_column(g: &crate::graph::GraphInstance) -> Vec<f32> {
    (0..g.edges.len()).map(|i| g.edge_feats.row(i)[0]).collect()
}

fn single_mask(n: usize, idx: usize) -> Vec<u8> {
    let mut m = vec![0u8; n];
    m[idx] = 1;
    m
}

fn set_mask(n: usize, set: &[usize]) -> Vec<u8> {
    let mut m = vec![0u8; n];
    for &i in set {
        m[i] = 1;
    }
    m
}

// ── shortest paths ───────────────────────────────────────────────────

/// Predecessor of each node: the first stored edge (u,v) with
/// dist[u] + w == dist[v]. The source and unreachable nodes point to
/// themselves. With strictly positive weights the tight-edge graph is a
/// DAG, so any choice forms a valid shortest-path tree; taking the first
/// edge makes it canonical.
pub(crate) fn canonical_parents(view: &WeightedGraphView, dist: &[f32]) -> Vec<usize> {
    let source = view.source.expect("shortest-path instance has a source");
    let mut pi: Vec<usize> = (0..view.n).collect();
    for v in 0..view.n {
        if v == source || !dist[v].is_finite() {
            continue;
        }
        for &(u, d, w) in &view.edges {
            if d == v && dist[u].is_finite() && dist[u] + w == dist[v] {
                pi[v] = u;
                break;
            }
        }
    }
    pi
}

fn bfs_levels(view: &WeightedGraphView) -> Vec<f32> {
    let source = view.source.expect("bfs instance has a source");
    let mut dist = vec![f32::INFINITY; view.n];
    dist[source] = 0.0;
    let mut frontier = vec![source];
    let mut level = 0.0f32;
    while !frontier.is_empty() {
        level += 1.0;
        let mut next = Vec::new();
        for &u in &frontier {
            for &(v, _) in &view.adj[u] {
                if dist[v].is_infinite() {
                    dist[v] = level;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    dist
}

fn bfs_parents(view: &WeightedGraphView) -> Vec<usize> {
    let dist = bfs_levels(view);
    // canonical parent: first stored edge from the previous level
    let unit: Vec<f32> = dist.clone();
    let unit_view = WeightedGraphView {
        n: view.n,
        edges: view.edges.iter().map(|&(u, v, _)| (u, v, 1.0)).collect(),
        adj: view.adj.clone(),
        pairs: Vec::new(),
        source: view.source,
    };
    canonical_parents(&unit_view, &unit)
}

/// Relaxation rounds over edges in stored order, strict improvement only.
/// Returns final distances and the pointer state after each round.
fn bellman_ford_rounds(view: &WeightedGraphView) -> (Vec<f32>, Vec<Vec<usize>>) {
    let source = view.source.expect("bellman-ford instance has a source");
    let mut dist = vec![f32::INFINITY; view.n];
    dist[source] = 0.0;
    let mut pi: Vec<usize> = (0..view.n).collect();
    let mut states = vec![pi.clone()];
    for _ in 1..view.n {
        let mut changed = false;
        for &(u, v, w) in &view.edges {
            if dist[u].is_finite() && dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                pi[v] = u;
                changed = true;
            }
        }
        states.push(pi.clone());
        if !changed {
            break;
        }
    }
    (dist, states)
}

/// O(n^2) selection; ties on the minimum key go to the lowest index.
fn dijkstra_distances(view: &WeightedGraphView) -> Vec<f32> {
    let (dist, _, _) = dijkstra_steps(view);
    dist
}

fn dijkstra_steps(view: &WeightedGraphView) -> (Vec<f32>, Vec<Vec<usize>>, Vec<Vec<u8>>) {
    let source = view.source.expect("dijkstra instance has a source");
    let n = view.n;
    let mut dist = vec![f32::INFINITY; n];
    dist[source] = 0.0;
    let mut visited = vec![false; n];
    let mut pi: Vec<usize> = (0..n).collect();
    let mut pi_states = Vec::new();
    let mut visit_states = Vec::new();
    for _ in 0..n {
        let mut u = usize::MAX;
        for c in 0..n {
            if !visited[c] && dist[c].is_finite() && (u == usize::MAX || dist[c] < dist[u]) {
                u = c;
            }
        }
        if u == usize::MAX {
            break;
        }
        visited[u] = true;
        for &(v, w) in &view.adj[u] {
            if !visited[v] && dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                pi[v] = u;
            }
        }
        pi_states.push(pi.clone());
        visit_states.push(visited.iter().map(|&b| u8::from(b)).collect());
    }
    (dist, pi_states, visit_states)
}

fn dag_shortest_distances(view: &WeightedGraphView) -> Result<Vec<f32>, TaskError> {
    let order = topological_order(view)?;
    let source = view.source.expect("dag instance has a source");
    let mut dist = vec![f32::INFINITY; view.n];
    dist[source] = 0.0;
    for &u in &order {
        if dist[u].is_finite() {
            for &(v, w) in &view.adj[u] {
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            }
        }
    }
    Ok(dist)
}

/// Lexicographically smallest topological order via min-index zero
/// in-degree selection.
fn topological_order(view: &WeightedGraphView) -> Result<Vec<usize>, TaskError> {
    let n = view.n;
    let mut indeg = vec![0usize; n];
    for &(_, v, _) in &view.edges {
        indeg[v] += 1;
    }
    let mut ready = std::collections::BinaryHeap::new();
    for (v, &d) in indeg.iter().enumerate() {
        if d == 0 {
            ready.push(std::cmp::Reverse(v));
        }
    }
    let mut order = Vec::with_capacity(n);
    while let Some(std::cmp::Reverse(u)) = ready.pop() {
        order.push(u);
        for &(v, _) in &view.adj[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(std::cmp::Reverse(v));
            }
        }
    }
    if order.len() != n {
        return Err(TaskError::InvalidInstance {
            algo: AlgoName::TopologicalSort,
            what: "graph contains a cycle".into(),
        });
    }
    Ok(order)
}

/// Chain pointers over an ordering: first element points to itself,
/// every other element points to its predecessor in the order.
pub(crate) fn order_chain(order: &[usize], n: usize) -> Vec<usize> {
    let mut pi = vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        pi[v] = if k == 0 { v } else { order[k - 1] };
    }
    pi
}

// ── minimum spanning trees ───────────────────────────────────────────

struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// MST pairs (u < v) selected by Kruskal; weights are distinct by
/// construction so the tree is unique.
pub(crate) fn kruskal_pairs(view: &WeightedGraphView) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..view.pairs.len()).collect();
    order.sort_by(|&a, &b| {
        view.pairs[a]
            .2
            .partial_cmp(&view.pairs[b].2)
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let mut dsu = Dsu::new(view.n);
    let mut chosen = Vec::new();
    for i in order {
        let (u, v, _) = view.pairs[i];
        if dsu.union(u, v) {
            chosen.push((u, v));
        }
    }
    chosen
}

fn kruskal_edge_mask(view: &WeightedGraphView) -> Vec<u8> {
    let chosen: std::collections::HashSet<(usize, usize)> =
        kruskal_pairs(view).into_iter().collect();
    view.edges
        .iter()
        .map(|&(u, v, _)| {
            let key = (u.min(v), u.max(v));
            u8::from(chosen.contains(&key))
        })
        .collect()
}

/// Prim from the marked source; parents of tree nodes, source points to
/// itself. O(n^2) selection; distinct weights make keys unique.
fn prim_parents(view: &WeightedGraphView) -> Vec<usize> {
    let source = view.source.expect("prim instance has a source");
    let n = view.n;
    let mut in_tree = vec![false; n];
    let mut key = vec![f32::INFINITY; n];
    let mut parent: Vec<usize> = (0..n).collect();
    key[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for c in 0..n {
            if !in_tree[c] && key[c].is_finite() && (u == usize::MAX || key[c] < key[u]) {
                u = c;
            }
        }
        if u == usize::MAX {
            break;
        }
        in_tree[u] = true;
        for &(v, w) in &view.adj[u] {
            if !in_tree[v] && w < key[v] {
                key[v] = w;
                parent[v] = u;
            }
        }
    }
    parent
}

// ── connectivity structure ───────────────────────────────────────────

/// Bridge mask over the directed edge list via DFS low-links; both
/// directions of a bridge pair are marked.
fn bridges_edge_mask(view: &WeightedGraphView) -> Vec<u8> {
    let n = view.n;
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut bridge_pairs: std::collections::HashSet<(usize, usize)> =
        std::collections::HashSet::new();
    // iterative DFS; skip one traversal of the edge back to the parent
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        while let Some(&mut (u, parent, ref mut next)) = stack.last_mut() {
            if *next == 0 {
                disc[u] = timer;
                low[u] = timer;
                timer += 1;
            }
            if *next < view.adj[u].len() {
                let (v, _) = view.adj[u][*next];
                *next += 1;
                if disc[v] == usize::MAX {
                    stack.push((v, u, 0));
                } else if v != parent {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&mut (p, _, _)) = stack.last_mut() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        bridge_pairs.insert((p.min(u), p.max(u)));
                    }
                }
            }
        }
    }
    view.edges
        .iter()
        .map(|&(u, v, _)| u8::from(bridge_pairs.contains(&(u.min(v), u.max(v)))))
        .collect()
}

/// Articulation points via DFS low-links.
fn articulation_points_mask(view: &WeightedGraphView) -> Vec<u8> {
    let n = view.n;
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut cut = vec![false; n];
    let mut timer = 0usize;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut root_children = 0usize;
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        while let Some(&mut (u, parent, ref mut next)) = stack.last_mut() {
            if *next == 0 {
                disc[u] = timer;
                low[u] = timer;
                timer += 1;
            }
            if *next < view.adj[u].len() {
                let (v, _) = view.adj[u][*next];
                *next += 1;
                if disc[v] == usize::MAX {
                    if u == root {
                        root_children += 1;
                    }
                    stack.push((v, u, 0));
                } else if v != parent {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&mut (p, _, _)) = stack.last_mut() {
                    low[p] = low[p].min(low[u]);
                    if p != root && low[u] >= disc[p] {
                        cut[p] = true;
                    }
                }
            }
        }
        cut[root] = root_children > 1;
    }
    cut.iter().map(|&b| u8::from(b)).collect()
}

// ── sorting ──────────────────────────────────────────────────────────

/// Arrangement = node ids in current array order. `pred[arr[0]] = arr[0]`,
/// `pred[arr[k]] = arr[k-1]`.
pub(crate) fn arrangement_pred(arrangement: &[usize]) -> Vec<usize> {
    let n = arrangement.len();
    let mut pred = vec![0usize; n];
    for k in 0..n {
        pred[arrangement[k]] = if k == 0 {
            arrangement[0]
        } else {
            arrangement[k - 1]
        };
    }
    pred
}

/// One arrangement per completed pass, including the initial order.
fn bubble_sort_passes(values: &[f32]) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut arr: Vec<usize> = (0..n).collect();
    let mut states = vec![arr.clone()];
    for i in 0..n.saturating_sub(1) {
        let mut swapped = false;
        for j in 0..n - 1 - i {
            if values[arr[j]] > values[arr[j + 1]] {
                arr.swap(j, j + 1);
                swapped = true;
            }
        }
        states.push(arr.clone());
        if !swapped {
            break;
        }
    }
    states
}

/// One arrangement per insertion, including the initial order.
fn insertion_sort_steps(values: &[f32]) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut arr: Vec<usize> = (0..n).collect();
    let mut states = vec![arr.clone()];
    for i in 1..n {
        let key = arr[i];
        let mut j = i;
        while j > 0 && values[arr[j - 1]] > values[key] {
            arr[j] = arr[j - 1];
            j -= 1;
        }
        arr[j] = key;
        states.push(arr.clone());
    }
    states
}

/// Lomuto partition with the last element as pivot.
fn quicksort_arrangement(values: &[f32]) -> Vec<usize> {
    fn sort(arr: &mut [usize], values: &[f32]) {
        if arr.len() <= 1 {
            return;
        }
        let pivot = values[arr[arr.len() - 1]];
        let mut store = 0usize;
        for j in 0..arr.len() - 1 {
            if values[arr[j]] <= pivot {
                arr.swap(store, j);
                store += 1;
            }
        }
        let last = arr.len() - 1;
        arr.swap(store, last);
        let (lo, hi) = arr.split_at_mut(store);
        sort(lo, values);
        sort(&mut hi[1..], values);
    }
    let mut arr: Vec<usize> = (0..values.len()).collect();
    sort(&mut arr, values);
    arr
}

// ── array scans ──────────────────────────────────────────────────────

/// Lowest index whose value is >= target, clamped to the last slot when
/// every element is smaller.
fn binary_search_slot(values: &[f32], target: f32) -> usize {
    let n = values.len();
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if values[mid] < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo.min(n - 1)
}

/// Maximum-sum subarray; ties resolved toward the leftmost start, then
/// the shortest range. Sums are exact on the sampling grid.
pub(crate) fn kadane_range(values: &[f32]) -> (usize, usize) {
    let mut best = (values[0], 0usize, 0usize);
    let mut cur_sum = values[0];
    let mut cur_start = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if cur_sum < 0.0 {
            cur_sum = v;
            cur_start = i;
        } else {
            cur_sum += v;
        }
        if cur_sum > best.0 || (cur_sum == best.0 && cur_start < best.1) {
            best = (cur_sum, cur_start, i);
        }
    }
    (best.1, best.2)
}

// ── greedy selection ─────────────────────────────────────────────────

/// Greedy earliest-finish activity selection over compatible activities.
fn activity_selection(start: &[f32], finish: &[f32]) -> Vec<usize> {
    let n = start.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| finish[a].partial_cmp(&finish[b]).unwrap().then(a.cmp(&b)));
    let mut chosen = Vec::new();
    let mut last_finish = f32::NEG_INFINITY;
    for i in order {
        if start[i] >= last_finish {
            chosen.push(i);
            last_finish = finish[i];
        }
    }
    chosen
}

/// Unit-time scheduling with deadlines and penalties: accept tasks in
/// decreasing penalty order while the accepted set stays schedulable.
fn task_scheduling(deadlines: &[usize], penalties: &[i64]) -> Vec<usize> {
    let n = deadlines.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| penalties[b].cmp(&penalties[a]).then(a.cmp(&b)));
    let mut accepted: Vec<usize> = Vec::new();
    for i in order {
        accepted.push(i);
        if !schedulable(&accepted, deadlines) {
            accepted.pop();
        }
    }
    accepted
}

pub(crate) fn schedulable(set: &[usize], deadlines: &[usize]) -> bool {
    let mut ds: Vec<usize> = set.iter().map(|&i| deadlines[i]).collect();
    ds.sort_unstable();
    ds.iter().enumerate().all(|(k, &d)| d >= k + 1)
}

// ── geometry ─────────────────────────────────────────────────────────

pub(crate) fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (i64, i64), q: (i64, i64), r: (i64, i64)) -> bool {
    // q collinear with p-r assumed; check the bounding box
    q.0 >= p.0.min(r.0) && q.0 <= p.0.max(r.0) && q.1 >= p.1.min(r.1) && q.1 <= p.1.max(r.1)
}

/// Orientation-based segment intersection on exact integers, including
/// collinear and degenerate cases.
pub(crate) fn segments_intersect(
    p1: (i64, i64),
    q1: (i64, i64),
    p2: (i64, i64),
    q2: (i64, i64),
) -> bool {
    let d1 = cross(p2, q2, p1).signum();
    let d2 = cross(p2, q2, q1).signum();
    let d3 = cross(p1, q1, p2).signum();
    let d4 = cross(p1, q1, q2).signum();
    if d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0 {
        return true;
    }
    (d1 == 0 && on_segment(p2, p1, q2))
        || (d2 == 0 && on_segment(p2, q1, q2))
        || (d3 == 0 && on_segment(p1, p2, q1))
        || (d4 == 0 && on_segment(p1, q2, q1))
}

/// Convex hull vertices (points are in general position by sampling).
fn graham_scan(pts: &[(i64, i64)]) -> Vec<usize> {
    let n = pts.len();
    let pivot = (0..n)
        .min_by_key(|&i| (pts[i].1, pts[i].0))
        .expect("nonempty");
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();
    rest.sort_by(|&a, &b| {
        let c = cross(pts[pivot], pts[a], pts[b]);
        // no angle ties in general position except identical rays, which
        // duplicates would need; fall back to distance for safety
        c.cmp(&0)
            .reverse()
            .then_with(|| dist2(pts[pivot], pts[a]).cmp(&dist2(pts[pivot], pts[b])))
    });
    let mut stack = vec![pivot];
    for &p in &rest {
        while stack.len() >= 2 {
            let top = stack[stack.len() - 1];
            let below = stack[stack.len() - 2];
            if cross(pts[below], pts[top], pts[p]) <= 0 {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(p);
    }
    stack.sort_unstable();
    stack
}

fn dist2(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)
}

/// Gift wrapping from the leftmost point.
fn jarvis_march(pts: &[(i64, i64)]) -> Vec<usize> {
    let n = pts.len();
    if n < 3 {
        return (0..n).collect();
    }
    let start = (0..n)
        .min_by_key(|&i| (pts[i].0, pts[i].1))
        .expect("nonempty");
    let mut hull = vec![start];
    let mut current = start;
    loop {
        let mut candidate = usize::MAX;
        for next in 0..n {
            if next == current {
                continue;
            }
            if candidate == usize::MAX
                || cross(pts[current], pts[candidate], pts[next]) < 0
            {
                candidate = next;
            }
        }
        if candidate == start {
            break;
        }
        hull.push(candidate);
        current = candidate;
        if hull.len() > n {
            break; // degenerate input guard
        }
    }
    hull.sort_unstable();
    hull
}

// ── strings and dynamic programming ──────────────────────────────────

/// First shift where the pattern matches, comparing character by
/// character like the textbook loop.
fn naive_string_match(text: &[usize], pattern: &[usize]) -> Option<usize> {
    if pattern.len() > text.len() {
        return None;
    }
    for s in 0..=(text.len() - pattern.len()) {
        let mut ok = true;
        for (k, &pc) in pattern.iter().enumerate() {
            if text[s + k] != pc {
                ok = false;
                break;
            }
        }
        if ok {
            return Some(s);
        }
    }
    None
}

fn lcs_length(a: &[usize], b: &[usize]) -> usize {
    let (m, n) = (a.len(), b.len());
    let mut table = vec![vec![0usize; n + 1]; m + 1];
    for i in 1..=m {
        for j in 1..=n {
            table[i][j] = if a[i - 1] == b[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    table[m][n]
}

/// Minimal scalar multiplications to compute the chain; `dims` has n+1
/// entries for n matrices.
fn matrix_chain_cost(dims: &[i64]) -> i64 {
    let n = dims.len() - 1;
    let mut m = vec![vec![0i64; n + 1]; n + 1];
    for len in 2..=n {
        for i in 1..=(n - len + 1) {
            let j = i + len - 1;
            m[i][j] = i64::MAX;
            for k in i..j {
                let cost = m[i][k] + m[k + 1][j] + dims[i - 1] * dims[k] * dims[j];
                if cost < m[i][j] {
                    m[i][j] = cost;
                }
            }
        }
    }
    m[1][n]
}

/// Expected search cost of the optimal BST in integer weight units
/// (cost = sum over keys of weight * depth, root depth 1).
fn optimal_bst_cost(weights: &[i64]) -> i64 {
    let n = weights.len();
    let mut prefix = vec![0i64; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + weights[i];
    }
    let w = |i: usize, j: usize| prefix[j + 1] - prefix[i];
    // e[i][j] over inclusive key ranges; e[i][i-1] = 0 handled by bounds
    let mut e = vec![vec![0i64; n + 1]; n + 1];
    for len in 1..=n {
        for i in 0..=(n - len) {
            let j = i + len - 1;
            let mut best = i64::MAX;
            for r in i..=j {
                let left = if r > i { e[i][r - 1] } else { 0 };
                let right = if r < j { e[r + 1][j] } else { 0 };
                let c = left + right + w(i, j);
                if c < best {
                    best = c;
                }
            }
            e[i][j] = best;
        }
    }
    e[0][n - 1]
}

// ── hints ────────────────────────────────────────────────────────────

/// Per-step hint states for the hint-enabled algorithms. The final state
/// always equals the trace outputs.
pub fn emit_hints(algo: AlgoName, inst: &AlgoInstance) -> Result<Vec<ProbeMap>, TaskError> {
    if !algo.hints_enabled() {
        return Err(TaskError::HintsNotEnabled(algo));
    }
    let g = &inst.graph;
    let n = g.num_nodes;
    let mut steps: Vec<ProbeMap> = Vec::new();
    match algo {
        AlgoName::Bfs => {
            let view = decode_weighted_graph(g);
            let source = view.source.expect("bfs instance has a source");
            let dist = bfs_levels(&view);
            let final_pi = bfs_parents(&view);
            let max_level = dist
                .iter()
                .filter(|d| d.is_finite())
                .fold(0.0f32, |a, &b| a.max(b)) as usize;
            for level in 0..=max_level {
                let reach: Vec<u8> = (0..n)
                    .map(|v| u8::from(dist[v].is_finite() && dist[v] as usize <= level))
                    .collect();
                let pi: Vec<usize> = (0..n)
                    .map(|v| {
                        if v != source && dist[v].is_finite() && dist[v] as usize <= level {
                            final_pi[v]
                        } else {
                            v
                        }
                    })
                    .collect();
                let mut m = BTreeMap::new();
                m.insert("reach".to_string(), ProbeValue::Mask(reach));
                m.insert("pi".to_string(), ProbeValue::Pointer(pi));
                steps.push(m);
            }
        }
        AlgoName::BellmanFord => {
            let view = decode_weighted_graph(g);
            let (dist, pi_states) = bellman_ford_rounds(&view);
            for pi in pi_states {
                let mut m = BTreeMap::new();
                m.insert("pi".to_string(), ProbeValue::Pointer(pi));
                steps.push(m);
            }
            // answer extraction: canonical tight-edge parents
            let mut m = BTreeMap::new();
            m.insert(
                "pi".to_string(),
                ProbeValue::Pointer(canonical_parents(&view, &dist)),
            );
            steps.push(m);
        }
        AlgoName::Dijkstra => {
            let view = decode_weighted_graph(g);
            let (dist, pi_states, visit_states) = dijkstra_steps(&view);
            for (pi, vis) in pi_states.into_iter().zip(visit_states) {
                let mut m = BTreeMap::new();
                m.insert("pi".to_string(), ProbeValue::Pointer(pi));
                m.insert("visited".to_string(), ProbeValue::Mask(vis));
                steps.push(m);
            }
            let mut m = BTreeMap::new();
            m.insert(
                "pi".to_string(),
                ProbeValue::Pointer(canonical_parents(&view, &dist)),
            );
            m.insert(
                "visited".to_string(),
                ProbeValue::Mask(vec![1u8; n]),
            );
            steps.push(m);
        }
        AlgoName::BubbleSort | AlgoName::InsertionSort => {
            let values = decode_array_column(g, 1);
            let states = if algo == AlgoName::BubbleSort {
                bubble_sort_passes(&values)
            } else {
                insertion_sort_steps(&values)
            };
            for arr in states {
                let mut m = BTreeMap::new();
                m.insert(
                    "pi".to_string(),
                    ProbeValue::Pointer(arrangement_pred(&arr)),
                );
                steps.push(m);
            }
        }
        AlgoName::NaiveStringMatcher => {
            let s = decode_strings(g);
            let text_len = s.text.len();
            let pat_len = s.pattern.len();
            let hit = naive_string_match(&s.text, &s.pattern).ok_or_else(|| {
                TaskError::InvalidInstance {
                    algo,
                    what: "pattern does not occur in text".into(),
                }
            })?;
            for shift in 0..=hit {
                let window: Vec<u8> = (0..n)
                    .map(|v| u8::from(v >= shift && v < shift + pat_len && v < text_len))
                    .collect();
                // every node points at the match start once it is found,
                // and at itself while the scan is still running
                let pi: Vec<usize> = (0..n)
                    .map(|v| if shift == hit { hit } else { v })
                    .collect();
                let mut m = BTreeMap::new();
                m.insert("window".to_string(), ProbeValue::Mask(window));
                m.insert("pi".to_string(), ProbeValue::Pointer(pi));
                steps.push(m);
            }
        }
        _ => unreachable!("hints_enabled covers exactly the arms above"),
    }
    Ok(steps)
}
