//! Forward passes over flat graph batches.
//!
//! The processor keeps three pieces of state: node embeddings `[N, h]`, a
//! dense per-graph pair state `[sum n_g^2, h]` (edge embeddings live at
//! their (src, dst) slot, every other pair starts at zero), and one graph
//! embedding per graph. Messages flow along the stored directed edges and
//! aggregate per destination with max; the triplet step additionally
//! computes a representation for every node triple, reduces it over the
//! third node with max, and folds the result back into the pair state
//! through a residual edge readout.

use super::{Bound, ModelError, Params};
use crate::graph::GraphBatch;
use crate::tensor::{Tape, TensorId};

/// Triplet state is materialized for all n^3 triples per graph; reject
/// anything larger than this.
pub const TRIPLET_NODE_CAP: usize = 64;

/// Precomputed index arrays for one batch.
pub struct BatchTopology {
    pub num_nodes: usize,
    pub num_graphs: usize,
    pub num_pairs: usize,
    pub node_graph: Vec<u32>,
    pub edge_src: Vec<u32>,
    pub edge_dst: Vec<u32>,
    pub edge_pair: Vec<u32>,
    pub edge_graph: Vec<u32>,
    pub pair_offsets: Vec<usize>,
    pub node_offsets: Vec<usize>,
    pub graph_sizes: Vec<usize>,
    pub tri_i: Vec<u32>,
    pub tri_j: Vec<u32>,
    pub tri_k: Vec<u32>,
    pub tri_pair: Vec<u32>,
}

/// Build index arrays; set `with_triplets` when the triplet step will run.
pub fn topology(batch: &GraphBatch, with_triplets: bool) -> Result<BatchTopology, ModelError> {
    let mut pair_offsets = Vec::with_capacity(batch.num_graphs + 1);
    let mut graph_sizes = Vec::with_capacity(batch.num_graphs);
    let mut num_pairs = 0usize;
    for g in 0..batch.num_graphs {
        let n = batch.graph_size(g);
        if with_triplets && n > TRIPLET_NODE_CAP {
            return Err(ModelError::TripletCap {
                n,
                cap: TRIPLET_NODE_CAP,
            });
        }
        pair_offsets.push(num_pairs);
        graph_sizes.push(n);
        num_pairs += n * n;
    }
    pair_offsets.push(num_pairs);

    let mut edge_src = Vec::with_capacity(batch.edges.len());
    let mut edge_dst = Vec::with_capacity(batch.edges.len());
    let mut edge_pair = Vec::with_capacity(batch.edges.len());
    let mut edge_graph = Vec::with_capacity(batch.edges.len());
    for g in 0..batch.num_graphs {
        let n = graph_sizes[g];
        let node_off = batch.node_offsets[g];
        let pair_off = pair_offsets[g];
        for e in batch.edge_offsets[g]..batch.edge_offsets[g + 1] {
            let (s, d) = batch.edges[e];
            edge_src.push(s);
            edge_dst.push(d);
            let (ls, ld) = (s as usize - node_off, d as usize - node_off);
            edge_pair.push((pair_off + ls * n + ld) as u32);
            edge_graph.push(g as u32);
        }
    }

    let (mut tri_i, mut tri_j, mut tri_k, mut tri_pair) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    if with_triplets {
        let total: usize = graph_sizes.iter().map(|n| n * n * n).sum();
        tri_i.reserve(total);
        tri_j.reserve(total);
        tri_k.reserve(total);
        tri_pair.reserve(total);
        for g in 0..batch.num_graphs {
            let n = graph_sizes[g];
            let node_off = batch.node_offsets[g] as u32;
            let pair_off = pair_offsets[g] as u32;
            for i in 0..n as u32 {
                for j in 0..n as u32 {
                    let pair = pair_off + i * n as u32 + j;
                    for k in 0..n as u32 {
                        tri_i.push(node_off + i);
                        tri_j.push(node_off + j);
                        tri_k.push(node_off + k);
                        tri_pair.push(pair);
                    }
                }
            }
        }
    }

    Ok(BatchTopology {
        num_nodes: batch.num_nodes,
        num_graphs: batch.num_graphs,
        num_pairs,
        node_graph: batch.graph_index.clone(),
        edge_src,
        edge_dst,
        edge_pair,
        edge_graph,
        pair_offsets,
        node_offsets: batch.node_offsets.clone(),
        graph_sizes,
        tri_i,
        tri_j,
        tri_k,
        tri_pair,
    })
}

/// Processor state on a tape.
#[derive(Debug, Clone, Copy)]
pub struct State {
    pub nodes: TensorId,
    pub pairs: TensorId,
    pub graphs: TensorId,
}

fn linear(
    tape: &mut Tape,
    x: TensorId,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<TensorId, ModelError> {
    let w = bound.id(params, &format!("{prefix}.w"))?;
    let b = bound.id(params, &format!("{prefix}.b"))?;
    let xw = tape.matmul(x, w)?;
    Ok(tape.add(xw, b)?)
}

/// Encode raw batch features into the processor state. Edge embeddings
/// are scattered into their dense pair slot; absent pairs start at zero.
pub fn encode(
    tape: &mut Tape,
    batch: &GraphBatch,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    enc_prefix: &str,
) -> Result<State, ModelError> {
    let nf = &batch.node_feats;
    let x = tape.leaf(&[nf.rows, nf.cols], nf.data.clone())?;
    let nodes = linear(tape, x, params, bound, &format!("{enc_prefix}.node"))?;

    let ef = &batch.edge_feats;
    let e = tape.leaf(&[ef.rows, ef.cols], ef.data.clone())?;
    let edge_embed = linear(tape, e, params, bound, &format!("{enc_prefix}.edge"))?;
    let pairs = tape.segment_sum(edge_embed, &topo.edge_pair, topo.num_pairs)?;

    let gf = &batch.graph_feats;
    let g = tape.leaf(&[gf.rows, gf.cols], gf.data.clone())?;
    let graphs = linear(tape, g, params, bound, &format!("{enc_prefix}.graph"))?;

    Ok(State {
        nodes,
        pairs,
        graphs,
    })
}

struct Proc<'a> {
    tape: &'a mut Tape,
}

impl<'a> Proc<'a> {
    fn mm(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, ModelError> {
        Ok(self.tape.matmul(a, b)?)
    }

    fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, ModelError> {
        Ok(self.tape.add(a, b)?)
    }
}

/// One message-passing round: per-edge messages, max aggregation at the
/// destination, then the node update MLP. Pair and graph state pass
/// through unchanged.
pub fn message_step(
    tape: &mut Tape,
    state: State,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<State, ModelError> {
    let nodes = message_and_update(tape, state, topo, params, bound, prefix, state.pairs)?;
    Ok(State {
        nodes,
        pairs: state.pairs,
        graphs: state.graphs,
    })
}

/// One triplet round: triple representations max-reduced over the third
/// node update the pair state (residually); messages then flow over the
/// updated pairs and the node update follows.
pub fn triplet_step(
    tape: &mut Tape,
    state: State,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<State, ModelError> {
    let p = &mut Proc { tape };
    let id = |name: &str| bound.id(params, &format!("{prefix}.{name}"));

    let xa = p.mm(state.nodes, id("tri.w_a")?)?;
    let xb = p.mm(state.nodes, id("tri.w_b")?)?;
    let xc = p.mm(state.nodes, id("tri.w_c")?)?;
    let xe = p.mm(state.pairs, id("tri.w_edge")?)?;

    let gi = p.tape.gather_rows(xa, &topo.tri_i)?;
    let gj = p.tape.gather_rows(xb, &topo.tri_j)?;
    let gk = p.tape.gather_rows(xc, &topo.tri_k)?;
    let ge = p.tape.gather_rows(xe, &topo.tri_pair)?;
    let s1 = p.add(gi, gj)?;
    let s2 = p.add(s1, gk)?;
    let s3 = p.add(s2, ge)?;
    let s3b = p.add(s3, id("tri.b1")?)?;
    let th = p.tape.relu(s3b)?;
    let t1 = p.mm(th, id("tri.w2")?)?;
    let t = p.add(t1, id("tri.b2")?)?;

    let tmax = p.tape.segment_max(t, &topo.tri_pair, topo.num_pairs)?;
    let eo = p.mm(tmax, id("tri.w_out")?)?;
    let eob = p.add(eo, id("tri.b_out")?)?;
    // residual update keeps the pair state stable when the triplet branch
    // is inactive (zero parameters reduce this step to message_step)
    let new_pairs = p.add(state.pairs, eob)?;

    let nodes = message_and_update(tape, state, topo, params, bound, prefix, new_pairs)?;
    Ok(State {
        nodes,
        pairs: new_pairs,
        graphs: state.graphs,
    })
}

fn message_and_update(
    tape: &mut Tape,
    state: State,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    prefix: &str,
    pairs: TensorId,
) -> Result<TensorId, ModelError> {
    let p = &mut Proc { tape };
    let id = |name: &str| bound.id(params, &format!("{prefix}.{name}"));

    let hs = p.tape.gather_rows(state.nodes, &topo.edge_src)?;
    let hd = p.tape.gather_rows(state.nodes, &topo.edge_dst)?;
    let he = p.tape.gather_rows(pairs, &topo.edge_pair)?;
    let hg = p.tape.gather_rows(state.graphs, &topo.edge_graph)?;

    let m1 = p.mm(hs, id("msg.w_src")?)?;
    let m2 = p.mm(hd, id("msg.w_dst")?)?;
    let m3 = p.mm(he, id("msg.w_edge")?)?;
    let m4 = p.mm(hg, id("msg.w_graph")?)?;
    let a1 = p.add(m1, m2)?;
    let a2 = p.add(a1, m3)?;
    let a3 = p.add(a2, m4)?;
    let a3b = p.add(a3, id("msg.b1")?)?;
    let mh = p.tape.relu(a3b)?;
    let mw = p.mm(mh, id("msg.w2")?)?;
    let messages = p.add(mw, id("msg.b2")?)?;

    let agg = p
        .tape
        .segment_max(messages, &topo.edge_dst, topo.num_nodes)?;

    let u1 = p.mm(state.nodes, id("upd.w_node")?)?;
    let u2 = p.mm(agg, id("upd.w_msg")?)?;
    let ua = p.add(u1, u2)?;
    let uab = p.add(ua, id("upd.b1")?)?;
    let uh = p.tape.relu(uab)?;
    let uw = p.mm(uh, id("upd.w2")?)?;
    Ok(p.add(uw, id("upd.b2")?)?)
}

/// Per-node mask logits `[N, 1]`.
pub fn decode_node_mask(
    tape: &mut Tape,
    nodes: TensorId,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<TensorId, ModelError> {
    linear(tape, nodes, params, bound, prefix)
}

/// Bilinear pointer scores per graph: `[n_g, n_g]` matrices in graph order.
pub fn decode_pointer_scores(
    tape: &mut Tape,
    nodes: TensorId,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<Vec<TensorId>, ModelError> {
    let wq = bound.id(params, &format!("{prefix}.wq"))?;
    let wk = bound.id(params, &format!("{prefix}.wk"))?;
    let q = tape.matmul(nodes, wq)?;
    let k = tape.matmul(nodes, wk)?;
    let mut out = Vec::with_capacity(topo.num_graphs);
    for g in 0..topo.num_graphs {
        let rows: Vec<u32> =
            (topo.node_offsets[g] as u32..topo.node_offsets[g + 1] as u32).collect();
        let qg = tape.gather_rows(q, &rows)?;
        let kg = tape.gather_rows(k, &rows)?;
        let kt = tape.transpose(kg)?;
        out.push(tape.matmul(qg, kt)?);
    }
    Ok(out)
}

/// Max- and mean-pooled node embeddings per graph: `([G, h], [G, h])`.
pub fn pooled_embeddings(
    tape: &mut Tape,
    nodes: TensorId,
    topo: &BatchTopology,
) -> Result<(TensorId, TensorId), ModelError> {
    let mx = tape.segment_max(nodes, &topo.node_graph, topo.num_graphs)?;
    let mn = tape.segment_mean(nodes, &topo.node_graph, topo.num_graphs)?;
    Ok((mx, mn))
}

/// Graph-level head on max-pool and mean-pool: `[G, out]` logits/values.
pub fn decode_graph_head(
    tape: &mut Tape,
    nodes: TensorId,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<TensorId, ModelError> {
    let (mx, mn) = pooled_embeddings(tape, nodes, topo)?;
    let w_max = bound.id(params, &format!("{prefix}.w_max"))?;
    let w_mean = bound.id(params, &format!("{prefix}.w_mean"))?;
    let b = bound.id(params, &format!("{prefix}.b"))?;
    let a = tape.matmul(mx, w_max)?;
    let c = tape.matmul(mn, w_mean)?;
    let s = tape.add(a, c)?;
    Ok(tape.add(s, b)?)
}

/// Per-edge mask logits `[E, 1]` from (h_src, h_dst, pair state).
pub fn decode_edge_mask(
    tape: &mut Tape,
    state: State,
    topo: &BatchTopology,
    params: &Params,
    bound: &Bound,
    prefix: &str,
) -> Result<TensorId, ModelError> {
    let hs = tape.gather_rows(state.nodes, &topo.edge_src)?;
    let hd = tape.gather_rows(state.nodes, &topo.edge_dst)?;
    let he = tape.gather_rows(state.pairs, &topo.edge_pair)?;
    let w_src = bound.id(params, &format!("{prefix}.w_src"))?;
    let w_dst = bound.id(params, &format!("{prefix}.w_dst"))?;
    let w_edge = bound.id(params, &format!("{prefix}.w_edge"))?;
    let b = bound.id(params, &format!("{prefix}.b"))?;
    let a = tape.matmul(hs, w_src)?;
    let c = tape.matmul(hd, w_dst)?;
    let e = tape.matmul(he, w_edge)?;
    let s1 = tape.add(a, c)?;
    let s2 = tape.add(s1, e)?;
    Ok(tape.add(s2, b)?)
}

/// Decoder head parameter names for each probe family.
pub fn init_mask_head(init: &mut super::Initializer, params: &mut Params, prefix: &str, h: usize) {
    init.linear(params, prefix, h, 1);
}

pub fn init_pointer_head(
    init: &mut super::Initializer,
    params: &mut Params,
    prefix: &str,
    h: usize,
) {
    init.matrix(params, &format!("{prefix}.wq"), h, h);
    init.matrix(params, &format!("{prefix}.wk"), h, h);
}

pub fn init_graph_head(
    init: &mut super::Initializer,
    params: &mut Params,
    prefix: &str,
    h: usize,
    out: usize,
) {
    init.matrix(params, &format!("{prefix}.w_max"), h, out);
    init.matrix(params, &format!("{prefix}.w_mean"), h, out);
    init.bias(params, &format!("{prefix}.b"), out, h);
}

pub fn init_edge_mask_head(
    init: &mut super::Initializer,
    params: &mut Params,
    prefix: &str,
    h: usize,
) {
    init.matrix(params, &format!("{prefix}.w_src"), h, 1);
    init.matrix(params, &format!("{prefix}.w_dst"), h, 1);
    init.matrix(params, &format!("{prefix}.w_edge"), h, 1);
    init.bias(params, &format!("{prefix}.b"), 1, h);
}

#[cfg(test)]
mod tests {
    use super::super::{
        init_encoder, init_processor, Initializer, ModelConfig, Params,
    };
    use super::*;
    use crate::graph::{batch, Features, GraphInstance, Label};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_graph(rng: &mut ChaCha8Rng, n: usize, dn: usize) -> GraphInstance {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_range(0.0..1.0) < 0.5 {
                    pairs.push((u as u32, v as u32));
                    pairs.push((v as u32, u as u32));
                }
            }
        }
        pairs.sort_unstable();
        let e = pairs.len();
        GraphInstance {
            num_nodes: n,
            edges: pairs,
            node_feats: Features::new(
                n,
                dn,
                (0..n * dn).map(|_| rng.random_range(-1.0..1.0)).collect(),
            ),
            edge_feats: Features::new(e, 1, (0..e).map(|_| rng.random_range(-1.0..1.0)).collect()),
            graph_feats: vec![rng.random_range(-1.0..1.0)],
            label: Some(Label::Int(0)),
        }
    }

    fn build_params(cfg: &ModelConfig, dn: usize, seed: u64) -> Params {
        let mut p = Params::new();
        let mut init = Initializer::new(seed);
        init_encoder(&mut init, &mut p, "enc", dn, 1, 1, cfg.hidden_dim);
        init_processor(&mut init, &mut p, "proc", cfg);
        init_pointer_head(&mut init, &mut p, "dec.ptr", cfg.hidden_dim);
        init_mask_head(&mut init, &mut p, "dec.mask", cfg.hidden_dim);
        p
    }

    fn forward_scores(
        g: &GraphInstance,
        params: &Params,
        cfg: &ModelConfig,
        steps: usize,
    ) -> (Vec<f32>, Vec<f32>) {
        let b = batch(std::slice::from_ref(g)).unwrap();
        let topo = topology(&b, true).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let mut state = encode(&mut tape, &b, &topo, params, &bound, "enc").unwrap();
        for _ in 0..steps {
            state = triplet_step(&mut tape, state, &topo, params, &bound, "proc").unwrap();
        }
        let scores =
            decode_pointer_scores(&mut tape, state.nodes, &topo, params, &bound, "dec.ptr")
                .unwrap();
        (
            tape.data(state.nodes).to_vec(),
            tape.data(scores[0]).to_vec(),
        )
    }

    #[test]
    fn zero_features_zero_bias_encode_to_zero() {
        let cfg = ModelConfig {
            hidden_dim: 8,
            ..Default::default()
        };
        let mut params = build_params(&cfg, 3, 1);
        for e in params.entries_mut() {
            if e.name.starts_with("enc.") && e.name.ends_with(".b") {
                e.data.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let mut g = rand_graph(&mut ChaCha8Rng::seed_from_u64(2), 4, 3);
        g.node_feats.data.iter_mut().for_each(|v| *v = 0.0);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        assert!(tape.data(state.nodes).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_encoder_reproduces_inputs() {
        let cfg = ModelConfig {
            hidden_dim: 3,
            triplet_dim: 2,
            num_steps: 0,
        };
        let mut params = build_params(&cfg, 3, 1);
        {
            let w = params.get_mut("enc.node.w").unwrap();
            w.data = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        }
        {
            let b = params.get_mut("enc.node.b").unwrap();
            b.data = vec![0.0; 3];
        }
        let g = rand_graph(&mut ChaCha8Rng::seed_from_u64(3), 4, 3);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        assert_eq!(tape.data(state.nodes), g.node_feats.data.as_slice());
    }

    #[test]
    fn encode_matches_direct_matrix_oracle() {
        let cfg = ModelConfig {
            hidden_dim: 5,
            ..Default::default()
        };
        let params = build_params(&cfg, 3, 9);
        let g = rand_graph(&mut ChaCha8Rng::seed_from_u64(4), 3, 3);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        let w = &params.get("enc.node.w").unwrap().data;
        let bias = &params.get("enc.node.b").unwrap().data;
        let got = tape.data(state.nodes);
        for i in 0..3 {
            for o in 0..5 {
                let mut want = bias[o];
                for c in 0..3 {
                    want += g.node_feats.row(i)[c] * w[c * 5 + o];
                }
                assert!((got[i * 5 + o] - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_neighborhood_gets_zero_aggregate() {
        // no edges at all: update must see m_i = 0
        let cfg = ModelConfig {
            hidden_dim: 4,
            triplet_dim: 2,
            num_steps: 0,
        };
        let params = build_params(&cfg, 2, 5);
        let g = GraphInstance {
            num_nodes: 3,
            edges: vec![],
            node_feats: Features::new(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]),
            edge_feats: Features::zeros(0, 1),
            graph_feats: vec![1.0],
            label: None,
        };
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        let stepped = message_step(&mut tape, state, &topo, &params, &bound, "proc").unwrap();
        // oracle: update MLP applied to (h_i, 0)
        let h = tape.data(state.nodes).to_vec();
        let wn = &params.get("proc.upd.w_node").unwrap().data;
        let b1 = &params.get("proc.upd.b1").unwrap().data;
        let w2 = &params.get("proc.upd.w2").unwrap().data;
        let b2 = &params.get("proc.upd.b2").unwrap().data;
        let d = 4;
        for i in 0..3 {
            let mut hid = vec![0.0f32; d];
            for o in 0..d {
                let mut s = b1[o];
                for c in 0..d {
                    s += h[i * d + c] * wn[c * d + o];
                }
                hid[o] = s.max(0.0);
            }
            for o in 0..d {
                let mut s = b2[o];
                for c in 0..d {
                    s += hid[c] * w2[c * d + o];
                }
                let got = tape.data(stepped.nodes)[i * d + o];
                assert!((got - s).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn single_edge_aggregate_is_its_only_message() {
        let cfg = ModelConfig {
            hidden_dim: 4,
            triplet_dim: 2,
            num_steps: 0,
        };
        let params = build_params(&cfg, 2, 6);
        let g = GraphInstance {
            num_nodes: 2,
            edges: vec![(0, 1)],
            node_feats: Features::new(2, 2, vec![0.3, -0.2, 0.7, 0.1]),
            edge_feats: Features::new(1, 1, vec![0.5]),
            graph_feats: vec![1.0],
            label: None,
        };
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        // recompute the aggregate by hand: the only incoming edge of node 1
        let hs = tape.data(state.nodes)[0..4].to_vec();
        let hd = tape.data(state.nodes)[4..8].to_vec();
        let hg = tape.data(state.graphs).to_vec();
        let pair01 = tape.data(state.pairs)[4..8].to_vec(); // pair (0,1) slot = 0*2+1
        let get = |n: &str| params.get(n).unwrap().data.clone();
        let (ws, wd, we, wg) = (
            get("proc.msg.w_src"),
            get("proc.msg.w_dst"),
            get("proc.msg.w_edge"),
            get("proc.msg.w_graph"),
        );
        let (b1, w2, b2) = (get("proc.msg.b1"), get("proc.msg.w2"), get("proc.msg.b2"));
        let d = 4;
        let mut pre = vec![0.0f32; d];
        for o in 0..d {
            let mut s = b1[o];
            for c in 0..d {
                s += hs[c] * ws[c * d + o]
                    + hd[c] * wd[c * d + o]
                    + pair01[c] * we[c * d + o]
                    + hg[c] * wg[c * d + o];
            }
            pre[o] = s.max(0.0);
        }
        let mut msg = vec![0.0f32; d];
        for o in 0..d {
            let mut s = b2[o];
            for c in 0..d {
                s += pre[c] * w2[c * d + o];
            }
            msg[o] = s;
        }
        let stepped = message_step(&mut tape, state, &topo, &params, &bound, "proc").unwrap();
        let _ = stepped;
        // the aggregate at node 1 equals the single message: verify via the
        // segment_max output recorded on the tape (it is the tensor right
        // after `messages`); instead of poking tape internals, recompute the
        // full update and compare node 1's output.
        let wn = get("proc.upd.w_node");
        let wm = get("proc.upd.w_msg");
        let (ub1, uw2, ub2) = (get("proc.upd.b1"), get("proc.upd.w2"), get("proc.upd.b2"));
        let mut hid = vec![0.0f32; d];
        for o in 0..d {
            let mut s = ub1[o];
            for c in 0..d {
                s += hd[c] * wn[c * d + o] + msg[c] * wm[c * d + o];
            }
            hid[o] = s.max(0.0);
        }
        for o in 0..d {
            let mut s = ub2[o];
            for c in 0..d {
                s += hid[c] * uw2[c * d + o];
            }
            let got = tape.data(stepped.nodes)[d + o];
            assert!((got - s).abs() < 1e-5, "{got} vs {s}");
        }
    }

    #[test]
    fn zeroed_triplet_params_reduce_to_message_step_bitwise() {
        let cfg = ModelConfig {
            hidden_dim: 16,
            triplet_dim: 4,
            num_steps: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..20 {
            let mut params = build_params(&cfg, 3, 100 + case);
            super::super::zero_triplet_params(&mut params, "proc");
            let g = rand_graph(&mut rng, 3 + (case as usize % 5), 3);
            let b = batch(std::slice::from_ref(&g)).unwrap();
            let topo = topology(&b, true).unwrap();
            let mut tape = Tape::new();
            let bound = params.bind(&mut tape).unwrap();
            let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
            let via_triplet =
                triplet_step(&mut tape, state, &topo, &params, &bound, "proc").unwrap();
            let via_message =
                message_step(&mut tape, state, &topo, &params, &bound, "proc").unwrap();
            let a = tape.data(via_triplet.nodes);
            let c = tape.data(via_message.nodes);
            assert_eq!(
                a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                c.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                "case {case}"
            );
        }
    }

    #[test]
    fn single_node_graph_triplet_step_runs() {
        let cfg = ModelConfig {
            hidden_dim: 8,
            triplet_dim: 3,
            num_steps: 0,
        };
        let params = build_params(&cfg, 2, 13);
        let g = GraphInstance {
            num_nodes: 1,
            edges: vec![],
            node_feats: Features::new(1, 2, vec![0.4, -0.6]),
            edge_feats: Features::zeros(0, 1),
            graph_feats: vec![1.0],
            label: None,
        };
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, true).unwrap();
        assert_eq!(topo.tri_i.len(), 1); // only t_000
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        let out = triplet_step(&mut tape, state, &topo, &params, &bound, "proc").unwrap();
        assert_eq!(tape.shape(out.pairs), &[1, 8]);
    }

    #[test]
    fn processor_is_permutation_equivariant() {
        let cfg = ModelConfig {
            hidden_dim: 12,
            triplet_dim: 4,
            num_steps: 0,
        };
        let params = build_params(&cfg, 3, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..10 {
            let n = 4 + case % 4;
            let g = rand_graph(&mut rng, n, 3);
            // random permutation
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let pg = permute_graph(&g, &perm);
            let (nodes_a, scores_a) = forward_scores(&g, &params, &cfg, 2);
            let (nodes_b, scores_b) = forward_scores(&pg, &params, &cfg, 2);
            let h = cfg.hidden_dim;
            for v in 0..n {
                for c in 0..h {
                    let a = nodes_a[v * h + c];
                    let b = nodes_b[perm[v] * h + c];
                    assert!((a - b).abs() <= 1e-5, "node {v} col {c}: {a} vs {b}");
                }
            }
            // pointer score matrix conjugated by the permutation
            for i in 0..n {
                for j in 0..n {
                    let a = scores_a[i * n + j];
                    let b = scores_b[perm[i] * n + perm[j]];
                    assert!((a - b).abs() <= 1e-5, "score ({i},{j}): {a} vs {b}");
                }
            }
        }
    }

    fn permute_graph(g: &GraphInstance, perm: &[usize]) -> GraphInstance {
        let n = g.num_nodes;
        let dn = g.node_feats.cols;
        let mut nf = Features::zeros(n, dn);
        for v in 0..n {
            nf.row_mut(perm[v]).copy_from_slice(g.node_feats.row(v));
        }
        let mut edges: Vec<((u32, u32), Vec<f32>)> = g
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(s, d))| {
                (
                    (perm[s as usize] as u32, perm[d as usize] as u32),
                    g.edge_feats.row(i).to_vec(),
                )
            })
            .collect();
        edges.sort_by_key(|&((s, d), _)| (s, d));
        let de = g.edge_feats.cols;
        GraphInstance {
            num_nodes: n,
            edges: edges.iter().map(|&(e, _)| e).collect(),
            node_feats: nf,
            edge_feats: Features::new(
                edges.len(),
                de,
                edges.iter().flat_map(|(_, f)| f.clone()).collect(),
            ),
            graph_feats: g.graph_feats.clone(),
            label: g.label.clone(),
        }
    }

    #[test]
    fn forward_stays_finite_with_large_weights() {
        let cfg = ModelConfig {
            hidden_dim: 8,
            triplet_dim: 4,
            num_steps: 0,
        };
        let mut params = build_params(&cfg, 3, 17);
        let mut wrng = ChaCha8Rng::seed_from_u64(170);
        for e in params.entries_mut() {
            e.data
                .iter_mut()
                .for_each(|v| *v = wrng.random_range(-10.0..10.0));
        }
        let g = rand_graph(&mut ChaCha8Rng::seed_from_u64(40), 5, 3);
        let (nodes, scores) = forward_scores(&g, &params, &cfg, 2);
        assert!(nodes.iter().all(|v| v.is_finite()));
        assert!(scores.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn pointer_scores_single_node_softmax_is_one() {
        let cfg = ModelConfig {
            hidden_dim: 4,
            triplet_dim: 2,
            num_steps: 0,
        };
        let params = build_params(&cfg, 2, 23);
        let g = GraphInstance {
            num_nodes: 1,
            edges: vec![],
            node_feats: Features::new(1, 2, vec![0.2, 0.8]),
            edge_feats: Features::zeros(0, 1),
            graph_feats: vec![1.0],
            label: None,
        };
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        let scores =
            decode_pointer_scores(&mut tape, state.nodes, &topo, &params, &bound, "dec.ptr")
                .unwrap();
        assert_eq!(tape.shape(scores[0]), &[1, 1]);
    }

    #[test]
    fn mask_head_with_zero_weights_outputs_bias() {
        let cfg = ModelConfig {
            hidden_dim: 4,
            triplet_dim: 2,
            num_steps: 0,
        };
        let mut params = build_params(&cfg, 2, 29);
        params.get_mut("dec.mask.w").unwrap().data = vec![0.0; 4];
        params.get_mut("dec.mask.b").unwrap().data = vec![0.7];
        let g = rand_graph(&mut ChaCha8Rng::seed_from_u64(41), 4, 2);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        let logits =
            decode_node_mask(&mut tape, state.nodes, &params, &bound, "dec.mask").unwrap();
        assert!(tape.data(logits).iter().all(|&v| v == 0.7));
    }

    #[test]
    fn graph_head_matches_hand_computed_pool() {
        let cfg = ModelConfig {
            hidden_dim: 3,
            triplet_dim: 2,
            num_steps: 0,
        };
        let mut params = Params::new();
        let mut init = Initializer::new(55);
        init_encoder(&mut init, &mut params, "enc", 2, 1, 1, 3);
        init_graph_head(&mut init, &mut params, "dec.value", 3, 1);
        let g = rand_graph(&mut ChaCha8Rng::seed_from_u64(42), 4, 2);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let topo = topology(&b, false).unwrap();
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape).unwrap();
        let state = encode(&mut tape, &b, &topo, &params, &bound, "enc").unwrap();
        let out =
            decode_graph_head(&mut tape, state.nodes, &topo, &params, &bound, "dec.value")
                .unwrap();
        let h = tape.data(state.nodes);
        let mut mx = vec![f32::NEG_INFINITY; 3];
        let mut mn = vec![0.0f32; 3];
        for i in 0..4 {
            for c in 0..3 {
                mx[c] = mx[c].max(h[i * 3 + c]);
                mn[c] += h[i * 3 + c] / 4.0;
            }
        }
        let wmax = &params.get("dec.value.w_max").unwrap().data;
        let wmean = &params.get("dec.value.w_mean").unwrap().data;
        let bias = params.get("dec.value.b").unwrap().data[0];
        let mut want = bias;
        for c in 0..3 {
            want += mx[c] * wmax[c] + mn[c] * wmean[c];
        }
        assert!((tape.data(out)[0] - want).abs() < 1e-5);
    }

    #[test]
    fn triplet_cap_is_enforced() {
        let mut g = rand_graph(&mut ChaCha8Rng::seed_from_u64(50), 5, 3);
        g.num_nodes = TRIPLET_NODE_CAP + 1;
        g.node_feats = Features::zeros(g.num_nodes, 3);
        g.edges.clear();
        g.edge_feats = Features::zeros(0, 1);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        assert!(matches!(
            topology(&b, true),
            Err(ModelError::TripletCap { .. })
        ));
        assert!(topology(&b, false).is_ok());
    }
}
