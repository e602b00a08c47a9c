//! Finite-difference cases shared by the gradient tests and the acceptance
//! summary. Each case reports its worst relative error.

use std::sync::Arc;

use super::{grad_check, random_digraph, random_tensor, randomize};
use ncrhok::graph::BallMode;
use ncrhok::hypergraph::build_khop;
use ncrhok::models::{
    BcGat, BcGatConfig, Builder, DualHgnnLayer, GatLayer, HypergraphIndex, NcrHok, NcrHokConfig, NeighborMode,
    Neighborhood,
};
use ncrhok::tensor::{ParamStore, Tape, Tensor, Var};
use ncrhok::{seeded_rng, Result, SeededRng};

pub type Case = (String, f64);

/// `sum(out * R)` for a fixed random `R`, so every output entry matters.
fn project(tape: &mut Tape<'_>, out: Var, seed: u64) -> Result<Var> {
    let shape = tape.value(out).shape().to_vec();
    let r = tape.constant(random_tensor(&mut seeded_rng(seed), shape));
    let p = tape.mul(out, r)?;
    Ok(tape.sum(p))
}

fn store_with(tensors: &[(&str, Tensor)]) -> ParamStore {
    let mut s = ParamStore::new();
    for (name, t) in tensors {
        s.insert(*name, t.clone()).unwrap();
    }
    s
}

fn init<'a>(store: &'a mut ParamStore, rng: &'a mut SeededRng) -> Builder<'a> {
    Builder::Init { store, rng }
}

fn push<F>(out: &mut Vec<Case>, name: String, store: &ParamStore, f: F)
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    out.push((name, grad_check(store, f)));
}

/// Every tape op on three randomized shape triples.
pub fn ops() -> Vec<Case> {
    let mut out = Vec::new();
    let mut rng = seeded_rng(1);
    for trial in 0..3 {
        let (m, k, n) = (2 + trial, 3 + trial, 4 + 2 * trial);
        let s = store_with(&[
            ("a", random_tensor(&mut rng, vec![m, k])),
            ("b", random_tensor(&mut rng, vec![k, n])),
            ("c", random_tensor(&mut rng, vec![m, k])),
            ("r", random_tensor(&mut rng, vec![1, k])),
        ]);
        let id = |n: &str| s.id(n).unwrap();
        let (a, b, c, r) = (id("a"), id("b"), id("c"), id("r"));
        let tag = |op: &str| format!("{op} {m}x{k}");
        push(&mut out, tag("matmul"), &s, |t| {
            let (x, y) = (t.param(a), t.param(b));
            let z = t.matmul(x, y)?;
            project(t, z, 10)
        });
        push(&mut out, tag("add"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            let z = t.add(x, y)?;
            project(t, z, 11)
        });
        push(&mut out, tag("sub"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            let z = t.sub(x, y)?;
            project(t, z, 12)
        });
        push(&mut out, tag("mul"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            let z = t.mul(x, y)?;
            project(t, z, 13)
        });
        push(&mut out, tag("scale"), &s, |t| {
            let x = t.param(a);
            let z = t.scale(x, -2.5);
            project(t, z, 14)
        });
        push(&mut out, tag("add_row"), &s, |t| {
            let (x, y) = (t.param(a), t.param(r));
            let z = t.add_row(x, y)?;
            project(t, z, 15)
        });
        push(&mut out, tag("relu"), &s, |t| {
            let x = t.param(a);
            let z = t.relu(x);
            project(t, z, 16)
        });
        push(&mut out, tag("leaky_relu"), &s, |t| {
            let x = t.param(a);
            let z = t.leaky_relu(x, 0.2);
            project(t, z, 17)
        });
        push(&mut out, tag("sigmoid"), &s, |t| {
            let x = t.param(a);
            let z = t.sigmoid(x);
            project(t, z, 18)
        });
        push(&mut out, tag("concat_cols"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            let z = t.concat_cols(&[x, y, x])?;
            project(t, z, 19)
        });
        push(&mut out, tag("concat_rows"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            let z = t.concat_rows(&[y, x])?;
            project(t, z, 20)
        });
        push(&mut out, tag("reshape"), &s, |t| {
            let x = t.param(a);
            let z = t.reshape(x, vec![1, m * k])?;
            project(t, z, 21)
        });
        push(&mut out, tag("slice_rows"), &s, |t| {
            let x = t.param(a);
            let z = t.slice_rows(x, 1, m - 1)?;
            project(t, z, 22)
        });
        push(&mut out, tag("gather_rows"), &s, |t| {
            let x = t.param(a);
            let z = t.gather_rows(x, Arc::from(vec![1, 0, 1, m - 1]))?;
            project(t, z, 23)
        });
        push(&mut out, tag("sum and mean"), &s, |t| {
            let x = t.param(a);
            let y = t.mul(x, x)?;
            let z = t.mean(y);
            let w = t.sum(x);
            t.mul(z, w)
        });
        push(&mut out, tag("smooth_l1"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            let x = t.scale(x, 3.0);
            t.smooth_l1(x, y)
        });
        push(&mut out, tag("mse"), &s, |t| {
            let (x, y) = (t.param(a), t.param(c));
            t.mse(x, y)
        });
    }

    let offsets: Arc<[usize]> = Arc::from(vec![0, 1, 4, 6, 9]);
    let index: Arc<[usize]> = Arc::from(vec![2, 0, 1, 2, 4, 3, 0, 0, 4]);
    let s = store_with(&[
        ("scores", random_tensor(&mut rng, vec![9, 1])),
        ("values", random_tensor(&mut rng, vec![5, 3])),
    ]);
    let (sc, va) = (s.id("scores").unwrap(), s.id("values").unwrap());
    push(&mut out, "segment_softmax".into(), &s, |t| {
        let x = t.param(sc);
        let z = t.segment_softmax(x, offsets.clone())?;
        project(t, z, 30)
    });
    push(&mut out, "segment_weighted_sum".into(), &s, |t| {
        let (w, v) = (t.param(sc), t.param(va));
        let z = t.segment_weighted_sum(w, v, index.clone(), offsets.clone())?;
        project(t, z, 31)
    });
    push(&mut out, "segment_softmax into weighted sum".into(), &s, |t| {
        let (w, v) = (t.param(sc), t.param(va));
        let a = t.segment_softmax(w, offsets.clone())?;
        let z = t.segment_weighted_sum(a, v, index.clone(), offsets.clone())?;
        project(t, z, 32)
    });
    out
}

/// Two stacked graph attention layers and two stacked dual hypergraph
/// layers on random graphs with up to 12 nodes.
pub fn layers() -> Vec<Case> {
    let mut out = Vec::new();
    let mut rng = seeded_rng(3);
    for trial in 0..3u64 {
        let n = 6 + trial as usize * 3;
        let g = random_digraph(&mut seeded_rng(40 + trial), n, 0.3);
        let mut store = ParamStore::new();
        let heads = 1 + trial as usize;
        let l1 = GatLayer::build(&mut init(&mut store, &mut rng), "g1", 3, 4, heads).unwrap();
        let l2 = GatLayer::build(&mut init(&mut store, &mut rng), "g2", 4 * heads, 2, 1).unwrap();
        store.insert("h", random_tensor(&mut rng, vec![n, 3])).unwrap();
        randomize(&mut store, &mut rng);
        let h_id = store.id("h").unwrap();
        for mode in [NeighborMode::In, NeighborMode::Symmetric] {
            let nb = Neighborhood::new(&g, mode, trial == 1);
            push(&mut out, format!("attention x2, {heads} heads, {mode}, n={n}"), &store, |t| {
                let h = t.param(h_id);
                let a = l1.forward(t, h, &nb)?.out;
                let b = l2.forward(t, a, &nb)?.out;
                project(t, b, 50 + trial)
            });
        }
    }
    for trial in 0..3u64 {
        let n = 5 + trial as usize * 3;
        let g = random_digraph(&mut seeded_rng(60 + trial), n, 0.25);
        let hg = build_khop(&g, 1 + trial as usize % 2, BallMode::Undirected).unwrap();
        let idx = HypergraphIndex::new(&hg);
        let mut store = ParamStore::new();
        let l1 = DualHgnnLayer::build(&mut init(&mut store, &mut rng), "a", 3).unwrap();
        let l2 = DualHgnnLayer::build(&mut init(&mut store, &mut rng), "b", 3).unwrap();
        store.insert("h", random_tensor(&mut rng, vec![n, 3])).unwrap();
        randomize(&mut store, &mut rng);
        let h_id = store.id("h").unwrap();
        push(&mut out, format!("hyperedge aggregation, n={n}"), &store, |t| {
            let h = t.param(h_id);
            let (e, _) = l1.edge_agg(t, h, &idx)?;
            project(t, e, 70)
        });
        push(&mut out, format!("dual hypergraph x2, n={n}"), &store, |t| {
            let h = t.param(h_id);
            let a = l1.forward(t, h, &idx)?.nodes;
            let b = l2.forward(t, a, &idx)?.nodes;
            project(t, b, 71 + trial)
        });
    }
    out
}

/// The surrogate and the full curve model on small graphs.
pub fn models() -> Vec<Case> {
    let mut out = Vec::new();
    let g = random_digraph(&mut seeded_rng(80), 7, 0.3);
    let cfg = BcGatConfig { heads: 2, hidden: 3, ..BcGatConfig::default() };
    let (mut store, m) = BcGat::init(cfg, 5).unwrap();
    randomize(&mut store, &mut seeded_rng(5));
    let nb = m.neighborhood(&g);
    let x = BcGat::input(&g);
    push(&mut out, "surrogate".into(), &store, |t| {
        let x = t.constant(x.clone());
        let y = m.forward(t, x, &nb)?;
        project(t, y, 81)
    });

    let n = 8;
    let g = random_digraph(&mut seeded_rng(90), n, 0.3);
    let cfg = NcrHokConfig { d_feat: 2, d_model: 3, mlp_hidden: 4, k_hop: 1, k_nn: 2, use_bc: false, ..NcrHokConfig::new(n) };
    let (mut store, m) = NcrHok::init(cfg, None, 6).unwrap();
    randomize(&mut store, &mut seeded_rng(6));
    let input = m.prepare(&store, &g).unwrap();
    let target = Tensor::matrix(1, n - 1, (0..n - 1).map(|i| (i + 1) as f64 / n as f64).collect()).unwrap();
    push(&mut out, "curve model with smooth-L1 loss".into(), &store, |t| {
        let p = m.forward(t, &[&input])?;
        let y = t.constant(target.clone());
        t.smooth_l1(p, y)
    });
    out
}

/// Largest `|sum - 1|` over every attention group of every family on random
/// inputs, and whether zeroed context vectors gave exactly uniform weights.
pub fn attention_groups() -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut uniform = true;
    for seed in 0..5u64 {
        let mut rng = seeded_rng(200 + seed);
        let g = random_digraph(&mut rng, 9 + seed as usize, 0.3);
        let n = g.n();
        let mut store = ParamStore::new();
        let gat = GatLayer::build(&mut init(&mut store, &mut rng), "g", 2, 3, 1).unwrap();
        let hgnn = DualHgnnLayer::build(&mut init(&mut store, &mut rng), "h", 2).unwrap();
        let bc_cfg = BcGatConfig { heads: 4, hidden: 3, ..BcGatConfig::default() };
        let bc = BcGat::build(&mut init(&mut store, &mut rng), "bc.", bc_cfg).unwrap();
        randomize(&mut store, &mut rng);
        let hg = build_khop(&g, 2, BallMode::Undirected).unwrap();
        for zero in [false, true] {
            let mut store = store.clone();
            if zero {
                for id in store.ids().collect::<Vec<_>>() {
                    let name = store.name(id).to_string();
                    if name.ends_with(".a") || name.ends_with(".a_src") || name.ends_with(".a_dst") {
                        store.get_mut(id).data_mut().fill(0.0);
                    }
                }
            }
            let nb = Neighborhood::new(&g, NeighborMode::In, false);
            let bc_nb = bc.neighborhood(&g);
            let idx = HypergraphIndex::new(&hg);
            let mut tape = Tape::new(&store);
            let h = tape.constant(random_tensor(&mut rng, vec![n, 2]));
            let x = tape.constant(BcGat::input(&g));
            let mut groups: Vec<(Var, Arc<[usize]>)> = Vec::new();
            let out = gat.forward(&mut tape, h, &nb).unwrap();
            groups.push((out.alphas[0], nb.offsets.clone()));
            let hout = hgnn.forward(&mut tape, h, &idx).unwrap();
            groups.push((hout.edge_alpha, idx.edge_ptr.clone()));
            groups.push((hout.node_alpha, idx.node_ptr.clone()));
            let first = bc.l1.forward(&mut tape, x, &bc_nb).unwrap();
            for &a in &first.alphas {
                groups.push((a, bc_nb.offsets.clone()));
            }
            for (alpha, offsets) in groups {
                let a = tape.value(alpha).data();
                for w in offsets.windows(2) {
                    let group = &a[w[0]..w[1]];
                    worst = worst.max((group.iter().sum::<f64>() - 1.0).abs());
                    if zero {
                        uniform &= group.iter().all(|&x| x == 1.0 / group.len() as f64);
                    }
                }
            }
        }
    }
    (worst, uniform)
}

/// `d(x + x)/dx` at an arbitrary point.
pub fn shared_subexpression_gradient() -> f64 {
    let s = store_with(&[("x", Tensor::scalar(1.5))]);
    let id = s.id("x").unwrap();
    let mut tape = Tape::new(&s);
    let x = tape.param(id);
    let y = tape.add(x, x).unwrap();
    tape.backward(y).unwrap().get(id).unwrap()[0]
}
