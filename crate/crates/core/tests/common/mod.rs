#![allow(dead_code)]

pub mod grad_cases;

use ncrhok::graph::DirectedGraph;
use ncrhok::tensor::{ParamStore, Tape, Tensor, Var};
use ncrhok::{Result, SeededRng};
use rand::Rng;

pub const FD_EPS: f64 = 1e-5;

/// Entries whose analytic and numeric derivatives are both below this are
/// compared absolutely instead of relatively.
pub const FD_FLOOR: f64 = 1e-6;

pub fn random_tensor(rng: &mut SeededRng, shape: Vec<usize>) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Redraws every parameter uniformly in [-1, 1). Zero-initialized biases
/// meeting all-zero input rows put ReLU exactly on its kink, where central
/// differences are meaningless.
pub fn randomize(store: &mut ParamStore, rng: &mut SeededRng) {
    for id in store.ids().collect::<Vec<_>>() {
        store.get_mut(id).data_mut().iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    }
}

/// Largest elementwise `|a - n| / max(|a|, |n|, FD_FLOOR)` between the
/// tape's gradient and central differences, over every trainable entry.
pub fn grad_check<F>(store: &ParamStore, loss: F) -> f64
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let eval = |s: &ParamStore| {
        let mut tape = Tape::new(s);
        let l = loss(&mut tape).unwrap();
        tape.value(l).data()[0]
    };
    let grads = {
        let mut tape = Tape::new(store);
        let l = loss(&mut tape).unwrap();
        tape.backward(l).unwrap()
    };
    let mut worst = 0.0f64;
    let mut s = store.clone();
    for id in store.ids() {
        if !store.is_trainable(id) {
            continue;
        }
        for k in 0..store.get(id).len() {
            let x = store.get(id).data()[k];
            s.get_mut(id).data_mut()[k] = x + FD_EPS;
            let up = eval(&s);
            s.get_mut(id).data_mut()[k] = x - FD_EPS;
            let down = eval(&s);
            s.get_mut(id).data_mut()[k] = x;
            let numeric = (up - down) / (2.0 * FD_EPS);
            let analytic = grads.get(id).map_or(0.0, |g| g[k]);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Digraph with each ordered pair present independently with probability `p`.
pub fn random_digraph(rng: &mut SeededRng, n: usize, p: f64) -> DirectedGraph {
    let mut g = DirectedGraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// Maximum matching size by exhaustive search over edge subsets, branching
/// on each edge (take it if both endpoints are free, or skip it).
pub fn brute_force_matching(g: &DirectedGraph) -> usize {
    fn go(edges: &[(usize, usize)], i: usize, tail: &mut [bool], head: &mut [bool], size: usize, best: &mut usize) {
        if size + (edges.len() - i) <= *best {
            return;
        }
        if i == edges.len() {
            *best = size;
            return;
        }
        let (u, v) = edges[i];
        if !tail[u] && !head[v] {
            tail[u] = true;
            head[v] = true;
            go(edges, i + 1, tail, head, size + 1, best);
            tail[u] = false;
            head[v] = false;
        }
        go(edges, i + 1, tail, head, size, best);
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut best = 0;
    go(&edges, 0, &mut vec![false; g.n()], &mut vec![false; g.n()], 0, &mut best);
    best
}
