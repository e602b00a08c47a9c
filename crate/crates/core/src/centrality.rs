//! Shortest-path betweenness on unweighted digraphs.
//!
//! Values are raw pair-dependency sums over ordered pairs `s != v != t`,
//! without the `(n-1)(n-2)` normalization. Removed nodes score zero.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Per-node betweenness.
#[derive(Debug, Clone, PartialEq)]
pub struct BcVector(pub Vec<f64>);

impl BcVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Min-max scaling to `[0, 1]`; a constant vector maps to all zeros.
    /// Returns the scaled values and the `(min, max)` needed to invert it.
    pub fn min_max_normalized(&self) -> (Vec<f64>, (f64, f64)) {
        let min = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if self.0.is_empty() || max <= min {
            return (vec![0.0; self.0.len()], (min, max));
        }
        (self.0.iter().map(|&x| (x - min) / (max - min)).collect(), (min, max))
    }
}

/// Scratch buffers for one single-source pass.
struct Workspace {
    sigma: Vec<f64>,
    dist: Vec<usize>,
    delta: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            sigma: vec![0.0; n],
            dist: vec![usize::MAX; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    /// BFS from `s` followed by dependency accumulation into `bc`.
    fn accumulate(&mut self, g: &DirectedGraph, s: usize, bc: &mut [f64]) {
        let Workspace { sigma, dist, delta, order, queue } = self;
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.out_neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        // predecessors of w are its in-neighbors one level closer to s
        for &w in order.iter().rev() {
            let coeff = (1.0 + delta[w]) / sigma[w];
            for &v in g.in_neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] * coeff;
                }
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
        for &v in order.iter() {
            sigma[v] = 0.0;
            dist[v] = usize::MAX;
            delta[v] = 0.0;
        }
    }
}

/// Brandes' algorithm, sources processed in ascending order.
pub fn brandes_bc(g: &DirectedGraph) -> BcVector {
    let n = g.n();
    let mut bc = vec![0.0; n];
    let mut ws = Workspace::new(n);
    for s in g.mask().alive_ids() {
        ws.accumulate(g, s, &mut bc);
    }
    BcVector(bc)
}

const SOURCE_BLOCK: usize = 32;

/// Source-parallel Brandes. Sources are split into fixed-size blocks whose
/// partial sums are added in block order, so the result does not depend on
/// the thread count.
pub fn brandes_bc_par(g: &DirectedGraph) -> BcVector {
    let n = g.n();
    let sources: Vec<usize> = g.mask().alive_ids().collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_BLOCK)
        .map(|block| {
            let mut ws = Workspace::new(n);
            let mut bc = vec![0.0; n];
            for &s in block {
                ws.accumulate(g, s, &mut bc);
            }
            bc
        })
        .collect();
    let mut bc = vec![0.0; n];
    for p in partials {
        for (acc, x) in bc.iter_mut().zip(p) {
            *acc += x;
        }
    }
    BcVector(bc)
}

/// Largest graph [`naive_bc`] accepts.
pub const NAIVE_BC_MAX_NODES: usize = 128;

/// Direct evaluation of the pair-sum definition from all-pairs BFS distances
/// and path counts. O(n^3); intended as a reference.
pub fn naive_bc(g: &DirectedGraph) -> Result<BcVector> {
    let n = g.n();
    if n > NAIVE_BC_MAX_NODES {
        return Err(Error::invalid(format!("naive betweenness is limited to {NAIVE_BC_MAX_NODES} nodes, got {n}")));
    }
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut count = vec![vec![0.0f64; n]; n];
    for s in g.mask().alive_ids() {
        let (d, c) = (&mut dist[s], &mut count[s]);
        d[s] = 0;
        c[s] = 1.0;
        let mut frontier = vec![s];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in g.out_neighbors(v) {
                    if d[w] == usize::MAX {
                        d[w] = d[v] + 1;
                        next.push(w);
                    }
                    if d[w] == d[v] + 1 {
                        c[w] += c[v];
                    }
                }
            }
            frontier = next;
        }
    }
    let mut bc = vec![0.0; n];
    for v in 0..n {
        for s in 0..n {
            if s == v || dist[s][v] == usize::MAX {
                continue;
            }
            for t in 0..n {
                if t == v || t == s || dist[s][t] == usize::MAX || dist[v][t] == usize::MAX {
                    continue;
                }
                if dist[s][v] + dist[v][t] == dist[s][t] {
                    bc[v] += count[s][v] * count[v][t] / count[s][t];
                }
            }
        }
    }
    Ok(BcVector(bc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fixtures() {
        assert_eq!(brandes_bc(&DirectedGraph::new(4)).0, vec![0.0; 4]);
        let chain = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(brandes_bc(&chain).0, vec![0.0, 1.0, 0.0]);
        assert_eq!(naive_bc(&chain).unwrap().0, vec![0.0, 1.0, 0.0]);
        let tri = DirectedGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(naive_bc(&tri).unwrap().0, vec![1.0, 1.0, 1.0]);
        assert_eq!(brandes_bc(&tri).0, vec![1.0, 1.0, 1.0]);
        let pair = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(naive_bc(&pair).unwrap().0, vec![0.0, 0.0]);
    }

    #[test]
    fn split_paths_share_credit() {
        // 0 -> {1,2} -> 3: each middle node carries half of the 0->3 pair
        let g = DirectedGraph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(brandes_bc(&g).0, vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn removed_nodes_are_ignored() {
        let mut g = DirectedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        g.remove_node(3).unwrap();
        assert_eq!(brandes_bc(&g).0, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn naive_guard() {
        assert!(naive_bc(&DirectedGraph::new(NAIVE_BC_MAX_NODES + 1)).is_err());
    }

    #[test]
    fn normalization() {
        let (v, (lo, hi)) = BcVector(vec![2.0, 4.0, 3.0]).min_max_normalized();
        assert_eq!(v, vec![0.0, 1.0, 0.5]);
        assert_eq!((lo, hi), (2.0, 4.0));
        assert_eq!(BcVector(vec![1.0; 3]).min_max_normalized().0, vec![0.0; 3]);
    }
}
