//! Hypergraphs built from graph topology (K-hop balls) or from node
//! embeddings (K nearest neighbours), stored as primal and dual CSR indexes.
//!
//! Row `i`, column `j` of the incidence matrix is 1 exactly when node `i`
//! belongs to hyperedge `j`. Both constructions emit one hyperedge per center
//! node, and the center is always a member.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{BallMode, DirectedGraph};

pub const DEFAULT_K_HOP: usize = 3;
pub const DEFAULT_K_NN: usize = 10;

/// Largest `n * m` that [`Hypergraph::incidence_dense`] will materialize.
pub const DENSE_INCIDENCE_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edge_ptr: Vec<usize>,
    edge_members: Vec<usize>,
    node_ptr: Vec<usize>,
    node_edges: Vec<usize>,
}

impl Hypergraph {
    /// Builds from member lists. Members are sorted and deduplicated; every
    /// hyperedge must be non-empty and in range.
    pub fn from_edges(n: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut edge_ptr = Vec::with_capacity(edges.len() + 1);
        let mut edge_members = Vec::new();
        edge_ptr.push(0);
        for (j, mut e) in edges.into_iter().enumerate() {
            e.sort_unstable();
            e.dedup();
            if e.is_empty() {
                return Err(Error::invalid(format!("hyperedge {j} is empty")));
            }
            if let Some(&bad) = e.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidNode { node: bad, n });
            }
            edge_members.extend_from_slice(&e);
            edge_ptr.push(edge_members.len());
        }
        Ok(Self::with_primal(n, edge_ptr, edge_members))
    }

    fn with_primal(n: usize, edge_ptr: Vec<usize>, edge_members: Vec<usize>) -> Self {
        let m = edge_ptr.len() - 1;
        let mut counts = vec![0usize; n + 1];
        for &v in &edge_members {
            counts[v + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let node_ptr = counts.clone();
        let mut fill = counts;
        let mut node_edges = vec![0; edge_members.len()];
        // hyperedges visited in order, so each node's list comes out sorted
        for j in 0..m {
            for &v in &edge_members[edge_ptr[j]..edge_ptr[j + 1]] {
                node_edges[fill[v]] = j;
                fill[v] += 1;
            }
        }
        Hypergraph { n, edge_ptr, edge_members, node_ptr, node_edges }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_ptr.len() - 1
    }

    /// Total number of (node, hyperedge) memberships.
    pub fn incidence_count(&self) -> usize {
        self.edge_members.len()
    }

    /// Members of hyperedge `j`, ascending.
    pub fn edge(&self, j: usize) -> &[usize] {
        &self.edge_members[self.edge_ptr[j]..self.edge_ptr[j + 1]]
    }

    /// Hyperedges containing node `i`, ascending.
    pub fn memberships(&self, i: usize) -> &[usize] {
        &self.node_edges[self.node_ptr[i]..self.node_ptr[i + 1]]
    }

    /// Primal CSR: `(offsets, members)`, one group per hyperedge.
    pub fn edge_csr(&self) -> (&[usize], &[usize]) {
        (&self.edge_ptr, &self.edge_members)
    }

    /// Dual CSR: `(offsets, hyperedges)`, one group per node.
    pub fn node_csr(&self) -> (&[usize], &[usize]) {
        (&self.node_ptr, &self.node_edges)
    }

    pub fn edges(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.edge_count()).map(move |j| self.edge(j))
    }

    /// Dense `n x m` incidence matrix, row-major.
    pub fn incidence_dense(&self) -> Result<Vec<Vec<bool>>> {
        let m = self.edge_count();
        if self.n.saturating_mul(m) > DENSE_INCIDENCE_LIMIT {
            return Err(Error::invalid(format!("dense incidence {}x{m} exceeds the size limit", self.n)));
        }
        let mut a = vec![vec![false; m]; self.n];
        for j in 0..m {
            for &i in self.edge(j) {
                a[i][j] = true;
            }
        }
        Ok(a)
    }

    /// One line per hyperedge with its member ids separated by spaces.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for e in self.edges() {
            let ids: Vec<String> = e.iter().map(usize::to_string).collect();
            writeln!(w, "{}", ids.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One hyperedge per node: the `k`-hop ball around it.
pub fn build_khop(g: &DirectedGraph, k: usize, mode: BallMode) -> Result<Hypergraph> {
    if k == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    if g.node_count() != g.n() {
        return Err(Error::invalid("hypergraph construction needs a compacted graph"));
    }
    let n = g.n();
    let balls: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![usize::MAX; n],
            |dist, v| {
                let mut ball = Vec::new();
                g.k_ball_into(v, k, mode, dist, &mut ball);
                ball
            },
        )
        .collect();
    let mut edge_ptr = Vec::with_capacity(n + 1);
    edge_ptr.push(0);
    let mut members = Vec::with_capacity(balls.iter().map(Vec::len).sum());
    for b in balls {
        members.extend(b);
        edge_ptr.push(members.len());
    }
    Ok(Hypergraph::with_primal(n, edge_ptr, members))
}

/// One hyperedge per node: the node plus its `k` nearest other nodes by
/// Euclidean distance between rows of `embeddings` (`n x d`, row-major).
/// Distance ties go to the lower id; `k >= n` is clamped to `n - 1`.
pub fn build_knn(embeddings: &[f64], n: usize, d: usize, k: usize) -> Result<Hypergraph> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("k-NN needs k >= 1 and d >= 1"));
    }
    if embeddings.len() != n * d {
        return Err(Error::invalid(format!("embedding buffer has {} values, expected {n}x{d}", embeddings.len())));
    }
    let k = if k >= n {
        if n > 1 {
            log::warn!("k-NN with k={k} on {n} nodes; clamping to {}", n - 1);
        }
        n.saturating_sub(1)
    } else {
        k
    };
    let row = |i: usize| &embeddings[i * d..(i + 1) * d];
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let center = row(j);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&i| i != j)
                .map(|i| (row(i).iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k, by_dist);
                cand.truncate(k);
            }
            let mut e: Vec<usize> = cand.into_iter().map(|(_, i)| i).collect();
            e.push(j);
            e.sort_unstable();
            e
        })
        .collect();
    Hypergraph::from_edges(n, lists)
}
