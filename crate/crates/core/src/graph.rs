//! Simple directed graphs with soft node removal.
//!
//! Nodes are identified by `0..n`. Removing a node keeps its slot (so the
//! surviving nodes keep their identities during an attack) and marks it dead
//! in a [`NodeMask`]; [`DirectedGraph::compact`] relabels densely when a graph
//! has to leave the process, e.g. in [`save_edge_list`].

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Alive flags for every node slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMask {
    alive: Vec<bool>,
    alive_count: usize,
}

impl NodeMask {
    pub fn all_alive(n: usize) -> Self {
        NodeMask { alive: vec![true; n], alive_count: n }
    }

    #[inline]
    pub fn is_alive(&self, v: usize) -> bool {
        self.alive.get(v).copied().unwrap_or(false)
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    fn kill(&mut self, v: usize) {
        if self.alive[v] {
            self.alive[v] = false;
            self.alive_count -= 1;
        }
    }

    /// Ids of the alive nodes, ascending.
    pub fn alive_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.alive.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i)
    }
}

/// Which edges a BFS ball may follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallMode {
    /// Edge direction is ignored.
    #[default]
    Undirected,
    /// Only `u -> v` steps are followed.
    OutReach,
}

/// A simple digraph (no self-loops, no parallel edges) over node slots `0..n`.
///
/// Adjacency lists are kept sorted so iteration order, and everything derived
/// from it, is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    mask: NodeMask,
    edge_count: usize,
}

impl DirectedGraph {
    /// Edgeless graph with `n` nodes.
    pub fn new(n: usize) -> Self {
        DirectedGraph {
            out_adj: vec![Vec::new(); n],
            in_adj: vec![Vec::new(); n],
            mask: NodeMask::all_alive(n),
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge iterator, rejecting self-loops, duplicates
    /// and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = DirectedGraph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Number of node slots, alive or not.
    pub fn n(&self) -> usize {
        self.out_adj.len()
    }

    /// Number of alive nodes.
    pub fn node_count(&self) -> usize {
        self.mask.alive_count()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn mask(&self) -> &NodeMask {
        &self.mask
    }

    #[inline]
    pub fn is_alive(&self, v: usize) -> bool {
        self.mask.is_alive(v)
    }

    #[inline]
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    #[inline]
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.out_adj[u].binary_search(&v).is_ok()
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::InvalidNode { node: v, n: self.n() });
        }
        if !self.mask.is_alive(v) {
            return Err(Error::RemovedNode(v));
        }
        Ok(())
    }

    /// Inserts `u -> v`.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::invalid(format!("self-loop on node {u}")));
        }
        match self.out_adj[u].binary_search(&v) {
            Ok(_) => Err(Error::invalid(format!("duplicate edge {u}->{v}"))),
            Err(pos) => {
                self.out_adj[u].insert(pos, v);
                let pos = self.in_adj[v].binary_search(&u).unwrap_err();
                self.in_adj[v].insert(pos, u);
                self.edge_count += 1;
                Ok(())
            }
        }
    }

    /// Removes `u -> v`; returns whether it existed.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if u >= self.n() || v >= self.n() {
            return false;
        }
        match self.out_adj[u].binary_search(&v) {
            Ok(pos) => {
                self.out_adj[u].remove(pos);
                let pos = self.in_adj[v].binary_search(&u).expect("in/out index out of sync");
                self.in_adj[v].remove(pos);
                self.edge_count -= 1;
                true
            }
            Err(_) => false,
        }
    }

    /// Deletes `v` and all incident edges. Other nodes keep their ids.
    pub fn remove_node(&mut self, v: usize) -> Result<()> {
        self.check_node(v)?;
        let outs = std::mem::take(&mut self.out_adj[v]);
        for &w in &outs {
            let list = &mut self.in_adj[w];
            let pos = list.binary_search(&v).expect("in/out index out of sync");
            list.remove(pos);
        }
        let ins = std::mem::take(&mut self.in_adj[v]);
        for &u in &ins {
            let list = &mut self.out_adj[u];
            let pos = list.binary_search(&v).expect("in/out index out of sync");
            list.remove(pos);
        }
        self.edge_count -= outs.len() + ins.len();
        self.mask.kill(v);
        Ok(())
    }

    /// Non-mutating form of [`remove_node`](Self::remove_node).
    pub fn without_node(&self, v: usize) -> Result<Self> {
        let mut g = self.clone();
        g.remove_node(v)?;
        Ok(g)
    }

    /// All edges in `(src, dst)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj.iter().enumerate().flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// Per-node `(in_degree, out_degree)`; removed nodes report zero.
    pub fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let ins = self.in_adj.iter().map(Vec::len).collect();
        let outs = self.out_adj.iter().map(Vec::len).collect();
        (ins, outs)
    }

    #[inline]
    pub fn total_degree(&self, v: usize) -> usize {
        self.in_adj[v].len() + self.out_adj[v].len()
    }

    /// Nodes within `k` hops of `v` (including `v`), ascending.
    pub fn k_ball(&self, v: usize, k: usize, mode: BallMode) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut ball = Vec::new();
        self.k_ball_into(v, k, mode, &mut dist, &mut ball);
        ball
    }

    /// Same as [`k_ball`](Self::k_ball) with caller-provided scratch. `dist`
    /// must be all `usize::MAX` on entry and is restored on exit.
    pub(crate) fn k_ball_into(
        &self,
        v: usize,
        k: usize,
        mode: BallMode,
        dist: &mut [usize],
        ball: &mut Vec<usize>,
    ) {
        ball.clear();
        if !self.is_alive(v) {
            return;
        }
        let mut queue = VecDeque::new();
        dist[v] = 0;
        ball.push(v);
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            if d >= k {
                continue;
            }
            let ins: &[usize] = match mode {
                BallMode::Undirected => &self.in_adj[u],
                BallMode::OutReach => &[],
            };
            for &w in self.out_adj[u].iter().chain(ins) {
                if dist[w] == usize::MAX {
                    dist[w] = d + 1;
                    ball.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &u in ball.iter() {
            dist[u] = usize::MAX;
        }
        ball.sort_unstable();
    }

    /// Whether every edge has its reverse.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(u, v)| self.has_edge(v, u))
    }

    /// Dense relabeling of the alive nodes preserving relative order.
    /// Returns the new graph and, for each new id, its old id.
    pub fn compact(&self) -> (DirectedGraph, Vec<usize>) {
        let old_ids: Vec<usize> = self.mask.alive_ids().collect();
        let mut new_id = vec![usize::MAX; self.n()];
        for (i, &o) in old_ids.iter().enumerate() {
            new_id[o] = i;
        }
        let mut g = DirectedGraph::new(old_ids.len());
        for (i, &o) in old_ids.iter().enumerate() {
            g.out_adj[i] = self.out_adj[o].iter().map(|&w| new_id[w]).collect();
            g.in_adj[i] = self.in_adj[o].iter().map(|&w| new_id[w]).collect();
        }
        g.edge_count = self.edge_count;
        (g, old_ids)
    }

    /// Relabels node `i` as `perm[i]`. `perm` must be a permutation of `0..n`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::invalid("permutation length differs from node count"));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        let mut g = DirectedGraph::from_edges(self.n(), self.edges().map(|(u, v)| (perm[u], perm[v])))?;
        for v in 0..self.n() {
            if !self.is_alive(v) {
                g.mask.kill(perm[v]);
            }
        }
        Ok(g)
    }

    /// Removes uniformly chosen alive nodes until `target_n` remain, then
    /// compacts.
    pub fn resize_random<R: Rng + ?Sized>(&self, target_n: usize, rng: &mut R) -> Result<Self> {
        if target_n == 0 {
            return Err(Error::invalid("target node count must be positive"));
        }
        if target_n > self.node_count() {
            return Err(Error::invalid(format!(
                "target node count {target_n} exceeds {} alive nodes",
                self.node_count()
            )));
        }
        let mut ids: Vec<usize> = self.mask.alive_ids().collect();
        ids.shuffle(rng);
        let mut g = self.clone();
        for &v in &ids[..self.node_count() - target_n] {
            g.remove_node(v)?;
        }
        Ok(g.compact().0)
    }
}

/// Parses the edge-list text format: optional `#` comments, a node-count line,
/// then one `src dst` pair per line (tab or spaces).
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<DirectedGraph> {
    let mut graph: Option<DirectedGraph> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        match graph.as_mut() {
            None => {
                let n: usize = fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::parse(lineno, format!("expected node count, got {trimmed:?}")))?;
                if fields.next().is_some() {
                    return Err(Error::parse(lineno, "node count line has extra fields"));
                }
                graph = Some(DirectedGraph::new(n));
            }
            Some(g) => {
                let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                    return Err(Error::parse(lineno, format!("expected `src dst`, got {trimmed:?}")));
                };
                let parse = |s: &str| -> Result<usize> {
                    s.parse().map_err(|_| Error::parse(lineno, format!("bad node id {s:?}")))
                };
                let (u, v) = (parse(a)?, parse(b)?);
                if u >= g.n() || v >= g.n() {
                    return Err(Error::parse(lineno, format!("node id out of range for n={}", g.n())));
                }
                if g.has_edge(u, v) {
                    return Err(Error::parse(lineno, format!("duplicate edge {u}->{v}")));
                }
                g.add_edge(u, v).map_err(|e| Error::parse(lineno, e.to_string()))?;
            }
        }
    }
    graph.ok_or_else(|| Error::parse(0, "missing node count line"))
}

/// Writes `g` (compacted) in the edge-list text format.
pub fn write_edge_list<W: Write>(g: &DirectedGraph, mut w: W) -> Result<()> {
    let (g, _) = g.compact();
    writeln!(w, "{}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u}\t{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    read_edge_list(BufReader::new(File::open(path)?))
}

pub fn save_edge_list(g: &DirectedGraph, path: impl AsRef<Path>) -> Result<()> {
    write_edge_list(g, BufWriter::new(File::create(path)?))
}
