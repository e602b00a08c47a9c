//! Hopcroft–Karp maximum matching on the out-copy/in-copy bipartite split of
//! a digraph: left vertex `u` and right vertex `v` are joined for every edge
//! `u -> v`.

use std::collections::VecDeque;

use crate::graph::DirectedGraph;

const NIL: usize = usize::MAX;
const INF: u32 = u32::MAX;

/// A matching of the bipartite split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// `mate_out[u] = Some(v)` when edge `u -> v` is matched.
    pub mate_out: Vec<Option<usize>>,
    pub size: usize,
}

impl Matching {
    /// Matched edges in tail order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mate_out.iter().enumerate().filter_map(|(u, m)| m.map(|v| (u, v)))
    }
}

struct HopcroftKarp<'g> {
    g: &'g DirectedGraph,
    match_l: Vec<usize>,
    match_r: Vec<usize>,
    dist: Vec<u32>,
    iter: Vec<usize>,
    queue: VecDeque<usize>,
    stack: Vec<usize>,
}

impl<'g> HopcroftKarp<'g> {
    fn new(g: &'g DirectedGraph) -> Self {
        let n = g.n();
        HopcroftKarp {
            g,
            match_l: vec![NIL; n],
            match_r: vec![NIL; n],
            dist: vec![INF; n],
            iter: vec![0; n],
            queue: VecDeque::with_capacity(n),
            stack: Vec::new(),
        }
    }

    /// Layers the left side by alternating-path distance from the free left
    /// vertices; true if some free right vertex is reachable.
    fn bfs(&mut self) -> bool {
        self.queue.clear();
        for u in 0..self.g.n() {
            if self.match_l[u] == NIL && !self.g.out_neighbors(u).is_empty() {
                self.dist[u] = 0;
                self.queue.push_back(u);
            } else {
                self.dist[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = self.queue.pop_front() {
            for &v in self.g.out_neighbors(u) {
                let w = self.match_r[v];
                if w == NIL {
                    found = true;
                } else if self.dist[w] == INF {
                    self.dist[w] = self.dist[u] + 1;
                    self.queue.push_back(w);
                }
            }
        }
        found
    }

    /// Iterative layered DFS from free left vertex `root`; augments and
    /// returns true when it reaches a free right vertex.
    fn augment_from(&mut self, root: usize) -> bool {
        self.stack.clear();
        self.stack.push(root);
        while let Some(&x) = self.stack.last() {
            let adj = self.g.out_neighbors(x);
            let mut descended = false;
            while self.iter[x] < adj.len() {
                let v = adj[self.iter[x]];
                let w = self.match_r[v];
                if w == NIL {
                    // flip the alternating path recorded on the stack
                    for &y in self.stack.iter().rev() {
                        let vy = self.g.out_neighbors(y)[self.iter[y]];
                        self.match_l[y] = vy;
                        self.match_r[vy] = y;
                    }
                    return true;
                }
                if self.dist[w] != INF && self.dist[w] == self.dist[x] + 1 {
                    self.stack.push(w);
                    descended = true;
                    break;
                }
                self.iter[x] += 1;
            }
            if !descended {
                self.dist[x] = INF;
                self.stack.pop();
                if let Some(&parent) = self.stack.last() {
                    self.iter[parent] += 1;
                }
            }
        }
        false
    }

    fn run(mut self) -> Matching {
        let mut size = 0;
        while self.bfs() {
            self.iter.iter_mut().for_each(|i| *i = 0);
            for u in 0..self.g.n() {
                if self.match_l[u] == NIL && self.dist[u] == 0 && self.augment_from(u) {
                    size += 1;
                }
            }
        }
        let mate_out = self.match_l.iter().map(|&v| (v != NIL).then_some(v)).collect();
        Matching { mate_out, size }
    }
}

/// Maximum matching of the bipartite split, O(sqrt(V) * E).
pub fn max_matching(g: &DirectedGraph) -> Matching {
    HopcroftKarp::new(g).run()
}

/// Size of a maximum matching of the bipartite split.
pub fn max_matching_size(g: &DirectedGraph) -> usize {
    max_matching(g).size
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_sizes() {
        assert_eq!(max_matching_size(&DirectedGraph::new(6)), 0);
        for n in 2..9 {
            let cycle = DirectedGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
            assert_eq!(max_matching_size(&cycle), n);
        }
        let chain = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(max_matching_size(&chain), 2);
        // star out of 0: only one edge can use tail 0
        let star = DirectedGraph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        assert_eq!(max_matching_size(&star), 1);
    }

    #[test]
    fn matching_is_valid() {
        let g = DirectedGraph::from_edges(6, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 0), (4, 5), (5, 4), (1, 4)]).unwrap();
        let m = max_matching(&g);
        let mut heads = std::collections::HashSet::new();
        for (u, v) in m.edges() {
            assert!(g.has_edge(u, v));
            assert!(heads.insert(v));
        }
        assert_eq!(m.edges().count(), m.size);
        assert_eq!(m.size, 6);
    }

    #[test]
    fn large_chain() {
        let n = 20_000;
        let g = DirectedGraph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap();
        assert_eq!(max_matching_size(&g), n - 1);
    }
}
