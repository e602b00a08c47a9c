use std::sync::Arc;

use super::Builder;
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::tensor::{ParamId, Tape, Var};

/// Shared copies of a hypergraph's primal and dual CSR arrays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypergraphIndex {
    pub node_count: usize,
    pub edge_ptr: Arc<[usize]>,
    pub members: Arc<[usize]>,
    pub node_ptr: Arc<[usize]>,
    pub node_edges: Arc<[usize]>,
}

impl HypergraphIndex {
    pub fn new(h: &Hypergraph) -> Self {
        let (edge_ptr, members) = h.edge_csr();
        let (node_ptr, node_edges) = h.node_csr();
        HypergraphIndex {
            node_count: h.node_count(),
            edge_ptr: edge_ptr.into(),
            members: members.into(),
            node_ptr: node_ptr.into(),
            node_edges: node_edges.into(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_ptr.len() - 1
    }
}

/// One dual hypergraph attention layer: nodes attend into hyperedges, then
/// hyperedges attend back into nodes. Both directions keep width `d`.
#[derive(Debug, Clone, Copy)]
pub struct DualHgnnLayer {
    w_n: ParamId,
    b_n: ParamId,
    a_n: ParamId,
    w_e: ParamId,
    b_e: ParamId,
    a_e: ParamId,
    pub d: usize,
}

/// Output of a layer plus both attention columns, aligned with the primal
/// (`members`) and dual (`node_edges`) arrays respectively.
#[derive(Debug, Clone, Copy)]
pub struct HgnnOutput {
    pub nodes: Var,
    pub edges: Var,
    pub edge_alpha: Var,
    pub node_alpha: Var,
}

impl DualHgnnLayer {
    pub fn build(b: &mut Builder<'_>, name: &str, d: usize) -> Result<Self> {
        Ok(DualHgnnLayer {
            w_n: b.param(&format!("{name}.node.w"), vec![d, d], d)?,
            b_n: b.param(&format!("{name}.node.b"), vec![1, d], 0)?,
            a_n: b.param(&format!("{name}.node.a"), vec![d, 1], d)?,
            w_e: b.param(&format!("{name}.edge.w"), vec![d, d], d)?,
            b_e: b.param(&format!("{name}.edge.b"), vec![1, d], 0)?,
            a_e: b.param(&format!("{name}.edge.a"), vec![d, 1], d)?,
            d,
        })
    }

    /// Scores `a . ReLU(x W + b)` for every row of `x`.
    fn scores(tape: &mut Tape<'_>, x: Var, w: ParamId, b: ParamId, a: ParamId) -> Result<Var> {
        let (w, b, a) = (tape.param(w), tape.param(b), tape.param(a));
        let z = tape.matmul(x, w)?;
        let z = tape.add_row(z, b)?;
        let s = tape.relu(z);
        tape.matmul(s, a)
    }

    /// Hyperedge embeddings: `ReLU(sum over members i of alpha_E(i) h_i)`
    /// with `alpha_E` a softmax over the members' scores.
    pub fn edge_agg(&self, tape: &mut Tape<'_>, h_nodes: Var, hg: &HypergraphIndex) -> Result<(Var, Var)> {
        self.check(tape, h_nodes, hg.node_count, "node")?;
        let s = Self::scores(tape, h_nodes, self.w_n, self.b_n, self.a_n)?;
        let e = tape.gather_rows(s, hg.members.clone())?;
        let alpha = tape.segment_softmax(e, hg.edge_ptr.clone())?;
        let agg = tape.segment_weighted_sum(alpha, h_nodes, hg.members.clone(), hg.edge_ptr.clone())?;
        Ok((tape.relu(agg), alpha))
    }

    /// Node embeddings: `ReLU(sum over hyperedges j containing the node of
    /// alpha_N(j) h_j)`.
    pub fn node_agg(&self, tape: &mut Tape<'_>, h_edges: Var, hg: &HypergraphIndex) -> Result<(Var, Var)> {
        self.check(tape, h_edges, hg.edge_count(), "hyperedge")?;
        let s = Self::scores(tape, h_edges, self.w_e, self.b_e, self.a_e)?;
        let e = tape.gather_rows(s, hg.node_edges.clone())?;
        let alpha = tape.segment_softmax(e, hg.node_ptr.clone())?;
        let agg = tape.segment_weighted_sum(alpha, h_edges, hg.node_edges.clone(), hg.node_ptr.clone())?;
        Ok((tape.relu(agg), alpha))
    }

    pub fn forward(&self, tape: &mut Tape<'_>, h_nodes: Var, hg: &HypergraphIndex) -> Result<HgnnOutput> {
        let (edges, edge_alpha) = self.edge_agg(tape, h_nodes, hg)?;
        let (nodes, node_alpha) = self.node_agg(tape, edges, hg)?;
        Ok(HgnnOutput { nodes, edges, edge_alpha, node_alpha })
    }

    fn check(&self, tape: &Tape<'_>, x: Var, rows: usize, what: &str) -> Result<()> {
        let t = tape.value(x);
        if t.rows() != rows || t.cols() != self.d {
            return Err(Error::ModelShape(format!(
                "hypergraph layer expects {rows} {what} rows of width {}, got {:?}",
                self.d,
                t.shape()
            )));
        }
        Ok(())
    }
}
