use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::Builder;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::tensor::{ParamId, Tape, Var};

/// Which nodes send messages to node `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborMode {
    /// Tails of edges `j -> i`.
    #[default]
    In,
    /// In- and out-neighbors.
    Symmetric,
}

impl fmt::Display for NeighborMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighborMode::In => "in",
            NeighborMode::Symmetric => "symmetric",
        })
    }
}

impl FromStr for NeighborMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(NeighborMode::In),
            "symmetric" => Ok(NeighborMode::Symmetric),
            _ => Err(Error::Config(format!("unknown neighbor mode {s:?}"))),
        }
    }
}

/// Message groups in CSR form: group `i` holds the senders of node `i` at
/// `src[offsets[i]..offsets[i + 1]]`; `dst[k]` repeats the receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub offsets: Arc<[usize]>,
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
}

impl Neighborhood {
    /// Nodes without senders receive from themselves. With `self_loops`
    /// every node also receives from itself.
    pub fn new(g: &DirectedGraph, mode: NeighborMode, self_loops: bool) -> Self {
        let n = g.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut src = Vec::new();
        let mut dst = Vec::new();
        offsets.push(0);
        let mut group = Vec::new();
        for i in 0..n {
            group.clear();
            if g.is_alive(i) {
                group.extend_from_slice(g.in_neighbors(i));
                if mode == NeighborMode::Symmetric {
                    group.extend_from_slice(g.out_neighbors(i));
                }
            }
            if self_loops || group.is_empty() {
                group.push(i);
            }
            group.sort_unstable();
            group.dedup();
            src.extend_from_slice(&group);
            dst.extend(std::iter::repeat_n(i, group.len()));
            offsets.push(src.len());
        }
        Neighborhood { offsets: offsets.into(), src: src.into(), dst: dst.into() }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }
}

#[derive(Debug, Clone, Copy)]
struct Head {
    w: ParamId,
    b: ParamId,
    a_src: ParamId,
    a_dst: ParamId,
}

/// Graph attention layer. Per head, `u_j = ReLU(W h_j + b)`, the score of
/// message `j -> i` is `LeakyReLU(a_src . u_j + a_dst . u_i)`, scores are
/// softmax-normalized over the senders of `i`, and the output is
/// `ReLU(sum_j alpha_ij u_j)`. Heads are concatenated.
#[derive(Debug, Clone)]
pub struct GatLayer {
    heads: Vec<Head>,
    pub d_in: usize,
    pub d_out: usize,
    pub slope: f64,
}

/// Layer output plus one attention column per head (aligned with the
/// neighborhood's `src`).
#[derive(Debug, Clone)]
pub struct GatOutput {
    pub out: Var,
    pub alphas: Vec<Var>,
}

impl GatLayer {
    pub const DEFAULT_SLOPE: f64 = 0.2;

    pub fn build(b: &mut Builder<'_>, name: &str, d_in: usize, d_out: usize, heads: usize) -> Result<Self> {
        if heads == 0 {
            return Err(Error::Config("attention layer needs at least one head".into()));
        }
        let heads = (0..heads)
            .map(|h| {
                Ok(Head {
                    w: b.param(&format!("{name}.h{h}.w"), vec![d_in, d_out], d_in)?,
                    b: b.param(&format!("{name}.h{h}.b"), vec![1, d_out], 0)?,
                    a_src: b.param(&format!("{name}.h{h}.a_src"), vec![d_out, 1], d_out)?,
                    a_dst: b.param(&format!("{name}.h{h}.a_dst"), vec![d_out, 1], d_out)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(GatLayer { heads, d_in, d_out, slope: Self::DEFAULT_SLOPE })
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    /// Width of the concatenated output.
    pub fn out_width(&self) -> usize {
        self.d_out * self.heads.len()
    }

    pub fn forward(&self, tape: &mut Tape<'_>, h: Var, nb: &Neighborhood) -> Result<GatOutput> {
        if tape.value(h).rows() != nb.node_count() {
            return Err(Error::ModelShape(format!(
                "attention input has {} rows for {} nodes",
                tape.value(h).rows(),
                nb.node_count()
            )));
        }
        let mut outs = Vec::with_capacity(self.heads.len());
        let mut alphas = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let (w, b) = (tape.param(head.w), tape.param(head.b));
            let z = tape.matmul(h, w)?;
            let z = tape.add_row(z, b)?;
            let u = tape.relu(z);
            let a_src = tape.param(head.a_src);
            let a_dst = tape.param(head.a_dst);
            let s_src = tape.matmul(u, a_src)?;
            let s_dst = tape.matmul(u, a_dst)?;
            let e_src = tape.gather_rows(s_src, nb.src.clone())?;
            let e_dst = tape.gather_rows(s_dst, nb.dst.clone())?;
            let e = tape.add(e_src, e_dst)?;
            let e = tape.leaky_relu(e, self.slope);
            let alpha = tape.segment_softmax(e, nb.offsets.clone())?;
            let agg = tape.segment_weighted_sum(alpha, u, nb.src.clone(), nb.offsets.clone())?;
            outs.push(tape.relu(agg));
            alphas.push(alpha);
        }
        let out = if outs.len() == 1 { outs[0] } else { tape.concat_cols(&outs)? };
        Ok(GatOutput { out, alphas })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use crate::tensor::{ParamStore, Tensor};

    fn layer(store: &mut ParamStore, d_in: usize, d_out: usize, heads: usize) -> GatLayer {
        let mut rng = seeded_rng(3);
        GatLayer::build(&mut Builder::Init { store, rng: &mut rng }, "g", d_in, d_out, heads).unwrap()
    }

    #[test]
    fn neighborhoods() {
        let g = DirectedGraph::from_edges(3, [(0, 1), (2, 1)]).unwrap();
        let nb = Neighborhood::new(&g, NeighborMode::In, false);
        assert_eq!(&*nb.offsets, &[0, 1, 3, 4]);
        assert_eq!(&*nb.src, &[0, 0, 2, 2]);
        let nb = Neighborhood::new(&g, NeighborMode::Symmetric, true);
        assert_eq!(&*nb.src, &[0, 1, 0, 1, 2, 1, 2]);
    }

    #[test]
    fn single_sender_gets_all_weight() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let mut store = ParamStore::new();
        let l = layer(&mut store, 3, 4, 1);
        let mut tape = Tape::new(&store);
        let h = tape.constant(Tensor::matrix(2, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6]).unwrap());
        let nb = Neighborhood::new(&g, NeighborMode::In, false);
        let out = l.forward(&mut tape, h, &nb).unwrap();
        assert_eq!(tape.value(out.alphas[0]).data(), &[1.0, 1.0]);
        // node 1's output equals node 0's transformed features; so does node 0's (self fallback)
        let o = tape.value(out.out);
        assert_eq!(o.row_slice(0), o.row_slice(1));
    }

    #[test]
    fn identical_senders_split_evenly() {
        let g = DirectedGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let mut store = ParamStore::new();
        let l = layer(&mut store, 2, 5, 2);
        let mut tape = Tape::new(&store);
        let h = tape.constant(Tensor::matrix(3, 2, vec![1.0, -1.0, 1.0, -1.0, 0.3, 0.9]).unwrap());
        let out = l.forward(&mut tape, h, &Neighborhood::new(&g, NeighborMode::In, false)).unwrap();
        for a in &out.alphas {
            assert_eq!(&tape.value(*a).data()[2..], &[0.5, 0.5]);
        }
        assert_eq!(tape.value(out.out).shape(), &[3, 10]);
    }
}
