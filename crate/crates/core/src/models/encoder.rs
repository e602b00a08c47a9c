use super::{Builder, Linear};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::tensor::{Tape, Tensor, Var};

/// Per-node scalar inputs, each a column of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    pub out_deg: Tensor,
    pub in_deg: Tensor,
    pub bc: Tensor,
}

/// Out- and in-degree scaled by the largest degree of either kind in the
/// graph, plus the given centrality scores (zeros when absent).
pub fn node_features(g: &DirectedGraph, bc: Option<&[f64]>) -> Result<NodeFeatures> {
    let n = g.n();
    let (ind, outd) = g.degrees();
    let max = ind.iter().chain(&outd).copied().max().unwrap_or(0).max(1) as f64;
    let bc = match bc {
        Some(b) if b.len() != n => {
            return Err(Error::ModelShape(format!("{} centrality values for {n} nodes", b.len())));
        }
        Some(b) => b.to_vec(),
        None => vec![0.0; n],
    };
    Ok(NodeFeatures {
        out_deg: Tensor::column(outd.iter().map(|&d| d as f64 / max).collect()),
        in_deg: Tensor::column(ind.iter().map(|&d| d as f64 / max).collect()),
        bc: Tensor::column(bc),
    })
}

/// Three scalar encoders (`1 -> d_feat`, ReLU) fused by a linear layer into
/// `d_model` columns.
#[derive(Debug, Clone, Copy)]
pub struct Encoder {
    out_deg: Linear,
    in_deg: Linear,
    bc: Linear,
    fuse: Linear,
}

impl Encoder {
    pub fn build(b: &mut Builder<'_>, name: &str, d_feat: usize, d_model: usize) -> Result<Self> {
        Ok(Encoder {
            out_deg: Linear::build(b, &format!("{name}.out_deg"), 1, d_feat)?,
            in_deg: Linear::build(b, &format!("{name}.in_deg"), 1, d_feat)?,
            bc: Linear::build(b, &format!("{name}.bc"), 1, d_feat)?,
            fuse: Linear::build(b, &format!("{name}.fuse"), 3 * d_feat, d_model)?,
        })
    }

    pub fn d_model(&self) -> usize {
        self.fuse.d_out
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: &NodeFeatures) -> Result<Var> {
        let mut parts = Vec::with_capacity(3);
        for (lin, col) in [(self.out_deg, &x.out_deg), (self.in_deg, &x.in_deg), (self.bc, &x.bc)] {
            let c = tape.constant(col.clone());
            let z = lin.forward(tape, c)?;
            parts.push(tape.relu(z));
        }
        let cat = tape.concat_cols(&parts)?;
        self.fuse.forward(tape, cat)
    }
}
