//! Neural components: the node feature encoder, graph attention layers, the
//! betweenness surrogate, dual hypergraph attention layers and the full
//! curve predictor.
//!
//! Every component is a plain struct of [`ParamId`]s into a shared
//! [`ParamStore`] and builds its forward pass on a caller-supplied [`Tape`].

mod bc_gat;
mod encoder;
mod gat;
mod hgnn;
mod ncr_hok;

pub use bc_gat::{BcGat, BcGatConfig};
pub use encoder::{node_features, Encoder, NodeFeatures};
pub use gat::{GatLayer, GatOutput, NeighborMode, Neighborhood};
pub use hgnn::{DualHgnnLayer, HgnnOutput, HypergraphIndex};
pub use ncr_hok::{GraphInput, HgnnVariant, NcrHok, NcrHokConfig};

use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::SeededRng;

/// Either creates parameters with fresh values or looks up existing ones
/// (checking shapes), so each model describes its layout once.
pub enum Builder<'a> {
    Init { store: &'a mut ParamStore, rng: &'a mut SeededRng },
    Bind { store: &'a ParamStore },
}

impl Builder<'_> {
    /// Uniform in `±1/sqrt(fan_in)`, or zeros when `fan_in == 0`.
    fn param(&mut self, name: &str, shape: Vec<usize>, fan_in: usize) -> Result<ParamId> {
        match self {
            Builder::Init { store, rng } => {
                if fan_in == 0 {
                    store.insert(name, Tensor::zeros(shape))
                } else {
                    store.insert_uniform(name, shape, fan_in, rng)
                }
            }
            Builder::Bind { store } => {
                let id = store.require(name)?;
                if store.get(id).shape() != shape.as_slice() {
                    return Err(Error::ModelShape(format!(
                        "parameter {name:?} has shape {:?}, expected {shape:?}",
                        store.get(id).shape()
                    )));
                }
                Ok(id)
            }
        }
    }
}

/// `x W + b`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn build(b: &mut Builder<'_>, name: &str, d_in: usize, d_out: usize) -> Result<Self> {
        let w = b.param(&format!("{name}.w"), vec![d_in, d_out], d_in)?;
        let bias = b.param(&format!("{name}.b"), vec![1, d_out], 0)?;
        Ok(Linear { w, b: bias, d_in, d_out })
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        let y = tape.matmul(x, w)?;
        tape.add_row(y, b)
    }
}

fn kv_get<'a>(kv: &'a [(String, String)], key: &str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Config(format!("model config is missing {key:?}")))
}

fn kv_parse<T: std::str::FromStr>(kv: &[(String, String)], key: &str) -> Result<T> {
    let v = kv_get(kv, key)?;
    v.parse().map_err(|_| Error::Config(format!("model config {key}={v:?} is not valid")))
}
