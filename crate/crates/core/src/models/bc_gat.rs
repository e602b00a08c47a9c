use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{kv_parse, Builder, GatLayer, Linear, NeighborMode, Neighborhood};
use crate::error::Result;
use crate::graph::DirectedGraph;
use crate::tensor::{ParamStore, Tape, Tensor, Var};
use crate::{seeded_rng, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BcGatConfig {
    /// Heads of the first attention layer (concatenated).
    pub heads: usize,
    /// Width of each head and of the second layer.
    pub hidden: usize,
    pub neighbors: NeighborMode,
    pub self_loops: bool,
}

impl Default for BcGatConfig {
    fn default() -> Self {
        BcGatConfig { heads: 4, hidden: 64, neighbors: NeighborMode::Symmetric, self_loops: false }
    }
}

impl BcGatConfig {
    pub fn to_kv(&self, prefix: &str) -> Vec<(String, String)> {
        vec![
            (format!("{prefix}heads"), self.heads.to_string()),
            (format!("{prefix}hidden"), self.hidden.to_string()),
            (format!("{prefix}neighbors"), self.neighbors.to_string()),
            (format!("{prefix}self_loops"), self.self_loops.to_string()),
        ]
    }

    pub fn from_kv(kv: &[(String, String)], prefix: &str) -> Result<Self> {
        Ok(BcGatConfig {
            heads: kv_parse(kv, &format!("{prefix}heads"))?,
            hidden: kv_parse(kv, &format!("{prefix}hidden"))?,
            neighbors: kv_parse(kv, &format!("{prefix}neighbors"))?,
            self_loops: kv_parse(kv, &format!("{prefix}self_loops"))?,
        })
    }
}

/// Betweenness surrogate: a multi-head attention layer on one scalar per
/// node, a single-head layer, and a linear readout to one value per node.
#[derive(Debug, Clone)]
pub struct BcGat {
    pub config: BcGatConfig,
    pub l1: GatLayer,
    pub l2: GatLayer,
    pub out: Linear,
}

impl BcGat {
    pub fn build(b: &mut Builder<'_>, prefix: &str, config: BcGatConfig) -> Result<Self> {
        let l1 = GatLayer::build(b, &format!("{prefix}l1"), 1, config.hidden, config.heads)?;
        let l2 = GatLayer::build(b, &format!("{prefix}l2"), l1.out_width(), config.hidden, 1)?;
        let out = Linear::build(b, &format!("{prefix}out"), config.hidden, 1)?;
        Ok(BcGat { config, l1, l2, out })
    }

    /// Fresh parameters in their own store.
    pub fn init(config: BcGatConfig, seed: u64) -> Result<(ParamStore, Self)> {
        let mut store = ParamStore::new();
        let mut rng: SeededRng = seeded_rng(seed);
        let model = Self::build(&mut Builder::Init { store: &mut store, rng: &mut rng }, "", config)?;
        Ok((store, model))
    }

    /// Binds to parameters stored without a prefix.
    pub fn bind(store: &ParamStore, config: BcGatConfig) -> Result<Self> {
        Self::build(&mut Builder::Bind { store }, "", config)
    }

    pub fn save(&self, store: &ParamStore, path: impl AsRef<Path>) -> Result<()> {
        store.save(BufWriter::new(File::create(path)?), &self.config.to_kv(""))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(ParamStore, Self)> {
        let (store, kv) = ParamStore::load(BufReader::new(File::open(path)?))?;
        let model = Self::bind(&store, BcGatConfig::from_kv(&kv, "")?)?;
        Ok((store, model))
    }

    /// Total degree scaled by its maximum, as an `n x 1` column.
    pub fn input(g: &DirectedGraph) -> Tensor {
        let max = (0..g.n()).map(|v| g.total_degree(v)).max().unwrap_or(0).max(1) as f64;
        Tensor::column((0..g.n()).map(|v| g.total_degree(v) as f64 / max).collect())
    }

    pub fn neighborhood(&self, g: &DirectedGraph) -> Neighborhood {
        Neighborhood::new(g, self.config.neighbors, self.config.self_loops)
    }

    /// `n x 1` predictions.
    pub fn forward(&self, tape: &mut Tape<'_>, x: Var, nb: &Neighborhood) -> Result<Var> {
        let h = self.l1.forward(tape, x, nb)?.out;
        let h = self.l2.forward(tape, h, nb)?.out;
        self.out.forward(tape, h)
    }

    /// Predicted min-max normalized betweenness for every node slot.
    pub fn predict(&self, store: &ParamStore, g: &DirectedGraph) -> Result<Vec<f64>> {
        let mut tape = Tape::new(store);
        let x = tape.constant(Self::input(g));
        let y = self.forward(&mut tape, x, &self.neighborhood(g))?;
        Ok(tape.value(y).data().to_vec())
    }

    /// Scalar counts of the two attention layers and the readout.
    pub fn layer_sizes(store: &ParamStore, prefix: &str) -> [usize; 3] {
        ["l1.", "l2.", "out."].map(|l| store.scalar_count_prefix(&format!("{prefix}{l}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layer_sizes() {
        let (store, _) = BcGat::init(BcGatConfig::default(), 0).unwrap();
        assert_eq!(BcGat::layer_sizes(&store, ""), [1024, 16576, 65]);
    }

    #[test]
    fn predicts_one_value_per_node() {
        let (store, m) = BcGat::init(BcGatConfig::default(), 1).unwrap();
        let g = DirectedGraph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let p = m.predict(&store, &g).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p, m.predict(&store, &g).unwrap());
        let back = BcGat::bind(&store, BcGatConfig::default()).unwrap();
        assert_eq!(back.predict(&store, &g).unwrap(), p);
        assert!(BcGat::bind(&store, BcGatConfig { hidden: 32, ..BcGatConfig::default() }).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bc.bin");
        m.save(&store, &path).unwrap();
        let (loaded_store, loaded) = BcGat::load(&path).unwrap();
        assert_eq!(loaded.config, m.config);
        assert_eq!(loaded_store.hash_hex(), store.hash_hex());
        assert_eq!(loaded.predict(&loaded_store, &g).unwrap(), p);
    }
}
