use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use super::{
    kv_get, kv_parse, node_features, BcGat, BcGatConfig, Builder, DualHgnnLayer, Encoder, GatLayer, HypergraphIndex,
    Linear, NeighborMode, Neighborhood, NodeFeatures,
};
use crate::error::{Error, Result};
use crate::graph::{BallMode, DirectedGraph};
use crate::hypergraph::{build_khop, build_knn, DEFAULT_K_HOP, DEFAULT_K_NN};
use crate::tensor::{ParamStore, Tape, Var};
use crate::{seeded_rng, SeededRng};

/// Which hypergraph streams feed the readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HgnnVariant {
    /// K-hop stream followed by a K-NN stream.
    #[default]
    Dual,
    /// K-hop stream only.
    KHopOnly,
    /// Graph attention only.
    Off,
}

impl fmt::Display for HgnnVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HgnnVariant::Dual => "dual",
            HgnnVariant::KHopOnly => "khop",
            HgnnVariant::Off => "none",
        })
    }
}

impl FromStr for HgnnVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(HgnnVariant::Dual),
            "khop" => Ok(HgnnVariant::KHopOnly),
            "none" => Ok(HgnnVariant::Off),
            _ => Err(Error::Config(format!("unknown hypergraph variant {s:?} (dual, khop or none)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NcrHokConfig {
    /// Node count the readout is sized for.
    pub n: usize,
    pub d_feat: usize,
    pub d_model: usize,
    pub gat_heads: usize,
    pub k_hop: usize,
    pub k_nn: usize,
    pub mlp_hidden: usize,
    pub neighbors: NeighborMode,
    pub ball: BallMode,
    pub use_bc: bool,
    pub hgnn: HgnnVariant,
}

impl NcrHokConfig {
    pub fn new(n: usize) -> Self {
        NcrHokConfig {
            n,
            d_feat: 16,
            d_model: 64,
            gat_heads: 1,
            k_hop: DEFAULT_K_HOP,
            k_nn: DEFAULT_K_NN,
            mlp_hidden: 512,
            neighbors: NeighborMode::In,
            ball: BallMode::Undirected,
            use_bc: true,
            hgnn: HgnnVariant::Dual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_feat", self.d_feat),
            ("d_model", self.d_model),
            ("gat_heads", self.gat_heads),
            ("k_hop", self.k_hop),
            ("k_nn", self.k_nn),
            ("mlp_hidden", self.mlp_hidden),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("model needs n >= 2, got {}", self.n)));
        }
        if !self.d_model.is_multiple_of(self.gat_heads) {
            return Err(Error::Config(format!("d_model {} is not divisible by {} heads", self.d_model, self.gat_heads)));
        }
        Ok(())
    }

    /// Number of `d_model`-wide blocks concatenated per node.
    pub fn streams(&self) -> usize {
        match self.hgnn {
            HgnnVariant::Dual => 3,
            HgnnVariant::KHopOnly => 2,
            HgnnVariant::Off => 1,
        }
    }

    pub fn curve_len(&self) -> usize {
        self.n - 1
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let ball = match self.ball {
            BallMode::Undirected => "undirected",
            BallMode::OutReach => "out",
        };
        [
            ("n", self.n.to_string()),
            ("d_feat", self.d_feat.to_string()),
            ("d_model", self.d_model.to_string()),
            ("gat_heads", self.gat_heads.to_string()),
            ("k_hop", self.k_hop.to_string()),
            ("k_nn", self.k_nn.to_string()),
            ("mlp_hidden", self.mlp_hidden.to_string()),
            ("neighbors", self.neighbors.to_string()),
            ("ball", ball.to_string()),
            ("use_bc", self.use_bc.to_string()),
            ("hgnn", self.hgnn.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn from_kv(kv: &[(String, String)]) -> Result<Self> {
        let ball = match kv_get(kv, "ball")? {
            "undirected" => BallMode::Undirected,
            "out" => BallMode::OutReach,
            other => return Err(Error::Config(format!("unknown ball mode {other:?}"))),
        };
        let cfg = NcrHokConfig {
            n: kv_parse(kv, "n")?,
            d_feat: kv_parse(kv, "d_feat")?,
            d_model: kv_parse(kv, "d_model")?,
            gat_heads: kv_parse(kv, "gat_heads")?,
            k_hop: kv_parse(kv, "k_hop")?,
            k_nn: kv_parse(kv, "k_nn")?,
            mlp_hidden: kv_parse(kv, "mlp_hidden")?,
            neighbors: kv_parse(kv, "neighbors")?,
            ball,
            use_bc: kv_parse(kv, "use_bc")?,
            hgnn: kv_parse(kv, "hgnn")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything about one graph that does not depend on trainable weights.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub n: usize,
    pub features: NodeFeatures,
    pub neighbors: Neighborhood,
    pub khop: Option<HypergraphIndex>,
}

const BC_PREFIX: &str = "bc_gat.";

/// The full curve predictor: encoder, two graph attention layers, two dual
/// hypergraph layers on K-hop balls, two on K-NN groups of the K-hop
/// embeddings, and an MLP over the flattened per-node concatenation.
#[derive(Debug, Clone)]
pub struct NcrHok {
    pub config: NcrHokConfig,
    encoder: Encoder,
    gat: [GatLayer; 2],
    khop: [DualHgnnLayer; 2],
    knn: [DualHgnnLayer; 2],
    mlp: [Linear; 2],
    bc_gat: Option<BcGat>,
}

impl NcrHok {
    fn build(b: &mut Builder<'_>, config: NcrHokConfig, bc: Option<BcGatConfig>) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let per_head = d / config.gat_heads;
        let encoder = Encoder::build(b, "enc", config.d_feat, d)?;
        let gat = [
            GatLayer::build(b, "gat1", d, per_head, config.gat_heads)?,
            GatLayer::build(b, "gat2", d, per_head, config.gat_heads)?,
        ];
        let khop = [DualHgnnLayer::build(b, "khop1", d)?, DualHgnnLayer::build(b, "khop2", d)?];
        let knn = [DualHgnnLayer::build(b, "knn1", d)?, DualHgnnLayer::build(b, "knn2", d)?];
        let width = config.n * config.streams() * d;
        let mlp = [
            Linear::build(b, "mlp1", width, config.mlp_hidden)?,
            Linear::build(b, "mlp2", config.mlp_hidden, config.curve_len())?,
        ];
        let bc_gat = match bc {
            Some(c) => Some(BcGat::build(b, BC_PREFIX, c)?),
            None => None,
        };
        Ok(NcrHok { config, encoder, gat, khop, knn, mlp, bc_gat })
    }

    /// Fresh weights. When `config.use_bc` is set, `bc_gat` supplies the
    /// trained surrogate, which is copied in and frozen.
    pub fn init(config: NcrHokConfig, bc_gat: Option<(&ParamStore, BcGatConfig)>, seed: u64) -> Result<(ParamStore, Self)> {
        let mut store = ParamStore::new();
        let mut rng: SeededRng = seeded_rng(seed);
        let mut model = Self::build(&mut Builder::Init { store: &mut store, rng: &mut rng }, config, None)?;
        match (config.use_bc, bc_gat) {
            (true, Some((bc_store, bc_cfg))) => {
                BcGat::bind(bc_store, bc_cfg)?;
                store.absorb(BC_PREFIX, bc_store)?;
                store.freeze_prefix(BC_PREFIX);
                model.bc_gat = Some(BcGat::build(&mut Builder::Bind { store: &store }, BC_PREFIX, bc_cfg)?);
            }
            (true, None) => {
                return Err(Error::Config("the centrality feature needs trained surrogate parameters".into()));
            }
            (false, _) => {}
        }
        Ok((store, model))
    }

    /// Binds to an existing store (for example one read from a model file).
    pub fn bind(store: &ParamStore, config: NcrHokConfig, bc: Option<BcGatConfig>) -> Result<Self> {
        if config.use_bc && bc.is_none() {
            return Err(Error::Config("model uses the centrality feature but has no surrogate config".into()));
        }
        Self::build(&mut Builder::Bind { store }, config, if config.use_bc { bc } else { None })
    }

    pub fn header(&self) -> Vec<(String, String)> {
        let mut kv = self.config.to_kv();
        if let Some(b) = &self.bc_gat {
            kv.extend(b.config.to_kv(BC_PREFIX));
        }
        kv
    }

    pub fn save(&self, store: &ParamStore, path: impl AsRef<Path>) -> Result<()> {
        store.save(BufWriter::new(File::create(path)?), &self.header())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(ParamStore, Self)> {
        let (store, kv) = ParamStore::load(BufReader::new(File::open(path)?))?;
        let config = NcrHokConfig::from_kv(&kv)?;
        let bc = if config.use_bc { Some(BcGatConfig::from_kv(&kv, BC_PREFIX)?) } else { None };
        let model = Self::bind(&store, config, bc)?;
        Ok((store, model))
    }

    pub fn bc_gat(&self) -> Option<&BcGat> {
        self.bc_gat.as_ref()
    }

    /// Runs the frozen surrogate and builds the K-hop hypergraph. The graph
    /// must have exactly `config.n` alive nodes; removed slots are compacted.
    pub fn prepare(&self, store: &ParamStore, g: &DirectedGraph) -> Result<GraphInput> {
        if g.node_count() != self.config.n {
            return Err(Error::ModelShape(format!(
                "graph has {} nodes but the model was built for {}",
                g.node_count(),
                self.config.n
            )));
        }
        let compacted;
        let g = if g.node_count() == g.n() {
            g
        } else {
            compacted = g.compact().0;
            &compacted
        };
        let bc = match (&self.bc_gat, self.config.use_bc) {
            (Some(m), true) => Some(m.predict(store, g)?),
            _ => None,
        };
        let features = node_features(g, bc.as_deref())?;
        let neighbors = Neighborhood::new(g, self.config.neighbors, false);
        let khop = match self.config.hgnn {
            HgnnVariant::Off => None,
            _ => Some(HypergraphIndex::new(&build_khop(g, self.config.k_hop, self.config.ball)?)),
        };
        Ok(GraphInput { n: g.n(), features, neighbors, khop })
    }

    /// Per-node concatenation of every stream, `n x (streams * d_model)`.
    pub fn embed(&self, tape: &mut Tape<'_>, input: &GraphInput) -> Result<Var> {
        if input.n != self.config.n {
            return Err(Error::ModelShape(format!("input for {} nodes, model built for {}", input.n, self.config.n)));
        }
        let x0 = self.encoder.forward(tape, &input.features)?;
        let h = self.gat[0].forward(tape, x0, &input.neighbors)?.out;
        let h = self.gat[1].forward(tape, h, &input.neighbors)?.out;
        let mut parts = vec![h];
        if let Some(khop) = &input.khop {
            let hk = self.khop[0].forward(tape, x0, khop)?.nodes;
            let hk = self.khop[1].forward(tape, hk, khop)?.nodes;
            parts.push(hk);
            if self.config.hgnn == HgnnVariant::Dual {
                let knn = build_knn(tape.value(hk).data(), input.n, self.config.d_model, self.config.k_nn)?;
                let knn = HypergraphIndex::new(&knn);
                let hn = self.knn[0].forward(tape, hk, &knn)?.nodes;
                let hn = self.knn[1].forward(tape, hn, &knn)?.nodes;
                parts.push(hn);
            }
        } else if self.config.hgnn != HgnnVariant::Off {
            return Err(Error::ModelShape("input was prepared without a K-hop hypergraph".into()));
        }
        if parts.len() == 1 {
            Ok(parts[0])
        } else {
            tape.concat_cols(&parts)
        }
    }

    /// Predicted curves for a batch, one row per input, values in `(0, 1)`.
    pub fn forward(&self, tape: &mut Tape<'_>, inputs: &[&GraphInput]) -> Result<Var> {
        if inputs.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let width = self.mlp[0].d_in;
        let mut rows = Vec::with_capacity(inputs.len());
        for input in inputs {
            let e = self.embed(tape, input)?;
            rows.push(tape.reshape(e, vec![1, width])?);
        }
        let x = if rows.len() == 1 { rows[0] } else { tape.concat_rows(&rows)? };
        let h = self.mlp[0].forward(tape, x)?;
        let h = tape.relu(h);
        let y = self.mlp[1].forward(tape, h)?;
        Ok(tape.sigmoid(y))
    }

    pub fn predict(&self, store: &ParamStore, g: &DirectedGraph) -> Result<Vec<f64>> {
        let input = self.prepare(store, g)?;
        Ok(self.predict_prepared(store, &[&input])?.pop().expect("one row"))
    }

    pub fn predict_prepared(&self, store: &ParamStore, inputs: &[&GraphInput]) -> Result<Vec<Vec<f64>>> {
        let mut tape = Tape::new(store);
        let y = self.forward(&mut tape, inputs)?;
        let len = self.config.curve_len();
        Ok(tape.value(y).data().chunks(len).map(<[f64]>::to_vec).collect())
    }
}
