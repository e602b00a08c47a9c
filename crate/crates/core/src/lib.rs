//! Exact network controllability robustness and its learned prediction.
//!
//! The crate has two halves. The exact half generates directed networks
//! ([`netgen`]), attacks them node by node and records the fraction of driver
//! nodes needed after each removal ([`controllability`]), using maximum
//! matchings and Brandes betweenness ([`centrality`]). The learned half turns a
//! graph into a predicted robustness curve with graph and hypergraph attention
//! ([`hypergraph`], [`models`]) on top of a small reverse-mode autodiff engine
//! ([`tensor`]). [`pipeline`] wires both halves into dataset generation,
//! training and evaluation.
//!
//! ```
//! use ncrhok::controllability::{min_driver_nodes, simulate_attack, AttackSpec};
//! use ncrhok::graph::DirectedGraph;
//!
//! let ring = DirectedGraph::from_edges(5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap();
//! assert_eq!(min_driver_nodes(&ring).unwrap(), 1);
//!
//! let run = simulate_attack(&ring, &AttackSpec::random(7), None).unwrap();
//! assert_eq!(run.curve.values().len(), 4);
//! assert_eq!(*run.curve.values().last().unwrap(), 1.0);
//! ```

pub mod centrality;
pub mod controllability;
pub mod error;
pub mod graph;
pub mod hypergraph;
pub mod models;
pub mod netgen;
pub mod pipeline;
pub mod tensor;

#[cfg(doctest)]
pub mod book;

pub use error::{Error, Result};

/// The generator behind every seeded operation in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Deterministic, platform-independent RNG for `seed`.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}

/// Derives an independent child seed, e.g. one per dataset record.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ stream.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
