//! Driver-node counting, attack simulation and robustness-curve metrics.
//!
//! For a directed network the minimum number of driver nodes is
//! `N_D = max(N - |E*|, 1)` with `E*` a maximum matching; for an undirected
//! network it is `max(N - rank(A), 1)`. Attacking a network removes one node
//! at a time and the robustness curve records `N_D(i) / (N - i)` after the
//! `i`-th removal.

mod attack;
mod curves;
mod matching;
mod metrics;
mod rank;

pub use attack::{
    simulate_attack, simulate_attack_repeated, AttackKind, AttackRun, AttackSpec, BcProvider, DegreeCriterion,
};
pub use curves::{read_curves, write_curves, CurveRow};
pub use matching::{max_matching, max_matching_size, Matching};
pub use metrics::{curve_metrics, CurveBundle, CurveMetrics};
pub use rank::exact_rank;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

/// Driver-node fractions recorded along an attack; entry `i - 1` is `n_D(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCurve(Vec<f64>);

impl RobustnessCurve {
    /// Checks that every entry lies in `(0, 1]` and the last one is exactly 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::Numeric(format!("curve entry {i} = {v} outside (0, 1]")));
        }
        match values.last() {
            Some(&1.0) => Ok(RobustnessCurve(values)),
            Some(&last) => Err(Error::Numeric(format!("curve must end at 1, ends at {last}"))),
            None => Err(Error::Numeric("empty curve".into())),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `max(alive - |E*|, 1)`.
pub fn min_driver_nodes(g: &DirectedGraph) -> Result<usize> {
    let alive = g.node_count();
    if alive == 0 {
        return Err(Error::invalid("driver nodes of an empty graph"));
    }
    Ok(alive.saturating_sub(max_matching_size(g)).max(1))
}

/// `max(N - rank(A), 1)` for an undirected graph stored with both edge
/// directions. The rank is exact.
pub fn min_driver_nodes_undirected(g: &DirectedGraph) -> Result<usize> {
    if !g.is_symmetric() {
        return Err(Error::invalid("undirected driver-node count needs a symmetric adjacency"));
    }
    let (c, _) = g.compact();
    let n = c.n();
    if n == 0 {
        return Err(Error::invalid("driver nodes of an empty graph"));
    }
    let mut a = vec![0i64; n * n];
    for (u, v) in c.edges() {
        a[u * n + v] = 1;
    }
    Ok(n.saturating_sub(exact_rank(n, n, &a)).max(1))
}
