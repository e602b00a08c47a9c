use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::{min_driver_nodes, RobustnessCurve};
use crate::centrality::BcVector;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::{derive_seed, seeded_rng};

/// Target selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackKind {
    /// Uniformly random alive node.
    Random,
    /// Highest degree.
    Degree,
    /// Highest betweenness.
    Betweenness,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Random => "ra",
            AttackKind::Degree => "tda",
            AttackKind::Betweenness => "tba",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ra" => Ok(AttackKind::Random),
            "tda" => Ok(AttackKind::Degree),
            "tba" => Ok(AttackKind::Betweenness),
            other => Err(Error::invalid(format!("unknown attack {other:?} (expected ra, tda or tba)"))),
        }
    }
}

/// Degree used by [`AttackKind::Degree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeCriterion {
    /// in + out
    #[default]
    Total,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Re-rank targets on the current graph after every removal. When false
    /// the ranking of the intact graph is used throughout.
    pub recompute: bool,
    /// Only used by [`AttackKind::Random`].
    pub seed: u64,
    pub degree: DegreeCriterion,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, seed: u64) -> Self {
        AttackSpec { kind, recompute: true, seed, degree: DegreeCriterion::Total }
    }

    pub fn random(seed: u64) -> Self {
        Self::new(AttackKind::Random, seed)
    }

    pub fn degree() -> Self {
        Self::new(AttackKind::Degree, 0)
    }

    pub fn betweenness() -> Self {
        Self::new(AttackKind::Betweenness, 0)
    }
}

/// Betweenness provider for targeted betweenness attacks.
pub type BcProvider<'a> = &'a (dyn Fn(&DirectedGraph) -> BcVector + Sync);

/// Result of one attack run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRun {
    pub curve: RobustnessCurve,
    /// Removed node ids in removal order (original labels).
    pub order: Vec<usize>,
}

/// Index of the largest score among alive nodes, lowest id on ties.
fn argmax_alive(g: &DirectedGraph, score: impl Fn(usize) -> f64) -> usize {
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for v in g.mask().alive_ids() {
        let s = score(v);
        if best.is_none() || s > best_score {
            best = Some(v);
            best_score = s;
        }
    }
    best.expect("argmax over an empty graph")
}

fn degree_score(g: &DirectedGraph, v: usize, c: DegreeCriterion) -> f64 {
    match c {
        DegreeCriterion::Total => g.total_degree(v) as f64,
        DegreeCriterion::Out => g.out_neighbors(v).len() as f64,
    }
}

/// Descending-score order, lowest id first among equals.
fn static_order(g: &DirectedGraph, scores: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = g.mask().alive_ids().collect();
    ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ids
}

/// Removes `N - 1` nodes one at a time and records `n_D(i) = N_D(i) / (N - i)`
/// after each removal, where `N_D` comes from the minimum input theorem.
///
/// `bc_fn` is required for betweenness attacks.
pub fn simulate_attack(g: &DirectedGraph, attack: &AttackSpec, bc_fn: Option<BcProvider<'_>>) -> Result<AttackRun> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::invalid(format!("attack needs at least 2 alive nodes, got {n}")));
    }
    if attack.kind == AttackKind::Betweenness && bc_fn.is_none() {
        return Err(Error::Config("betweenness attack requires a centrality provider".into()));
    }

    let planned: Option<Vec<usize>> = match attack.kind {
        AttackKind::Random => {
            let mut ids: Vec<usize> = g.mask().alive_ids().collect();
            ids.shuffle(&mut seeded_rng(attack.seed));
            Some(ids)
        }
        AttackKind::Degree if !attack.recompute => {
            let scores: Vec<f64> = (0..g.n()).map(|v| degree_score(g, v, attack.degree)).collect();
            Some(static_order(g, &scores))
        }
        AttackKind::Betweenness if !attack.recompute => {
            let bc = bc_fn.expect("checked above")(g);
            Some(static_order(g, bc.values()))
        }
        _ => None,
    };

    let mut current = g.clone();
    let mut values = Vec::with_capacity(n - 1);
    let mut order = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let target = match (&planned, attack.kind) {
            (Some(p), _) => p[step],
            (None, AttackKind::Degree) => argmax_alive(&current, |v| degree_score(&current, v, attack.degree)),
            (None, AttackKind::Betweenness) => {
                let bc = bc_fn.expect("checked above")(&current);
                argmax_alive(&current, |v| bc.values()[v])
            }
            (None, AttackKind::Random) => unreachable!("random attacks are always planned"),
        };
        current.remove_node(target)?;
        order.push(target);
        let remaining = current.node_count();
        values.push(min_driver_nodes(&current)? as f64 / remaining as f64);
    }
    Ok(AttackRun { curve: RobustnessCurve::new(values)?, order })
}

/// Averages `repeats` runs. Random attacks use independent orders seeded from
/// `attack.seed`; targeted attacks are deterministic, so they run once.
pub fn simulate_attack_repeated(
    g: &DirectedGraph,
    attack: &AttackSpec,
    repeats: usize,
    bc_fn: Option<BcProvider<'_>>,
) -> Result<RobustnessCurve> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if attack.kind != AttackKind::Random || repeats == 1 {
        return Ok(simulate_attack(g, attack, bc_fn)?.curve);
    }
    let mut sum = vec![0.0; g.node_count().saturating_sub(1)];
    for r in 0..repeats {
        let spec = AttackSpec { seed: derive_seed(attack.seed, r as u64), ..attack.clone() };
        let run = simulate_attack(g, &spec, bc_fn)?;
        for (s, v) in sum.iter_mut().zip(run.curve.values()) {
            *s += v;
        }
    }
    RobustnessCurve::new(sum.into_iter().map(|s| s / repeats as f64).collect())
}
