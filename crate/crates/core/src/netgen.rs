//! Synthetic directed topologies: Erdős–Rényi, generic scale-free,
//! q-snapback and Newman–Watts small-world.
//!
//! Every generator targets `M = round(n * k_avg)` directed edges, `k_avg`
//! being the average out-degree, and is a pure function of its arguments and
//! the RNG stream.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::seeded_rng;

/// The four experimental topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topology {
    Er,
    Sf,
    Qsn,
    Sw,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::Er, Topology::Sf, Topology::Qsn, Topology::Sw];

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Er => "er",
            Topology::Sf => "sf",
            Topology::Qsn => "qsn",
            Topology::Sw => "sw",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "er" => Ok(Topology::Er),
            "sf" => Ok(Topology::Sf),
            "qsn" => Ok(Topology::Qsn),
            "sw" => Ok(Topology::Sw),
            other => Err(Error::invalid(format!("unknown topology {other:?} (expected er, sf, qsn or sw)"))),
        }
    }
}

/// A complete, reproducible description of one synthetic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub topology: Topology,
    pub n: usize,
    /// Target average out-degree.
    pub k_avg: f64,
    pub seed: u64,
    pub sf_beta: f64,
    pub sf_theta: f64,
    pub qsn_rq: usize,
    /// Fixed snapback probability. When unset, q is solved from `k_avg`.
    pub qsn_q: Option<f64>,
}

impl GenSpec {
    pub const DEFAULT_SF_BETA: f64 = 0.999;
    pub const DEFAULT_SF_THETA: f64 = 1.0;

    pub fn new(topology: Topology, n: usize, k_avg: f64, seed: u64) -> Self {
        GenSpec {
            topology,
            n,
            k_avg,
            seed,
            sf_beta: Self::DEFAULT_SF_BETA,
            sf_theta: Self::DEFAULT_SF_THETA,
            qsn_rq: 1,
            qsn_q: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.k_avg > 0.0 && self.k_avg < self.n as f64) {
            return Err(Error::invalid(format!("k_avg must lie in (0, n), got {}", self.k_avg)));
        }
        if !(0.0..1.0).contains(&self.sf_beta) {
            return Err(Error::invalid(format!("sf_beta must lie in [0, 1), got {}", self.sf_beta)));
        }
        if !(self.sf_theta >= 0.0) {
            return Err(Error::invalid("sf_theta must be non-negative"));
        }
        if self.qsn_rq == 0 {
            return Err(Error::invalid("qsn_rq must be at least 1"));
        }
        if let Some(q) = self.qsn_q {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::invalid(format!("qsn_q must lie in [0, 1], got {q}")));
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<DirectedGraph> {
        self.validate()?;
        let mut rng = seeded_rng(self.seed);
        match self.topology {
            Topology::Er => gen_er(self.n, self.k_avg, &mut rng),
            Topology::Sf => gen_sf(self.n, self.k_avg, self.sf_beta, self.sf_theta, &mut rng),
            Topology::Qsn => match self.qsn_q {
                Some(q) => gen_qsn_with_q(self.n, self.qsn_rq, q, &mut rng),
                None => gen_qsn(self.n, self.k_avg, self.qsn_rq, &mut rng),
            },
            Topology::Sw => gen_sw(self.n, self.k_avg, &mut rng),
        }
    }

    /// Flat `key=value` lines, keys sorted.
    pub fn to_kv(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("topology", self.topology.to_string());
        map.insert("n", self.n.to_string());
        map.insert("k_avg", self.k_avg.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert("sf_beta", self.sf_beta.to_string());
        map.insert("sf_theta", self.sf_theta.to_string());
        map.insert("qsn_rq", self.qsn_rq.to_string());
        if let Some(q) = self.qsn_q {
            map.insert("qsn_q", q.to_string());
        }
        map.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Inverse of [`to_kv`](Self::to_kv). Unknown keys are rejected; missing
    /// optional keys take their defaults.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut topology = None;
        let mut n = None;
        let mut k_avg = None;
        let mut seed = None;
        let mut spec = GenSpec::new(Topology::Er, 0, 0.0, 0);
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(idx + 1, format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |_| Error::parse(idx + 1, format!("bad value for {key}: {value:?}"));
            match key {
                "topology" => topology = Some(value.parse()?),
                "n" => n = Some(value.parse().map_err(bad)?),
                "k_avg" => k_avg = Some(value.parse().map_err(|_| Error::parse(idx + 1, "bad k_avg"))?),
                "seed" => seed = Some(value.parse().map_err(bad)?),
                "sf_beta" => spec.sf_beta = value.parse().map_err(|_| Error::parse(idx + 1, "bad sf_beta"))?,
                "sf_theta" => spec.sf_theta = value.parse().map_err(|_| Error::parse(idx + 1, "bad sf_theta"))?,
                "qsn_rq" => spec.qsn_rq = value.parse().map_err(bad)?,
                "qsn_q" => spec.qsn_q = Some(value.parse().map_err(|_| Error::parse(idx + 1, "bad qsn_q"))?),
                other => return Err(Error::parse(idx + 1, format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::invalid(format!("missing key {k}"));
        spec.topology = topology.ok_or_else(|| missing("topology"))?;
        spec.n = n.ok_or_else(|| missing("n"))?;
        spec.k_avg = k_avg.ok_or_else(|| missing("k_avg"))?;
        spec.seed = seed.ok_or_else(|| missing("seed"))?;
        Ok(spec)
    }
}

/// `round(n * k_avg)`.
pub fn target_edge_count(n: usize, k_avg: f64) -> usize {
    (n as f64 * k_avg).round() as usize
}

fn check_capacity(n: usize, m: usize) -> Result<()> {
    let cap = n * n.saturating_sub(1);
    if m > cap {
        return Err(Error::invalid(format!(
            "{m} edges exceed the {cap} possible in a simple digraph on {n} nodes"
        )));
    }
    Ok(())
}

/// Adds uniformly random new edges until `g` has `m` edges.
fn add_uniform_edges<R: Rng + ?Sized>(g: &mut DirectedGraph, m: usize, rng: &mut R) -> Result<()> {
    let n = g.n();
    check_capacity(n, m)?;
    let missing = m.saturating_sub(g.edge_count());
    if missing == 0 {
        return Ok(());
    }
    let free = n * (n - 1) - g.edge_count();
    if 2 * missing <= free {
        while g.edge_count() < m {
            let u = rng.random_range(0..n);
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            if !g.has_edge(u, v) {
                g.add_edge(u, v)?;
            }
        }
    } else {
        // dense regime: sample from the explicit complement
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && !g.has_edge(u, v))
            .collect();
        for i in index::sample(rng, candidates.len(), missing) {
            let (u, v) = candidates[i];
            g.add_edge(u, v)?;
        }
    }
    Ok(())
}

/// Removes uniformly chosen existing edges until `g` has `m` edges.
fn remove_uniform_edges<R: Rng + ?Sized>(g: &mut DirectedGraph, m: usize, rng: &mut R) {
    let extra = g.edge_count().saturating_sub(m);
    if extra == 0 {
        return;
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    for i in index::sample(rng, edges.len(), extra) {
        let (u, v) = edges[i];
        g.remove_edge(u, v);
    }
}

/// Erdős–Rényi digraph with exactly `round(n * k_avg)` edges placed uniformly
/// over ordered non-self-loop pairs.
pub fn gen_er<R: Rng + ?Sized>(n: usize, k_avg: f64, rng: &mut R) -> Result<DirectedGraph> {
    let m = target_edge_count(n, k_avg);
    let mut g = DirectedGraph::new(n);
    add_uniform_edges(&mut g, m, rng)?;
    Ok(g)
}

/// Generic scale-free digraph: both endpoints of each edge are drawn with
/// probability proportional to `w_i = (i + theta)^-beta`, `i = 1..=n`.
/// Self-loops and existing pairs are re-drawn, up to `100 * M` attempts.
pub fn gen_sf<R: Rng + ?Sized>(n: usize, k_avg: f64, beta: f64, theta: f64, rng: &mut R) -> Result<DirectedGraph> {
    if !(0.0..1.0).contains(&beta) || !(theta >= 0.0) {
        return Err(Error::invalid(format!("scale-free needs beta in [0,1) and theta >= 0, got {beta}, {theta}")));
    }
    let m = target_edge_count(n, k_avg);
    check_capacity(n, m)?;
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64 + theta).powf(-beta)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::Generation(e.to_string()))?;
    let mut g = DirectedGraph::new(n);
    let max_attempts = 100 * m;
    let mut attempts = 0;
    while g.edge_count() < m {
        if attempts >= max_attempts {
            return Err(Error::Generation(format!(
                "scale-free placement stalled at {} of {m} edges after {max_attempts} attempts",
                g.edge_count()
            )));
        }
        attempts += 1;
        let u = dist.sample(rng);
        let v = dist.sample(rng);
        if u != v && !g.has_edge(u, v) {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

/// Snapback candidates `(i, i - l * r_q)` for `i = r_q..n`, `l >= 1`.
fn snapback_candidates(n: usize, r_q: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in r_q..n {
        for l in 1..=i / r_q {
            out.push((i, i - l * r_q));
        }
    }
    out
}

fn qsn_backbone(n: usize) -> DirectedGraph {
    DirectedGraph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("chain is simple")
}

/// q-snapback network with an explicit snapback probability `q`.
pub fn gen_qsn_with_q<R: Rng + ?Sized>(n: usize, r_q: usize, q: f64, rng: &mut R) -> Result<DirectedGraph> {
    if r_q == 0 || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("q-snapback needs r_q >= 1 and q in [0,1], got {r_q}, {q}")));
    }
    let mut g = qsn_backbone(n);
    for (u, v) in snapback_candidates(n, r_q) {
        if rng.random_bool(q) {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

/// q-snapback network whose snapback probability is chosen so the expected
/// edge count is `round(n * k_avg)`; the realized count is then trimmed or
/// padded with uniformly chosen snapback edges to hit it exactly.
pub fn gen_qsn<R: Rng + ?Sized>(n: usize, k_avg: f64, r_q: usize, rng: &mut R) -> Result<DirectedGraph> {
    if r_q == 0 {
        return Err(Error::invalid("r_q must be at least 1"));
    }
    let m = target_edge_count(n, k_avg);
    let chain = n.saturating_sub(1);
    let candidates = snapback_candidates(n, r_q);
    let q = solve_snapback_probability(n, m, candidates.len())?;
    let mut g = qsn_backbone(n);
    let mut placed = Vec::new();
    let mut unplaced = Vec::new();
    for &(u, v) in &candidates {
        if rng.random_bool(q) {
            g.add_edge(u, v)?;
            placed.push((u, v));
        } else {
            unplaced.push((u, v));
        }
    }
    let want = m - chain;
    if placed.len() > want {
        for i in index::sample(rng, placed.len(), placed.len() - want) {
            let (u, v) = placed[i];
            g.remove_edge(u, v);
        }
    } else if placed.len() < want {
        for i in index::sample(rng, unplaced.len(), want - placed.len()) {
            let (u, v) = unplaced[i];
            g.add_edge(u, v)?;
        }
    }
    debug_assert_eq!(g.edge_count(), m);
    Ok(g)
}

/// `q` such that `(n - 1) + q * candidates == m`.
pub fn solve_snapback_probability(n: usize, m: usize, candidates: usize) -> Result<f64> {
    let chain = n.saturating_sub(1) as f64;
    let q = if candidates == 0 {
        if m as f64 == chain { 0.0 } else { f64::NAN }
    } else {
        (m as f64 - chain) / candidates as f64
    };
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "q-snapback cannot reach {m} edges on {n} nodes with {candidates} snapback candidates"
        )));
    }
    Ok(q)
}

/// The initial small-world ring: `i -> i+1` and `i -> i+2` (mod n).
pub fn sw_ring(n: usize) -> Result<DirectedGraph> {
    if n < 5 {
        return Err(Error::invalid(format!("small-world ring needs n >= 5, got {n}")));
    }
    DirectedGraph::from_edges(n, (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + 2) % n)]))
}

/// Newman–Watts style small-world digraph: the K=2 directed ring, then
/// uniform random edges added (or ring edges removed) until the target count.
pub fn gen_sw<R: Rng + ?Sized>(n: usize, k_avg: f64, rng: &mut R) -> Result<DirectedGraph> {
    let m = target_edge_count(n, k_avg);
    check_capacity(n, m)?;
    let mut g = sw_ring(n)?;
    if m >= g.edge_count() {
        add_uniform_edges(&mut g, m, rng)?;
    } else {
        remove_uniform_edges(&mut g, m, rng);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_counts() {
        let mut rng = seeded_rng(3);
        let g = gen_er(2, 0.5, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 1);
        let g = gen_er(100, 5.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 500);
        // dense branch
        let g = gen_er(10, 8.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 80);
        assert!(gen_er(4, 3.5, &mut rng).is_err());
    }

    #[test]
    fn sf_counts_and_uniform_limit() {
        let mut rng = seeded_rng(4);
        let g = gen_sf(200, 5.0, 0.999, 1.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 1000);
        let g = gen_sf(50, 2.0, 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 100);
        assert!(gen_sf(50, 2.0, 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn qsn_extremes() {
        let mut rng = seeded_rng(5);
        let g = gen_qsn_with_q(30, 1, 0.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 29);
        // every backward pair plus the forward chain
        let g = gen_qsn_with_q(30, 1, 1.0, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 30 * 29 / 2 + 29);
        let backward = g.edges().filter(|&(u, v)| u > v).count();
        assert_eq!(backward, 30 * 29 / 2);
        let g = gen_qsn(100, 5.0, 1, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 500);
        let g = gen_qsn(100, 2.0, 3, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 200);
        assert!(gen_qsn(10, 0.5, 1, &mut rng).is_err());
    }

    #[test]
    fn snapback_targets_follow_layer_spacing() {
        let c = snapback_candidates(7, 3);
        assert_eq!(c, vec![(3, 0), (4, 1), (5, 2), (6, 3), (6, 0)]);
    }

    #[test]
    fn sw_ring_degrees() {
        let ring = sw_ring(9).unwrap();
        let (ins, outs) = ring.degrees();
        assert!(ins.iter().all(|&d| d == 2) && outs.iter().all(|&d| d == 2));
        let g = gen_sw(9, 2.0, &mut seeded_rng(1)).unwrap();
        assert_eq!(g, ring);
        assert_eq!(gen_sw(100, 5.0, &mut seeded_rng(1)).unwrap().edge_count(), 500);
        assert_eq!(gen_sw(100, 1.5, &mut seeded_rng(1)).unwrap().edge_count(), 150);
        assert!(gen_sw(4, 2.0, &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn spec_kv_round_trip_and_determinism() {
        let mut spec = GenSpec::new(Topology::Qsn, 60, 3.0, 11);
        spec.qsn_rq = 2;
        let parsed = GenSpec::from_kv(&spec.to_kv()).unwrap();
        assert_eq!(parsed, spec);
        assert_eq!(spec.generate().unwrap(), parsed.generate().unwrap());
        assert!(GenSpec::from_kv("topology=er\nbogus=1\n").is_err());
        assert!(GenSpec::new(Topology::Er, 1, 0.5, 0).validate().is_err());
    }
}
