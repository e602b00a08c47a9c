use std::io::Write;
use std::time::Instant;

use crate::centrality::brandes_bc;
use crate::controllability::{simulate_attack, AttackKind, AttackSpec, BcProvider};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::models::NcrHok;
use crate::tensor::ParamStore;

use super::evaluate::predict_all;

/// Median seconds per graph for both methods.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub n: usize,
    pub graphs: usize,
    pub runs: usize,
    pub simulation: f64,
    pub prediction: f64,
}

impl BenchReport {
    /// Simulation time over prediction time.
    pub fn speedup(&self) -> f64 {
        self.simulation / self.prediction
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "method,n,graphs,runs,seconds_per_graph")?;
        writeln!(w, "simulation,{},{},{},{:.9}", self.n, self.graphs, self.runs, self.simulation)?;
        writeln!(w, "prediction,{},{},{},{:.9}", self.n, self.graphs, self.runs, self.prediction)?;
        w.flush()?;
        Ok(())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Median over `runs` timed passes (after one untimed warm-up pass) of the
/// per-graph wall-clock time, `f` being applied to every graph in turn.
pub fn time_per_graph<F>(graphs: &[&DirectedGraph], runs: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&DirectedGraph) -> Result<()>,
{
    time_passes(graphs.len(), runs, || graphs.iter().try_for_each(|g| f(g)))
}

/// Median of `runs` timed calls of `pass` (after one warm-up), divided by
/// the `graphs` one pass covers.
fn time_passes<F>(graphs: usize, runs: usize, mut pass: F) -> Result<f64>
where
    F: FnMut() -> Result<()>,
{
    if graphs == 0 || runs == 0 {
        return Err(Error::invalid("timing needs at least one graph and one run"));
    }
    pass()?;
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        pass()?;
        samples.push(start.elapsed().as_secs_f64() / graphs as f64);
    }
    Ok(median(samples))
}

/// Times one attack simulation against one model prediction per graph. The
/// prediction covers surrogate inference, both hypergraph constructions and
/// the forward pass, with `batch` graphs sharing each forward pass.
pub fn benchmark_runtime(
    graphs: &[&DirectedGraph],
    model: &NcrHok,
    store: &ParamStore,
    attack: &AttackSpec,
    runs: usize,
    batch: usize,
) -> Result<BenchReport> {
    let runs = runs.max(5);
    let bc: BcProvider = &brandes_bc;
    let bc_fn = (attack.kind == AttackKind::Betweenness).then_some(bc);
    let simulation = time_per_graph(graphs, runs, |g| simulate_attack(g, attack, bc_fn).map(drop))?;
    let prediction = time_passes(graphs.len(), runs, || predict_all(model, store, graphs, batch).map(drop))?;
    Ok(BenchReport { n: model.config.n, graphs: graphs.len(), runs, simulation, prediction })
}
