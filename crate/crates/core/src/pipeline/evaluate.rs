use std::collections::BTreeMap;
use std::io::Write;

use super::dataset::Record;
use super::train::prepare_inputs;
use crate::controllability::{curve_metrics, AttackKind, CurveMetrics};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::models::{GraphInput, NcrHok};
use crate::netgen::Topology;
use crate::tensor::ParamStore;

/// Report grouping: topology, average degree (as written) and attack.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cohort {
    pub topology: Topology,
    pub k_avg: String,
    pub attack: AttackKind,
}

impl Cohort {
    pub fn of(r: &Record) -> Self {
        Cohort { topology: r.spec.topology, k_avg: r.spec.k_avg.to_string(), attack: r.attack }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortReport {
    pub cohort: Cohort,
    pub graphs: usize,
    pub metrics: CurveMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub overall: CurveMetrics,
    /// Cohorts in sorted order.
    pub cohorts: Vec<CohortReport>,
}

/// Metrics over all rows and per cohort.
pub fn evaluate_curves<T: AsRef<[f64]>, P: AsRef<[f64]>>(cohorts: &[Cohort], tv: &[T], pv: &[P]) -> Result<Evaluation> {
    if cohorts.len() != tv.len() {
        return Err(Error::invalid(format!("{} cohort keys for {} curves", cohorts.len(), tv.len())));
    }
    let overall = curve_metrics(tv, pv)?;
    let mut groups: BTreeMap<&Cohort, Vec<usize>> = BTreeMap::new();
    for (i, c) in cohorts.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    let mut reports = Vec::with_capacity(groups.len());
    for (cohort, idx) in groups {
        let t: Vec<&[f64]> = idx.iter().map(|&i| tv[i].as_ref()).collect();
        let p: Vec<&[f64]> = idx.iter().map(|&i| pv[i].as_ref()).collect();
        reports.push(CohortReport { cohort: cohort.clone(), graphs: idx.len(), metrics: curve_metrics(&t, &p)? });
    }
    Ok(Evaluation { overall, cohorts: reports })
}

/// Predicted curves for `graphs`, `batch` graphs per forward pass.
pub fn predict_all(model: &NcrHok, store: &ParamStore, graphs: &[&DirectedGraph], batch: usize) -> Result<Vec<Vec<f64>>> {
    let inputs = prepare_inputs(model, store, graphs)?;
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch.max(1)) {
        let refs: Vec<&GraphInput> = chunk.iter().collect();
        out.extend(model.predict_prepared(store, &refs)?);
    }
    Ok(out)
}

/// Predicts every test record and scores it against the simulated curve.
pub fn evaluate(model: &NcrHok, store: &ParamStore, test: &[Record]) -> Result<Evaluation> {
    let graphs: Vec<&DirectedGraph> = test.iter().map(|r| &r.graph).collect();
    let preds = predict_all(model, store, &graphs, 8)?;
    let truth: Vec<&[f64]> = test.iter().map(|r| r.curve.values()).collect();
    let cohorts: Vec<Cohort> = test.iter().map(Cohort::of).collect();
    evaluate_curves(&cohorts, &truth, &preds)
}

/// Position-wise mean of the training curves, the constant baseline.
pub fn mean_curve(records: &[Record]) -> Result<Vec<f64>> {
    let first = records.first().ok_or_else(|| Error::invalid("mean curve of no records"))?;
    let len = first.curve.len();
    let mut sum = vec![0.0; len];
    for r in records {
        if r.curve.len() != len {
            return Err(Error::ModelShape(format!("curve length {} differs from {len}", r.curve.len())));
        }
        sum.iter_mut().zip(r.curve.values()).for_each(|(s, v)| *s += v);
    }
    Ok(sum.into_iter().map(|s| s / records.len() as f64).collect())
}

/// Scores the constant prediction `curve` on every test record.
pub fn evaluate_constant(curve: &[f64], test: &[Record]) -> Result<Evaluation> {
    let truth: Vec<&[f64]> = test.iter().map(|r| r.curve.values()).collect();
    let preds = vec![curve; test.len()];
    let cohorts: Vec<Cohort> = test.iter().map(Cohort::of).collect();
    evaluate_curves(&cohorts, &truth, &preds)
}

/// CSV with one row per cohort: `topology,k_avg,attack,graphs,er_bar,sigma_bar`.
pub fn write_report<W: Write>(mut w: W, eval: &Evaluation) -> Result<()> {
    writeln!(w, "topology,k_avg,attack,graphs,er_bar,sigma_bar")?;
    for c in &eval.cohorts {
        writeln!(
            w,
            "{},{},{},{},{:.12},{:.12}",
            c.cohort.topology, c.cohort.k_avg, c.cohort.attack, c.graphs, c.metrics.er_bar, c.metrics.sigma_bar
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
/// `None` when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(format!("rank correlation of {} vs {} values", a.len(), b.len())));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - mean) * (y - mean);
        saa += (x - mean) * (x - mean);
        sbb += (y - mean) * (y - mean);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some(sab / (saa * sbb).sqrt()))
}
