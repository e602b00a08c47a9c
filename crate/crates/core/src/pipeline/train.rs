use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::dataset::Record;
use crate::controllability::curve_metrics;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::models::{BcGat, BcGatConfig, GraphInput, NcrHok, NcrHokConfig};
use crate::tensor::{Adam, AdamConfig, Gradients, LrSchedule, ParamStore, Tape, Tensor};
use crate::{derive_seed, seeded_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Learning-rate multiplier applied every `decay_every` epochs.
    pub decay: f64,
    pub decay_every: usize,
    pub l2: f64,
    pub clip: f64,
    /// Graphs per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            lr: 1e-3,
            decay: 0.5,
            decay_every: 3,
            l2: 1e-6,
            clip: 0.8,
            batch_size: 8,
            seed: 0,
            val_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.decay > 0.0
            && self.l2 >= 0.0
            && self.clip > 0.0
            && self.batch_size > 0
            && (0.0..1.0).contains(&self.val_fraction);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training configuration {self:?}")))
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, l2: self.l2, clip: Some(self.clip), ..AdamConfig::default() }
    }

    fn schedule(&self) -> LrSchedule {
        LrSchedule { factor: self.decay, every: self.decay_every }
    }
}

/// One row of the training log. `val_er` is set on the last batch of an
/// epoch when a validation split exists.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
    pub val_er: Option<f64>,
}

pub fn write_log<W: Write>(mut w: W, rows: &[LogRow]) -> Result<()> {
    writeln!(w, "epoch,batch,loss,val_er")?;
    for r in rows {
        let val = r.val_er.map(|v| format!("{v:.12}")).unwrap_or_default();
        writeln!(w, "{},{},{:.12},{}", r.epoch, r.batch, r.loss, val)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean loss of every epoch, in order.
pub fn epoch_means(log: &[LogRow]) -> Vec<f64> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for r in log {
        if out.len() <= r.epoch {
            out.resize(r.epoch + 1, (0.0, 0));
        }
        out[r.epoch].0 += r.loss;
        out[r.epoch].1 += 1;
    }
    out.into_iter().map(|(s, c)| s / c.max(1) as f64).collect()
}

/// Batches are drawn once per run and replayed every epoch, so consecutive
/// epoch means compare the same batches in the same order.
fn batches(len: usize, batch: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut seeded_rng(derive_seed(seed, 0)));
    order.chunks(batch).map(<[usize]>::to_vec).collect()
}

fn check_loss(loss: f64, epoch: usize, batch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("loss became {loss} at epoch {epoch}, batch {batch}")))
    }
}

pub struct BcTraining {
    pub store: ParamStore,
    pub model: BcGat,
    pub log: Vec<LogRow>,
}

/// Fits the betweenness surrogate by per-node MSE against `labels`
/// (normalized betweenness, one vector per graph).
pub fn pretrain_bc_gat(
    graphs: &[(&DirectedGraph, &[f64])],
    bc_config: BcGatConfig,
    cfg: &TrainConfig,
) -> Result<BcTraining> {
    cfg.validate()?;
    for (i, (g, l)) in graphs.iter().enumerate() {
        if l.len() != g.n() {
            return Err(Error::Record {
                index: i,
                source: Box::new(Error::ModelShape(format!("{} labels for {} nodes", l.len(), g.n()))),
            });
        }
    }
    let (mut store, model) = BcGat::init(bc_config, cfg.seed)?;
    let inputs: Vec<_> = graphs
        .iter()
        .map(|(g, l)| (model.neighborhood(g), BcGat::input(g), Tensor::column(l.to_vec())))
        .collect();
    let mut opt = Adam::new(cfg.adam(), &store);
    let schedule = cfg.schedule();
    let mut log = Vec::new();
    let plan = batches(inputs.len(), cfg.batch_size, cfg.seed);
    for epoch in 0..cfg.epochs {
        opt.set_lr(schedule.lr_at(cfg.lr, epoch));
        for (b, batch) in plan.iter().enumerate() {
            let (loss, grads) = {
                let mut tape = Tape::new(&store);
                let mut preds = Vec::with_capacity(batch.len());
                let mut targets = Vec::with_capacity(batch.len());
                for &i in batch {
                    let (nb, x, y) = &inputs[i];
                    let x = tape.constant(x.clone());
                    preds.push(model.forward(&mut tape, x, nb)?);
                    targets.push(tape.constant(y.clone()));
                }
                let p = tape.concat_rows(&preds)?;
                let t = tape.concat_rows(&targets)?;
                let loss = tape.mse(p, t)?;
                (tape.value(loss).data()[0], tape.backward(loss)?)
            };
            check_loss(loss, epoch, b)?;
            opt.step(&mut store, &grads)?;
            log.push(LogRow { epoch, batch: b, loss, val_er: None });
        }
        log::info!("surrogate epoch {epoch}: mean loss {:.6}", epoch_means(&log)[epoch]);
    }
    Ok(BcTraining { store, model, log })
}

pub struct CurveTraining {
    pub store: ParamStore,
    pub model: NcrHok,
    pub log: Vec<LogRow>,
    /// Epoch whose parameters were kept; `None` when no epoch ran or there
    /// is no validation split (then the final parameters are returned).
    pub best_epoch: Option<usize>,
    pub best_val_er: Option<f64>,
}

/// Prepares per-graph inputs in parallel, preserving order.
pub fn prepare_inputs(model: &NcrHok, store: &ParamStore, graphs: &[&DirectedGraph]) -> Result<Vec<GraphInput>> {
    graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| model.prepare(store, g).map_err(|e| Error::Record { index: i, source: Box::new(e) }))
        .collect()
}

/// Mean absolute curve error of `model` on prepared inputs.
fn validation_er(model: &NcrHok, store: &ParamStore, inputs: &[GraphInput], truth: &[&[f64]], batch: usize) -> Result<f64> {
    let mut preds = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch) {
        let refs: Vec<&GraphInput> = chunk.iter().collect();
        preds.extend(model.predict_prepared(store, &refs)?);
    }
    Ok(curve_metrics(truth, &preds)?.er_bar)
}

/// Trains the curve predictor with smooth-L1 loss. The last
/// `cfg.val_fraction` of `records` is held out; the parameters with the
/// lowest validation error are returned.
pub fn train_ncr_hok(
    records: &[Record],
    model_config: NcrHokConfig,
    bc_gat: Option<(&ParamStore, BcGatConfig)>,
    cfg: &TrainConfig,
) -> Result<CurveTraining> {
    cfg.validate()?;
    for (i, r) in records.iter().enumerate() {
        if r.graph.node_count() != model_config.n {
            return Err(Error::Record {
                index: i,
                source: Box::new(Error::ModelShape(format!(
                    "graph has {} nodes, model is built for {}",
                    r.graph.node_count(),
                    model_config.n
                ))),
            });
        }
    }
    let (mut store, model) = NcrHok::init(model_config, bc_gat, cfg.seed)?;
    if cfg.epochs == 0 {
        return Ok(CurveTraining { store, model, log: Vec::new(), best_epoch: None, best_val_er: None });
    }
    let (train, val) = records.split_at(records.len() - super::holdout_len(records.len(), cfg.val_fraction));
    let graphs: Vec<&DirectedGraph> = records.iter().map(|r| &r.graph).collect();
    let inputs = prepare_inputs(&model, &store, &graphs)?;
    let (train_inputs, val_inputs) = inputs.split_at(train.len());
    let val_truth: Vec<&[f64]> = val.iter().map(|r| r.curve.values()).collect();
    let curve_len = model_config.curve_len();

    let mut opt = Adam::new(cfg.adam(), &store);
    let schedule = cfg.schedule();
    let mut log = Vec::new();
    let mut best: Option<(usize, f64, ParamStore)> = None;
    let plan = batches(train.len(), cfg.batch_size, cfg.seed);
    for epoch in 0..cfg.epochs {
        opt.set_lr(schedule.lr_at(cfg.lr, epoch));
        for (b, batch) in plan.iter().enumerate() {
            let (loss, grads): (f64, Gradients) = {
                let mut tape = Tape::new(&store);
                let refs: Vec<&GraphInput> = batch.iter().map(|&i| &train_inputs[i]).collect();
                let pred = model.forward(&mut tape, &refs)?;
                let mut target = Vec::with_capacity(batch.len() * curve_len);
                for &i in batch {
                    target.extend_from_slice(train[i].curve.values());
                }
                let target = tape.constant(Tensor::matrix(batch.len(), curve_len, target)?);
                let loss = tape.smooth_l1(pred, target)?;
                (tape.value(loss).data()[0], tape.backward(loss)?)
            };
            check_loss(loss, epoch, b)?;
            opt.step(&mut store, &grads)?;
            log.push(LogRow { epoch, batch: b, loss, val_er: None });
        }
        let mean = epoch_means(&log)[epoch];
        if !val.is_empty() {
            let er = validation_er(&model, &store, val_inputs, &val_truth, cfg.batch_size)?;
            if let Some(last) = log.last_mut() {
                last.val_er = Some(er);
            }
            log::info!("epoch {epoch}: mean loss {mean:.6}, validation error {er:.6}");
            if best.as_ref().is_none_or(|(_, b, _)| er < *b) {
                best = Some((epoch, er, store.clone()));
            }
        } else {
            log::info!("epoch {epoch}: mean loss {mean:.6}");
        }
    }
    let (store, best_epoch, best_val_er) = match best {
        Some((e, er, s)) => (s, Some(e), Some(er)),
        None => (store, None, None),
    };
    Ok(CurveTraining { store, model, log, best_epoch, best_val_er })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_mean_bookkeeping() {
        let log = vec![
            LogRow { epoch: 0, batch: 0, loss: 1.0, val_er: None },
            LogRow { epoch: 0, batch: 1, loss: 3.0, val_er: None },
            LogRow { epoch: 1, batch: 0, loss: 0.5, val_er: Some(0.1) },
        ];
        assert_eq!(epoch_means(&log), vec![2.0, 0.5]);
        let mut buf = Vec::new();
        write_log(&mut buf, &log).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epoch,batch,loss,val_er\n0,0,1.000000000000,\n"));
        assert!(text.ends_with("1,0,0.500000000000,0.100000000000\n"));
    }

    #[test]
    fn batches_cover_everything_once() {
        let b = batches(10, 4, 1);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_ne!(batches(10, 4, 1), batches(10, 4, 2));
    }
}
