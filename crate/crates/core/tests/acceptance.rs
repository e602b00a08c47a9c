//! Acceptance checks. Each test prints one `[k] ... PASS|FAIL` line to the
//! real stdout (not the captured one) and then asserts. The tests take a
//! shared lock so timings never overlap.

mod common;

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use common::{brute_force_matching, grad_cases, random_digraph};
use ncrhok::centrality::{brandes_bc, naive_bc};
use ncrhok::controllability::{
    max_matching_size, min_driver_nodes, min_driver_nodes_undirected, simulate_attack, AttackSpec,
};
use ncrhok::graph::DirectedGraph;
use ncrhok::models::{BcGat, BcGatConfig, NcrHok, NcrHokConfig};
use ncrhok::netgen::Topology;
use ncrhok::pipeline::{
    bc_labels, benchmark_runtime, build_dataset, epoch_means, evaluate, evaluate_constant, mean_curve,
    pretrain_bc_gat, spearman, spec_grid, train_ncr_hok, DatasetConfig, TrainConfig,
};
use ncrhok::tensor::{Adam, AdamConfig, ParamStore, Tape, Tensor};
use ncrhok::seeded_rng;
use rand::Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, what: &str, pass: bool, detail: String) {
    let line = format!("[{id}] {what}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
    assert!(pass, "{line}");
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Surrogate schedule used wherever the acceptance runs pretrain it.
fn surrogate_schedule() -> TrainConfig {
    TrainConfig { epochs: 100, lr: 3e-3, decay_every: 30, ..TrainConfig::default() }
}

#[test]
fn c1_matching_oracle() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = seeded_rng(1);
    let mut mismatches = 0;
    for i in 0..500 {
        let n = 1 + i % 8;
        let p = rng.random_range(0.05..0.7);
        let g = random_digraph(&mut rng, n, p);
        if max_matching_size(&g) != brute_force_matching(&g) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "matching vs brute force",
        mismatches == 0 && secs < 10.0,
        format!("500 digraphs n<=8, {mismatches} mismatches, {secs:.2}s (limit 10s)"),
    );
}

#[test]
fn c2_driver_node_formulas() {
    let _g = serial();
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [2, 3, 7, 50] {
        let cycle = DirectedGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let c = min_driver_nodes(&cycle).unwrap();
        let e = min_driver_nodes(&DirectedGraph::new(n)).unwrap();
        pass &= c == 1 && e == n;
        notes.push(format!("n={n}: cycle {c}, edgeless {e}"));
    }
    let pair = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
    let u = min_driver_nodes_undirected(&pair).unwrap();
    pass &= u == 1;
    notes.push(format!("undirected edge {u}"));
    report(2, "driver-node formulas", pass, notes.join("; "));
}

#[test]
fn c3_betweenness_oracle() {
    let _g = serial();
    let start = Instant::now();
    let mut rng = seeded_rng(3);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 2 + i % 63;
        let p = rng.random_range(0.0..(6.0 / n as f64).min(0.9));
        let g = random_digraph(&mut rng, n, p);
        let (a, b) = (brandes_bc(&g), naive_bc(&g).unwrap());
        for (x, y) in a.0.iter().zip(&b.0) {
            worst = worst.max((x - y).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        "betweenness vs path enumeration",
        worst <= 1e-9 && secs < 30.0,
        format!("100 digraphs n<=64, max diff {worst:.2e} (tol 1e-9), {secs:.2}s (limit 30s)"),
    );
}

#[test]
fn c4_curve_invariants() {
    let _g = serial();
    let topologies = [Topology::Er, Topology::Sf, Topology::Qsn, Topology::Sw];
    let specs = spec_grid(&topologies, &[2.0, 5.0], 40, 25, 4);
    let mut curves = 0;
    let mut bad = 0;
    for (i, spec) in specs.iter().enumerate() {
        let g = spec.generate().unwrap();
        for attack in [AttackSpec::random(i as u64), AttackSpec::degree(), AttackSpec::betweenness()] {
            let c = simulate_attack(&g, &attack, Some(&brandes_bc)).unwrap().curve;
            let v = c.values();
            curves += 1;
            if !(v.iter().all(|&x| x > 0.0 && x <= 1.0) && v.last() == Some(&1.0)) {
                bad += 1;
            }
        }
    }
    report(
        4,
        "curve invariants",
        bad == 0 && specs.len() == 200,
        format!("{} graphs x 3 attacks = {curves} curves, {bad} violations", specs.len()),
    );
}

#[test]
fn c5_gradient_suite() {
    let _g = serial();
    let mut cases = grad_cases::ops();
    cases.extend(grad_cases::layers());
    cases.extend(grad_cases::models());
    let (name, worst) = cases.iter().cloned().fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let (group_err, uniform) = grad_cases::attention_groups();
    let shared = grad_cases::shared_subexpression_gradient();
    report(
        5,
        "gradient suite",
        worst <= 1e-4 && group_err <= 1e-6 && uniform && shared == 2.0,
        format!(
            "{} cases, worst rel err {worst:.2e} ({name}) (tol 1e-4); attention sums off by {group_err:.1e} \
             (tol 1e-6); zeroed context uniform: {uniform}; d(x+x)/dx = {shared}",
            cases.len()
        ),
    );
}

#[test]
fn c6_loss_and_optimizer() {
    let _g = serial();
    let store = ParamStore::new();
    let loss = |d: f64| {
        let mut tape = Tape::new(&store);
        let p = tape.constant(Tensor::scalar(d));
        let t = tape.constant(Tensor::scalar(0.0));
        let l = tape.smooth_l1(p, t).unwrap();
        tape.value(l).data()[0]
    };
    let values = [loss(0.0), loss(0.5), loss(2.0)];
    let loss_ok = values.iter().zip([0.0, 0.125, 1.5]).all(|(v, e)| (v - e).abs() <= 1e-12);

    let mut s = ParamStore::new();
    let id = s.insert("x", Tensor::scalar(1.0)).unwrap();
    let mut opt = Adam::new(AdamConfig { lr: 0.01, l2: 0.0, clip: None, ..AdamConfig::default() }, &s);
    let mut first = None;
    for step in 1..=1000 {
        let grads = {
            let mut tape = Tape::new(&s);
            let x = tape.param(id);
            let y = tape.mul(x, x).unwrap();
            let l = tape.sum(y);
            tape.backward(l).unwrap()
        };
        opt.step(&mut s, &grads).unwrap();
        if first.is_none() && s.get(id).data()[0].abs() < 1e-3 {
            first = Some(step);
        }
    }
    let x = s.get(id).data()[0];
    report(
        6,
        "smooth L1 and Adam",
        loss_ok && x.abs() < 1e-3,
        format!("smooth L1 {values:?} (expected [0, 0.125, 1.5]); Adam on x^2 from 1.0: |x| = {:.2e} after 1000 steps, first below 1e-3 at step {first:?}", x.abs()),
    );
}

#[test]
fn c7_surrogate_desk_scale() {
    let _g = serial();
    let start = Instant::now();
    let (store, _) = BcGat::init(BcGatConfig::default(), 0).unwrap();
    let sizes = BcGat::layer_sizes(&store, "");
    let topologies = [Topology::Er, Topology::Sf, Topology::Qsn, Topology::Sw];
    let train: Vec<DirectedGraph> =
        spec_grid(&topologies, &[2.0, 5.0], 100, 25, 70).iter().map(|s| s.generate().unwrap()).collect();
    let test: Vec<DirectedGraph> =
        spec_grid(&topologies, &[2.0, 5.0], 100, 5, 71).iter().map(|s| s.generate().unwrap()).collect();
    let labels: Vec<Vec<f64>> = train.iter().map(bc_labels).collect();
    let pairs: Vec<(&DirectedGraph, &[f64])> = train.iter().zip(&labels).map(|(g, l)| (g, l.as_slice())).collect();
    let out = pretrain_bc_gat(&pairs, BcGatConfig::default(), &surrogate_schedule()).unwrap();
    let (mut pred, mut truth, mut per_graph) = (Vec::new(), Vec::new(), Vec::new());
    for g in &test {
        let p = out.model.predict(&out.store, g).unwrap();
        let t = bc_labels(g);
        per_graph.extend(spearman(&p, &t).unwrap());
        pred.extend(p);
        truth.extend(t);
    }
    let rho = spearman(&pred, &truth).unwrap().unwrap_or(0.0);
    let per_graph = per_graph.iter().sum::<f64>() / per_graph.len().max(1) as f64;
    let secs = start.elapsed().as_secs_f64();
    report(
        7,
        "surrogate size and accuracy",
        sizes == [1024, 16576, 65] && rho >= 0.7 && secs < 900.0,
        format!(
            "layer sizes {sizes:?} (expected [1024, 16576, 65]); {} train / {} held-out graphs N=100; \
             pooled Spearman {rho:.4} (need >= 0.7), mean per-graph {per_graph:.4}; {secs:.0}s (limit 900s)",
            train.len(),
            test.len()
        ),
    );
}

#[test]
fn c8_end_to_end_desk_scale() {
    let _g = serial();
    let start = Instant::now();
    let topologies = [Topology::Er, Topology::Sf];
    let train = build_dataset(&DatasetConfig {
        specs: spec_grid(&topologies, &[5.0], 100, 200, 80),
        attack: AttackSpec::random(81),
        repeats: 1,
        shuffle_seed: 82,
    })
    .unwrap();
    let test = build_dataset(&DatasetConfig {
        specs: spec_grid(&topologies, &[5.0], 100, 50, 83),
        attack: AttackSpec::random(84),
        repeats: 1,
        shuffle_seed: 85,
    })
    .unwrap();
    let pairs: Vec<(&DirectedGraph, &[f64])> = train.records.iter().map(|r| (&r.graph, r.bc.as_slice())).collect();
    let bc = pretrain_bc_gat(&pairs, BcGatConfig::default(), &surrogate_schedule()).unwrap();
    let cfg = TrainConfig::default();
    let run = train_ncr_hok(&train.records, NcrHokConfig::new(100), Some((&bc.store, BcGatConfig::default())), &cfg)
        .unwrap();
    let model = evaluate(&run.model, &run.store, &test.records).unwrap();
    let baseline = evaluate_constant(&mean_curve(&train.records).unwrap(), &test.records).unwrap();
    let means = epoch_means(&run.log);
    let monotone = means.len() == cfg.epochs && means.windows(2).all(|w| w[1] <= w[0]);
    let secs = start.elapsed().as_secs_f64();
    let cohorts: Vec<String> = model
        .cohorts
        .iter()
        .zip(&baseline.cohorts)
        .map(|(m, b)| format!("{} {:.4} vs {:.4}", m.cohort.topology, m.metrics.er_bar, b.metrics.er_bar))
        .collect();
    let means_text: Vec<String> = means.iter().map(|m| format!("{m:.5}")).collect();
    report(
        8,
        "end-to-end training",
        model.overall.er_bar < baseline.overall.er_bar && monotone && secs < 3600.0,
        format!(
            "{} train / {} test graphs; er {:.4} vs mean-curve {:.4} ({}); epoch means [{}] monotone: {monotone}; \
             {secs:.0}s (limit 3600s)",
            train.records.len(),
            test.records.len(),
            model.overall.er_bar,
            baseline.overall.er_bar,
            cohorts.join(", "),
            means_text.join(", ")
        ),
    );
}

#[test]
fn c9_runtime_ratio() {
    let _g = serial();
    let n = 500;
    let graphs: Vec<DirectedGraph> = spec_grid(&[Topology::Er, Topology::Sf], &[5.0], n, 2, 90)
        .iter()
        .map(|s| s.generate().unwrap())
        .collect();
    let refs: Vec<&DirectedGraph> = graphs.iter().collect();
    let (bc_store, _) = BcGat::init(BcGatConfig::default(), 0).unwrap();
    let (store, model) = NcrHok::init(NcrHokConfig::new(n), Some((&bc_store, BcGatConfig::default())), 0).unwrap();
    let r = benchmark_runtime(&refs, &model, &store, &AttackSpec::random(91), 5, refs.len()).unwrap();
    report(
        9,
        "prediction vs simulation runtime",
        r.prediction * 10.0 <= r.simulation,
        format!(
            "N={n}, {} graphs, median of {} runs: simulation {:.4}s/graph, prediction {:.4}s/graph, speedup {:.2}x (need >= 10x)",
            r.graphs,
            r.runs,
            r.simulation,
            r.prediction,
            r.speedup()
        ),
    );
}
