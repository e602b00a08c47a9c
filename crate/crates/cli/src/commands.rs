use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ncrhok::centrality::brandes_bc;
use ncrhok::controllability::{
    read_curves, simulate_attack_repeated, write_curves, AttackKind, AttackSpec, BcProvider, CurveRow,
};
use ncrhok::graph::{load_edge_list, save_edge_list, DirectedGraph};
use ncrhok::models::{BcGat, BcGatConfig, NcrHok, NcrHokConfig};
use ncrhok::netgen::GenSpec;
use ncrhok::pipeline::{
    benchmark_runtime, evaluate_curves, graph_file, predict_all, pretrain_bc_gat, read_specs, simulate_dataset,
    specs_manifest_text, train_ncr_hok, write_log, write_report, Cohort, Dataset, DatasetConfig, TrainConfig,
};
use ncrhok::derive_seed;
use rayon::prelude::*;

use crate::{
    BenchArgs, CliError, Command, EvalArgs, GenerateArgs, OptimArgs, PredictArgs, PretrainArgs, SeedArg, SimulateArgs,
    TrainArgs,
};

type Result<T> = std::result::Result<T, CliError>;

const SEED_ENV: &str = "NCRHOK_SEED";
const MANIFEST: &str = "manifest.txt";

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::PretrainBc(a) => pretrain(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    }
}

impl SeedArg {
    fn resolve(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a u64 seed"))),
            Err(_) => Ok(0),
        }
    }
}

/// A buffered file, or stdout when no path is given.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Reads an edge list, naming the file in any error.
fn load_graph(path: &Path) -> Result<DirectedGraph> {
    load_edge_list(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn bc_provider(kind: AttackKind) -> Option<BcProvider<'static>> {
    let f: BcProvider<'static> = &brandes_bc;
    (kind == AttackKind::Betweenness).then_some(f)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let seed = a.seed.resolve()?;
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let specs: Vec<GenSpec> = (0..a.count)
        .map(|i| GenSpec {
            sf_beta: a.sf_beta,
            sf_theta: a.sf_theta,
            qsn_rq: a.qsn_rq,
            qsn_q: a.qsn_q,
            ..GenSpec::new(a.topology, a.n, a.k_avg, derive_seed(seed, i as u64))
        })
        .collect();
    let graphs: Vec<DirectedGraph> = specs.par_iter().map(GenSpec::generate).collect::<ncrhok::Result<_>>()?;
    let dir = a.out.join("graphs");
    fs::create_dir_all(&dir)?;
    let mut out = sink(None)?;
    for (i, g) in graphs.iter().enumerate() {
        let path = dir.join(graph_file(i));
        save_edge_list(g, &path)?;
        writeln!(out, "{}", path.display())?;
    }
    fs::write(a.out.join(MANIFEST), specs_manifest_text(&specs))?;
    out.flush()?;
    log::info!("wrote {} graphs to {}", graphs.len(), dir.display());
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let seed = a.seed.resolve()?;
    let attack = AttackSpec { recompute: !a.no_recompute, ..AttackSpec::new(a.attack, seed) };
    if a.input.is_dir() {
        let specs = read_specs(BufReader::new(File::open(a.input.join(MANIFEST))?))?;
        let graphs = (0..specs.len())
            .map(|i| load_graph(&a.input.join("graphs").join(graph_file(i))))
            .collect::<Result<Vec<_>>>()?;
        let config = DatasetConfig { specs, attack, repeats: a.repeats, shuffle_seed: seed };
        let dataset = simulate_dataset(&config, graphs)?;
        let out = a.out.unwrap_or(a.input);
        dataset.save(&out)?;
        writeln!(io::stdout().lock(), "{}", out.join("curves.csv").display())?;
        return Ok(());
    }
    let g = load_graph(&a.input)?;
    let curve = simulate_attack_repeated(&g, &attack, a.repeats, bc_provider(a.attack))?;
    let name = a.input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let row = CurveRow::new(curve.values().to_vec())
        .with("graph", name)
        .with("n", g.node_count())
        .with("attack", a.attack)
        .with("repeats", a.repeats)
        .with("seed", seed);
    write_curves(sink(a.out.as_deref())?, &[row])?;
    Ok(())
}

fn train_config(o: &OptimArgs, val_fraction: Option<f64>) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        epochs: o.epochs.unwrap_or(d.epochs),
        lr: o.lr.unwrap_or(d.lr),
        decay: o.decay.unwrap_or(d.decay),
        decay_every: o.decay_every.unwrap_or(d.decay_every),
        l2: o.l2.unwrap_or(d.l2),
        clip: o.clip.unwrap_or(d.clip),
        batch_size: o.batch_size.unwrap_or(d.batch_size),
        seed: o.seed.resolve()?,
        val_fraction: val_fraction.unwrap_or(d.val_fraction),
    })
}

fn write_training_log(path: Option<&PathBuf>, log: &[ncrhok::pipeline::LogRow]) -> Result<()> {
    if let Some(p) = path {
        write_log(BufWriter::new(File::create(p)?), log)?;
    }
    Ok(())
}

fn pretrain(a: PretrainArgs) -> Result<()> {
    let cfg = train_config(&a.optim, None)?;
    let data = Dataset::load(&a.data)?;
    let pairs: Vec<(&DirectedGraph, &[f64])> = data.records.iter().map(|r| (&r.graph, r.bc.as_slice())).collect();
    let bc_config = BcGatConfig { heads: a.heads, hidden: a.hidden, neighbors: a.neighbors, self_loops: a.self_loops };
    let fit = pretrain_bc_gat(&pairs, bc_config, &cfg)?;
    fit.model.save(&fit.store, &a.out)?;
    write_training_log(a.optim.log.as_ref(), &fit.log)?;
    writeln!(io::stdout().lock(), "{}", fit.store.hash_hex())?;
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = train_config(&a.optim, a.val_fraction)?;
    let data = Dataset::load(&a.data)?;
    let n = data
        .node_count()
        .ok_or_else(|| ncrhok::Error::Config("dataset graphs differ in node count".into()))?;
    let surrogate = a.bc.as_ref().map(BcGat::load).transpose()?;
    let model_config = NcrHokConfig {
        d_feat: a.d_feat,
        d_model: a.d_model,
        gat_heads: a.gat_heads,
        k_hop: a.k_hop,
        k_nn: a.k_nn,
        mlp_hidden: a.mlp_hidden,
        use_bc: surrogate.is_some(),
        hgnn: a.hgnn,
        ..NcrHokConfig::new(n)
    };
    let bc = surrogate.as_ref().map(|(store, m)| (store, m.config));
    let fit = train_ncr_hok(&data.records, model_config, bc, &cfg)?;
    if let (Some(epoch), Some(er)) = (fit.best_epoch, fit.best_val_er) {
        log::info!("kept epoch {epoch} with validation error {er:.6}");
    }
    fit.model.save(&fit.store, &a.out)?;
    write_training_log(a.optim.log.as_ref(), &fit.log)?;
    writeln!(io::stdout().lock(), "{}", fit.store.hash_hex())?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let (store, model) = NcrHok::load(&a.model)?;
    let rows = match (&a.graph, &a.data) {
        (Some(path), _) => {
            let g = load_graph(path)?;
            let p = predict_all(&model, &store, &[&g], 1)?.remove(0);
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            vec![CurveRow::new(p).with("graph", name).with("n", g.node_count())]
        }
        (None, Some(dir)) => {
            let data = Dataset::load(dir)?;
            let graphs: Vec<&DirectedGraph> = data.records.iter().map(|r| &r.graph).collect();
            let preds = predict_all(&model, &store, &graphs, a.batch)?;
            data.records.iter().zip(preds).map(|(r, p)| r.curve_row(p)).collect()
        }
        (None, None) => return Err(CliError::Usage("predict needs --graph or --data".into())),
    };
    write_curves(sink(a.out.as_deref())?, &rows)?;
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<CurveRow>> {
    Ok(read_curves(BufReader::new(File::open(path)?))?)
}

fn cohort(row: &CurveRow, index: usize) -> Result<Cohort> {
    let get = |key: &str| {
        row.get(key)
            .ok_or_else(|| CliError::Usage(format!("truth row {index} has no {key} metadata")))
    };
    Ok(Cohort { topology: get("topology")?.parse()?, k_avg: get("k_avg")?.to_string(), attack: get("attack")?.parse()? })
}

fn eval(a: EvalArgs) -> Result<()> {
    let truth = read_rows(&a.truth)?;
    let pred = read_rows(&a.pred)?;
    if truth.len() != pred.len() {
        return Err(CliError::Usage(format!("{} predicted rows for {} simulated rows", pred.len(), truth.len())));
    }
    for (i, (t, p)) in truth.iter().zip(&pred).enumerate() {
        if let (Some(x), Some(y)) = (t.get("id"), p.get("id")) {
            if x != y {
                return Err(CliError::Usage(format!("row {i}: predicted id {y} does not match simulated id {x}")));
            }
        }
    }
    let cohorts = truth.iter().enumerate().map(|(i, r)| cohort(r, i)).collect::<Result<Vec<_>>>()?;
    let tv: Vec<&[f64]> = truth.iter().map(|r| r.values.as_slice()).collect();
    let pv: Vec<&[f64]> = pred.iter().map(|r| r.values.as_slice()).collect();
    let report = evaluate_curves(&cohorts, &tv, &pv)?;
    write_report(sink(a.out.as_deref())?, &report)?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let data = Dataset::load(&a.data)?;
    let (store, model) = NcrHok::load(&a.model)?;
    let take = a.limit.unwrap_or(data.records.len()).min(data.records.len());
    let graphs: Vec<&DirectedGraph> = data.records[..take].iter().map(|r| &r.graph).collect();
    let report = benchmark_runtime(&graphs, &model, &store, &data.config.attack, a.runs, a.batch)?;
    report.write_csv(sink(None)?)?;
    log::info!("prediction is {:.2}x faster than simulation", report.speedup());
    Ok(())
}
