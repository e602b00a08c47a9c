use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::centrality::brandes_bc;
use crate::controllability::{
    read_curves, simulate_attack_repeated, write_curves, AttackKind, AttackSpec, BcProvider, CurveRow,
    DegreeCriterion, RobustnessCurve,
};
use crate::error::{Error, Result};
use crate::graph::{load_edge_list, save_edge_list, DirectedGraph};
use crate::netgen::{GenSpec, Topology};
use crate::{derive_seed, seeded_rng};

pub const MANIFEST_FORMAT: u32 = 1;

/// One generated graph with its simulated curve and betweenness labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Position of the generating spec in the manifest.
    pub id: usize,
    pub spec: GenSpec,
    pub attack: AttackKind,
    pub graph: DirectedGraph,
    pub curve: RobustnessCurve,
    /// Min-max normalized betweenness per node.
    pub bc: Vec<f64>,
}

impl Record {
    pub fn graph_file(&self) -> String {
        graph_file(self.id)
    }

    /// `values` tagged with this record's id, graph file, topology, n,
    /// average degree and attack.
    pub fn curve_row(&self, values: Vec<f64>) -> CurveRow {
        CurveRow::new(values)
            .with("id", self.id)
            .with("graph", self.graph_file())
            .with("topology", self.spec.topology)
            .with("n", self.spec.n)
            .with("k_avg", self.spec.k_avg)
            .with("attack", self.attack)
    }
}

/// File name of graph `id` inside a dataset's `graphs/` directory.
pub fn graph_file(id: usize) -> String {
    format!("g{id:05}.edges")
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub specs: Vec<GenSpec>,
    pub attack: AttackSpec,
    /// Random-attack orders averaged per graph.
    pub repeats: usize,
    pub shuffle_seed: u64,
}

/// Records in shuffled order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub records: Vec<Record>,
}

/// `per_cell` specs for every (topology, degree) pair, each with its own
/// derived seed, in grid order.
pub fn spec_grid(topologies: &[Topology], k_avgs: &[f64], n: usize, per_cell: usize, seed: u64) -> Vec<GenSpec> {
    let mut specs = Vec::with_capacity(topologies.len() * k_avgs.len() * per_cell);
    for &t in topologies {
        for &k in k_avgs {
            for _ in 0..per_cell {
                let idx = specs.len() as u64;
                specs.push(GenSpec::new(t, n, k, derive_seed(seed, idx)));
            }
        }
    }
    specs
}

fn brandes_provider() -> BcProvider<'static> {
    &brandes_bc
}

/// Generates every graph, simulates its curve under `config.attack` and
/// shuffles the records. Random attacks use a per-record seed derived from
/// the attack seed and the record id. Records are processed in parallel.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    if config.specs.is_empty() {
        return Err(Error::invalid("dataset needs at least one graph spec"));
    }
    let graphs: Vec<DirectedGraph> = config
        .specs
        .par_iter()
        .enumerate()
        .map(|(id, spec)| spec.generate().map_err(|e| Error::Record { index: id, source: Box::new(e) }))
        .collect::<Result<_>>()?;
    simulate_dataset(config, graphs)
}

/// Like [`build_dataset`] for graphs already on hand, `graphs[i]` standing
/// for `config.specs[i]`.
pub fn simulate_dataset(config: &DatasetConfig, graphs: Vec<DirectedGraph>) -> Result<Dataset> {
    if config.specs.is_empty() || graphs.len() != config.specs.len() {
        return Err(Error::invalid(format!("{} graphs for {} specs", graphs.len(), config.specs.len())));
    }
    let mut records: Vec<Record> = graphs
        .into_par_iter()
        .zip(config.specs.par_iter())
        .enumerate()
        .map(|(id, (graph, spec))| {
            build_record(id, spec, graph, &config.attack, config.repeats)
                .map_err(|e| Error::Record { index: id, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    records.shuffle(&mut seeded_rng(config.shuffle_seed));
    log::info!("built {} records", records.len());
    Ok(Dataset { config: config.clone(), records })
}

fn build_record(id: usize, spec: &GenSpec, graph: DirectedGraph, attack: &AttackSpec, repeats: usize) -> Result<Record> {
    let spec_attack = AttackSpec { seed: derive_seed(attack.seed, id as u64), ..attack.clone() };
    let bc_fn = (attack.kind == AttackKind::Betweenness).then(brandes_provider);
    let curve = simulate_attack_repeated(&graph, &spec_attack, repeats, bc_fn)?;
    let bc = bc_labels(&graph);
    Ok(Record { id, spec: spec.clone(), attack: attack.kind, graph, curve, bc })
}

impl Dataset {
    /// Common node count, if all records share one.
    pub fn node_count(&self) -> Option<usize> {
        let n = self.records.first()?.graph.node_count();
        self.records.iter().all(|r| r.graph.node_count() == n).then_some(n)
    }

    pub fn manifest_text(&self) -> String {
        let c = &self.config;
        let degree = match c.attack.degree {
            DegreeCriterion::Total => "total",
            DegreeCriterion::Out => "out",
        };
        let mut s = format!("format={MANIFEST_FORMAT}\n");
        s.push_str(&format!("attack={}\n", c.attack.kind));
        s.push_str(&format!("recompute={}\n", c.attack.recompute));
        s.push_str(&format!("attack_seed={}\n", c.attack.seed));
        s.push_str(&format!("degree={degree}\n"));
        s.push_str(&format!("repeats={}\n", c.repeats));
        s.push_str(&format!("shuffle_seed={}\n", c.shuffle_seed));
        s.push_str(&spec_lines(&c.specs));
        s
    }

    /// Writes `manifest.txt`, `graphs/*.edges`, `curves.csv` and
    /// `labels_bc.csv` (rows in record order).
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("graphs"))?;
        fs::write(dir.join("manifest.txt"), self.manifest_text())?;
        for r in &self.records {
            save_edge_list(&r.graph, dir.join("graphs").join(r.graph_file()))?;
        }
        let curves: Vec<CurveRow> = self.records.iter().map(|r| r.curve_row(r.curve.values().to_vec())).collect();
        write_curves(BufWriter::new(File::create(dir.join("curves.csv"))?), &curves)?;
        let labels: Vec<CurveRow> = self.records.iter().map(|r| r.curve_row(r.bc.clone())).collect();
        write_curves(BufWriter::new(File::create(dir.join("labels_bc.csv"))?), &labels)?;
        Ok(())
    }

    /// Reads a directory written by [`Dataset::save`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Dataset> {
        let dir = dir.as_ref();
        let config = read_manifest(BufReader::new(File::open(dir.join("manifest.txt"))?))?;
        let curves = read_curves(BufReader::new(File::open(dir.join("curves.csv"))?))?;
        let labels = read_curves(BufReader::new(File::open(dir.join("labels_bc.csv"))?))?;
        if curves.len() != labels.len() {
            return Err(Error::invalid("curves.csv and labels_bc.csv have different row counts"));
        }
        let mut records = Vec::with_capacity(curves.len());
        for (index, (c, l)) in curves.into_iter().zip(labels).enumerate() {
            let wrap = |e: Error| Error::Record { index, source: Box::new(e) };
            let id: usize = c
                .get("id")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| wrap(Error::invalid("curve row without an id")))?;
            if l.get("id") != c.get("id") {
                return Err(wrap(Error::invalid("label row does not match curve row")));
            }
            let spec = config.specs.get(id).ok_or_else(|| wrap(Error::invalid(format!("id {id} not in manifest"))))?;
            let graph = load_edge_list(dir.join("graphs").join(graph_file(id))).map_err(wrap)?;
            if l.values.len() != graph.n() {
                return Err(wrap(Error::invalid("label length differs from node count")));
            }
            let curve = RobustnessCurve::new(c.values).map_err(wrap)?;
            records.push(Record { id, spec: spec.clone(), attack: config.attack.kind, graph, curve, bc: l.values });
        }
        Ok(Dataset { config, records })
    }

    /// Splits off the last `fraction` of records (at least one when there
    /// are two or more records and `fraction > 0`).
    pub fn split(&self, fraction: f64) -> (&[Record], &[Record]) {
        let k = super::holdout_len(self.records.len(), fraction);
        self.records.split_at(self.records.len() - k)
    }
}

fn spec_lines(specs: &[GenSpec]) -> String {
    let mut s = format!("records={}\n", specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let kv = spec.to_kv();
        let flat: Vec<&str> = kv.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        s.push_str(&format!("spec.{i}={}\n", flat.join(" ")));
    }
    s
}

/// Manifest of generated graphs that have no curves yet. [`read_specs`]
/// reads it back, as it does a full dataset manifest.
pub fn specs_manifest_text(specs: &[GenSpec]) -> String {
    format!("format={MANIFEST_FORMAT}\n{}", spec_lines(specs))
}

struct Manifest(Vec<(String, String)>);

impl Manifest {
    fn parse<R: BufRead>(r: R) -> Result<Self> {
        let mut kv = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(idx + 1, "expected key=value"))?;
            kv.push((k.to_string(), v.to_string()));
        }
        let m = Manifest(kv);
        if m.num("format")? != MANIFEST_FORMAT as u64 {
            return Err(Error::invalid("unsupported manifest format"));
        }
        Ok(m)
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::invalid(format!("manifest is missing {key:?}")))
    }

    fn num(&self, key: &str) -> Result<u64> {
        self.get(key)?.parse().map_err(|_| Error::invalid(format!("manifest {key} is not a number")))
    }

    fn specs(&self) -> Result<Vec<GenSpec>> {
        (0..self.num("records")? as usize)
            .map(|i| GenSpec::from_kv(&self.get(&format!("spec.{i}"))?.replace(' ', "\n")))
            .collect()
    }
}

/// The generator specs of a manifest, in id order.
pub fn read_specs<R: BufRead>(r: R) -> Result<Vec<GenSpec>> {
    Manifest::parse(r)?.specs()
}

/// Parses `manifest.txt`.
pub fn read_manifest<R: BufRead>(r: R) -> Result<DatasetConfig> {
    let m = Manifest::parse(r)?;
    let kind: AttackKind = m.get("attack")?.parse()?;
    let recompute = m.get("recompute")?.parse().map_err(|_| Error::invalid("manifest recompute must be true/false"))?;
    let degree = match m.get("degree")? {
        "total" => DegreeCriterion::Total,
        "out" => DegreeCriterion::Out,
        other => return Err(Error::invalid(format!("unknown degree criterion {other:?}"))),
    };
    let attack = AttackSpec { kind, recompute, seed: m.num("attack_seed")?, degree };
    Ok(DatasetConfig { specs: m.specs()?, attack, repeats: m.num("repeats")? as usize, shuffle_seed: m.num("shuffle_seed")? })
}

/// Normalized Brandes labels, as stored in `labels_bc.csv`.
pub fn bc_labels(g: &DirectedGraph) -> Vec<f64> {
    brandes_bc(g).min_max_normalized().0
}
