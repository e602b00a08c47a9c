//! Dataset generation, surrogate pretraining, curve-predictor training,
//! evaluation and runtime benchmarking.
//!
//! A dataset directory holds `manifest.txt` (every generator spec, the
//! attack and the seeds), `graphs/*.edges`, `curves.csv` with the simulated
//! robustness curves and `labels_bc.csv` with normalized betweenness, rows in
//! shuffled record order. The manifest alone is enough to regenerate the
//! other files bit for bit.

mod bench;
mod dataset;
mod evaluate;
mod train;

pub use bench::{benchmark_runtime, time_per_graph, BenchReport};
pub use dataset::{
    bc_labels, build_dataset, graph_file, read_manifest, read_specs, simulate_dataset, spec_grid, specs_manifest_text, Dataset,
    DatasetConfig, Record,
};
pub use evaluate::{
    evaluate, evaluate_constant, evaluate_curves, mean_curve, predict_all, spearman, write_report, Cohort, CohortReport,
    Evaluation,
};
pub use train::{
    epoch_means, pretrain_bc_gat, prepare_inputs, train_ncr_hok, write_log, BcTraining, CurveTraining, LogRow,
    TrainConfig,
};

/// Size of the held-out tail for `len` records.
pub(crate) fn holdout_len(len: usize, fraction: f64) -> usize {
    let mut k = (len as f64 * fraction).round() as usize;
    if fraction > 0.0 && k == 0 && len >= 2 {
        k = 1;
    }
    k.min(len.saturating_sub(1))
}
