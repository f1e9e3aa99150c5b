//! The accuracy/information sweep over the mixture weight. Each
//! (p̂, objective, seed) cell trains and evaluates in its own directory and
//! writes `result.json` last, so an interrupted sweep resumes where it
//! stopped.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use symile_core::hash::config_hash;
use symile_core::oracle::IMode;
use symile_core::traineval::{bootstrap_accuracy, classify_b};
use symile_core::{Objective, TrainConfig};

use crate::commands::eval::{bootstrap_rows, results_row, BOOTSTRAP_HEADER, RESULTS_HEADER};
use crate::commands::oracle::{default_grid, oracle_rows, ORACLE_HEADER};
use crate::commands::train::write_run;
use crate::error::{CliError, CliResult};
use crate::files::{read_json_doc, write_csv, write_json_doc, Provenance};
use crate::runconfig::{DatasetKind, DatasetSpec, RunConfig};

pub const ACCURACY_FILE: &str = "fig3_accuracy.csv";
pub const INFORMATION_FILE: &str = "fig3_information.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub p_hats: Vec<f64>,
    pub objectives: Vec<Objective>,
    pub seeds: Vec<u64>,
    pub i_mode: IMode,
    /// Shared by every cell; `objective` and `seed` are set per cell.
    pub train: TrainConfig,
    pub bootstrap: usize,
    /// Coordinate widths of the information rows.
    pub info_dims: Vec<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            p_hats: default_grid(),
            objectives: vec![Objective::Symile, Objective::PairwiseClip],
            seeds: vec![0],
            i_mode: IMode::Shared,
            train: TrainConfig::default(),
            bootstrap: 10,
            info_dims: vec![1, 5],
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.p_hats.is_empty() || self.objectives.is_empty() || self.seeds.is_empty() {
            return usage("sweep needs at least one p_hat, objective and seed".into());
        }
        if let Some(p) = self.p_hats.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return usage(format!("p_hat {p} outside [0, 1]"));
        }
        if self.bootstrap == 0 {
            return usage("bootstrap must be at least 1".into());
        }
        if self.info_dims.contains(&0) {
            return usage("info_dims entries must be positive".into());
        }
        self.train.validate().map_err(|e| CliError::Usage(format!("train: {e}")))
    }

    /// Cells in output order: p̂, then objective, then seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &p_hat in &self.p_hats {
            for &objective in &self.objectives {
                for &seed in &self.seeds {
                    out.push(Cell { p_hat, objective, seed });
                }
            }
        }
        out
    }

    pub fn run_config(&self, cell: Cell) -> RunConfig {
        RunConfig {
            dataset: DatasetSpec {
                kind: DatasetKind::Synth5d,
                p_hat: cell.p_hat,
                i_mode: self.i_mode,
                seed: Some(cell.seed),
            },
            train: TrainConfig {
                objective: cell.objective,
                seed: cell.seed,
                // the per-pair temperature flag only concerns the CLIP cells
                per_pair_temperature: self.train.per_pair_temperature && cell.objective == Objective::PairwiseClip,
                ..self.train.clone()
            },
            out_dir: None,
        }
    }

    /// `p{p̂}_{objective}_s{seed}_{hash}`; the hash covers the whole cell config.
    pub fn cell_dir_name(&self, cell: Cell) -> String {
        format!(
            "p{}_{}_s{}_{}",
            cell.p_hat,
            cell.objective,
            cell.seed,
            self.run_config(cell).hash()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p_hat: f64,
    pub objective: Objective,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub p_hat: f64,
    pub objective: Objective,
    pub strategy: String,
    pub seed: u64,
    pub mean_acc: f64,
    pub se: f64,
    pub n_test: usize,
    /// Relative to the sweep output directory.
    pub checkpoint_path: String,
    pub best_epoch: usize,
    pub val_loss: f64,
}

impl CellResult {
    pub fn row(&self) -> String {
        results_row(
            Some(self.p_hat),
            self.objective.as_str(),
            &self.strategy,
            self.seed,
            (self.mean_acc, self.se, self.n_test),
            &self.checkpoint_path,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<CellResult>,
    pub failed: Vec<(Cell, CliError)>,
    pub accuracy_csv: PathBuf,
    pub information_csv: PathBuf,
}

/// Trains and evaluates one cell, or reads its finished result.
pub fn run_cell(spec: &SweepSpec, cell: Cell, out_dir: &Path) -> CliResult<CellResult> {
    let name = spec.cell_dir_name(cell);
    let dir = out_dir.join(&name);
    let marker = dir.join("result.json");
    if marker.exists() {
        let (_, r): (_, CellResult) = read_json_doc(&marker)?;
        info!("{name}: already complete, skipping");
        return Ok(r);
    }
    let cfg = spec.run_config(cell);
    let start = std::time::Instant::now();
    let (tr, va, te) = cfg.generate_splits()?;
    let outcome = crate::commands::train::train_splits(&cfg, &tr, &va)?;
    write_run(&dir, &cfg, &outcome)?;

    let te = te.select(&te.complete_rows());
    let retrieval = classify_b(&outcome.best.params, cell.objective.into(), &te)?;
    let report = bootstrap_accuracy(&retrieval.correct(), spec.bootstrap, cell.seed)?;
    let prov = Provenance::new("reproduce-fig3", Some(cfg.hash()), Some(cell.seed));
    let checkpoint_path = format!("{name}/checkpoint.json");
    let strategy = cfg.train.strategy.to_string();
    write_csv(&dir.join("bootstrap.csv"), &prov, BOOTSTRAP_HEADER, &bootstrap_rows(&report))?;
    let result = CellResult {
        p_hat: cell.p_hat,
        objective: cell.objective,
        strategy,
        seed: cell.seed,
        mean_acc: report.mean_acc,
        se: report.se,
        n_test: report.n,
        checkpoint_path,
        best_epoch: outcome.best.epoch,
        val_loss: outcome.best.val_loss,
    };
    write_csv(&dir.join("results.csv"), &prov, RESULTS_HEADER, &[result.row()])?;
    write_json_doc(&marker, &prov, &result)?;
    info!(
        "{name}: accuracy {:.4} (se {:.4}) in {:.1?}",
        result.mean_acc,
        result.se,
        start.elapsed()
    );
    Ok(result)
}

/// Runs every cell on `jobs` worker threads, then writes the two sweep CSVs
/// with whatever completed. Failed cells are returned, not raised.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, jobs: usize) -> CliResult<SweepOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let cells = spec.cells();
    let outcomes: Vec<CliResult<CellResult>> =
        pool.install(|| cells.par_iter().map(|&c| run_cell(spec, c, out_dir)).collect());

    let mut results = Vec::new();
    let mut failed = Vec::new();
    for (cell, r) in cells.into_iter().zip(outcomes) {
        match r {
            Ok(r) => results.push(r),
            Err(e) => {
                warn!("cell {} failed: {e}", spec.cell_dir_name(cell));
                failed.push((cell, e));
            }
        }
    }

    let hash = config_hash(spec)?;
    let prov = Provenance::new("reproduce-fig3", Some(hash), None).with("seeds", &spec.seeds);
    let rows: Vec<String> = results.iter().map(CellResult::row).collect();
    let accuracy_csv = out_dir.join(ACCURACY_FILE);
    write_csv(&accuracy_csv, &prov, RESULTS_HEADER, &rows)?;
    let information_csv = out_dir.join(INFORMATION_FILE);
    let info = oracle_rows(&spec.p_hats, &spec.info_dims, spec.i_mode, false)?;
    write_csv(&information_csv, &prov, ORACLE_HEADER, &info)?;
    Ok(SweepOutcome {
        results,
        failed,
        accuracy_csv,
        information_csv,
    })
}
