use std::path::PathBuf;

use clap::Args;
use log::info;

use crate::error::{CliError, CliResult};
use crate::files::read_config;
use crate::runconfig::env_seed;
use crate::sweep::{run_sweep, SweepSpec};

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Sweep spec (JSON); the full default grid when absent.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Cells trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

pub fn run(a: SweepArgs) -> CliResult<()> {
    let mut spec: SweepSpec = match &a.sweep {
        Some(p) => read_config(p)?,
        None => SweepSpec::default(),
    };
    if let Some(seed) = env_seed()? {
        info!("SYMILE_SEED={seed} replaces sweep seeds {:?}", spec.seeds);
        spec.seeds = vec![seed];
    }
    let out = run_sweep(&spec, &a.out_dir, a.jobs)?;
    println!(
        "{} cells complete -> {}, {}",
        out.results.len(),
        out.accuracy_csv.display(),
        out.information_csv.display()
    );
    if out.failed.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = out
        .failed
        .iter()
        .map(|(c, e)| format!("{}: {e}", spec.cell_dir_name(*c)))
        .collect();
    let msg = format!("{} of {} cells failed:\n  {}", out.failed.len(), spec.cells().len(), list.join("\n  "));
    if out.failed.iter().all(|(_, e)| matches!(e, CliError::Numerical(_))) {
        Err(CliError::Numerical(msg))
    } else {
        Err(CliError::Runtime(msg))
    }
}
