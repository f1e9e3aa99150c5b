use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use symile_core::fmt::fmt_f64;
use symile_core::hash::config_hash;
use symile_core::oracle::{abc_reports, build_synth_table, IMode};

use super::unit_interval;
use crate::error::{CliError, CliResult};
use crate::files::{write_csv, Provenance};

pub const ORACLE_HEADER: &str = "p_hat,quantity,group_spec,value_nats";

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Grid `start:step:end`, inclusive.
    #[arg(long, conflicts_with = "p_hat")]
    pub p_grid: Option<String>,
    /// Explicit comma-separated mixture weights.
    #[arg(long, value_delimiter = ',', value_parser = unit_interval)]
    pub p_hat: Vec<f64>,
    /// Binary coordinates per modality; one block of rows per entry.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5])]
    pub dims: Vec<usize>,
    #[arg(long, default_value = "shared")]
    pub i_mode: IMode,
    /// Adds a `value_bits` column.
    #[arg(long)]
    pub bits: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `start:step:end` inclusive, each point rounded to 1e-12.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--p-grid `{s}` is not start:step:end"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, step, end] = parts.as_slice() else { return Err(bad()) };
    if !(*step > 0.0) || end < start {
        return Err(bad());
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect();
    if grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(CliError::Usage(format!("--p-grid `{s}` leaves [0, 1]")));
    }
    Ok(grid)
}

/// `0, 0.1, ..., 1`
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// One row per (p̂, dims, quantity).
pub fn oracle_rows(p_hats: &[f64], dims: &[usize], mode: IMode, bits: bool) -> CliResult<Vec<String>> {
    let mut rows = Vec::new();
    for &p in p_hats {
        for &d in dims {
            let table = build_synth_table(p, d, mode)?;
            for r in abc_reports(&table, d)? {
                let mut row = format!("{},{},{},{}", fmt_f64(p), r.kind.as_str(), r.group_spec(), fmt_f64(r.value));
                if bits {
                    row.push(',');
                    row.push_str(&fmt_f64(r.value_bits()));
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct OracleParams<'a> {
    p_hats: &'a [f64],
    dims: &'a [usize],
    i_mode: IMode,
}

pub fn run(a: OracleArgs) -> CliResult<()> {
    let p_hats = match (&a.p_grid, a.p_hat.is_empty()) {
        (Some(g), _) => parse_grid(g)?,
        (None, false) => a.p_hat.clone(),
        (None, true) => default_grid(),
    };
    if a.dims.is_empty() || a.dims.contains(&0) {
        return Err(CliError::Usage("--dims entries must be positive".into()));
    }
    let rows = oracle_rows(&p_hats, &a.dims, a.i_mode, a.bits)?;
    let header = if a.bits {
        format!("{ORACLE_HEADER},value_bits")
    } else {
        ORACLE_HEADER.to_string()
    };
    let params = OracleParams {
        p_hats: &p_hats,
        dims: &a.dims,
        i_mode: a.i_mode,
    };
    let prov = Provenance::new("oracle", Some(config_hash(&params)?), None);
    match &a.out {
        Some(path) => write_csv(path, &prov, &header, &rows),
        None => {
            let mut out = std::io::stdout().lock();
            let mut emit = || -> std::io::Result<()> {
                writeln!(out, "{}", prov.line())?;
                writeln!(out, "{header}")?;
                for r in &rows {
                    writeln!(out, "{r}")?;
                }
                out.flush()
            };
            emit().map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))
        }
    }
}
