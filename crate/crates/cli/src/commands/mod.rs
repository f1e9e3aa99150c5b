pub mod diagnose;
pub mod eval;
pub mod gen;
pub mod oracle;
pub mod probe;
pub mod sweep;
pub mod train;

use std::fs;
use std::io::BufReader;
use std::path::Path;

use symile_core::synthdata::{read_dataset, split, DatasetHeader};
use symile_core::{Checkpoint, Dataset, SplitSpec};

use crate::error::{read_err, CliError, CliResult};
use crate::files::read_json_doc;

pub fn load_dataset(path: &Path) -> CliResult<(DatasetHeader, Dataset)> {
    let f = fs::File::open(path).map_err(|e| read_err(path, e))?;
    read_dataset(BufReader::new(f)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    let (_, ckpt): (_, Checkpoint) = read_json_doc(path)?;
    ckpt.params
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(ckpt)
}

/// Which rows of a dataset file a command reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitChoice {
    Train,
    Val,
    Test,
    /// Every row of the file.
    All,
}

/// Cuts `d` with `spec`, which must cover the file exactly.
pub fn splits(d: &Dataset, spec: SplitSpec, path: &Path) -> CliResult<(Dataset, Dataset, Dataset)> {
    if d.len() != spec.total() {
        return Err(CliError::Usage(format!(
            "{} has {} rows but the split {}/{}/{} needs {}",
            path.display(),
            d.len(),
            spec.train,
            spec.val,
            spec.test,
            spec.total()
        )));
    }
    Ok(split(d, spec)?)
}

pub fn select_split(d: Dataset, spec: SplitSpec, which: SplitChoice, path: &Path) -> CliResult<Dataset> {
    if which == SplitChoice::All {
        return Ok(d);
    }
    let (tr, va, te) = splits(&d, spec, path)?;
    Ok(match which {
        SplitChoice::Train => tr,
        SplitChoice::Val => va,
        _ => te,
    })
}

pub fn modality_index(d: &Dataset, name: &str) -> CliResult<usize> {
    d.names().iter().position(|n| n == name).ok_or_else(|| {
        CliError::Usage(format!("no modality named `{name}` (have {})", d.names().join(", ")))
    })
}

/// Clap value parser for probabilities.
pub fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Optional float rendered for CSV: empty when absent.
pub fn opt_f64(v: Option<f64>) -> String {
    v.map(symile_core::fmt::fmt_f64).unwrap_or_default()
}
