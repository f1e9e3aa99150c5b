//! Every file written by the tool starts with one JSON provenance line. CSV
//! files follow it with a header row and data rows; JSON documents follow it
//! with a single JSON line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{read_err, write_err, CliError, CliResult};

pub const TOOL: &str = "symile";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Provenance {
    pub fn new(command: &str, config_hash: Option<String>, seed: Option<u64>) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            config_hash,
            seed,
            extra: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra
            .insert(key.into(), serde_json::to_value(value).expect("serializable provenance"));
        self
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("serializable provenance")
    }

    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("serializable provenance")
    }
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    }
    Ok(())
}

/// Writes atomically: to a sibling temporary file, then renamed into place.
pub fn write_text(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    ensure_parent(path)?;
    let tmp = path.with_extension("partial");
    {
        let f = fs::File::create(&tmp).map_err(|e| write_err(&tmp, e))?;
        let mut w = BufWriter::new(f);
        body(&mut w).map_err(|e| write_err(&tmp, e))?;
        w.flush().map_err(|e| write_err(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| write_err(path, e))
}

pub fn write_csv(path: &Path, prov: &Provenance, header: &str, rows: &[String]) -> CliResult<()> {
    write_text(path, |w| {
        writeln!(w, "{}", prov.line())?;
        writeln!(w, "{header}")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}

pub fn write_json_doc<T: Serialize>(path: &Path, prov: &Provenance, doc: &T) -> CliResult<()> {
    let body = serde_json::to_string(doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_text(path, |w| {
        writeln!(w, "{}", prov.line())?;
        writeln!(w, "{body}")
    })
}

/// `(provenance, document)` of a file written by [`write_json_doc`].
pub fn read_json_doc<T: DeserializeOwned>(path: &Path) -> CliResult<(Value, T)> {
    let f = fs::File::open(path).map_err(|e| read_err(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let mut next = || -> CliResult<String> {
        lines
            .next()
            .ok_or_else(|| CliError::Usage(format!("{} is truncated", path.display())))?
            .map_err(|e| read_err(path, e))
    };
    let prov: Value = serde_json::from_str(&next()?)
        .map_err(|e| CliError::Usage(format!("{}: bad provenance line: {e}", path.display())))?;
    let doc: T = serde_json::from_str(&next()?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((prov, doc))
}

/// Everything after the provenance line.
pub fn data_section(path: &Path) -> CliResult<String> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    Ok(text.split_once('\n').map(|(_, rest)| rest.to_string()).unwrap_or_default())
}

/// Reads a JSON config, rejecting unknown keys through the target type.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}
