//! Dataset file: one JSON header line, then one CSV block per modality
//! (row-major, `N` rows of `dims` values), an optional latent block and an
//! optional 0/1 mask block. Each block opens with a `[name]` line.

use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::fmt::fmt_f64;
use crate::oracle::IMode;

pub const DATASET_SCHEMA: &str = "symile-dataset";
const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityShape {
    pub name: String,
    pub dims: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema: String,
    pub version: u32,
    pub kind: String,
    pub seed: u64,
    pub p_hat: Option<f64>,
    pub i_mode: Option<IMode>,
    pub missing_p: Option<f64>,
    pub n: usize,
    pub modalities: Vec<ModalityShape>,
    pub latent_dims: Option<usize>,
    pub has_masks: bool,
    /// Free-form provenance supplied by the writer (tool version, config hash).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

fn write_block<W: Write>(w: &mut W, name: &str, a: &Array2<f64>) -> Result<()> {
    writeln!(w, "[{name}]")?;
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_dataset<W: Write>(
    w: &mut W,
    d: &Dataset,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let meta = d.meta();
    let header = DatasetHeader {
        schema: DATASET_SCHEMA.into(),
        version: DATASET_VERSION,
        kind: meta.kind.clone(),
        seed: meta.seed,
        p_hat: meta.p_hat,
        i_mode: meta.i_mode,
        missing_p: meta.missing_p,
        n: d.len(),
        modalities: d
            .names()
            .iter()
            .enumerate()
            .map(|(m, name)| ModalityShape {
                name: name.clone(),
                dims: d.dims(m),
            })
            .collect(),
        latent_dims: d.latents().map(|l| l.ncols()),
        has_masks: d.masks().is_some(),
        provenance,
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for (m, name) in d.names().iter().enumerate() {
        write_block(w, name, d.modality(m))?;
    }
    if let Some(l) = d.latents() {
        write_block(w, "latent", l)?;
    }
    if let Some(masks) = d.masks() {
        writeln!(w, "[mask]")?;
        for row in masks.rows() {
            let line: Vec<&str> = row.iter().map(|&o| if o { "1" } else { "0" }).collect();
            writeln!(w, "{}", line.join(","))?;
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    lineno: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.lineno += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(Error::Format(format!("unexpected end of file at line {}", self.lineno))),
        }
    }

    fn expect_marker(&mut self, name: &str) -> Result<()> {
        let l = self.next_line()?;
        if l.trim() != format!("[{name}]") {
            return Err(Error::Format(format!(
                "line {}: expected `[{name}]`, found `{l}`",
                self.lineno
            )));
        }
        Ok(())
    }

    fn read_rows<T>(
        &mut self,
        n: usize,
        cols: usize,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(n * cols);
        for _ in 0..n {
            let l = self.next_line()?;
            let before = out.len();
            for field in l.split(',') {
                let v = parse(field.trim()).ok_or_else(|| {
                    Error::Format(format!("line {}: bad value `{field}`", self.lineno))
                })?;
                out.push(v);
            }
            if out.len() - before != cols {
                return Err(Error::Format(format!(
                    "line {}: expected {cols} values, found {}",
                    self.lineno,
                    out.len() - before
                )));
            }
        }
        Ok(out)
    }
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<(DatasetHeader, Dataset)> {
    let mut lines = Lines {
        inner: r.lines(),
        lineno: 0,
    };
    let header: DatasetHeader = serde_json::from_str(&lines.next_line()?)?;
    if header.schema != DATASET_SCHEMA || header.version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset schema {} v{}",
            header.schema, header.version
        )));
    }
    let n = header.n;
    let parse_f = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
    let mut modalities = Vec::new();
    for shape in &header.modalities {
        lines.expect_marker(&shape.name)?;
        let data = lines.read_rows(n, shape.dims, parse_f)?;
        modalities.push(
            Array2::from_shape_vec((n, shape.dims), data)
                .map_err(|e| Error::Format(e.to_string()))?,
        );
    }
    let latents = match header.latent_dims {
        Some(k) => {
            lines.expect_marker("latent")?;
            let data = lines.read_rows(n, k, parse_f)?;
            Some(Array2::from_shape_vec((n, k), data).map_err(|e| Error::Format(e.to_string()))?)
        }
        None => None,
    };
    let masks = if header.has_masks {
        lines.expect_marker("mask")?;
        let m = header.modalities.len();
        let data = lines.read_rows(n, m, |s| match s {
            "1" => Some(true),
            "0" => Some(false),
            _ => None,
        })?;
        Some(Array2::from_shape_vec((n, m), data).map_err(|e| Error::Format(e.to_string()))?)
    } else {
        None
    };
    let d = Dataset::new(
        header.modalities.iter().map(|s| s.name.clone()).collect(),
        modalities,
        latents,
        masks,
        DatasetMeta {
            kind: header.kind.clone(),
            seed: header.seed,
            p_hat: header.p_hat,
            i_mode: header.i_mode,
            missing_p: header.missing_p,
        },
    )?;
    Ok((header, d))
}
