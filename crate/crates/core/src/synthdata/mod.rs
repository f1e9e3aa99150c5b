//! Seeded generators for the XOR and mixture datasets, missingness masks, and
//! contiguous train/val/test splits.

mod io;

pub use io::{read_dataset, write_dataset, DatasetHeader, ModalityShape, DATASET_SCHEMA};

use ndarray::{s, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::IMode;
use crate::rng::substream;

/// Generation parameters carried along with a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: String,
    pub seed: u64,
    pub p_hat: Option<f64>,
    pub i_mode: Option<IMode>,
    pub missing_p: Option<f64>,
}

/// `N` samples of `M` binary modality vectors stored as reals in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    modalities: Vec<Array2<f64>>,
    latents: Option<Array2<f64>>,
    /// `N x M`, true where the modality is observed.
    masks: Option<Array2<bool>>,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        modalities: Vec<Array2<f64>>,
        latents: Option<Array2<f64>>,
        masks: Option<Array2<bool>>,
        meta: DatasetMeta,
    ) -> Result<Self> {
        if modalities.is_empty() || names.len() != modalities.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} names for {} modalities",
                names.len(),
                modalities.len()
            )));
        }
        let n = modalities[0].nrows();
        if modalities.iter().any(|m| m.nrows() != n) {
            return Err(Error::ShapeMismatch("modalities disagree on N".into()));
        }
        if let Some(l) = &latents {
            if l.nrows() != n {
                return Err(Error::ShapeMismatch("latents disagree on N".into()));
            }
        }
        if let Some(m) = &masks {
            if m.dim() != (n, modalities.len()) {
                return Err(Error::ShapeMismatch(format!(
                    "mask shape {:?}, expected ({n}, {})",
                    m.dim(),
                    modalities.len()
                )));
            }
        }
        Ok(Self {
            names,
            modalities,
            latents,
            masks,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.modalities[0].nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_modalities(&self) -> usize {
        self.modalities.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn modality(&self, m: usize) -> &Array2<f64> {
        &self.modalities[m]
    }

    pub fn modalities(&self) -> &[Array2<f64>] {
        &self.modalities
    }

    pub fn dims(&self, m: usize) -> usize {
        self.modalities[m].ncols()
    }

    pub fn latents(&self) -> Option<&Array2<f64>> {
        self.latents.as_ref()
    }

    pub fn masks(&self) -> Option<&Array2<bool>> {
        self.masks.as_ref()
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn is_observed(&self, row: usize, m: usize) -> bool {
        self.masks.as_ref().is_none_or(|k| k[[row, m]])
    }

    /// Rows where every modality is observed.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| (0..self.num_modalities()).all(|m| self.is_observed(i, m)))
            .collect()
    }

    /// Integer label of row `row` of modality `m`, reading bit `j` from coordinate `j`.
    pub fn class_index(&self, m: usize, row: usize) -> usize {
        self.modalities[m]
            .row(row)
            .iter()
            .enumerate()
            .map(|(j, &v)| usize::from(v >= 0.5) << j)
            .sum()
    }

    /// Rows `indices` as a new dataset (masks and latents follow).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            modalities: self
                .modalities
                .iter()
                .map(|m| m.select(Axis(0), indices))
                .collect(),
            latents: self.latents.as_ref().map(|l| l.select(Axis(0), indices)),
            masks: self.masks.as_ref().map(|k| k.select(Axis(0), indices)),
            meta: self.meta.clone(),
        }
    }

    fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            names: self.names.clone(),
            modalities: self
                .modalities
                .iter()
                .map(|m| m.slice(s![start..end, ..]).to_owned())
                .collect(),
            latents: self
                .latents
                .as_ref()
                .map(|l| l.slice(s![start..end, ..]).to_owned()),
            masks: self
                .masks
                .as_ref()
                .map(|k| k.slice(s![start..end, ..]).to_owned()),
            meta: self.meta.clone(),
        }
    }
}

/// Sample counts of the three splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 10_000,
            val: 1_000,
            test: 5_000,
        }
    }
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn validate(&self) -> Result<()> {
        if self.train == 0 || self.val == 0 || self.test == 0 {
            return Err(Error::InvalidArgument(format!(
                "split counts must be at least 1, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

fn bit<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        0.0
    }
}

fn abc_names() -> Vec<String> {
    vec!["a".into(), "b".into(), "c".into()]
}

/// `a, b` fair bits, `c = a XOR b`, each a one-dimensional vector.
pub fn gen_xor1d(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = substream(seed, "data");
    let mut a = Array2::zeros((n, 1));
    let mut b = Array2::zeros((n, 1));
    let mut c = Array2::zeros((n, 1));
    for i in 0..n {
        a[[i, 0]] = bit(&mut rng);
        b[[i, 0]] = bit(&mut rng);
        c[[i, 0]] = if a[[i, 0]] != b[[i, 0]] { 1.0 } else { 0.0 };
    }
    Dataset::new(
        abc_names(),
        vec![a, b, c],
        None,
        None,
        DatasetMeta {
            kind: "xor1d".into(),
            seed,
            p_hat: None,
            i_mode: None,
            missing_p: None,
        },
    )
}

/// Mixture dataset: `a, b` uniform on `{0,1}^dims`, `i ~ Bernoulli(p_hat)`,
/// `c_j = a_j XOR b_j` where the switch is on and `c_j = a_j` otherwise.
/// The switch draws are kept as latents (`N x 1` shared, `N x dims` per coordinate).
pub fn gen_synth(n: usize, dims: usize, p_hat: f64, seed: u64, mode: IMode) -> Result<Dataset> {
    if n == 0 || dims == 0 {
        return Err(Error::InvalidArgument("n and dims must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidArgument(format!("p_hat {p_hat} outside [0, 1]")));
    }
    let mut rng = substream(seed, "data");
    let mut a = Array2::zeros((n, dims));
    let mut b = Array2::zeros((n, dims));
    let mut c = Array2::zeros((n, dims));
    let latent_dims = match mode {
        IMode::Shared => 1,
        IMode::PerCoordinate => dims,
    };
    let mut lat = Array2::zeros((n, latent_dims));
    for i in 0..n {
        for j in 0..dims {
            a[[i, j]] = bit(&mut rng);
        }
        for j in 0..dims {
            b[[i, j]] = bit(&mut rng);
        }
        for k in 0..latent_dims {
            lat[[i, k]] = if rng.random_bool(p_hat) { 1.0 } else { 0.0 };
        }
        for j in 0..dims {
            let switch = lat[[i, if latent_dims == 1 { 0 } else { j }]] == 1.0;
            c[[i, j]] = if switch {
                if a[[i, j]] != b[[i, j]] {
                    1.0
                } else {
                    0.0
                }
            } else {
                a[[i, j]]
            };
        }
    }
    Dataset::new(
        abc_names(),
        vec![a, b, c],
        Some(lat),
        None,
        DatasetMeta {
            kind: if dims == 5 {
                "synth5d".into()
            } else {
                format!("synth{dims}d")
            },
            seed,
            p_hat: Some(p_hat),
            i_mode: Some(mode),
            missing_p: None,
        },
    )
}

pub fn gen_synth5d(n: usize, p_hat: f64, seed: u64, mode: IMode) -> Result<Dataset> {
    gen_synth(n, 5, p_hat, seed, mode)
}

/// Masks each (sample, modality) cell independently with probability
/// `p_missing` and zero-fills the masked vectors. Existing masks are kept.
pub fn apply_missingness(d: &Dataset, p_missing: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&p_missing) {
        return Err(Error::InvalidArgument(format!(
            "missingness probability {p_missing} outside [0, 1)"
        )));
    }
    let n = d.len();
    let m = d.num_modalities();
    let mut rng = substream(seed, "masks");
    let mut masks = d
        .masks
        .clone()
        .unwrap_or_else(|| Array2::from_elem((n, m), true));
    let mut modalities = d.modalities.clone();
    for i in 0..n {
        for k in 0..m {
            if rng.random_bool(p_missing) {
                masks[[i, k]] = false;
            }
            if !masks[[i, k]] {
                modalities[k].row_mut(i).fill(0.0);
            }
        }
    }
    let mut meta = d.meta.clone();
    meta.missing_p = Some(p_missing);
    Dataset::new(d.names.clone(), modalities, d.latents.clone(), Some(masks), meta)
}

/// Contiguous train, val and test slices in generation order.
pub fn split(d: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    if spec.total() != d.len() {
        return Err(Error::ShapeMismatch(format!(
            "split sizes sum to {} but the dataset has {} samples",
            spec.total(),
            d.len()
        )));
    }
    let a = spec.train;
    let b = a + spec.val;
    Ok((
        d.slice_rows(0, a),
        d.slice_rows(a, b),
        d.slice_rows(b, d.len()),
    ))
}
