use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `r = W x + b`, optionally projected onto the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineEncoder {
    /// `d_out x d_in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub normalize: bool,
}

/// Forward-pass state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    pub input: Array2<f64>,
    pub output: Array2<f64>,
    /// Pre-normalization row norms when normalizing.
    pub norms: Option<Array1<f64>>,
}

impl AffineEncoder {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>, normalize: bool) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::ShapeMismatch(format!(
                "weight has {} rows, bias has {} entries",
                weight.nrows(),
                bias.len()
            )));
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder parameters".into()));
        }
        Ok(Self {
            weight,
            bias,
            normalize,
        })
    }

    /// Weights and biases iid uniform on `±1/sqrt(d_in)`.
    pub fn init<R: Rng + ?Sized>(d_in: usize, d_out: usize, normalize: bool, rng: &mut R) -> Self {
        let bound = 1.0 / (d_in as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((d_out, d_in), || rng.random_range(-bound..bound));
        let bias = Array1::from_shape_simple_fn(d_out, || rng.random_range(-bound..bound));
        Self {
            weight,
            bias,
            normalize,
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let out = self.forward_batch(x.insert_axis(Axis(0)))?;
        Ok(out.row(0).to_owned())
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x.to_owned())?.output)
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> Result<EncodeCache> {
        if x.ncols() != self.d_in() {
            return Err(Error::ShapeMismatch(format!(
                "encoder expects {} inputs, got {}",
                self.d_in(),
                x.ncols()
            )));
        }
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        let norms = if self.normalize {
            let mut norms = Array1::zeros(z.nrows());
            for (i, mut row) in z.rows_mut().into_iter().enumerate() {
                let n = row.dot(&row).sqrt();
                if !(n > 0.0) || !n.is_finite() {
                    return Err(Error::DegenerateInput(format!(
                        "pre-activation of row {i} has norm {n}; cannot normalize"
                    )));
                }
                row /= n;
                norms[i] = n;
            }
            Some(norms)
        } else {
            None
        };
        Ok(EncodeCache {
            input: x,
            output: z,
            norms,
        })
    }

    /// Gradients of the weight and bias given `d_output = dL/dr`.
    pub fn backward(&self, cache: &EncodeCache, d_output: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
        let dz = match &cache.norms {
            // d(z/|z|) = (I - r r^T) / |z|
            Some(norms) => {
                let mut dz = d_output.clone();
                for (i, mut row) in dz.rows_mut().into_iter().enumerate() {
                    let r = cache.output.row(i);
                    let proj = r.dot(&row);
                    row.scaled_add(-proj, &r);
                    row /= norms[i];
                }
                dz
            }
            None => d_output.clone(),
        };
        let dw = dz.t().dot(&cache.input);
        // Parameter blocks are handed out as flat slices.
        let dw = if dw.is_standard_layout() { dw } else { dw.as_standard_layout().into_owned() };
        (dw, dz.sum_axis(Axis(0)))
    }
}
