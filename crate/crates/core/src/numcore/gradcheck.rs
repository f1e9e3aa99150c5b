use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Central differences `(f(θ + ε e_i) − f(θ − ε e_i)) / 2ε` for every coordinate.
pub fn finite_diff_grad<F>(mut f: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step {eps} must be positive")));
    }
    let mut theta = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let up = f(&theta);
        theta[i] = orig - eps;
        let down = f(&theta);
        theta[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Denominator floor of [`relative_error`]. A central difference with step
/// 1e-5 carries about `ulp(loss) / 2e-5 ≈ 1e-11` of rounding noise, so
/// gradients much smaller than this floor cannot be resolved at all.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// `|a − n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    /// Maximum relative error for each named parameter block.
    pub per_param: Vec<(String, f64)>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl GradCheckReport {
    /// Compares flat gradients split into named blocks of the given lengths.
    pub fn compare(
        blocks: &[(String, usize)],
        analytic: &[f64],
        numeric: &[f64],
        tolerance: f64,
    ) -> Result<Self> {
        let total: usize = blocks.iter().map(|b| b.1).sum();
        if analytic.len() != total || numeric.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "blocks cover {total} entries, analytic {}, numeric {}",
                analytic.len(),
                numeric.len()
            )));
        }
        let mut per_param = Vec::with_capacity(blocks.len());
        let mut offset = 0;
        for (name, len) in blocks {
            let worst = (offset..offset + len)
                .map(|i| relative_error(analytic[i], numeric[i]))
                .fold(0.0, f64::max);
            per_param.push((name.clone(), worst));
            offset += len;
        }
        Ok(Self::from_blocks(per_param, tolerance))
    }

    pub fn from_blocks(per_param: Vec<(String, f64)>, tolerance: f64) -> Self {
        let max_rel_error = per_param.iter().map(|p| p.1).fold(0.0, f64::max);
        Self {
            per_param,
            max_rel_error,
            tolerance,
            pass: max_rel_error < tolerance,
        }
    }

    /// Folds several reports into one (worst block per name is kept as-is).
    pub fn merge(reports: &[GradCheckReport], tolerance: f64) -> Self {
        let blocks = reports.iter().flat_map(|r| r.per_param.iter().cloned()).collect();
        Self::from_blocks(blocks, tolerance)
    }
}
