//! Central finite-difference verification of analytic gradients.

use crate::error::{Result, SlmError};
use crate::nn::Parameters;
use crate::real::Real;

/// Outcome of a finite-difference sweep.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// (tensor name, max relative error in that tensor)
    pub per_tensor: Vec<(String, f64)>,
    pub max_relative_error: f64,
    pub coords_checked: usize,
}

/// Compare `analytic` gradients against central differences of `loss_fn`.
///
/// `loss_fn` must be pure and deterministic (dropout disabled). At most
/// `max_coords_per_tensor` evenly spaced coordinates per tensor are probed.
/// Coordinates where both gradients are below 1e-8 in magnitude fall back to
/// an absolute-error comparison.
pub fn finite_diff_check<F: Real, P: Parameters<F>>(
    mut loss_fn: impl FnMut(&P) -> Result<F>,
    params: &mut P,
    analytic: &P,
    epsilon: f64,
    max_coords_per_tensor: usize,
) -> Result<GradCheckReport> {
    let eps = F::from_f64(epsilon);
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let mut per_tensor = Vec::with_capacity(names.len());
    let mut max_err = 0.0f64;
    let mut coords = 0usize;

    for (ti, name) in names.iter().enumerate() {
        let len = params.tensors()[ti].1.len();
        let stride = (len / max_coords_per_tensor.max(1)).max(1);
        let mut tensor_err = 0.0f64;
        let mut idx = 0;
        while idx < len {
            let orig = params.tensors()[ti].1.data()[idx];
            params.tensors_mut()[ti].1.data_mut()[idx] = orig + eps;
            let up = loss_fn(params)?;
            params.tensors_mut()[ti].1.data_mut()[idx] = orig - eps;
            let down = loss_fn(params)?;
            params.tensors_mut()[ti].1.data_mut()[idx] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(SlmError::NonFinite(format!(
                    "loss not finite while probing {name}[{idx}]"
                )));
            }
            let numeric = (up - down).to_f64() / (2.0 * epsilon);
            let exact = analytic.tensors()[ti].1.data()[idx].to_f64();
            let denom = numeric.abs().max(exact.abs());
            let err = if denom < 1e-8 {
                (numeric - exact).abs()
            } else {
                (numeric - exact).abs() / denom
            };
            tensor_err = tensor_err.max(err);
            coords += 1;
            idx += stride;
        }
        max_err = max_err.max(tensor_err);
        per_tensor.push((name.clone(), tensor_err));
    }

    Ok(GradCheckReport { per_tensor, max_relative_error: max_err, coords_checked: coords })
}
