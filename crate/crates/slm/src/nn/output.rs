//! Output projection, log-softmax and log-sum-exp.

use crate::error::{Result, SlmError};
use crate::nn::Matrix;
use crate::real::Real;

/// Projection to vocabulary logits.
#[derive(Debug, Clone)]
pub struct OutputLayerParams<F> {
    pub weight: Matrix<F>, // vocab_out x hidden_dim
    pub bias: Matrix<F>,   // vocab_out x 1
}

impl<F: Real> OutputLayerParams<F> {
    pub fn zeros(vocab_out: usize, hidden_dim: usize) -> Self {
        OutputLayerParams {
            weight: Matrix::zeros(vocab_out, hidden_dim),
            bias: Matrix::zeros(vocab_out, 1),
        }
    }

    pub fn vocab_out(&self) -> usize {
        self.weight.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn logits(&self, h: &[F]) -> Result<Vec<F>> {
        if h.len() != self.hidden_dim() {
            return Err(SlmError::Shape(format!(
                "output layer expects hidden dim {}, got {}",
                self.hidden_dim(),
                h.len()
            )));
        }
        let mut out: Vec<F> = self.bias.data().to_vec();
        self.weight.matvec_add(h, &mut out);
        Ok(out)
    }
}

/// log softmax(W h + b), numerically stable via max subtraction.
pub fn output_logprobs<F: Real>(out: &OutputLayerParams<F>, h: &[F]) -> Result<Vec<F>> {
    let mut logits = out.logits(h)?;
    log_softmax_in_place(&mut logits);
    Ok(logits)
}

/// In-place log-softmax over the whole slice.
pub fn log_softmax_in_place<F: Real>(v: &mut [F]) {
    let lse = log_sum_exp(v).expect("log_softmax on empty slice");
    for x in v.iter_mut() {
        *x = *x - lse;
    }
}

/// Log-softmax restricted to `mask`: masked-out entries become -inf and the
/// remaining entries renormalize among themselves.
pub fn masked_log_softmax<F: Real>(logits: &[F], mask: &[usize]) -> Vec<F> {
    debug_assert!(!mask.is_empty());
    let mut m = F::neg_infinity();
    for &i in mask {
        if logits[i] > m {
            m = logits[i];
        }
    }
    let mut z = F::zero();
    for &i in mask {
        z += (logits[i] - m).exp();
    }
    let lse = m + z.ln();
    let mut out = vec![F::neg_infinity(); logits.len()];
    for &i in mask {
        out[i] = logits[i] - lse;
    }
    out
}

/// log Σ exp(vᵢ) with max subtraction. -inf entries contribute zero mass.
pub fn log_sum_exp<F: Real>(values: &[F]) -> Result<F> {
    if values.is_empty() {
        return Err(SlmError::InvalidArgument("log_sum_exp of empty input".into()));
    }
    let mut m = F::neg_infinity();
    for v in values {
        if *v > m {
            m = *v;
        }
    }
    if m == F::neg_infinity() {
        return Ok(F::neg_infinity());
    }
    let mut z = F::zero();
    for v in values {
        z += (*v - m).exp();
    }
    Ok(m + z.ln())
}

/// Two-argument log-sum-exp, used by the lattice inner loop.
#[inline]
pub fn lse2<F: Real>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_of_two_zeros_is_ln2() {
        let v = log_sum_exp(&[0.0f64, 0.0]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn lse_absorbs_neg_infinity() {
        let v = log_sum_exp(&[f64::NEG_INFINITY, 1.5]).unwrap();
        assert_eq!(v, 1.5);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn lse_is_stable_for_large_inputs() {
        let v = log_sum_exp(&[1000.0f64, 1000.0]).unwrap();
        assert!((v - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-9);
        // shifted direct sum as the independent route
        let shifted = 1000.0 + (2.0f64).ln();
        assert!((v - shifted).abs() < 1e-9);
    }

    #[test]
    fn lse_rejects_empty() {
        assert!(log_sum_exp::<f64>(&[]).is_err());
    }

    #[test]
    fn uniform_when_weights_zero() {
        let out = OutputLayerParams::<f64>::zeros(4, 3);
        let lp = output_logprobs(&out, &[0.5, -0.2, 0.1]).unwrap();
        for p in &lp {
            assert!((p - (0.25f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_bias_does_not_overflow() {
        let mut out = OutputLayerParams::<f64>::zeros(4, 2);
        out.bias.fill(1000.0);
        let lp = output_logprobs(&out, &[0.0, 0.0]).unwrap();
        for p in &lp {
            assert!(p.is_finite());
            assert!((p - (0.25f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn logprobs_normalize() {
        let mut out = OutputLayerParams::<f64>::zeros(5, 3);
        for (i, w) in out.weight.data_mut().iter_mut().enumerate() {
            *w = (i as f64) * 0.3 - 1.0;
        }
        let lp = output_logprobs(&out, &[1.0, -2.0, 0.5]).unwrap();
        let total: f64 = lp.iter().map(|p| p.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn masked_log_softmax_renormalizes_subset() {
        let logits = vec![0.0f64, 0.0, 0.0, 50.0];
        let lp = masked_log_softmax(&logits, &[0, 1, 2]);
        assert_eq!(lp[3], f64::NEG_INFINITY);
        for &i in &[0usize, 1, 2] {
            assert!((lp[i] - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        }
    }
}
