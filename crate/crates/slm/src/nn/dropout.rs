//! Inverted dropout: survivors are scaled by 1/(1-rate) at training time so
//! evaluation is a pure identity.

use rand::Rng;

use crate::error::{Result, SlmError};
use crate::real::Real;

/// Sample a multiplicative mask: each entry is 0 with probability `rate`,
/// otherwise 1/(1-rate).
pub fn dropout_mask<F: Real, R: Rng>(len: usize, rate: f64, rng: &mut R) -> Result<Vec<F>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(SlmError::InvalidArgument(format!(
            "dropout rate must be in [0,1), got {rate}"
        )));
    }
    let keep_scale = F::from_f64(1.0 / (1.0 - rate));
    Ok((0..len)
        .map(|_| {
            if rng.gen::<f64>() < rate {
                F::zero()
            } else {
                keep_scale
            }
        })
        .collect())
}

/// Apply dropout to a vector. In eval mode (`training == false`) this is the
/// identity.
pub fn dropout_apply<F: Real, R: Rng>(
    v: &[F],
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<Vec<F>> {
    if !training || rate == 0.0 {
        // still validate the rate
        if !(0.0..1.0).contains(&rate) {
            return Err(SlmError::InvalidArgument(format!(
                "dropout rate must be in [0,1), got {rate}"
            )));
        }
        return Ok(v.to_vec());
    }
    let mask = dropout_mask::<F, R>(v.len(), rate, rng)?;
    Ok(v.iter().zip(&mask).map(|(x, m)| *x * *m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rate_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = vec![1.0f64, -2.0, 3.0];
        assert_eq!(dropout_apply(&v, 0.0, &mut rng, true).unwrap(), v);
    }

    #[test]
    fn eval_mode_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = vec![1.0f64, -2.0, 3.0];
        assert_eq!(dropout_apply(&v, 0.9, &mut rng, false).unwrap(), v);
    }

    #[test]
    fn rejects_rate_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(dropout_apply(&[1.0f64], 1.0, &mut rng, true).is_err());
    }

    #[test]
    fn statistics_match_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let v = vec![1.0f64; n];
        let out = dropout_apply(&v, 0.1, &mut rng, true).unwrap();
        let zeroed = out.iter().filter(|x| **x == 0.0).count() as f64 / n as f64;
        assert!((zeroed - 0.10).abs() < 0.01, "zeroed fraction {zeroed}");
        let mean = out.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }
}
