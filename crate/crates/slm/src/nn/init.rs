//! Parameter initialization.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SlmError};
use crate::nn::Matrix;
use crate::real::Real;

/// Normal(0, 2/(rows+cols)) initialization.
pub fn glorot_init<F: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<Matrix<F>> {
    if rows == 0 || cols == 0 {
        return Err(SlmError::InvalidArgument(format!(
            "glorot_init needs positive dims, got {}x{}",
            rows, cols
        )));
    }
    let std = (2.0 / (rows + cols) as f64).sqrt();
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        F::from_f64(z * std)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_by_one_has_unit_stddev() {
        // 2/(1+1) = 1, so draws are standard normal.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let m: Matrix<f64> = glorot_init(1, 1, &mut rng).unwrap();
            let v = m.get(0, 0);
            sum += v;
            sumsq += v * v;
        }
        let var = sumsq / n as f64 - (sum / n as f64).powi(2);
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn sample_variance_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m: Matrix<f64> = glorot_init(100, 300, &mut rng).unwrap();
        let n = m.len() as f64;
        let mean = m.data().iter().sum::<f64>() / n;
        let var = m.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 / 400.0;
        assert!(
            (var - expected).abs() / expected < 0.1,
            "variance {var} vs {expected}"
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let a: Matrix<f64> = glorot_init(5, 7, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b: Matrix<f64> = glorot_init(5, 7, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(glorot_init::<f64, _>(0, 3, &mut rng).is_err());
        assert!(glorot_init::<f64, _>(3, 0, &mut rng).is_err());
    }
}
