//! Named-tensor access shared by the optimizers, gradient clipping,
//! checkpointing and the finite-difference checker.
//!
//! A gradient store is simply a second value of the same `Parameters` type
//! holding one accumulated gradient tensor per parameter tensor; it is zeroed
//! between optimizer steps.

use crate::nn::Matrix;
use crate::real::Real;

/// A fixed, ordered collection of named tensors.
///
/// Implementations must enumerate tensors in a stable order so that two
/// values of the same shape (parameters and their gradients, Adam moments)
/// can be zipped positionally.
pub trait Parameters<F: Real>: Sized {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)>;
    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)>;

    /// Same structure, all elements zero. Used for gradient stores and
    /// optimizer accumulators.
    fn zeros_like(&self) -> Self;

    fn zero(&mut self) {
        for (_, t) in self.tensors_mut() {
            t.fill(F::zero());
        }
    }

    /// self += other * scale, tensor by tensor. Used to merge per-worker
    /// gradient stores.
    fn add_scaled(&mut self, other: &Self, scale: F) {
        let other_t = other.tensors();
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other_t) {
            a.add_scaled(b, scale);
        }
    }

    /// Global L2 norm over every element of every tensor.
    fn global_norm(&self) -> F {
        let mut acc = F::zero();
        for (_, t) in self.tensors() {
            acc += t.sq_norm();
        }
        acc.sqrt()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.all_finite())
    }

    fn num_elements(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// A single tensor is a valid parameter set; handy in unit tests.
impl<F: Real> Parameters<F> for Matrix<F> {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)> {
        vec![("p".to_string(), self)]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)> {
        vec![("p".to_string(), self)]
    }

    fn zeros_like(&self) -> Self {
        Matrix::zeros(self.rows(), self.cols())
    }
}
