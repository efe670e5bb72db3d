//! Segmental language modeling for fully unsupervised word segmentation.
//!
//! A context encoder LSTM summarizes the characters seen so far; a stacked
//! decoder LSTM scores candidate segments; a forward lattice marginalizes
//! over every segmentation and its max-product variant decodes the best one.
//! Training maximizes the marginal likelihood of raw character fragments,
//! optionally mixed with a small number of gold-segmented guideline
//! sentences.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod postprocess;
pub mod real;
pub mod train;

pub use error::{Result, SlmError};
pub use real::Real;
