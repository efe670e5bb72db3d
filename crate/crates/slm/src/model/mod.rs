//! The segmental language model: context encoding, segment scoring, marginal
//! likelihood, Viterbi decoding, supervised likelihood, training gradients
//! and generation.

mod backward;
mod checkpoint;
mod config;
mod forward;
mod generate;
mod lattice;
mod tensors;

pub use checkpoint::{
    fnv1a64, load_model, load_tensors, read_sidecar, save_tensors, write_sidecar, Sidecar,
};
pub use config::SlmConfig;
pub use generate::{generate, Generated};
pub use lattice::{marginal_score_grads, Lattice, SegmentScores, Segmentation};
pub use tensors::SlmParameters;

use rand::RngCore;

use crate::error::{Result, SlmError};
use crate::nn::LstmState;
use crate::real::Real;
use forward::{decoder_run, encode_full, forward_fragment, DropoutCtx, OutputMasks, Target};

/// One training example: a fragment, optionally with a gold segmentation
/// that switches its loss term to the supervised likelihood.
#[derive(Debug, Clone)]
pub struct Sample {
    pub syms: Vec<u16>,
    pub gold: Option<Segmentation>,
}

impl Sample {
    pub fn unsupervised(syms: Vec<u16>) -> Self {
        Sample { syms, gold: None }
    }
}

impl<F: Real> SlmParameters<F> {
    /// Per-position context states (final encoder layer): index j summarizes
    /// the first j characters; index 0 is the learned initial state.
    pub fn encode_context(&self, syms: &[u16]) -> Result<Vec<LstmState<F>>> {
        let enc = encode_full(self, syms, &mut DropoutCtx::Off)?;
        Ok(enc.states.iter().map(|per_layer| per_layer.last().unwrap().clone()).collect())
    }

    /// Log probability of one segment given a context state, including its
    /// end-of-segment factor.
    pub fn segment_logprob(&self, context_state: &LstmState<F>, segment: &[u16]) -> Result<F> {
        let len = segment.len();
        if len == 0 || len > self.config.max_segment_len {
            return Err(SlmError::InvalidArgument(format!(
                "segment length {len} outside [1, {}]",
                self.config.max_segment_len
            )));
        }
        forward::check_syms(self, segment)?;
        let masks = OutputMasks::for_params(self);
        let run = decoder_run(
            self,
            segment,
            0,
            len,
            &masks,
            false,
            context_state,
            &mut DropoutCtx::Off,
        )?;
        Ok(run.segment_score(len))
    }

    /// log p(fragment) marginalized over every segmentation with parts up to
    /// the configured maximum length.
    pub fn marginal_loglik(&self, syms: &[u16]) -> Result<F> {
        Ok(self.marginal_with_stats(syms)?.0)
    }

    /// Marginal log-likelihood plus the number of segment candidates scored
    /// (the linear-time contract: Σ_n min(K, T-n)).
    pub fn marginal_with_stats(&self, syms: &[u16]) -> Result<(F, usize)> {
        let fwd = forward_fragment(self, syms, Target::Marginal, &mut DropoutCtx::Off)?;
        Ok((fwd.loglik, fwd.scored_segments))
    }

    /// Most probable segmentation and its log probability.
    pub fn viterbi_segment(&self, syms: &[u16]) -> Result<(Segmentation, F)> {
        let fwd = forward_fragment(self, syms, Target::Marginal, &mut DropoutCtx::Off)?;
        let lat = fwd.lattice.as_ref().unwrap();
        Ok(lat.viterbi(&fwd.scores))
    }

    /// Log probability of one specific (gold) segmentation.
    pub fn supervised_loglik(&self, syms: &[u16], gold: &Segmentation) -> Result<F> {
        let fwd = forward_fragment(self, syms, Target::Gold(gold), &mut DropoutCtx::Off)?;
        Ok(fwd.loglik)
    }

    /// Mean negative log-likelihood over the batch, forward only. Dropout is
    /// disabled; useful for evaluation and gradient checking.
    pub fn batch_loss(&self, batch: &[Sample]) -> Result<F> {
        if batch.is_empty() {
            return Err(SlmError::InvalidArgument("empty batch".into()));
        }
        let mut total = F::zero();
        for s in batch {
            let target = match &s.gold {
                Some(g) => Target::Gold(g),
                None => Target::Marginal,
            };
            let fwd = forward_fragment(self, &s.syms, target, &mut DropoutCtx::Off)?;
            total += -fwd.loglik;
        }
        Ok(total / F::from_usize(batch.len()))
    }

    /// Mean negative log-likelihood over the batch plus gradients for every
    /// tensor. With `dropout_rng` supplied, dropout is active at the
    /// configured rate (training mode); pass `None` for exact gradients.
    pub fn loss_and_grads(
        &self,
        batch: &[Sample],
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<(F, SlmParameters<F>)> {
        if batch.is_empty() {
            return Err(SlmError::InvalidArgument("empty batch".into()));
        }
        let mut grads = SlmParameters::zeros(&self.config)?;
        let scale = -F::one() / F::from_usize(batch.len());
        let mut total = F::zero();
        for s in batch {
            let mut ctx = match dropout_rng.as_deref_mut() {
                Some(rng) => DropoutCtx::On { rng, rate: self.config.dropout_rate },
                None => DropoutCtx::Off,
            };
            let target = match &s.gold {
                Some(g) => Target::Gold(g),
                None => Target::Marginal,
            };
            let fwd = forward_fragment(self, &s.syms, target, &mut ctx)?;
            if !fwd.loglik.is_finite() {
                return Err(SlmError::NonFinite(format!(
                    "log-likelihood {} on fragment of length {}",
                    fwd.loglik,
                    s.syms.len()
                )));
            }
            total += -fwd.loglik;
            backward::backward_fragment(self, &s.syms, &fwd, s.gold.as_ref(), scale, &mut grads);
        }
        let loss = total / F::from_usize(batch.len());
        if !loss.is_finite() {
            return Err(SlmError::NonFinite(format!("batch loss {loss}")));
        }
        Ok((loss, grads))
    }

    /// Log probability of emitting `prefix` as the leading characters of a
    /// segment, with no end-of-segment factor. Unlike [`segment_logprob`],
    /// the length is not capped: the generative process itself has no cap,
    /// so enumeration-style tests need scores past the training-time
    /// maximum.
    ///
    /// [`segment_logprob`]: SlmParameters::segment_logprob
    pub fn segment_prefix_logprob(
        &self,
        context_state: &LstmState<F>,
        prefix: &[u16],
    ) -> Result<F> {
        forward::check_syms(self, prefix)?;
        let masks = OutputMasks::for_params(self);
        let run = decoder_run(
            self,
            prefix,
            0,
            prefix.len(),
            &masks,
            false,
            context_state,
            &mut DropoutCtx::Off,
        )?;
        Ok(run.cum[prefix.len()])
    }

    /// Log probability of one full segment (prefix plus its end-of-segment
    /// factor) with no length cap; see [`segment_prefix_logprob`].
    ///
    /// [`segment_prefix_logprob`]: SlmParameters::segment_prefix_logprob
    pub fn segment_logprob_uncapped(
        &self,
        context_state: &LstmState<F>,
        segment: &[u16],
    ) -> Result<F> {
        if segment.is_empty() {
            return Err(SlmError::InvalidArgument("empty segment".into()));
        }
        forward::check_syms(self, segment)?;
        let masks = OutputMasks::for_params(self);
        let run = decoder_run(
            self,
            segment,
            0,
            segment.len(),
            &masks,
            false,
            context_state,
            &mut DropoutCtx::Off,
        )?;
        Ok(run.segment_score(segment.len()))
    }

    /// Per-step decoder distributions for one context state, exposed for
    /// enumeration-style tests and generation: returns the masked log-prob
    /// vector at the segment-initial step.
    pub fn boundary_logprobs(&self, context_state: &LstmState<F>) -> Result<Vec<F>> {
        let masks = OutputMasks::for_params(self);
        let run = decoder_run(
            self,
            &[],
            0,
            0,
            &masks,
            self.config.include_sentence_end,
            context_state,
            &mut DropoutCtx::Off,
        )?;
        Ok(run.probs[0].iter().map(|p| p.ln()).collect())
    }
}
