//! Segment-by-segment sampling from the model.

use rand::Rng;

use crate::error::{Result, SlmError};
use crate::nn::{lstm_step, masked_log_softmax, LstmState};
use crate::real::Real;
use crate::model::forward::OutputMasks;
use crate::model::SlmParameters;

/// A sampled sentence, split into the segments the decoder produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub segments: Vec<Vec<u16>>,
    /// Sentence hit `max_chars` before the end-of-sentence symbol.
    pub truncated: bool,
    /// Sampling has no length cap, so segments can exceed the training-time
    /// maximum; this counts how many did.
    pub overlong_segments: usize,
}

impl Generated {
    pub fn chars(&self) -> Vec<u16> {
        self.segments.iter().flatten().copied().collect()
    }
}

fn sample_index<F: Real, R: Rng>(logprobs: &[F], mask: &[usize], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &i in mask {
        acc += logprobs[i].exp().to_f64();
        if u < acc {
            return i;
        }
    }
    *mask.last().unwrap()
}

/// Generate one sentence. The context encoder state is carried forward
/// incrementally, so the cost is linear in the emitted length.
pub fn generate<F: Real, R: Rng>(
    params: &SlmParameters<F>,
    rng: &mut R,
    max_chars: usize,
) -> Result<Generated> {
    if max_chars == 0 {
        return Err(SlmError::InvalidArgument("max_chars must be at least 1".into()));
    }
    let cfg = &params.config;
    let masks = OutputMasks::for_params(params);
    let eos = cfg.eos_id();
    let sent_end = cfg.sent_end_id();

    // running encoder state, one per layer
    let mut enc_state: Vec<LstmState<F>> = (0..cfg.encoder_layers)
        .map(|l| LstmState {
            h: params.enc_h0[l].data().to_vec(),
            c: params.enc_c0[l].data().to_vec(),
        })
        .collect();

    let mut segments: Vec<Vec<u16>> = Vec::new();
    let mut emitted = 0usize;
    let mut truncated = false;
    let mut overlong = 0usize;

    'sentence: loop {
        // bridge from the current context
        let ctx = enc_state.last().unwrap();
        let mut dec: Vec<LstmState<F>> = Vec::with_capacity(cfg.decoder_layers);
        for l in 0..cfg.decoder_layers {
            let mut h = params.bridge_bh[l].data().to_vec();
            params.bridge_wh[l].matvec_add(&ctx.h, &mut h);
            let mut c = params.bridge_bc[l].data().to_vec();
            params.bridge_wc[l].matvec_add(&ctx.c, &mut c);
            dec.push(LstmState { h, c });
        }

        let mut segment: Vec<u16> = Vec::new();
        let mut input: Vec<F> = params.start_embed.data().to_vec();
        loop {
            let mut x = input.clone();
            for l in 0..cfg.decoder_layers {
                let st = lstm_step(&params.decoder[l], &x, &dec[l])?;
                x = st.h.clone();
                dec[l] = st;
            }
            let logits = params.output.logits(&x)?;
            let first_step = segment.is_empty();
            let mask = if first_step { &masks.first } else { &masks.mid };
            let lp = masked_log_softmax(&logits, mask);
            let pick = sample_index(&lp, mask, rng);

            // without a sentence-end factor the first-step mask offers eos
            // instead; either control symbol at a boundary ends the sentence
            if first_step && (pick == sent_end || pick == eos) {
                break 'sentence;
            }
            if !first_step && pick == eos {
                break;
            }
            // a character: emit and advance both decoder input and encoder
            let sym = pick as u16;
            segment.push(sym);
            emitted += 1;
            let emb = params.embed.row(sym as usize);
            let mut ex = emb.to_vec();
            for l in 0..cfg.encoder_layers {
                let st = lstm_step(&params.encoder[l], &ex, &enc_state[l])?;
                ex = st.h.clone();
                enc_state[l] = st;
            }
            if emitted >= max_chars {
                truncated = true;
                if segment.len() > cfg.max_segment_len {
                    overlong += 1;
                }
                segments.push(segment);
                return Ok(Generated { segments, truncated, overlong_segments: overlong });
            }
            input = emb.to_vec();
        }
        if segment.len() > cfg.max_segment_len {
            overlong += 1;
        }
        segments.push(segment);
    }
    Ok(Generated { segments, truncated, overlong_segments: overlong })
}
