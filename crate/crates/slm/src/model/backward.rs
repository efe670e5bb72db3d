//! Reverse pass over the cached forward structures.
//!
//! Gradient of log-sum-exp nodes in the lattice is the softmax responsibility
//! over incoming arcs; everything below that is plain backpropagation through
//! the unrolled LSTM stacks, the bridge affine and the embedding lookups.

use crate::nn::{lstm_backward, LstmStepCache};
use crate::real::Real;
use crate::model::forward::{DecRun, EncForward, FragmentForward, OutputMasks};
use crate::model::lattice::{marginal_score_grads, SegmentScores, Segmentation};
use crate::model::SlmParameters;

/// Accumulate gradients for one fragment into `grads`.
///
/// `d_loglik` is dLoss/dloglik for this fragment (e.g. -1/batch for a
/// mean negative log-likelihood loss).
pub(crate) fn backward_fragment<F: Real>(
    params: &SlmParameters<F>,
    syms: &[u16],
    fwd: &FragmentForward<F>,
    gold: Option<&Segmentation>,
    d_loglik: F,
    grads: &mut SlmParameters<F>,
) {
    let t = syms.len();
    let masks = OutputMasks::for_params(params);

    // 1. gradient of the log-likelihood w.r.t. each segment score
    let (d_scores, d_sent) = match (gold, &fwd.lattice) {
        (None, Some(lat)) => marginal_score_grads(&fwd.scores, lat, d_loglik),
        (Some(g), _) => {
            let mut d = SegmentScores::new(t, params.config.max_segment_len);
            let mut pos = 0;
            for len in &g.lengths {
                d.set(pos, *len, d_loglik);
                pos += len;
            }
            let ds = if fwd.scores.sent_end.is_some() { d_loglik } else { F::zero() };
            (d, ds)
        }
        _ => unreachable!("marginal forward always builds a lattice"),
    };

    // 2. backprop each decoder run; context-state gradients accumulate here
    let eh = params.config.encoder_hidden_dim;
    let mut d_ctx_h = vec![vec![F::zero(); eh]; t + 1];
    let mut d_ctx_c = vec![vec![F::zero(); eh]; t + 1];

    for run in &fwd.runs {
        let is_sent_run = run.lp_sent_end.is_some();
        // dσ(start, len) for the lengths this run scored
        let mut d_sig = vec![F::zero(); run.m + 1]; // index by len
        let mut any = is_sent_run && d_sent != F::zero();
        for len in 1..=run.m {
            let v = d_scores.get(run.start, len);
            if v != F::neg_infinity() && v != F::zero() {
                d_sig[len] = v;
                any = true;
            }
        }
        if !any {
            continue;
        }
        backward_run(
            params,
            syms,
            run,
            &d_sig,
            if is_sent_run { d_sent } else { F::zero() },
            &masks,
            grads,
            &mut d_ctx_h[run.start],
            &mut d_ctx_c[run.start],
        );
    }

    // 3. backprop the encoder with the accumulated context-state gradients
    backward_encoder(params, syms, &fwd.enc, &d_ctx_h, &d_ctx_c, grads);
}

#[allow(clippy::too_many_arguments)]
fn backward_run<F: Real>(
    params: &SlmParameters<F>,
    syms: &[u16],
    run: &DecRun<F>,
    d_sig: &[F],
    d_sent: F,
    masks: &OutputMasks,
    grads: &mut SlmParameters<F>,
    d_ctx_h: &mut [F],
    d_ctx_c: &mut [F],
) {
    let layers = params.config.decoder_layers;
    let dh_dim = params.config.decoder_hidden_dim;
    let vout = params.config.vocab_out();
    let eos = params.config.eos_id();
    let sent = params.config.sent_end_id();

    // suffix sums: dlp_char[t] = sum over len > t of dσ(len)
    let mut d_lp_char = vec![F::zero(); run.m];
    let mut acc = F::zero();
    for tt in (0..run.m).rev() {
        acc += d_sig[tt + 1];
        d_lp_char[tt] = acc;
    }

    // recurrent carries per layer
    let mut carry_h = vec![vec![F::zero(); dh_dim]; layers];
    let mut carry_c = vec![vec![F::zero(); dh_dim]; layers];

    for step in (0..=run.m).rev() {
        // gradient entries on this step's masked log-softmax
        let mut entries: Vec<(usize, F)> = Vec::with_capacity(2);
        if step < run.m && d_lp_char[step] != F::zero() {
            entries.push((syms[run.start + step] as usize, d_lp_char[step]));
        }
        if step >= 1 && d_sig[step] != F::zero() {
            entries.push((eos, d_sig[step]));
        }
        if step == 0 && d_sent != F::zero() {
            entries.push((sent, d_sent));
        }

        // d logits via masked softmax backward
        let mut d_top = vec![F::zero(); dh_dim];
        if !entries.is_empty() {
            let mut d_logits = vec![F::zero(); vout];
            let g_total: F = entries.iter().map(|(_, g)| *g).sum();
            let mask = if step == 0 { &masks.first } else { &masks.mid };
            let p = &run.probs[step];
            for &i in mask {
                d_logits[i] = -g_total * p[i];
            }
            for (i, g) in &entries {
                d_logits[*i] += *g;
            }
            let h_top = &run.layer_caches[layers - 1][step];
            // h of the top layer at this step: o * tanh(c_new)
            let h_vec: Vec<F> = h_top
                .o
                .iter()
                .zip(&h_top.c_new)
                .map(|(o, c)| *o * c.tanh())
                .collect();
            grads.output.weight.outer_add(&d_logits, &h_vec);
            for (b, d) in grads.output.bias.data_mut().iter_mut().zip(&d_logits) {
                *b += *d;
            }
            params.output.weight.matvec_t_add(&d_logits, &mut d_top);
        }

        // BPTT through the layer stack, top to bottom
        let mut d_from_above: Vec<F> = d_top;
        for l in (0..layers).rev() {
            let cache: &LstmStepCache<F> = &run.layer_caches[l][step];
            let mut dh = std::mem::take(&mut carry_h[l]);
            for (a, b) in dh.iter_mut().zip(&d_from_above) {
                *a += *b;
            }
            let dc = std::mem::take(&mut carry_c[l]);
            let mut dx = vec![F::zero(); cache.x.len()];
            let mut dh_prev = vec![F::zero(); dh_dim];
            let mut dc_prev = vec![F::zero(); dh_dim];
            lstm_backward(
                &params.decoder[l],
                cache,
                &dh,
                &dc,
                &mut grads.decoder[l],
                &mut dx,
                &mut dh_prev,
                &mut dc_prev,
            );
            carry_h[l] = dh_prev;
            carry_c[l] = dc_prev;
            if l > 0 {
                // input came from layer l-1's h through an optional mask
                if let Some(mk) = &run.inter_masks[step][l - 1] {
                    for (d, m) in dx.iter_mut().zip(mk) {
                        *d *= *m;
                    }
                }
                d_from_above = dx;
            } else {
                // embedding (or start symbol) gradient
                if let Some(mk) = &run.input_masks[step] {
                    for (d, m) in dx.iter_mut().zip(mk) {
                        *d *= *m;
                    }
                }
                if step == 0 {
                    for (g, d) in grads.start_embed.data_mut().iter_mut().zip(&dx) {
                        *g += *d;
                    }
                } else {
                    let row = grads.embed.row_mut(syms[run.start + step - 1] as usize);
                    for (g, d) in row.iter_mut().zip(&dx) {
                        *g += *d;
                    }
                }
                d_from_above = Vec::new();
            }
        }
    }

    // bridge backward: carries now hold gradients on the initial states
    for l in 0..layers {
        grads.bridge_wh[l].outer_add(&carry_h[l], &run.ctx_h);
        for (b, d) in grads.bridge_bh[l].data_mut().iter_mut().zip(&carry_h[l]) {
            *b += *d;
        }
        params.bridge_wh[l].matvec_t_add(&carry_h[l], d_ctx_h);
        grads.bridge_wc[l].outer_add(&carry_c[l], &run.ctx_c);
        for (b, d) in grads.bridge_bc[l].data_mut().iter_mut().zip(&carry_c[l]) {
            *b += *d;
        }
        params.bridge_wc[l].matvec_t_add(&carry_c[l], d_ctx_c);
    }
}

fn backward_encoder<F: Real>(
    params: &SlmParameters<F>,
    syms: &[u16],
    enc: &EncForward<F>,
    d_ctx_h: &[Vec<F>],
    d_ctx_c: &[Vec<F>],
    grads: &mut SlmParameters<F>,
) {
    let layers = params.config.encoder_layers;
    let eh = params.config.encoder_hidden_dim;
    let t = syms.len();
    let top = layers - 1;

    let mut carry_h = vec![vec![F::zero(); eh]; layers];
    let mut carry_c = vec![vec![F::zero(); eh]; layers];

    for j in (0..t).rev() {
        // direct use of state j+1 as a decoder context
        for (a, b) in carry_h[top].iter_mut().zip(&d_ctx_h[j + 1]) {
            *a += *b;
        }
        for (a, b) in carry_c[top].iter_mut().zip(&d_ctx_c[j + 1]) {
            *a += *b;
        }
        let mut d_from_above: Vec<F> = Vec::new();
        for l in (0..layers).rev() {
            let cache = &enc.caches[j][l];
            let mut dh = std::mem::take(&mut carry_h[l]);
            for (a, b) in dh.iter_mut().zip(&d_from_above) {
                *a += *b;
            }
            let dc = std::mem::take(&mut carry_c[l]);
            let mut dx = vec![F::zero(); cache.x.len()];
            let mut dh_prev = vec![F::zero(); eh];
            let mut dc_prev = vec![F::zero(); eh];
            lstm_backward(
                &params.encoder[l],
                cache,
                &dh,
                &dc,
                &mut grads.encoder[l],
                &mut dx,
                &mut dh_prev,
                &mut dc_prev,
            );
            carry_h[l] = dh_prev;
            carry_c[l] = dc_prev;
            if l > 0 {
                if let Some(mk) = &enc.inter_masks[j][l - 1] {
                    for (d, m) in dx.iter_mut().zip(mk) {
                        *d *= *m;
                    }
                }
                d_from_above = dx;
            } else {
                if let Some(mk) = &enc.input_masks[j] {
                    for (d, m) in dx.iter_mut().zip(mk) {
                        *d *= *m;
                    }
                }
                let row = grads.embed.row_mut(syms[j] as usize);
                for (g, d) in row.iter_mut().zip(&dx) {
                    *g += *d;
                }
            }
        }
    }

    // gradient on the learned initial state
    for (a, b) in carry_h[top].iter_mut().zip(&d_ctx_h[0]) {
        *a += *b;
    }
    for (a, b) in carry_c[top].iter_mut().zip(&d_ctx_c[0]) {
        *a += *b;
    }
    for l in 0..layers {
        for (g, d) in grads.enc_h0[l].data_mut().iter_mut().zip(&carry_h[l]) {
            *g += *d;
        }
        for (g, d) in grads.enc_c0[l].data_mut().iter_mut().zip(&carry_c[l]) {
            *g += *d;
        }
    }
}
