//! Forward pass: context encoding, per-start decoder runs, segment score
//! assembly. Everything needed by the backward pass is cached here.

use rand::RngCore;

use crate::error::{Result, SlmError};
use crate::nn::{dropout_mask, lstm_step_cached, masked_log_softmax, LstmState, LstmStepCache};
use crate::real::Real;
use crate::model::lattice::{Lattice, SegmentScores, Segmentation};
use crate::model::SlmParameters;

/// Dropout context threaded through a training forward pass.
pub enum DropoutCtx<'a> {
    Off,
    On { rng: &'a mut dyn RngCore, rate: f64 },
}

impl<'a> DropoutCtx<'a> {
    fn mask<F: Real>(&mut self, len: usize) -> Result<Option<Vec<F>>> {
        match self {
            DropoutCtx::Off => Ok(None),
            DropoutCtx::On { rng, rate } => {
                if *rate == 0.0 {
                    Ok(None)
                } else {
                    Ok(Some(dropout_mask(len, *rate, rng)?))
                }
            }
        }
    }
}

fn apply_mask<F: Real>(v: &[F], mask: &Option<Vec<F>>) -> Vec<F> {
    match mask {
        None => v.to_vec(),
        Some(m) => v.iter().zip(m).map(|(x, s)| *x * *s).collect(),
    }
}

/// Renormalization index sets for the output softmax.
///
/// Mid-segment predictions renormalize over {alphabet, eos}. When the
/// sentence-end factor is enabled, segment-initial predictions renormalize
/// over {alphabet, EOS} instead (a segment cannot be empty, and the EOS mass
/// at a boundary is exactly the sentence-end factor).
pub(crate) struct OutputMasks {
    pub first: Vec<usize>,
    pub mid: Vec<usize>,
}

impl OutputMasks {
    pub fn for_params<F: Real>(params: &SlmParameters<F>) -> Self {
        let v = params.config.vocab_size;
        let mut mid: Vec<usize> = (0..v).collect();
        mid.push(params.config.eos_id());
        let first = if params.config.include_sentence_end {
            let mut f: Vec<usize> = (0..v).collect();
            f.push(params.config.sent_end_id());
            f
        } else {
            mid.clone()
        };
        OutputMasks { first, mid }
    }
}

/// Encoder forward over a whole fragment, all layers, with caches.
pub(crate) struct EncForward<F> {
    /// states[j][l]: layer-l state after consuming j characters; states[0]
    /// is the learned initial state.
    pub states: Vec<Vec<LstmState<F>>>,
    /// caches[j][l]: cache of the step consuming character j.
    pub caches: Vec<Vec<LstmStepCache<F>>>,
    /// Embedding dropout mask per consumed character.
    pub input_masks: Vec<Option<Vec<F>>>,
    /// inter_masks[j][l-1]: dropout mask on the layer-(l-1) output fed to
    /// layer l while consuming character j.
    pub inter_masks: Vec<Vec<Option<Vec<F>>>>,
}

impl<F: Real> EncForward<F> {
    pub fn final_state(&self, pos: usize) -> &LstmState<F> {
        self.states[pos].last().unwrap()
    }
}

pub(crate) fn check_syms<F: Real>(params: &SlmParameters<F>, syms: &[u16]) -> Result<()> {
    let v = params.config.vocab_size;
    if let Some(bad) = syms.iter().find(|s| **s as usize >= v) {
        return Err(SlmError::Vocab(format!(
            "symbol id {bad} outside model alphabet of size {v}"
        )));
    }
    Ok(())
}

pub(crate) fn encode_full<F: Real>(
    params: &SlmParameters<F>,
    syms: &[u16],
    ctx: &mut DropoutCtx,
) -> Result<EncForward<F>> {
    check_syms(params, syms)?;
    let layers = params.config.encoder_layers;
    let init: Vec<LstmState<F>> = (0..layers)
        .map(|l| LstmState {
            h: params.enc_h0[l].data().to_vec(),
            c: params.enc_c0[l].data().to_vec(),
        })
        .collect();
    let mut states = vec![init];
    let mut caches = Vec::with_capacity(syms.len());
    let mut input_masks = Vec::with_capacity(syms.len());
    let mut inter_masks = Vec::with_capacity(syms.len());

    for (j, sym) in syms.iter().enumerate() {
        let emb = params.embed.row(*sym as usize);
        let imask = ctx.mask(emb.len())?;
        let mut x = apply_mask(emb, &imask);
        let mut layer_states = Vec::with_capacity(layers);
        let mut layer_caches = Vec::with_capacity(layers);
        let mut step_inter = Vec::with_capacity(layers.saturating_sub(1));
        for l in 0..layers {
            if l > 0 {
                let m = ctx.mask(x.len())?;
                x = apply_mask(&x, &m);
                step_inter.push(m);
            }
            let (st, cache) = lstm_step_cached(&params.encoder[l], &x, &states[j][l])?;
            x = st.h.clone();
            layer_states.push(st);
            layer_caches.push(cache);
        }
        states.push(layer_states);
        caches.push(layer_caches);
        input_masks.push(imask);
        inter_masks.push(step_inter);
    }
    Ok(EncForward { states, caches, input_masks, inter_masks })
}

/// One decoder run at a given start position: scores every prefix length
/// 1..=m of the segment candidates beginning there, sharing the underlying
/// LSTM steps.
pub(crate) struct DecRun<F> {
    pub start: usize,
    /// Longest prefix scored (0 for the sentence-end run at start == T).
    pub m: usize,
    /// Context state this run was bridged from (final encoder layer).
    pub ctx_h: Vec<F>,
    pub ctx_c: Vec<F>,
    /// layer_caches[l][t], t = 0..=m.
    pub layer_caches: Vec<Vec<LstmStepCache<F>>>,
    /// Embedding dropout mask per step input (index 0 is the start symbol).
    pub input_masks: Vec<Option<Vec<F>>>,
    /// inter_masks[t][l-1].
    pub inter_masks: Vec<Vec<Option<Vec<F>>>>,
    /// Masked softmax probabilities per step (zero at masked entries).
    pub probs: Vec<Vec<F>>,
    /// lp_eos[len] = log p(eos | step len), len = 1..=m (index 0 unused).
    pub lp_eos: Vec<F>,
    /// cum[len] = sum of lp_char[0..len].
    pub cum: Vec<F>,
    /// log p(EOS | step 0) for the sentence-end run.
    pub lp_sent_end: Option<F>,
}

impl<F: Real> DecRun<F> {
    pub fn segment_score(&self, len: usize) -> F {
        self.cum[len] + self.lp_eos[len]
    }
}

pub(crate) fn decoder_run<F: Real>(
    params: &SlmParameters<F>,
    syms: &[u16],
    start: usize,
    m: usize,
    masks: &OutputMasks,
    score_sent_end: bool,
    ctx_state: &LstmState<F>,
    ctx: &mut DropoutCtx,
) -> Result<DecRun<F>> {
    let layers = params.config.decoder_layers;
    let eos = params.config.eos_id();
    let sent = params.config.sent_end_id();

    // bridge to initial decoder states
    let mut state: Vec<LstmState<F>> = Vec::with_capacity(layers);
    for l in 0..layers {
        let mut h = params.bridge_bh[l].data().to_vec();
        params.bridge_wh[l].matvec_add(&ctx_state.h, &mut h);
        let mut c = params.bridge_bc[l].data().to_vec();
        params.bridge_wc[l].matvec_add(&ctx_state.c, &mut c);
        state.push(LstmState { h, c });
    }

    let mut layer_caches: Vec<Vec<LstmStepCache<F>>> = vec![Vec::with_capacity(m + 1); layers];
    let mut input_masks = Vec::with_capacity(m + 1);
    let mut inter_masks = Vec::with_capacity(m + 1);
    let mut probs = Vec::with_capacity(m + 1);
    let mut lp_char = Vec::with_capacity(m);
    let mut lp_eos = vec![F::zero(); m + 1];
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(F::zero());
    let mut lp_sent_end = None;

    for t in 0..=m {
        let raw_input: Vec<F> = if t == 0 {
            params.start_embed.data().to_vec()
        } else {
            params.embed.row(syms[start + t - 1] as usize).to_vec()
        };
        let imask = ctx.mask(raw_input.len())?;
        let mut x = apply_mask(&raw_input, &imask);
        let mut step_inter = Vec::with_capacity(layers.saturating_sub(1));
        for l in 0..layers {
            if l > 0 {
                let mk = ctx.mask(x.len())?;
                x = apply_mask(&x, &mk);
                step_inter.push(mk);
            }
            let (st, cache) = lstm_step_cached(&params.decoder[l], &x, &state[l])?;
            x = st.h.clone();
            state[l] = st;
            layer_caches[l].push(cache);
        }
        input_masks.push(imask);
        inter_masks.push(step_inter);

        let logits = params.output.logits(&state[layers - 1].h)?;
        let mask = if t == 0 { &masks.first } else { &masks.mid };
        let lp = masked_log_softmax(&logits, mask);
        if t < m {
            lp_char.push(lp[syms[start + t] as usize]);
            cum.push(cum[t] + lp_char[t]);
        }
        if t >= 1 {
            lp_eos[t] = lp[eos];
        }
        if t == 0 && score_sent_end {
            lp_sent_end = Some(lp[sent]);
        }
        probs.push(lp.iter().map(|v| if v.is_finite() { v.exp() } else { F::zero() }).collect());
    }

    Ok(DecRun {
        start,
        m,
        ctx_h: ctx_state.h.clone(),
        ctx_c: ctx_state.c.clone(),
        layer_caches,
        input_masks,
        inter_masks,
        probs,
        lp_eos,
        cum,
        lp_sent_end,
    })
}

/// Complete cached forward pass over one fragment.
pub(crate) struct FragmentForward<F> {
    pub enc: EncForward<F>,
    pub runs: Vec<DecRun<F>>,
    pub scores: SegmentScores<F>,
    pub lattice: Option<Lattice<F>>,
    pub loglik: F,
    /// Number of (start, length) segment candidates scored.
    pub scored_segments: usize,
}

/// Which likelihood the forward pass computes.
pub(crate) enum Target<'a> {
    Marginal,
    Gold(&'a Segmentation),
}

pub(crate) fn forward_fragment<F: Real>(
    params: &SlmParameters<F>,
    syms: &[u16],
    target: Target,
    ctx: &mut DropoutCtx,
) -> Result<FragmentForward<F>> {
    let t = syms.len();
    if t == 0 {
        return Err(SlmError::InvalidArgument("empty fragment".into()));
    }
    let k = params.config.max_segment_len;
    if let Target::Gold(gold) = &target {
        gold.validate(t, k)?;
    }
    let masks = OutputMasks::for_params(params);
    let enc = encode_full(params, syms, ctx)?;
    let mut scores = SegmentScores::new(t, k);
    let mut runs = Vec::new();
    let mut scored_segments = 0usize;

    match &target {
        Target::Marginal => {
            for start in 0..t {
                let m = k.min(t - start);
                let run =
                    decoder_run(params, syms, start, m, &masks, false, enc.final_state(start), ctx)?;
                for len in 1..=m {
                    scores.set(start, len, run.segment_score(len));
                    scored_segments += 1;
                }
                runs.push(run);
            }
        }
        Target::Gold(gold) => {
            let mut pos = 0;
            for len in &gold.lengths {
                let run = decoder_run(
                    params, syms, pos, *len, &masks, false, enc.final_state(pos), ctx,
                )?;
                scores.set(pos, *len, run.segment_score(*len));
                scored_segments += 1;
                runs.push(run);
                pos += len;
            }
        }
    }

    if params.config.include_sentence_end {
        let run = decoder_run(params, syms, t, 0, &masks, true, enc.final_state(t), ctx)?;
        scores.sent_end = Some(run.lp_sent_end.unwrap());
        runs.push(run);
    }

    let (lattice, loglik) = match &target {
        Target::Marginal => {
            let lat = Lattice::build(&scores)?;
            let ll = lat.marginal(&scores);
            (Some(lat), ll)
        }
        Target::Gold(gold) => (None, scores.segmentation_score(gold)),
    };

    Ok(FragmentForward { enc, runs, scores, lattice, loglik, scored_segments })
}
