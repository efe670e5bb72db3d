//! Two-phase training loop.
//!
//! Plain SGD with a large learning rate and aggressive gradient clipping
//! carries the model through the unstable early phase; Adam then takes over
//! for the remaining steps. Raw fragments are batched afresh every epoch,
//! with any gold-segmented guideline examples appended to the stream so they
//! are visited once per epoch at equal weight.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::make_batches;
use crate::error::{Result, SlmError};
use crate::model::{Sample, SlmParameters};
use crate::nn::{adam_step, clip_gradients, sgd_step, AdamConfig, AdamState, Parameters};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub batch_size: usize,
    pub sgd_lr: f64,
    /// Steps run with plain SGD before switching to Adam.
    pub sgd_steps: usize,
    pub adam_lr: f64,
    pub total_steps: usize,
    /// Global gradient-norm clipping threshold, applied in both phases.
    pub clip: f64,
    pub seed: u64,
    pub bucket_by_length: bool,
    /// Worker threads per batch; 1 disables threading.
    pub threads: usize,
    /// Record the loss every this many steps (and at the final step).
    pub log_every: usize,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            batch_size: 256,
            sgd_lr: 16.0,
            sgd_steps: 400,
            adam_lr: 0.005,
            total_steps: 6000,
            clip: 0.1,
            seed: 0,
            bucket_by_length: true,
            threads: 1,
            log_every: 50,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.batch_size == 0 {
            return Err(SlmError::InvalidArgument(
                "total_steps and batch_size must be at least 1".into(),
            ));
        }
        if self.sgd_lr <= 0.0 || self.adam_lr <= 0.0 || self.clip <= 0.0 {
            return Err(SlmError::InvalidArgument(
                "learning rates and clip threshold must be positive".into(),
            ));
        }
        if self.threads == 0 {
            return Err(SlmError::InvalidArgument("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct TrainOutcome<F: Real> {
    pub params: SlmParameters<F>,
    /// `(step, batch loss)` at every logging point.
    pub loss_trace: Vec<(usize, f64)>,
    pub steps_run: usize,
    /// Set when training stopped early on a non-finite loss; `params` then
    /// holds the last state that produced a finite loss.
    pub aborted: Option<String>,
}

/// Mean batch loss and summed-to-mean gradients, split across worker threads.
fn batch_loss_and_grads<F: Real>(
    params: &SlmParameters<F>,
    batch: &[&Sample],
    threads: usize,
    dropout_seed: u64,
) -> Result<(F, SlmParameters<F>)> {
    let owned: Vec<Sample> = batch.iter().map(|s| (*s).clone()).collect();
    if threads <= 1 || batch.len() < 2 * threads {
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let rng_opt: Option<&mut dyn RngCore> =
            if params.config.dropout_rate > 0.0 { Some(&mut rng) } else { None };
        return params.loss_and_grads(&owned, rng_opt);
    }
    let chunk_len = owned.len().div_ceil(threads);
    let chunks: Vec<&[Sample]> = owned.chunks(chunk_len).collect();
    let results: Vec<Result<(F, SlmParameters<F>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .enumerate()
            .map(|(i, chunk)| {
                scope.spawn(move || {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(dropout_seed ^ (i as u64).wrapping_mul(0x9e37));
                    let rng_opt: Option<&mut dyn RngCore> =
                        if params.config.dropout_rate > 0.0 { Some(&mut rng) } else { None };
                    params.loss_and_grads(chunk, rng_opt)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
    });
    let total = F::from_usize(owned.len());
    let mut loss = F::zero();
    let mut grads = SlmParameters::zeros(&params.config)?;
    for (chunk, res) in chunks.iter().zip(results) {
        let (l, g) = res?;
        let w = F::from_usize(chunk.len()) / total;
        loss += l * w;
        grads.add_scaled(&g, w);
    }
    Ok((loss, grads))
}

/// Train a fresh or pre-initialized model. `raw` fragments are the unlabeled
/// stream; `guideline` examples carry gold segmentations and are appended to
/// each epoch. `progress` is called once per step with the batch loss.
pub fn train<F: Real>(
    params: &mut SlmParameters<F>,
    raw: &[Sample],
    guideline: &[Sample],
    schedule: &TrainSchedule,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<TrainOutcome<F>> {
    schedule.validate()?;
    if raw.is_empty() && guideline.is_empty() {
        return Err(SlmError::InvalidArgument("no training data".into()));
    }
    let stream: Vec<&Sample> = raw.iter().chain(guideline.iter()).collect();
    let lengths: Vec<usize> = stream.iter().map(|s| s.syms.len()).collect();

    let mut batch_rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut adam: Option<AdamState<F, SlmParameters<F>>> = None;
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut step = 0usize;

    'steps: loop {
        let batches =
            make_batches(&lengths, schedule.batch_size, schedule.bucket_by_length, &mut batch_rng)?;
        for idx in batches {
            if step >= schedule.total_steps {
                break 'steps;
            }
            let batch: Vec<&Sample> = idx.iter().map(|&i| stream[i]).collect();
            let dropout_seed = schedule.seed ^ 0x5eed ^ (step as u64) << 16;
            let (loss, mut grads) =
                match batch_loss_and_grads(params, &batch, schedule.threads, dropout_seed) {
                    Ok(r) => r,
                    Err(SlmError::NonFinite(msg)) => {
                        let aborted = format!("non-finite loss at step {step}: {msg}");
                        return Ok(TrainOutcome {
                            params: params.clone(),
                            loss_trace: trace,
                            steps_run: step,
                            aborted: Some(aborted),
                        });
                    }
                    Err(e) => return Err(e),
                };
            let loss_f64 = loss.to_f64();
            if !loss_f64.is_finite() {
                return Ok(TrainOutcome {
                    params: params.clone(),
                    loss_trace: trace,
                    steps_run: step,
                    aborted: Some(format!("non-finite loss at step {step}")),
                });
            }
            clip_gradients(&mut grads, F::from_f64(schedule.clip))?;
            if step < schedule.sgd_steps {
                sgd_step(params, &grads, F::from_f64(schedule.sgd_lr));
            } else {
                let state = match &mut adam {
                    Some(s) => s,
                    None => adam.insert(AdamState::new(
                        params,
                        AdamConfig::with_lr(schedule.adam_lr),
                    )),
                };
                adam_step(params, &grads, state);
            }
            step += 1;
            progress(step, loss_f64);
            if step % schedule.log_every == 0 || step == schedule.total_steps {
                trace.push((step, loss_f64));
            }
        }
    }
    Ok(TrainOutcome { params: params.clone(), loss_trace: trace, steps_run: step, aborted: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SlmConfig;
    use rand::Rng;

    fn tiny_config() -> SlmConfig {
        let mut cfg = SlmConfig::tiny(4, 2);
        cfg.dropout_rate = 0.1;
        cfg
    }

    fn toy_samples(n: usize, seed: u64) -> Vec<Sample> {
        // fragments of repeated two-symbol words: clear segment structure
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let words = rng.gen_range(1..4);
                let mut syms = Vec::new();
                for _ in 0..words {
                    let a = rng.gen_range(0..2) as u16 * 2;
                    syms.push(a);
                    syms.push(a + 1);
                }
                Sample { syms, gold: None }
            })
            .collect()
    }

    fn quick_schedule() -> TrainSchedule {
        TrainSchedule {
            batch_size: 8,
            sgd_lr: 1.0,
            sgd_steps: 5,
            adam_lr: 0.01,
            total_steps: 30,
            clip: 0.1,
            seed: 3,
            bucket_by_length: true,
            threads: 1,
            log_every: 10,
        }
    }

    #[test]
    fn loss_decreases_on_toy_data() {
        let cfg = tiny_config();
        let samples = toy_samples(64, 1);
        let mut params =
            SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let before = params.batch_loss(&samples).unwrap();
        let out = train(&mut params, &samples, &[], &quick_schedule(), &mut |_, _| {}).unwrap();
        assert!(out.aborted.is_none());
        assert_eq!(out.steps_run, 30);
        let after = out.params.batch_loss(&samples).unwrap();
        assert!(after < before, "loss went from {before} to {after}");
        assert_eq!(out.loss_trace.len(), 3);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let cfg = tiny_config();
        let samples = toy_samples(32, 2);
        let run = |seed: u64| {
            let mut p =
                SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            let mut sched = quick_schedule();
            sched.seed = seed;
            sched.total_steps = 10;
            train(&mut p, &samples, &[], &sched, &mut |_, _| {}).unwrap().loss_trace
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn guideline_examples_enter_the_stream() {
        let cfg = tiny_config();
        let raw = toy_samples(8, 3);
        let gold: Vec<Sample> = toy_samples(8, 4)
            .into_iter()
            .map(|mut s| {
                let n = s.syms.len();
                s.gold = Some(crate::model::Segmentation::new(vec![2; n / 2]));
                s
            })
            .collect();
        let mut p = SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let mut sched = quick_schedule();
        sched.total_steps = 8;
        sched.batch_size = 16; // one batch covers the whole stream
        let out = train(&mut p, &raw, &gold, &sched, &mut |_, _| {}).unwrap();
        assert!(out.aborted.is_none());
    }

    #[test]
    fn thread_count_does_not_change_the_math_without_dropout() {
        let mut cfg = tiny_config();
        cfg.dropout_rate = 0.0;
        let samples = toy_samples(16, 5);
        let run = |threads: usize| {
            let mut p =
                SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
            let mut sched = quick_schedule();
            sched.threads = threads;
            sched.total_steps = 6;
            sched.batch_size = 16;
            let out = train(&mut p, &samples, &[], &sched, &mut |_, _| {}).unwrap();
            out.params.batch_loss(&samples).unwrap()
        };
        let a = run(1);
        let b = run(2);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn rejects_empty_data_and_bad_schedules() {
        let cfg = tiny_config();
        let mut p = SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(train(&mut p, &[], &[], &quick_schedule(), &mut |_, _| {}).is_err());
        let mut sched = quick_schedule();
        sched.clip = 0.0;
        assert!(sched.validate().is_err());
        let mut sched = quick_schedule();
        sched.threads = 0;
        assert!(sched.validate().is_err());
    }
}
