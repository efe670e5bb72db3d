//! Minimal neural substrate: dense matrices, LSTM cells, output layer,
//! initialization, dropout, optimizers and a finite-difference gradient
//! verifier.

mod dropout;
mod gradcheck;
mod init;
mod lstm;
mod matrix;
mod optim;
mod output;
mod params;

pub use dropout::{dropout_apply, dropout_mask};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use init::glorot_init;
pub use lstm::{
    lstm_backward, lstm_step, lstm_step_cached, LstmCellParams, LstmState, LstmStepCache,
    GATE_F, GATE_G, GATE_I, GATE_NAMES, GATE_O,
};
pub use matrix::Matrix;
pub use optim::{adam_step, clip_gradients, sgd_step, AdamConfig, AdamState};
pub use output::{
    log_softmax_in_place, log_sum_exp, lse2, masked_log_softmax, output_logprobs,
    OutputLayerParams,
};
pub use params::Parameters;
