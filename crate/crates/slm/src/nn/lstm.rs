//! LSTM cell: forward step, cached forward, and hand-derived backward.

use crate::error::{Result, SlmError};
use crate::nn::{Matrix, Parameters};
use crate::real::Real;

pub const GATE_I: usize = 0;
pub const GATE_F: usize = 1;
pub const GATE_G: usize = 2;
pub const GATE_O: usize = 3;
pub const GATE_NAMES: [&str; 4] = ["i", "f", "g", "o"];

/// Per-gate input weights, recurrent weights and biases.
#[derive(Debug, Clone)]
pub struct LstmCellParams<F> {
    /// hidden_dim x input_dim, one per gate (i, f, g, o).
    pub wx: [Matrix<F>; 4],
    /// hidden_dim x hidden_dim, one per gate.
    pub wh: [Matrix<F>; 4],
    /// hidden_dim x 1, one per gate.
    pub b: [Matrix<F>; 4],
}

impl<F: Real> LstmCellParams<F> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmCellParams {
            wx: std::array::from_fn(|_| Matrix::zeros(hidden_dim, input_dim)),
            wh: std::array::from_fn(|_| Matrix::zeros(hidden_dim, hidden_dim)),
            b: std::array::from_fn(|_| Matrix::zeros(hidden_dim, 1)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.wx[0].cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.wx[0].rows()
    }
}

impl<F: Real> Parameters<F> for LstmCellParams<F> {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)> {
        let mut out = Vec::with_capacity(12);
        for g in 0..4 {
            out.push((format!("wx.{}", GATE_NAMES[g]), &self.wx[g]));
            out.push((format!("wh.{}", GATE_NAMES[g]), &self.wh[g]));
            out.push((format!("b.{}", GATE_NAMES[g]), &self.b[g]));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)> {
        let mut out = Vec::with_capacity(12);
        let [wx0, wx1, wx2, wx3] = &mut self.wx;
        let [wh0, wh1, wh2, wh3] = &mut self.wh;
        let [b0, b1, b2, b3] = &mut self.b;
        for (g, (wx, (wh, b))) in [(wx0, (wh0, b0)), (wx1, (wh1, b1)), (wx2, (wh2, b2)), (wx3, (wh3, b3))]
            .into_iter()
            .enumerate()
        {
            out.push((format!("wx.{}", GATE_NAMES[g]), wx));
            out.push((format!("wh.{}", GATE_NAMES[g]), wh));
            out.push((format!("b.{}", GATE_NAMES[g]), b));
        }
        out
    }

    fn zeros_like(&self) -> Self {
        LstmCellParams::zeros(self.input_dim(), self.hidden_dim())
    }
}

/// Hidden and cell vectors of one LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<F> {
    pub h: Vec<F>,
    pub c: Vec<F>,
}

impl<F: Real> LstmState<F> {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState { h: vec![F::zero(); hidden_dim], c: vec![F::zero(); hidden_dim] }
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }
}

/// Activations cached by a forward step for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache<F> {
    pub x: Vec<F>,
    pub h_prev: Vec<F>,
    pub c_prev: Vec<F>,
    pub i: Vec<F>,
    pub f: Vec<F>,
    pub g: Vec<F>,
    pub o: Vec<F>,
    pub c_new: Vec<F>,
}

#[inline]
fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

fn check_dims<F: Real>(cell: &LstmCellParams<F>, x: &[F], state: &LstmState<F>) -> Result<()> {
    if x.len() != cell.input_dim() {
        return Err(SlmError::Shape(format!(
            "lstm_step: input dim {} expected {}",
            x.len(),
            cell.input_dim()
        )));
    }
    if state.dim() != cell.hidden_dim() || state.c.len() != cell.hidden_dim() {
        return Err(SlmError::Shape(format!(
            "lstm_step: state dim {} expected {}",
            state.dim(),
            cell.hidden_dim()
        )));
    }
    Ok(())
}

/// Standard LSTM update:
/// i,f,o = sigmoid(...), g = tanh(...), c' = f*c + i*g, h' = o*tanh(c').
pub fn lstm_step<F: Real>(
    cell: &LstmCellParams<F>,
    x: &[F],
    state: &LstmState<F>,
) -> Result<LstmState<F>> {
    Ok(lstm_step_cached(cell, x, state)?.0)
}

/// Forward step that also returns the activations needed by the backward pass.
pub fn lstm_step_cached<F: Real>(
    cell: &LstmCellParams<F>,
    x: &[F],
    state: &LstmState<F>,
) -> Result<(LstmState<F>, LstmStepCache<F>)> {
    check_dims(cell, x, state)?;
    let h = cell.hidden_dim();

    // pre-activations per gate
    let mut a: [Vec<F>; 4] = std::array::from_fn(|g| cell.b[g].data().to_vec());
    for g in 0..4 {
        cell.wx[g].matvec_add(x, &mut a[g]);
        cell.wh[g].matvec_add(&state.h, &mut a[g]);
    }

    let i: Vec<F> = a[GATE_I].iter().map(|v| sigmoid(*v)).collect();
    let f: Vec<F> = a[GATE_F].iter().map(|v| sigmoid(*v)).collect();
    let g_act: Vec<F> = a[GATE_G].iter().map(|v| v.tanh()).collect();
    let o: Vec<F> = a[GATE_O].iter().map(|v| sigmoid(*v)).collect();

    let mut c_new = vec![F::zero(); h];
    let mut h_new = vec![F::zero(); h];
    for j in 0..h {
        c_new[j] = f[j] * state.c[j] + i[j] * g_act[j];
        h_new[j] = o[j] * c_new[j].tanh();
    }

    let cache = LstmStepCache {
        x: x.to_vec(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        i,
        f,
        g: g_act,
        o,
        c_new: c_new.clone(),
    };
    Ok((LstmState { h: h_new, c: c_new }, cache))
}

/// Backward through one step. `dh`/`dc` are gradients w.r.t. the step's
/// outputs; gradients w.r.t. the inputs are accumulated into `dx`, `dh_prev`,
/// `dc_prev`, and parameter gradients into `grads`.
pub fn lstm_backward<F: Real>(
    cell: &LstmCellParams<F>,
    cache: &LstmStepCache<F>,
    dh: &[F],
    dc: &[F],
    grads: &mut LstmCellParams<F>,
    dx: &mut [F],
    dh_prev: &mut [F],
    dc_prev: &mut [F],
) {
    let h = cell.hidden_dim();
    let one = F::one();

    let mut da: [Vec<F>; 4] = std::array::from_fn(|_| vec![F::zero(); h]);
    for j in 0..h {
        let tc = cache.c_new[j].tanh();
        let do_j = dh[j] * tc;
        let dc_total = dc[j] + dh[j] * cache.o[j] * (one - tc * tc);
        let di = dc_total * cache.g[j];
        let dg = dc_total * cache.i[j];
        let df = dc_total * cache.c_prev[j];
        dc_prev[j] += dc_total * cache.f[j];

        da[GATE_I][j] = di * cache.i[j] * (one - cache.i[j]);
        da[GATE_F][j] = df * cache.f[j] * (one - cache.f[j]);
        da[GATE_G][j] = dg * (one - cache.g[j] * cache.g[j]);
        da[GATE_O][j] = do_j * cache.o[j] * (one - cache.o[j]);
    }

    for g in 0..4 {
        grads.wx[g].outer_add(&da[g], &cache.x);
        grads.wh[g].outer_add(&da[g], &cache.h_prev);
        for (b, d) in grads.b[g].data_mut().iter_mut().zip(&da[g]) {
            *b += *d;
        }
        cell.wx[g].matvec_t_add(&da[g], dx);
        cell.wh[g].matvec_t_add(&da[g], dh_prev);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_inputs_give_zero_state() {
        let cell = LstmCellParams::<f64>::zeros(3, 2);
        let s = LstmState::zeros(2);
        let out = lstm_step(&cell, &[0.0, 0.0, 0.0], &s).unwrap();
        assert_eq!(out.h, vec![0.0, 0.0]);
        assert_eq!(out.c, vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_cell_hand_computed() {
        // hidden_dim=1, all weights/biases zero, c=1:
        // i=f=o=sigmoid(0)=0.5, g=tanh(0)=0 -> c'=0.5, h'=0.5*tanh(0.5)
        let cell = LstmCellParams::<f64>::zeros(1, 1);
        let s = LstmState { h: vec![0.0], c: vec![1.0] };
        let out = lstm_step(&cell, &[0.0], &s).unwrap();
        assert!((out.c[0] - 0.5).abs() < 1e-15);
        assert!((out.h[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((out.h[0] - 0.23105857863000487).abs() < 1e-12);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let cell = LstmCellParams::<f64>::zeros(3, 2);
        let s = LstmState::zeros(2);
        assert!(lstm_step(&cell, &[0.0, 0.0], &s).is_err());
        let bad = LstmState::zeros(3);
        assert!(lstm_step(&cell, &[0.0, 0.0, 0.0], &bad).is_err());
    }

    /// Independent scalar-loop reference for a random 4-dim case.
    fn reference_step(cell: &LstmCellParams<f64>, x: &[f64], s: &LstmState<f64>) -> LstmState<f64> {
        let hd = cell.hidden_dim();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h_new = vec![0.0; hd];
        let mut c_new = vec![0.0; hd];
        for j in 0..hd {
            let mut a = [0.0f64; 4];
            for g in 0..4 {
                a[g] = cell.b[g].get(j, 0);
                for (k, xv) in x.iter().enumerate() {
                    a[g] += cell.wx[g].get(j, k) * xv;
                }
                for (k, hv) in s.h.iter().enumerate() {
                    a[g] += cell.wh[g].get(j, k) * hv;
                }
            }
            let (i, f, g_a, o) = (sig(a[0]), sig(a[1]), a[2].tanh(), sig(a[3]));
            c_new[j] = f * s.c[j] + i * g_a;
            h_new[j] = o * c_new[j].tanh();
        }
        LstmState { h: h_new, c: c_new }
    }

    #[test]
    fn matches_reference_on_random_case() {
        use crate::nn::glorot_init;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut cell = LstmCellParams::<f64>::zeros(4, 4);
        for g in 0..4 {
            cell.wx[g] = glorot_init(4, 4, &mut rng).unwrap();
            cell.wh[g] = glorot_init(4, 4, &mut rng).unwrap();
            cell.b[g] = glorot_init(4, 1, &mut rng).unwrap();
        }
        let x: Vec<f64> = glorot_init::<f64, _>(4, 1, &mut rng).unwrap().data().to_vec();
        let s = LstmState {
            h: glorot_init::<f64, _>(4, 1, &mut rng).unwrap().data().to_vec(),
            c: glorot_init::<f64, _>(4, 1, &mut rng).unwrap().data().to_vec(),
        };
        let got = lstm_step(&cell, &x, &s).unwrap();
        let want = reference_step(&cell, &x, &s);
        for j in 0..4 {
            assert!((got.h[j] - want.h[j]).abs() < 1e-12);
            assert!((got.c[j] - want.c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn hidden_output_bounded() {
        use crate::nn::glorot_init;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut cell = LstmCellParams::<f64>::zeros(3, 3);
        for g in 0..4 {
            cell.wx[g] = glorot_init(3, 3, &mut rng).unwrap();
            cell.wh[g] = glorot_init(3, 3, &mut rng).unwrap();
        }
        let s = LstmState { h: vec![0.9, -0.9, 0.2], c: vec![2.0, -3.0, 0.0] };
        let out = lstm_step(&cell, &[1.0, -1.0, 0.5], &s).unwrap();
        for j in 0..3 {
            assert!(out.h[j].abs() < 1.0);
            assert!(out.c[j].abs() <= s.c[j].abs() + 1.0);
        }
    }
}
