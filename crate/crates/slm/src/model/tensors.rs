//! The model's trainable tensors.

use rand::Rng;

use crate::error::Result;
use crate::nn::{glorot_init, LstmCellParams, Matrix, OutputLayerParams, Parameters};
use crate::real::Real;
use crate::model::SlmConfig;

/// All trainable tensors of the segmental language model.
///
/// The same struct doubles as a gradient store and as optimizer accumulators
/// via [`Parameters::zeros_like`].
#[derive(Debug, Clone)]
pub struct SlmParameters<F> {
    pub config: SlmConfig,
    /// vocab_size x embed_dim
    pub embed: Matrix<F>,
    /// Shared start-symbol embedding fed to the decoder before each segment.
    pub start_embed: Matrix<F>, // embed_dim x 1
    pub encoder: Vec<LstmCellParams<F>>,
    /// Learned encoder initial state, per layer.
    pub enc_h0: Vec<Matrix<F>>,
    pub enc_c0: Vec<Matrix<F>>,
    /// Affine bridge from the encoder's final-layer (h, c) to the initial
    /// (h, c) of each decoder layer.
    pub bridge_wh: Vec<Matrix<F>>,
    pub bridge_bh: Vec<Matrix<F>>,
    pub bridge_wc: Vec<Matrix<F>>,
    pub bridge_bc: Vec<Matrix<F>>,
    pub decoder: Vec<LstmCellParams<F>>,
    /// Projection over {alphabet} ∪ {eos, EOS}.
    pub output: OutputLayerParams<F>,
}

impl<F: Real> SlmParameters<F> {
    /// All-zero tensors with the shapes implied by `config`.
    pub fn zeros(config: &SlmConfig) -> Result<Self> {
        config.validate()?;
        let e = config.embed_dim;
        let eh = config.encoder_hidden_dim;
        let dh = config.decoder_hidden_dim;
        let enc_layers = config.encoder_layers;
        let dec_layers = config.decoder_layers;
        Ok(SlmParameters {
            config: config.clone(),
            embed: Matrix::zeros(config.vocab_size, e),
            start_embed: Matrix::zeros(e, 1),
            encoder: (0..enc_layers)
                .map(|l| LstmCellParams::zeros(if l == 0 { e } else { eh }, eh))
                .collect(),
            enc_h0: (0..enc_layers).map(|_| Matrix::zeros(eh, 1)).collect(),
            enc_c0: (0..enc_layers).map(|_| Matrix::zeros(eh, 1)).collect(),
            bridge_wh: (0..dec_layers).map(|_| Matrix::zeros(dh, eh)).collect(),
            bridge_bh: (0..dec_layers).map(|_| Matrix::zeros(dh, 1)).collect(),
            bridge_wc: (0..dec_layers).map(|_| Matrix::zeros(dh, eh)).collect(),
            bridge_bc: (0..dec_layers).map(|_| Matrix::zeros(dh, 1)).collect(),
            decoder: (0..dec_layers)
                .map(|l| LstmCellParams::zeros(if l == 0 { e } else { dh }, dh))
                .collect(),
            output: OutputLayerParams::zeros(config.vocab_out(), dh),
        })
    }

    /// Glorot-normal initialization for weight matrices and learned state
    /// vectors; biases start at zero.
    pub fn init<R: Rng>(config: &SlmConfig, rng: &mut R) -> Result<Self> {
        let mut p = SlmParameters::zeros(config)?;
        p.embed = glorot_init(config.vocab_size, config.embed_dim, rng)?;
        p.start_embed = glorot_init(config.embed_dim, 1, rng)?;
        for l in 0..config.encoder_layers {
            let input = if l == 0 { config.embed_dim } else { config.encoder_hidden_dim };
            for g in 0..4 {
                p.encoder[l].wx[g] = glorot_init(config.encoder_hidden_dim, input, rng)?;
                p.encoder[l].wh[g] =
                    glorot_init(config.encoder_hidden_dim, config.encoder_hidden_dim, rng)?;
            }
            p.enc_h0[l] = glorot_init(config.encoder_hidden_dim, 1, rng)?;
            p.enc_c0[l] = glorot_init(config.encoder_hidden_dim, 1, rng)?;
        }
        for l in 0..config.decoder_layers {
            p.bridge_wh[l] =
                glorot_init(config.decoder_hidden_dim, config.encoder_hidden_dim, rng)?;
            p.bridge_wc[l] =
                glorot_init(config.decoder_hidden_dim, config.encoder_hidden_dim, rng)?;
            let input = if l == 0 { config.embed_dim } else { config.decoder_hidden_dim };
            for g in 0..4 {
                p.decoder[l].wx[g] = glorot_init(config.decoder_hidden_dim, input, rng)?;
                p.decoder[l].wh[g] =
                    glorot_init(config.decoder_hidden_dim, config.decoder_hidden_dim, rng)?;
            }
        }
        p.output.weight = glorot_init(config.vocab_out(), config.decoder_hidden_dim, rng)?;
        Ok(p)
    }
}

impl<F: Real> Parameters<F> for SlmParameters<F> {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)> {
        let mut out = Vec::new();
        out.push(("embed".to_string(), &self.embed));
        out.push(("start_embed".to_string(), &self.start_embed));
        for (l, cell) in self.encoder.iter().enumerate() {
            for (name, t) in cell.tensors() {
                out.push((format!("enc.{l}.{name}"), t));
            }
            out.push((format!("enc.{l}.h0"), &self.enc_h0[l]));
            out.push((format!("enc.{l}.c0"), &self.enc_c0[l]));
        }
        for l in 0..self.decoder.len() {
            out.push((format!("bridge.{l}.wh"), &self.bridge_wh[l]));
            out.push((format!("bridge.{l}.bh"), &self.bridge_bh[l]));
            out.push((format!("bridge.{l}.wc"), &self.bridge_wc[l]));
            out.push((format!("bridge.{l}.bc"), &self.bridge_bc[l]));
        }
        for (l, cell) in self.decoder.iter().enumerate() {
            for (name, t) in cell.tensors() {
                out.push((format!("dec.{l}.{name}"), t));
            }
        }
        out.push(("out.w".to_string(), &self.output.weight));
        out.push(("out.b".to_string(), &self.output.bias));
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)> {
        let mut out: Vec<(String, &mut Matrix<F>)> = Vec::new();
        out.push(("embed".to_string(), &mut self.embed));
        out.push(("start_embed".to_string(), &mut self.start_embed));
        for (l, (cell, (h0, c0))) in self
            .encoder
            .iter_mut()
            .zip(self.enc_h0.iter_mut().zip(self.enc_c0.iter_mut()))
            .enumerate()
        {
            for (name, t) in cell.tensors_mut() {
                out.push((format!("enc.{l}.{name}"), t));
            }
            out.push((format!("enc.{l}.h0"), h0));
            out.push((format!("enc.{l}.c0"), c0));
        }
        for (l, (((wh, bh), wc), bc)) in self
            .bridge_wh
            .iter_mut()
            .zip(self.bridge_bh.iter_mut())
            .zip(self.bridge_wc.iter_mut())
            .zip(self.bridge_bc.iter_mut())
            .enumerate()
        {
            out.push((format!("bridge.{l}.wh"), wh));
            out.push((format!("bridge.{l}.bh"), bh));
            out.push((format!("bridge.{l}.wc"), wc));
            out.push((format!("bridge.{l}.bc"), bc));
        }
        for (l, cell) in self.decoder.iter_mut().enumerate() {
            for (name, t) in cell.tensors_mut() {
                out.push((format!("dec.{l}.{name}"), t));
            }
        }
        out.push(("out.w".to_string(), &mut self.output.weight));
        out.push(("out.b".to_string(), &mut self.output.bias));
        out
    }

    fn zeros_like(&self) -> Self {
        SlmParameters::zeros(&self.config).expect("config already validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_enumeration_is_consistent_and_stable() {
        let cfg = SlmConfig::tiny(5, 3);
        let p = SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        let mut p2 = p.clone();
        let names_mut: Vec<String> = p2.tensors_mut().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, names_mut);
        // no duplicates
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn zeros_like_mirrors_shapes() {
        let cfg = SlmConfig::tiny(4, 2);
        let p = SlmParameters::<f64>::init(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let z = p.zeros_like();
        for ((n1, a), (n2, b)) in p.tensors().into_iter().zip(z.tensors()) {
            assert_eq!(n1, n2);
            assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
            assert!(b.data().iter().all(|x| *x == 0.0));
        }
    }
}
