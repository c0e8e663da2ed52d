//! The full hybrid model: classical head, quantum circuit, and the final
//! scalar linear unit, with end-to-end gradients over one flat parameter
//! vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{self, Ansatz, EncoderConfig, QnlNetParams, N_QUBITS};
use crate::error::{Error, Result};
use crate::grad::grad_all;
use crate::nn::{
    to_probabilities, prob_grad, CnnCache, CnnHead, FcLayer, PcaCache, PcaHead, PcaModel, Tensor,
};
use crate::optim::nll_grad;

const DROPOUT_P: f64 = 0.5;
const DROPOUT_SEED_OFFSET: u64 = 0xD0;

#[derive(Debug, Clone)]
pub enum Head {
    Cnn(CnnHead),
    Pca(PcaHead),
}

#[derive(Debug, Clone)]
pub enum HeadCache {
    Cnn(CnnCache),
    Pca(PcaCache),
}

/// Everything one forward pass produces, including the activations needed
/// to run [`HybridModel::backprop`] on the same sample.
#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub p0: f64,
    pub p1: f64,
    pub post_out: f64,
    pub z_exp: f64,
    pub features: [f64; N_QUBITS],
    pub cache: HeadCache,
}

impl ModelOutput {
    pub fn predicted(&self) -> u8 {
        u8::from(self.p1 > self.p0)
    }
}

/// Trainable parameter counts per segment of the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCounts {
    pub head: usize,
    pub quantum_angles: usize,
    pub encoder_scales: usize,
    pub post: usize,
}

impl ParamCounts {
    pub fn total(&self) -> usize {
        self.head + self.quantum_angles + self.encoder_scales + self.post
    }
}

/// Head -> encoder -> ansatz stack -> <Z0> -> scalar linear unit ->
/// sigmoid pair. The flat parameter order is head, ansatz angles
/// (layer-major), encoder scales (rep-major, trainable mode only), then
/// the final unit's weight and bias.
#[derive(Debug, Clone)]
pub struct HybridModel {
    pub head: Head,
    pub encoder: EncoderConfig,
    pub ansatz: Ansatz,
    pub quantum: QnlNetParams,
    pub post: FcLayer,
}

impl HybridModel {
    /// CNN-headed model with all weights drawn from a single seeded stream
    /// in flat-parameter order. The dropout RNG gets its own stream.
    pub fn new_cnn(
        input_shape: [usize; 3],
        encoder: EncoderConfig,
        ansatz: Ansatz,
        depth: usize,
        seed: u64,
    ) -> Result<Self> {
        encoder.validate()?;
        check_depth(depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = CnnHead::init_seeded(
            input_shape,
            DROPOUT_P,
            seed.wrapping_add(DROPOUT_SEED_OFFSET),
            &mut rng,
        )?;
        let quantum = QnlNetParams::init_seeded(depth, &encoder, &mut rng);
        let post = FcLayer::init_seeded(1, 1, &mut rng);
        Ok(HybridModel {
            head: Head::Cnn(head),
            encoder,
            ansatz,
            quantum,
            post,
        })
    }

    /// PCA-headed model; the projection itself is frozen and not part of
    /// the parameter vector.
    pub fn new_pca(
        pca: PcaModel,
        encoder: EncoderConfig,
        ansatz: Ansatz,
        depth: usize,
        seed: u64,
    ) -> Result<Self> {
        encoder.validate()?;
        check_depth(depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = PcaHead::init_seeded(pca, &mut rng);
        let quantum = QnlNetParams::init_seeded(depth, &encoder, &mut rng);
        let post = FcLayer::init_seeded(1, 1, &mut rng);
        Ok(HybridModel {
            head: Head::Pca(head),
            encoder,
            ansatz,
            quantum,
            post,
        })
    }

    pub fn set_training(&mut self, training: bool) {
        if let Head::Cnn(head) = &mut self.head {
            head.set_training(training);
        }
    }

    /// Dropout RNG position (seed, words consumed), if the head has one.
    pub fn dropout_state(&self) -> Option<(u64, u128)> {
        match &self.head {
            Head::Cnn(head) => Some(head.dropout.rng_state()),
            Head::Pca(_) => None,
        }
    }

    /// Rewinds the dropout RNG to a previously captured position.
    pub fn restore_dropout(&mut self, seed: u64, word_pos: u128) -> Result<()> {
        match &mut self.head {
            Head::Cnn(head) => {
                head.dropout =
                    crate::nn::DropoutState::restore(head.dropout.p, true, seed, word_pos)?;
                Ok(())
            }
            Head::Pca(_) => Err(Error::Config(
                "cannot restore dropout state on a model without dropout".into(),
            )),
        }
    }

    pub fn param_counts(&self) -> ParamCounts {
        let head = match &self.head {
            Head::Cnn(h) => h.n_params(),
            Head::Pca(h) => h.n_params(),
        };
        let quantum_angles = self.quantum.depth() * circuit::ANGLES_PER_LAYER;
        let encoder_scales = match &self.quantum.encoder_scales {
            Some(scales) => scales.len() * N_QUBITS,
            None => 0,
        };
        ParamCounts {
            head,
            quantum_angles,
            encoder_scales,
            post: self.post.n_params(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_counts().total()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = match &self.head {
            Head::Cnn(h) => h.params_flat(),
            Head::Pca(h) => h.params_flat(),
        };
        for layer in &self.quantum.ansatz_angles {
            out.extend_from_slice(layer);
        }
        if let Some(scales) = &self.quantum.encoder_scales {
            for rep in scales {
                out.extend_from_slice(rep);
            }
        }
        out.extend_from_slice(&self.post.weights);
        out.extend_from_slice(&self.post.bias);
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let counts = self.param_counts();
        let (head_seg, rest) = params.split_at(counts.head);
        match &mut self.head {
            Head::Cnn(h) => h.set_params_flat(head_seg)?,
            Head::Pca(h) => h.set_params_flat(head_seg)?,
        }
        let (angle_seg, rest) = rest.split_at(counts.quantum_angles);
        for (layer, chunk) in self
            .quantum
            .ansatz_angles
            .iter_mut()
            .zip(angle_seg.chunks_exact(circuit::ANGLES_PER_LAYER))
        {
            layer.copy_from_slice(chunk);
        }
        let (scale_seg, rest) = rest.split_at(counts.encoder_scales);
        if let Some(scales) = &mut self.quantum.encoder_scales {
            for (rep, chunk) in scales.iter_mut().zip(scale_seg.chunks_exact(N_QUBITS)) {
                rep.copy_from_slice(chunk);
            }
        }
        let (w_seg, b_seg) = rest.split_at(self.post.weights.len());
        self.post.weights.copy_from_slice(w_seg);
        self.post.bias.copy_from_slice(b_seg);
        Ok(())
    }

    /// One sample through the whole pipeline. Advances the dropout RNG when
    /// the CNN head is in training mode.
    pub fn forward(&mut self, input: &Tensor) -> Result<ModelOutput> {
        let (features, cache) = match &mut self.head {
            Head::Cnn(h) => {
                let (f, c) = h.forward(input)?;
                (f, HeadCache::Cnn(c))
            }
            Head::Pca(h) => {
                let (f, c) = h.forward(input)?;
                (f, HeadCache::Pca(c))
            }
        };
        let z_exp = circuit::forward(&features, &self.encoder, self.ansatz, &self.quantum)?;
        let post_out = self.post.forward(&[z_exp])?[0];
        let (p0, p1) = to_probabilities(post_out)?;
        Ok(ModelOutput {
            p0,
            p1,
            post_out,
            z_exp,
            features,
            cache,
        })
    }

    /// Loss gradient for one sample, aligned with [`Self::params_flat`].
    /// Quantum parameters get parameter-shift gradients; everything
    /// classical is backpropagated, including the path through the circuit
    /// into the head via the input gradients.
    pub fn backprop(&self, output: &ModelOutput, label: u8) -> Result<Vec<f64>> {
        let (g0, g1) = nll_grad(output.p0, output.p1, label)?;
        let dpost = prob_grad(output.p0, output.p1) * (g1 - g0);
        let (d_z_vec, grad_w4, grad_b4) = self.post.backward(&[output.z_exp], &[dpost])?;
        let d_z = d_z_vec[0];

        let qgrad = grad_all(&output.features, &self.encoder, self.ansatz, &self.quantum)?;
        let upstream: [f64; N_QUBITS] = qgrad.d_inputs.map(|g| g * d_z);

        let mut flat = match (&self.head, &output.cache) {
            (Head::Cnn(h), HeadCache::Cnn(cache)) => h.backward(cache, &upstream)?.flat(),
            (Head::Pca(h), HeadCache::Pca(cache)) => {
                let (gw, gb) = h.backward(cache, &upstream)?;
                let mut v = gw;
                v.extend_from_slice(&gb);
                v
            }
            _ => {
                return Err(Error::Shape(
                    "forward cache does not match the model head".into(),
                ))
            }
        };
        for layer in &qgrad.d_angles {
            flat.extend(layer.iter().map(|g| g * d_z));
        }
        if let Some(d_scales) = &qgrad.d_scales {
            for rep in d_scales {
                flat.extend(rep.iter().map(|g| g * d_z));
            }
        }
        flat.extend_from_slice(&grad_w4);
        flat.extend_from_slice(&grad_b4);
        Ok(flat)
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::Config("ansatz depth must be at least 1".into()));
    }
    Ok(())
}
