//! Classical feature extractors producing the 4 values fed to the quantum
//! circuit: a small CNN trained jointly with the circuit, or a frozen PCA
//! projection followed by a trainable linear map.

use rand::Rng;

use super::conv::{conv2d_backward, conv2d_forward, ConvLayer};
use super::dropout::DropoutState;
use super::fc::FcLayer;
use super::pca::PcaModel;
use super::pool::{maxpool2x2_backward, maxpool2x2_forward};
use super::tensor::Tensor;
use super::{relu_backward, relu_forward};
use crate::error::{Error, Result};

/// Width of the head output, one value per circuit qubit.
pub const N_FEATURES: usize = 4;

const FC1_WIDTH: usize = 128;

/// conv(5x5, C->2) -> relu -> pool -> conv(5x5, 2->16) -> relu -> pool ->
/// dropout -> flatten -> fc -> 128 -> relu -> fc -> 4.
#[derive(Debug, Clone)]
pub struct CnnHead {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    pub fc1: FcLayer,
    pub fc2: FcLayer,
    pub dropout: DropoutState,
    pub input_shape: [usize; 3],
}

/// Forward state needed to run [`CnnHead::backward`].
#[derive(Debug, Clone)]
pub struct CnnCache {
    input: Tensor,
    pre1: Tensor,
    pool1: Tensor,
    arg1: Vec<usize>,
    pre2: Tensor,
    pool2_shape: Vec<usize>,
    arg2: Vec<usize>,
    drop_mask: Vec<f64>,
    fc1_in: Vec<f64>,
    fc1_out: Vec<f64>,
    fc1_act: Vec<f64>,
}

/// Parameter gradients in the same order as [`CnnHead::params_flat`].
#[derive(Debug, Clone)]
pub struct CnnGrads {
    pub conv1_kernel: Vec<f64>,
    pub conv1_bias: Vec<f64>,
    pub conv2_kernel: Vec<f64>,
    pub conv2_bias: Vec<f64>,
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
}

impl CnnGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.conv1_kernel);
        out.extend_from_slice(&self.conv1_bias);
        out.extend_from_slice(&self.conv2_kernel);
        out.extend_from_slice(&self.conv2_bias);
        out.extend_from_slice(&self.fc1_w);
        out.extend_from_slice(&self.fc1_b);
        out.extend_from_slice(&self.fc2_w);
        out.extend_from_slice(&self.fc2_b);
        out
    }
}

/// Flattened width after two conv+pool stages, for a supported input shape.
fn flat_width(input_shape: [usize; 3]) -> Result<usize> {
    let [h, w, c] = input_shape;
    if input_shape != [28, 28, 1] && input_shape != [32, 32, 3] {
        return Err(Error::Config(format!(
            "unsupported image shape [{h}, {w}, {c}]"
        )));
    }
    let (h1, w1) = ((h - 4) / 2, (w - 4) / 2);
    let (h2, w2) = ((h1 - 4) / 2, (w1 - 4) / 2);
    Ok(h2 * w2 * 16)
}

impl CnnHead {
    pub fn zeroed(input_shape: [usize; 3], dropout_p: f64, dropout_seed: u64) -> Result<Self> {
        let flat = flat_width(input_shape)?;
        Ok(CnnHead {
            conv1: ConvLayer::zeroed(input_shape[2], 2),
            conv2: ConvLayer::zeroed(2, 16),
            fc1: FcLayer::zeroed(flat, FC1_WIDTH),
            fc2: FcLayer::zeroed(FC1_WIDTH, N_FEATURES),
            dropout: DropoutState::new(dropout_p, dropout_seed)?,
            input_shape,
        })
    }

    /// Draws weights layer by layer in flat-parameter order.
    pub fn init_seeded(
        input_shape: [usize; 3],
        dropout_p: f64,
        dropout_seed: u64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let flat = flat_width(input_shape)?;
        Ok(CnnHead {
            conv1: ConvLayer::init_seeded(input_shape[2], 2, rng),
            conv2: ConvLayer::init_seeded(2, 16, rng),
            fc1: FcLayer::init_seeded(flat, FC1_WIDTH, rng),
            fc2: FcLayer::init_seeded(FC1_WIDTH, N_FEATURES, rng),
            dropout: DropoutState::new(dropout_p, dropout_seed)?,
            input_shape,
        })
    }

    pub fn set_training(&mut self, training: bool) {
        self.dropout.training = training;
    }

    pub fn n_params(&self) -> usize {
        self.conv1.n_params() + self.conv2.n_params() + self.fc1.n_params() + self.fc2.n_params()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(&self.conv1.kernel);
        out.extend_from_slice(&self.conv1.bias);
        out.extend_from_slice(&self.conv2.kernel);
        out.extend_from_slice(&self.conv2.bias);
        out.extend_from_slice(&self.fc1.weights);
        out.extend_from_slice(&self.fc1.bias);
        out.extend_from_slice(&self.fc2.weights);
        out.extend_from_slice(&self.fc2.bias);
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} head parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let mut rest = params;
        for dst in [
            &mut self.conv1.kernel,
            &mut self.conv1.bias,
            &mut self.conv2.kernel,
            &mut self.conv2.bias,
            &mut self.fc1.weights,
            &mut self.fc1.bias,
            &mut self.fc2.weights,
            &mut self.fc2.bias,
        ] {
            let (seg, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(seg);
            rest = tail;
        }
        Ok(())
    }

    /// Runs the head; advances the dropout RNG when training.
    pub fn forward(&mut self, input: &Tensor) -> Result<([f64; N_FEATURES], CnnCache)> {
        if input.shape() != self.input_shape {
            return Err(Error::Shape(format!(
                "expected input shape {:?}, got {:?}",
                self.input_shape,
                input.shape()
            )));
        }
        let pre1 = conv2d_forward(input, &self.conv1)?;
        let act1 = Tensor::new(pre1.shape().to_vec(), relu_forward(pre1.data()))?;
        let (pool1, arg1) = maxpool2x2_forward(&act1)?;
        let pre2 = conv2d_forward(&pool1, &self.conv2)?;
        let act2 = Tensor::new(pre2.shape().to_vec(), relu_forward(pre2.data()))?;
        let (pool2, arg2) = maxpool2x2_forward(&act2)?;
        let (fc1_in, drop_mask) = self.dropout.forward(pool2.data());
        let fc1_out = self.fc1.forward(&fc1_in)?;
        let fc1_act = relu_forward(&fc1_out);
        let out = self.fc2.forward(&fc1_act)?;
        let features = [out[0], out[1], out[2], out[3]];
        let cache = CnnCache {
            input: input.clone(),
            pre1,
            pool1,
            arg1,
            pool2_shape: pool2.shape().to_vec(),
            pre2,
            arg2,
            drop_mask,
            fc1_in,
            fc1_out,
            fc1_act,
        };
        Ok((features, cache))
    }

    pub fn backward(&self, cache: &CnnCache, grad_features: &[f64; N_FEATURES]) -> Result<CnnGrads> {
        let (g_fc1_act, fc2_w, fc2_b) = self.fc2.backward(&cache.fc1_act, grad_features)?;
        let g_fc1_out = relu_backward(&cache.fc1_out, &g_fc1_act);
        let (g_fc1_in, fc1_w, fc1_b) = self.fc1.backward(&cache.fc1_in, &g_fc1_out)?;
        let g_flat: Vec<f64> = g_fc1_in
            .iter()
            .zip(&cache.drop_mask)
            .map(|(g, m)| g * m)
            .collect();
        let g_pool2 = Tensor::new(cache.pool2_shape.clone(), g_flat)?;
        let g_act2 = maxpool2x2_backward(cache.pre2.shape(), &cache.arg2, &g_pool2)?;
        let g_pre2 = Tensor::new(
            cache.pre2.shape().to_vec(),
            relu_backward(cache.pre2.data(), g_act2.data()),
        )?;
        let (g_pool1, conv2_kernel, conv2_bias) = conv2d_backward(&cache.pool1, &self.conv2, &g_pre2)?;
        let g_act1 = maxpool2x2_backward(cache.pre1.shape(), &cache.arg1, &g_pool1)?;
        let g_pre1 = Tensor::new(
            cache.pre1.shape().to_vec(),
            relu_backward(cache.pre1.data(), g_act1.data()),
        )?;
        let (_, conv1_kernel, conv1_bias) = conv2d_backward(&cache.input, &self.conv1, &g_pre1)?;
        Ok(CnnGrads {
            conv1_kernel,
            conv1_bias,
            conv2_kernel,
            conv2_bias,
            fc1_w,
            fc1_b,
            fc2_w,
            fc2_b,
        })
    }
}

/// Frozen PCA projection (standardized with training statistics) feeding a
/// trainable 4 -> 4 linear map. Only the linear map has parameters.
#[derive(Debug, Clone)]
pub struct PcaHead {
    pub pca: PcaModel,
    pub fc: FcLayer,
}

#[derive(Debug, Clone)]
pub struct PcaCache {
    zbar: [f64; N_FEATURES],
}

impl PcaHead {
    pub fn zeroed(pca: PcaModel) -> Self {
        PcaHead {
            pca,
            fc: FcLayer::zeroed(N_FEATURES, N_FEATURES),
        }
    }

    pub fn init_seeded(pca: PcaModel, rng: &mut impl Rng) -> Self {
        PcaHead {
            pca,
            fc: FcLayer::init_seeded(N_FEATURES, N_FEATURES, rng),
        }
    }

    pub fn n_params(&self) -> usize {
        self.fc.n_params()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.fc.weights.clone();
        out.extend_from_slice(&self.fc.bias);
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} head parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let (w, b) = params.split_at(self.fc.weights.len());
        self.fc.weights.copy_from_slice(w);
        self.fc.bias.copy_from_slice(b);
        Ok(())
    }

    pub fn forward(&self, input: &Tensor) -> Result<([f64; N_FEATURES], PcaCache)> {
        let zbar = self.pca.transform(input.data())?;
        let out = self.fc.forward(&zbar)?;
        Ok(([out[0], out[1], out[2], out[3]], PcaCache { zbar }))
    }

    /// Returns (grad_weights, grad_bias); the projection itself is frozen.
    pub fn backward(
        &self,
        cache: &PcaCache,
        grad_features: &[f64; N_FEATURES],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (_, grad_w, grad_b) = self.fc.backward(&cache.zbar, grad_features)?;
        Ok((grad_w, grad_b))
    }
}
