//! Valid (no padding) stride-1 2D cross-correlation with 5x5 kernels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Fixed spatial kernel extent.
pub const KERNEL_SIZE: usize = 5;

/// Convolution weights, kernel laid out [out][kh][kw][in] row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeroed(in_channels: usize, out_channels: usize) -> Self {
        ConvLayer {
            in_channels,
            out_channels,
            kernel: vec![0.0; out_channels * KERNEL_SIZE * KERNEL_SIZE * in_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// Weights and biases uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
    /// with fan_in = 25 * in_channels.
    pub fn init_seeded(in_channels: usize, out_channels: usize, rng: &mut impl Rng) -> Self {
        let mut layer = Self::zeroed(in_channels, out_channels);
        let bound = 1.0 / ((KERNEL_SIZE * KERNEL_SIZE * in_channels) as f64).sqrt();
        for w in layer.kernel.iter_mut() {
            *w = rng.gen_range(-bound..=bound);
        }
        for b in layer.bias.iter_mut() {
            *b = rng.gen_range(-bound..=bound);
        }
        layer
    }

    pub fn n_params(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    #[inline]
    fn kidx(&self, k: usize, m: usize, n: usize, c: usize) -> usize {
        ((k * KERNEL_SIZE + m) * KERNEL_SIZE + n) * self.in_channels + c
    }

    fn check_input(&self, input: &Tensor) -> Result<(usize, usize)> {
        let (h, w, c) = input.dims3()?;
        if c != self.in_channels {
            return Err(Error::Shape(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        if h < KERNEL_SIZE || w < KERNEL_SIZE {
            return Err(Error::Shape(format!(
                "conv needs spatial dims >= {KERNEL_SIZE}, got {h}x{w}"
            )));
        }
        Ok((h - KERNEL_SIZE + 1, w - KERNEL_SIZE + 1))
    }
}

/// out[i,j,k] = bias[k] + sum_{m,n,c} input[i+m, j+n, c] * kernel[k,m,n,c].
pub fn conv2d_forward(input: &Tensor, layer: &ConvLayer) -> Result<Tensor> {
    let (oh, ow) = layer.check_input(input)?;
    let mut out = Tensor::zeros(vec![oh, ow, layer.out_channels])?;
    for i in 0..oh {
        for j in 0..ow {
            for k in 0..layer.out_channels {
                let mut acc = layer.bias[k];
                for m in 0..KERNEL_SIZE {
                    for n in 0..KERNEL_SIZE {
                        for c in 0..layer.in_channels {
                            acc += input.at3(i + m, j + n, c)
                                * layer.kernel[layer.kidx(k, m, n, c)];
                        }
                    }
                }
                let idx = out.idx3(i, j, k);
                out.data_mut()[idx] = acc;
            }
        }
    }
    Ok(out)
}

/// Exact gradients of [`conv2d_forward`]: returns (grad_input, grad_kernel,
/// grad_bias) for the given upstream gradient.
pub fn conv2d_backward(
    input: &Tensor,
    layer: &ConvLayer,
    grad_out: &Tensor,
) -> Result<(Tensor, Vec<f64>, Vec<f64>)> {
    let (oh, ow) = layer.check_input(input)?;
    let (gh, gw, gc) = grad_out.dims3()?;
    if (gh, gw, gc) != (oh, ow, layer.out_channels) {
        return Err(Error::Shape(format!(
            "grad_out shape {:?} does not match conv output [{oh}, {ow}, {}]",
            grad_out.shape(),
            layer.out_channels
        )));
    }
    let mut grad_input = Tensor::zeros(input.shape().to_vec())?;
    let mut grad_kernel = vec![0.0; layer.kernel.len()];
    let mut grad_bias = vec![0.0; layer.out_channels];
    for i in 0..oh {
        for j in 0..ow {
            for k in 0..layer.out_channels {
                let g = grad_out.at3(i, j, k);
                grad_bias[k] += g;
                for m in 0..KERNEL_SIZE {
                    for n in 0..KERNEL_SIZE {
                        for c in 0..layer.in_channels {
                            let kidx = layer.kidx(k, m, n, c);
                            grad_kernel[kidx] += g * input.at3(i + m, j + n, c);
                            let iidx = grad_input.idx3(i + m, j + n, c);
                            grad_input.data_mut()[iidx] += g * layer.kernel[kidx];
                        }
                    }
                }
            }
        }
    }
    Ok((grad_input, grad_kernel, grad_bias))
}
