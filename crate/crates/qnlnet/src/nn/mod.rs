//! From-scratch classical layers and heads: convolution, pooling, dropout,
//! fully connected layers, PCA, and the probability transform.

pub mod conv;
pub mod dropout;
pub mod fc;
pub mod head;
pub mod pca;
pub mod pool;
pub mod prob;
pub mod tensor;

pub use conv::{conv2d_backward, conv2d_forward, ConvLayer, KERNEL_SIZE};
pub use dropout::DropoutState;
pub use fc::FcLayer;
pub use head::{CnnCache, CnnGrads, CnnHead, PcaCache, PcaHead};
pub use pca::{principal_components, PcaModel, N_COMPONENTS};
pub use pool::{maxpool2x2_backward, maxpool2x2_forward};
pub use prob::{prob_grad, to_probabilities, PROB_CLAMP};
pub use tensor::Tensor;

/// Elementwise max(0, x).
pub fn relu_forward(input: &[f64]) -> Vec<f64> {
    input.iter().map(|&v| v.max(0.0)).collect()
}

/// Routes upstream gradient through the positive entries of the forward
/// input.
pub fn relu_backward(input: &[f64], grad_out: &[f64]) -> Vec<f64> {
    input
        .iter()
        .zip(grad_out)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect()
}
