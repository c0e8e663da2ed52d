//! 2x2 max pooling with stride 2. Odd trailing rows/columns are dropped.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Returns the pooled tensor and, per output element, the flat input index
/// of the window maximum. Ties keep the first element in row-major window
/// order.
pub fn maxpool2x2_forward(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (h, w, c) = input.dims3()?;
    if h < 2 || w < 2 {
        return Err(Error::Shape(format!(
            "maxpool needs spatial dims >= 2, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(vec![oh, ow, c])?;
    let mut argmax = vec![0usize; oh * ow * c];
    for i in 0..oh {
        for j in 0..ow {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for di in 0..2 {
                    for dj in 0..2 {
                        let v = input.at3(2 * i + di, 2 * j + dj, ch);
                        if v > best {
                            best = v;
                            best_idx = input.idx3(2 * i + di, 2 * j + dj, ch);
                        }
                    }
                }
                let oidx = out.idx3(i, j, ch);
                out.data_mut()[oidx] = best;
                argmax[oidx] = best_idx;
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each upstream gradient entry to its argmax input position.
pub fn maxpool2x2_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor,
) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::Shape(format!(
            "argmax has {} entries, grad_out has {}",
            argmax.len(),
            grad_out.len()
        )));
    }
    let mut grad_input = Tensor::zeros(input_shape.to_vec())?;
    for (g, &idx) in grad_out.data().iter().zip(argmax) {
        if idx >= grad_input.len() {
            return Err(Error::Index(format!(
                "argmax index {idx} outside input of {} elements",
                grad_input.len()
            )));
        }
        grad_input.data_mut()[idx] += g;
    }
    Ok(grad_input)
}
