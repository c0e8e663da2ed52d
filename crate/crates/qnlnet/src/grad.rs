//! Parameter-shift gradients of the circuit output with respect to every
//! quantum parameter and to the four input features.
//!
//! Every differentiated gate (Rx, Ry, Rz, and P up to global phase) has a
//! generator with eigenvalues +-1/2, so
//! d<Z>/dtheta = [f(theta + pi/2) - f(theta - pi/2)] / 2 exactly.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::{
    self, Ansatz, EncoderConfig, EncoderMode, QnlNetParams, Shift, ANGLES_PER_LAYER,
    DATA_BOUND_SCALE, N_QUBITS,
};
use crate::error::Result;

/// Gradient of <Z> at qubit 0, shaped like the parameters it differentiates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumGradient {
    /// d<Z>/d(ansatz angle), layer-major.
    pub d_angles: Vec<[f64; ANGLES_PER_LAYER]>,
    /// d<Z>/d(encoder scale), present only in trainable-scale mode.
    pub d_scales: Option<Vec<[f64; N_QUBITS]>>,
    /// d<Z>/d(x_k), summed over every encoder repetition x_k appears in.
    pub d_inputs: [f64; N_QUBITS],
    /// Number of circuit evaluations spent.
    pub forward_evals: usize,
}

/// Shift-rule derivative of the circuit output with respect to one ansatz
/// angle.
pub fn shift_grad_angle(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    id: Ansatz,
    params: &QnlNetParams,
    layer: usize,
    slot: usize,
) -> Result<f64> {
    let plus = circuit::forward_shifted(
        x,
        cfg,
        id,
        params,
        Shift::Angle { layer, slot, delta: FRAC_PI_2 },
    )?;
    let minus = circuit::forward_shifted(
        x,
        cfg,
        id,
        params,
        Shift::Angle { layer, slot, delta: -FRAC_PI_2 },
    )?;
    Ok((plus - minus) / 2.0)
}

/// Shift-rule derivative with respect to the encoder phase lambda at one
/// (repetition, qubit) site.
fn shift_grad_phase(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    id: Ansatz,
    params: &QnlNetParams,
    rep: usize,
    qubit: usize,
) -> Result<f64> {
    let plus = circuit::forward_shifted(
        x,
        cfg,
        id,
        params,
        Shift::Phase { rep, qubit, delta: FRAC_PI_2 },
    )?;
    let minus = circuit::forward_shifted(
        x,
        cfg,
        id,
        params,
        Shift::Phase { rep, qubit, delta: -FRAC_PI_2 },
    )?;
    Ok((plus - minus) / 2.0)
}

/// All gradients in one pass: ansatz angles, encoder scales (when
/// trainable), and input features. The per-site phase gradients are
/// computed once and shared between `d_scales` and `d_inputs`, so the total
/// cost is 2*(5D + 4r) forwards.
pub fn grad_all(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    id: Ansatz,
    params: &QnlNetParams,
) -> Result<QuantumGradient> {
    params.validate(cfg)?;
    let mut forward_evals = 0;

    let mut d_angles = vec![[0.0; ANGLES_PER_LAYER]; params.depth()];
    for layer in 0..params.depth() {
        for slot in 0..ANGLES_PER_LAYER {
            d_angles[layer][slot] = shift_grad_angle(x, cfg, id, params, layer, slot)?;
            forward_evals += 2;
        }
    }

    let mut phase_grads = vec![[0.0; N_QUBITS]; cfg.reps];
    for rep in 0..cfg.reps {
        for qubit in 0..N_QUBITS {
            phase_grads[rep][qubit] = shift_grad_phase(x, cfg, id, params, rep, qubit)?;
            forward_evals += 2;
        }
    }

    let mut d_inputs = [0.0; N_QUBITS];
    for (rep, grads) in phase_grads.iter().enumerate() {
        for (qubit, g) in grads.iter().enumerate() {
            let coeff = match cfg.mode {
                EncoderMode::DataBound => DATA_BOUND_SCALE,
                EncoderMode::TrainableScale => {
                    params.encoder_scales.as_ref().expect("validated scales")[rep][qubit]
                }
            };
            d_inputs[qubit] += coeff * g;
        }
    }

    let d_scales = match cfg.mode {
        EncoderMode::DataBound => None,
        EncoderMode::TrainableScale => Some(
            phase_grads
                .iter()
                .map(|grads| {
                    let mut row = [0.0; N_QUBITS];
                    for (qubit, g) in grads.iter().enumerate() {
                        row[qubit] = x[qubit] * g;
                    }
                    row
                })
                .collect(),
        ),
    };

    Ok(QuantumGradient {
        d_angles,
        d_scales,
        d_inputs,
        forward_evals,
    })
}
