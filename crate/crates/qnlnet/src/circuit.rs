//! Four-qubit non-local attention circuit: a phase-encoding feature map,
//! one of three entangling ansatz patterns repeated D times, and a Pauli-Z
//! readout at qubit 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{Gate1Q, StateVector};

/// Register width the circuit is defined on.
pub const N_QUBITS: usize = 4;
/// Trainable angles per ansatz layer.
pub const ANGLES_PER_LAYER: usize = 5;
/// Encoder phase coefficient in data-bound mode: lambda_k = 2 * x_k.
pub const DATA_BOUND_SCALE: f64 = 2.0;

/// How encoder phases are derived from the four input features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    /// lambda_k = 2 * x_k in every repetition.
    DataBound,
    /// lambda_k = s_k^(j) * x_k with one trainable scale per (rep, qubit),
    /// initialized to 2.0 so the two modes coincide at init.
    TrainableScale,
}

/// Encoder shape: r repetitions of [H on every qubit, then P(lambda_k) on
/// qubit k].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n_qubits: usize,
    pub reps: usize,
    pub mode: EncoderMode,
}

impl EncoderConfig {
    pub fn new(reps: usize, mode: EncoderMode) -> Self {
        EncoderConfig {
            n_qubits: N_QUBITS,
            reps,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits != N_QUBITS {
            return Err(Error::Config(format!(
                "encoder is defined on {N_QUBITS} qubits, got {}",
                self.n_qubits
            )));
        }
        if self.reps == 0 {
            return Err(Error::Config("encoder reps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Entangling pattern of one ansatz layer. The discriminant matches the
/// circuit ids used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    /// Cyclic: CX(3->0), CX(2->3), CX(1->2).
    Cyclic = 0,
    /// Reverse linear chain: CX(1->0), CX(2->1), CX(3->2).
    ReverseChain = 1,
    /// Mixed: CX(2->0), CX(3->2), CX(1->3).
    Mixed = 2,
}

impl Ansatz {
    pub const ALL: [Ansatz; 3] = [Ansatz::Cyclic, Ansatz::ReverseChain, Ansatz::Mixed];

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Ansatz::Cyclic),
            1 => Ok(Ansatz::ReverseChain),
            2 => Ok(Ansatz::Mixed),
            _ => Err(Error::Config(format!("ansatz id must be 0, 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// (control, target) pairs in application order.
    pub fn cx_pairs(self) -> [(usize, usize); 3] {
        match self {
            Ansatz::Cyclic => [(3, 0), (2, 3), (1, 2)],
            Ansatz::ReverseChain => [(1, 0), (2, 1), (3, 2)],
            Ansatz::Mixed => [(2, 0), (3, 2), (1, 3)],
        }
    }
}

/// Trainable circuit parameters: five angles per ansatz layer, plus one
/// phase scale per (repetition, qubit) when the encoder is trainable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnlNetParams {
    pub ansatz_angles: Vec<[f64; ANGLES_PER_LAYER]>,
    pub encoder_scales: Option<Vec<[f64; N_QUBITS]>>,
}

impl QnlNetParams {
    /// All-zero angles; scales at the data-bound value when trainable.
    pub fn zeroed(depth: usize, cfg: &EncoderConfig) -> Self {
        QnlNetParams {
            ansatz_angles: vec![[0.0; ANGLES_PER_LAYER]; depth],
            encoder_scales: match cfg.mode {
                EncoderMode::DataBound => None,
                EncoderMode::TrainableScale => {
                    Some(vec![[DATA_BOUND_SCALE; N_QUBITS]; cfg.reps])
                }
            },
        }
    }

    /// Angles drawn uniform in [-0.1, 0.1]; scales initialized to 2.0.
    pub fn init_seeded(depth: usize, cfg: &EncoderConfig, rng: &mut impl Rng) -> Self {
        let mut params = Self::zeroed(depth, cfg);
        for layer in &mut params.ansatz_angles {
            for a in layer.iter_mut() {
                *a = rng.gen_range(-0.1..=0.1);
            }
        }
        params
    }

    /// Number of ansatz layers D.
    pub fn depth(&self) -> usize {
        self.ansatz_angles.len()
    }

    /// Trainable parameter count: 5D, plus 4r in trainable-scale mode.
    pub fn n_params(&self) -> usize {
        let scales = self.encoder_scales.as_ref().map_or(0, |s| s.len() * N_QUBITS);
        self.ansatz_angles.len() * ANGLES_PER_LAYER + scales
    }

    pub fn validate(&self, cfg: &EncoderConfig) -> Result<()> {
        cfg.validate()?;
        match (cfg.mode, &self.encoder_scales) {
            (EncoderMode::TrainableScale, None) => {
                return Err(Error::Config(
                    "encoder scales missing in trainable_scale mode".into(),
                ));
            }
            (EncoderMode::TrainableScale, Some(s)) if s.len() != cfg.reps => {
                return Err(Error::Shape(format!(
                    "encoder scales cover {} repetitions, config has {}",
                    s.len(),
                    cfg.reps
                )));
            }
            (EncoderMode::DataBound, Some(_)) => {
                return Err(Error::Config(
                    "encoder scales present in data_bound mode".into(),
                ));
            }
            _ => {}
        }
        let finite = self.ansatz_angles.iter().flatten().all(|a| a.is_finite())
            && self
                .encoder_scales
                .iter()
                .flatten()
                .flatten()
                .all(|s| s.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite circuit parameter".into()));
        }
        Ok(())
    }
}

/// Gate executions of one circuit evaluation, counted at the apply sites.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct GateCounts {
    pub h: usize,
    pub p: usize,
    pub rotations: usize,
    pub cx: usize,
}

/// Offset applied to a single parameter during a shifted evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Shift {
    None,
    /// Ansatz angle at (layer, slot).
    Angle { layer: usize, slot: usize, delta: f64 },
    /// Encoder phase at (repetition, qubit).
    Phase { rep: usize, qubit: usize, delta: f64 },
}

fn check_features(x: &[f64; N_QUBITS]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite feature vector {x:?}")));
    }
    Ok(())
}

fn apply_encoder(
    state: &mut StateVector,
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    scales: Option<&[[f64; N_QUBITS]]>,
    shift: Shift,
    counts: &mut GateCounts,
) -> Result<()> {
    for rep in 0..cfg.reps {
        for q in 0..cfg.n_qubits {
            state.apply_1q(&Gate1Q::h(), q)?;
            counts.h += 1;
        }
        for q in 0..cfg.n_qubits {
            let coeff = match cfg.mode {
                EncoderMode::DataBound => DATA_BOUND_SCALE,
                EncoderMode::TrainableScale => {
                    scales.expect("validated scales")[rep][q]
                }
            };
            let mut lambda = coeff * x[q];
            if let Shift::Phase { rep: sr, qubit: sq, delta } = shift {
                if sr == rep && sq == q {
                    lambda += delta;
                }
            }
            state.apply_1q(&Gate1Q::p(lambda), q)?;
            counts.p += 1;
        }
    }
    Ok(())
}

fn apply_ansatz_layer(
    state: &mut StateVector,
    id: Ansatz,
    angles: &[f64; ANGLES_PER_LAYER],
    counts: &mut GateCounts,
) -> Result<()> {
    if state.n_qubits() != N_QUBITS {
        return Err(Error::Config(format!(
            "ansatz layer needs a {N_QUBITS}-qubit state, got {}",
            state.n_qubits()
        )));
    }
    state.apply_1q(&Gate1Q::rz(angles[0]), 0)?;
    state.apply_1q(&Gate1Q::ry(angles[1]), 1)?;
    state.apply_1q(&Gate1Q::ry(angles[2]), 2)?;
    state.apply_1q(&Gate1Q::rx(angles[3]), 3)?;
    counts.rotations += 4;
    for (control, target) in id.cx_pairs() {
        state.apply_cx(control, target)?;
        counts.cx += 1;
    }
    state.apply_1q(&Gate1Q::rz(angles[4]), 0)?;
    counts.rotations += 1;
    Ok(())
}

/// Encodes four features into phases: r repetitions of [H on every qubit,
/// then P(lambda_k) on qubit k] starting from |0000>.
pub fn encode(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    scales: Option<&[[f64; N_QUBITS]]>,
) -> Result<StateVector> {
    cfg.validate()?;
    check_features(x)?;
    if cfg.mode == EncoderMode::TrainableScale {
        match scales {
            None => {
                return Err(Error::Config(
                    "encoder scales missing in trainable_scale mode".into(),
                ))
            }
            Some(s) if s.len() != cfg.reps => {
                return Err(Error::Shape(format!(
                    "encoder scales cover {} repetitions, config has {}",
                    s.len(),
                    cfg.reps
                )))
            }
            _ => {}
        }
    }
    let mut state = StateVector::zero(cfg.n_qubits)?;
    let mut counts = GateCounts::default();
    apply_encoder(&mut state, x, cfg, scales, Shift::None, &mut counts)?;
    Ok(state)
}

/// One ansatz layer: Rz(a0) q0, Ry(a1) q1, Ry(a2) q2, Rx(a3) q3, the CX
/// pattern of `id`, then Rz(a4) q0.
pub fn ansatz_layer(
    state: &mut StateVector,
    id: Ansatz,
    angles: &[f64; ANGLES_PER_LAYER],
) -> Result<()> {
    let mut counts = GateCounts::default();
    apply_ansatz_layer(state, id, angles, &mut counts)
}

pub(crate) fn forward_shifted(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    id: Ansatz,
    params: &QnlNetParams,
    shift: Shift,
) -> Result<f64> {
    params.validate(cfg)?;
    check_features(x)?;
    if let Shift::Angle { layer, slot, .. } = shift {
        if layer >= params.depth() || slot >= ANGLES_PER_LAYER {
            return Err(Error::Config(format!(
                "shift target (layer {layer}, slot {slot}) out of range for depth {}",
                params.depth()
            )));
        }
    }
    if let Shift::Phase { rep, qubit, .. } = shift {
        if rep >= cfg.reps || qubit >= cfg.n_qubits {
            return Err(Error::Config(format!(
                "shift target (rep {rep}, qubit {qubit}) out of range for {} reps",
                cfg.reps
            )));
        }
    }
    let mut counts = GateCounts::default();
    let mut state = StateVector::zero(cfg.n_qubits)?;
    apply_encoder(
        &mut state,
        x,
        cfg,
        params.encoder_scales.as_deref(),
        shift,
        &mut counts,
    )?;
    for (layer, angles) in params.ansatz_angles.iter().enumerate() {
        let mut angles = *angles;
        if let Shift::Angle { layer: sl, slot, delta } = shift {
            if sl == layer {
                angles[slot] += delta;
            }
        }
        apply_ansatz_layer(&mut state, id, &angles, &mut counts)?;
    }
    state.expectation_z(0)
}

/// Full circuit evaluation: <Z> at qubit 0 of (ansatz layer)^D after the
/// encoder. Always in [-1, 1].
pub fn forward(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    id: Ansatz,
    params: &QnlNetParams,
) -> Result<f64> {
    forward_shifted(x, cfg, id, params, Shift::None)
}

/// Like [`forward`], also reporting how many gates of each kind executed.
pub fn forward_counted(
    x: &[f64; N_QUBITS],
    cfg: &EncoderConfig,
    id: Ansatz,
    params: &QnlNetParams,
) -> Result<(f64, GateCounts)> {
    params.validate(cfg)?;
    check_features(x)?;
    let mut counts = GateCounts::default();
    let mut state = StateVector::zero(cfg.n_qubits)?;
    apply_encoder(
        &mut state,
        x,
        cfg,
        params.encoder_scales.as_deref(),
        Shift::None,
        &mut counts,
    )?;
    for angles in &params.ansatz_angles {
        apply_ansatz_layer(&mut state, id, angles, &mut counts)?;
    }
    Ok((state.expectation_z(0)?, counts))
}
