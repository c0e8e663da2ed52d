//! C ABI over the qnlnet hybrid quantum-classical classifier.
//!
//! The surface follows three conventions. Every fallible call returns a
//! [`QnlStatus`] and writes results through caller-supplied output pointers,
//! which are touched only on success. Handles ([`QnlCircuit`], [`QnlModel`])
//! are opaque: callers create them with `*_new`/`*_load`, release them with
//! the matching `*_free`, and must not share one handle across threads
//! without external locking. After any non-OK status,
//! [`qnl_last_error_message`] returns a human-readable description that
//! stays valid until the next failing call on the same thread.
//!
//! Internal panics never unwind across the boundary; they are caught and
//! reported as [`QnlStatus::Internal`].
//!
//! The committed header `include/qnlnet.h` is regenerated from this file by
//! the build script.

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qnlnet::checkpoint::Checkpoint;
use qnlnet::circuit::{self, Ansatz, EncoderConfig, EncoderMode, QnlNetParams};
use qnlnet::error::Error;
use qnlnet::grad;
use qnlnet::nn::Tensor;
use qnlnet::train::TrainState;

/// Length of the circuit's feature vector: one feature per qubit.
pub const QNL_NUM_FEATURES: usize = 4;

/// Trainable rotation angles per ansatz layer.
pub const QNL_ANGLES_PER_LAYER: usize = 5;

const _: () = assert!(QNL_NUM_FEATURES == circuit::N_QUBITS);
const _: () = assert!(QNL_ANGLES_PER_LAYER == circuit::ANGLES_PER_LAYER);

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QnlStatus {
    /// The call succeeded and all output pointers were written.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument value is outside its valid range.
    InvalidArgument = 2,
    /// A buffer length does not match the length the call requires.
    LengthMismatch = 3,
    /// A file could not be read.
    Io = 4,
    /// A file was read but its contents could not be decoded.
    Format = 5,
    /// An internal invariant failed; the message has details.
    Internal = 6,
}

/// Returns a static, nul-terminated name for a status code, e.g. "ok".
#[no_mangle]
pub extern "C" fn qnl_status_name(status: QnlStatus) -> *const c_char {
    let name: &'static str = match status {
        QnlStatus::Ok => "ok\0",
        QnlStatus::NullArgument => "null argument\0",
        QnlStatus::InvalidArgument => "invalid argument\0",
        QnlStatus::LengthMismatch => "length mismatch\0",
        QnlStatus::Io => "io error\0",
        QnlStatus::Format => "format error\0",
        QnlStatus::Internal => "internal error\0",
    };
    name.as_ptr().cast()
}

/// Library version as a static, nul-terminated string.
#[no_mangle]
pub extern "C" fn qnl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

thread_local! {
    static LAST_ERROR: RefCell<CString> =
        RefCell::new(CString::new("no error").unwrap());
}

/// Message describing this thread's most recent failing call. Never null.
/// The pointer is invalidated by the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qnl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn fail(status: QnlStatus, msg: impl AsRef<str>) -> QnlStatus {
    let text = msg.as_ref().replace('\0', "?");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap());
    status
}

fn fail_err(err: &Error) -> QnlStatus {
    let status = match err {
        Error::Config(_) | Error::Index(_) | Error::Domain(_) => QnlStatus::InvalidArgument,
        Error::Shape(_) => QnlStatus::LengthMismatch,
        Error::Io { .. } => QnlStatus::Io,
        Error::Format { .. } | Error::Checkpoint(_) => QnlStatus::Format,
        Error::Fit(_) | Error::Sample { .. } => QnlStatus::Internal,
    };
    fail(status, err.to_string())
}

/// Runs a call body with an unwind barrier, so library panics surface as
/// [`QnlStatus::Internal`] instead of crossing the C boundary.
fn guarded<F: FnOnce() -> QnlStatus>(body: F) -> QnlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".into());
            fail(QnlStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

/// Opaque handle to a standalone quantum circuit: encoder layout,
/// entangling pattern, and current parameter values.
pub struct QnlCircuit {
    cfg: EncoderConfig,
    id: Ansatz,
    params: QnlNetParams,
}

/// Opaque handle to a trained classifier restored from a checkpoint file.
pub struct QnlModel {
    state: TrainState,
    input_shape: [usize; 3],
}

/// Flat parameter order shared by get/set/gradient: ansatz angles first,
/// layer by layer (QNL_ANGLES_PER_LAYER values each), then one scale per
/// (encoder repetition, qubit) when the encoder is trainable.
fn flatten_params(p: &QnlNetParams) -> Vec<f64> {
    let mut flat = Vec::with_capacity(p.n_params());
    for layer in &p.ansatz_angles {
        flat.extend_from_slice(layer);
    }
    if let Some(scales) = &p.encoder_scales {
        for rep in scales {
            flat.extend_from_slice(rep);
        }
    }
    flat
}

/// Inverse of [`flatten_params`]; `flat.len()` must equal `n_params()`.
fn unflatten_params(template: &QnlNetParams, flat: &[f64]) -> QnlNetParams {
    let mut p = template.clone();
    let mut values = flat.iter();
    for layer in &mut p.ansatz_angles {
        for angle in layer.iter_mut() {
            *angle = *values.next().unwrap();
        }
    }
    if let Some(scales) = &mut p.encoder_scales {
        for rep in scales {
            for scale in rep.iter_mut() {
                *scale = *values.next().unwrap();
            }
        }
    }
    p
}

/// Creates a circuit with `encoder_reps` encoding repetitions, entangling
/// pattern `ansatz` (0, 1, or 2), and `depth` ansatz layers. When
/// `trainable_scales` is true the encoder phase scales are parameters,
/// initialized to the data-bound value; otherwise they are fixed. Angles
/// start at small values drawn from `seed`. On success writes a handle the
/// caller must release with `qnl_circuit_free`.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_new(
    encoder_reps: usize,
    ansatz: u32,
    depth: usize,
    trainable_scales: bool,
    seed: u64,
    out: *mut *mut QnlCircuit,
) -> QnlStatus {
    guarded(|| {
        let Some(out) = (unsafe { out.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "out is null");
        };
        *out = ptr::null_mut();
        let mode = if trainable_scales {
            EncoderMode::TrainableScale
        } else {
            EncoderMode::DataBound
        };
        let cfg = EncoderConfig::new(encoder_reps, mode);
        if let Err(e) = cfg.validate() {
            return fail_err(&e);
        }
        let id = match Ansatz::from_index(ansatz as usize) {
            Ok(id) => id,
            Err(e) => return fail_err(&e),
        };
        if depth == 0 {
            return fail(QnlStatus::InvalidArgument, "ansatz depth must be at least 1");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = QnlNetParams::init_seeded(depth, &cfg, &mut rng);
        *out = Box::into_raw(Box::new(QnlCircuit { cfg, id, params }));
        QnlStatus::Ok
    })
}

/// Releases a circuit handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_free(circuit: *mut QnlCircuit) {
    if !circuit.is_null() {
        drop(unsafe { Box::from_raw(circuit) });
    }
}

/// Writes the circuit's trainable parameter count.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_num_params(
    circuit: *const QnlCircuit,
    out: *mut usize,
) -> QnlStatus {
    guarded(|| {
        let Some(circuit) = (unsafe { circuit.as_ref() }) else {
            return fail(QnlStatus::NullArgument, "circuit is null");
        };
        let Some(out) = (unsafe { out.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "out is null");
        };
        *out = circuit.params.n_params();
        QnlStatus::Ok
    })
}

/// Copies the current parameter values into `out`, which must hold exactly
/// `qnl_circuit_num_params` values. See the handle docs for the flat order.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_get_params(
    circuit: *const QnlCircuit,
    out: *mut f64,
    len: usize,
) -> QnlStatus {
    guarded(|| {
        let Some(circuit) = (unsafe { circuit.as_ref() }) else {
            return fail(QnlStatus::NullArgument, "circuit is null");
        };
        if out.is_null() {
            return fail(QnlStatus::NullArgument, "out is null");
        }
        let expected = circuit.params.n_params();
        if len != expected {
            return fail(
                QnlStatus::LengthMismatch,
                format!("circuit has {expected} parameters, buffer holds {len}"),
            );
        }
        let flat = flatten_params(&circuit.params);
        unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(&flat);
        QnlStatus::Ok
    })
}

/// Replaces all parameter values from `values`, which must hold exactly
/// `qnl_circuit_num_params` finite values. On any failure the circuit keeps
/// its previous parameters.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_set_params(
    circuit: *mut QnlCircuit,
    values: *const f64,
    len: usize,
) -> QnlStatus {
    guarded(|| {
        let Some(circuit) = (unsafe { circuit.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "circuit is null");
        };
        if values.is_null() {
            return fail(QnlStatus::NullArgument, "values is null");
        }
        let expected = circuit.params.n_params();
        if len != expected {
            return fail(
                QnlStatus::LengthMismatch,
                format!("circuit has {expected} parameters, buffer holds {len}"),
            );
        }
        let flat = unsafe { std::slice::from_raw_parts(values, len) };
        let candidate = unflatten_params(&circuit.params, flat);
        if let Err(e) = candidate.validate(&circuit.cfg) {
            return fail_err(&e);
        }
        circuit.params = candidate;
        QnlStatus::Ok
    })
}

/// Evaluates the circuit on `features` (QNL_NUM_FEATURES values) and writes
/// the readout expectation, a value in [-1, 1], to `out_expectation`.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_forward(
    circuit: *const QnlCircuit,
    features: *const f64,
    features_len: usize,
    out_expectation: *mut f64,
) -> QnlStatus {
    guarded(|| {
        let Some(circuit) = (unsafe { circuit.as_ref() }) else {
            return fail(QnlStatus::NullArgument, "circuit is null");
        };
        if features.is_null() {
            return fail(QnlStatus::NullArgument, "features is null");
        }
        let Some(out) = (unsafe { out_expectation.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "out_expectation is null");
        };
        if features_len != QNL_NUM_FEATURES {
            return fail(
                QnlStatus::LengthMismatch,
                format!("circuit takes {QNL_NUM_FEATURES} features, got {features_len}"),
            );
        }
        let slice = unsafe { std::slice::from_raw_parts(features, features_len) };
        let x: [f64; QNL_NUM_FEATURES] = slice.try_into().unwrap();
        match circuit::forward(&x, &circuit.cfg, circuit.id, &circuit.params) {
            Ok(z) => {
                *out = z;
                QnlStatus::Ok
            }
            Err(e) => fail_err(&e),
        }
    })
}

/// Computes exact derivatives of the readout expectation by parameter
/// shifting. `grad_params` receives one derivative per trainable parameter
/// in the flat order and must hold `qnl_circuit_num_params` values.
/// `grad_features` may be null; when given it receives QNL_NUM_FEATURES
/// derivatives with respect to the input features. `forward_evals` may be
/// null; when given it receives the number of circuit evaluations spent.
#[no_mangle]
pub unsafe extern "C" fn qnl_circuit_gradient(
    circuit: *const QnlCircuit,
    features: *const f64,
    features_len: usize,
    grad_params: *mut f64,
    grad_params_len: usize,
    grad_features: *mut f64,
    forward_evals: *mut usize,
) -> QnlStatus {
    guarded(|| {
        let Some(circuit) = (unsafe { circuit.as_ref() }) else {
            return fail(QnlStatus::NullArgument, "circuit is null");
        };
        if features.is_null() {
            return fail(QnlStatus::NullArgument, "features is null");
        }
        if grad_params.is_null() {
            return fail(QnlStatus::NullArgument, "grad_params is null");
        }
        if features_len != QNL_NUM_FEATURES {
            return fail(
                QnlStatus::LengthMismatch,
                format!("circuit takes {QNL_NUM_FEATURES} features, got {features_len}"),
            );
        }
        let expected = circuit.params.n_params();
        if grad_params_len != expected {
            return fail(
                QnlStatus::LengthMismatch,
                format!("circuit has {expected} parameters, gradient buffer holds {grad_params_len}"),
            );
        }
        let slice = unsafe { std::slice::from_raw_parts(features, features_len) };
        let x: [f64; QNL_NUM_FEATURES] = slice.try_into().unwrap();
        let g = match grad::grad_all(&x, &circuit.cfg, circuit.id, &circuit.params) {
            Ok(g) => g,
            Err(e) => return fail_err(&e),
        };
        let mut flat = Vec::with_capacity(expected);
        for layer in &g.d_angles {
            flat.extend_from_slice(layer);
        }
        if let Some(d_scales) = &g.d_scales {
            for rep in d_scales {
                flat.extend_from_slice(rep);
            }
        }
        unsafe { std::slice::from_raw_parts_mut(grad_params, expected) }.copy_from_slice(&flat);
        if let Some(out) = unsafe { grad_features.as_mut() } {
            unsafe { std::slice::from_raw_parts_mut(out, QNL_NUM_FEATURES) }
                .copy_from_slice(&g.d_inputs);
        }
        if let Some(out) = unsafe { forward_evals.as_mut() } {
            *out = g.forward_evals;
        }
        QnlStatus::Ok
    })
}

/// Restores a trained classifier from a checkpoint file written by the
/// trainer. `path` is a nul-terminated UTF-8 file path. On success writes a
/// handle the caller must release with `qnl_model_free`. The model is set to
/// inference mode.
#[no_mangle]
pub unsafe extern "C" fn qnl_model_load(
    path: *const c_char,
    out: *mut *mut QnlModel,
) -> QnlStatus {
    guarded(|| {
        let Some(out) = (unsafe { out.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "out is null");
        };
        *out = ptr::null_mut();
        if path.is_null() {
            return fail(QnlStatus::NullArgument, "path is null");
        }
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(QnlStatus::InvalidArgument, "path is not valid UTF-8");
        };
        let checkpoint = match Checkpoint::load(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return fail_err(&e),
        };
        let mut state = match checkpoint.restore() {
            Ok(s) => s,
            Err(e) => return fail_err(&e),
        };
        state.model.set_training(false);
        let input_shape = state.config.dataset.input_shape();
        *out = Box::into_raw(Box::new(QnlModel { state, input_shape }));
        QnlStatus::Ok
    })
}

/// Releases a model handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn qnl_model_free(model: *mut QnlModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Writes the pixel count one prediction consumes: image height times width
/// times channels for the dataset the model was trained on.
#[no_mangle]
pub unsafe extern "C" fn qnl_model_input_len(
    model: *const QnlModel,
    out: *mut usize,
) -> QnlStatus {
    guarded(|| {
        let Some(model) = (unsafe { model.as_ref() }) else {
            return fail(QnlStatus::NullArgument, "model is null");
        };
        let Some(out) = (unsafe { out.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "out is null");
        };
        *out = model.input_shape.iter().product();
        QnlStatus::Ok
    })
}

/// Classifies one raw image. `pixels` holds `qnl_model_input_len` byte
/// values in [0, 255] as doubles, laid out row-major with channels
/// interleaved last. The call applies the normalization statistics stored in
/// the checkpoint, so callers pass pixels exactly as stored in the dataset
/// files. `out_p1` (probability of class 1) and `out_label` (0 or 1) may
/// each be null when not wanted. The handle is mutated by internal caches,
/// which is why it is taken mutably; results do not depend on call order.
#[no_mangle]
pub unsafe extern "C" fn qnl_model_predict(
    model: *mut QnlModel,
    pixels: *const f64,
    pixels_len: usize,
    out_p1: *mut f64,
    out_label: *mut u8,
) -> QnlStatus {
    guarded(|| {
        let Some(model) = (unsafe { model.as_mut() }) else {
            return fail(QnlStatus::NullArgument, "model is null");
        };
        if pixels.is_null() {
            return fail(QnlStatus::NullArgument, "pixels is null");
        }
        let expected: usize = model.input_shape.iter().product();
        if pixels_len != expected {
            return fail(
                QnlStatus::LengthMismatch,
                format!("model takes {expected} pixels, got {pixels_len}"),
            );
        }
        let raw = unsafe { std::slice::from_raw_parts(pixels, pixels_len) };
        if raw.iter().any(|v| !v.is_finite()) {
            return fail(QnlStatus::InvalidArgument, "pixel values must be finite");
        }
        let stats = &model.state.norm;
        let channels = model.input_shape[2];
        let data: Vec<f64> = raw
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = i % channels;
                (v / 255.0 - stats.mean[c]) / stats.std[c]
            })
            .collect();
        let tensor = match Tensor::new(model.input_shape.to_vec(), data) {
            Ok(t) => t,
            Err(e) => return fail_err(&e),
        };
        let output = match model.state.model.forward(&tensor) {
            Ok(o) => o,
            Err(e) => return fail_err(&e),
        };
        if let Some(out) = unsafe { out_p1.as_mut() } {
            *out = output.p1;
        }
        if let Some(out) = unsafe { out_label.as_mut() } {
            *out = output.predicted();
        }
        QnlStatus::Ok
    })
}
