/* C interface to the qnlnet hybrid quantum-classical classifier. */

#ifndef QNLNET_H
#define QNLNET_H

/* Generated from the qnlnet-ffi Rust crate by cbindgen. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Length of the circuit's feature vector: one feature per qubit.
#define QNL_NUM_FEATURES 4

// Trainable rotation angles per ansatz layer.
#define QNL_ANGLES_PER_LAYER 5

// Result of every fallible call in this interface.
typedef enum QnlStatus {
  // The call succeeded and all output pointers were written.
  QNL_STATUS_OK = 0,
  // A required pointer argument was null.
  QNL_STATUS_NULL_ARGUMENT = 1,
  // An argument value is outside its valid range.
  QNL_STATUS_INVALID_ARGUMENT = 2,
  // A buffer length does not match the length the call requires.
  QNL_STATUS_LENGTH_MISMATCH = 3,
  // A file could not be read.
  QNL_STATUS_IO = 4,
  // A file was read but its contents could not be decoded.
  QNL_STATUS_FORMAT = 5,
  // An internal invariant failed; the message has details.
  QNL_STATUS_INTERNAL = 6,
} QnlStatus;

// Opaque handle to a standalone quantum circuit: encoder layout,
// entangling pattern, and current parameter values.
typedef struct QnlCircuit QnlCircuit;

// Opaque handle to a trained classifier restored from a checkpoint file.
typedef struct QnlModel QnlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns a static, nul-terminated name for a status code, e.g. "ok".
const char *qnl_status_name(enum QnlStatus status);

// Library version as a static, nul-terminated string.
const char *qnl_version(void);

// Message describing this thread's most recent failing call. Never null.
// The pointer is invalidated by the next failing call on the same thread.
const char *qnl_last_error_message(void);

// Creates a circuit with `encoder_reps` encoding repetitions, entangling
// pattern `ansatz` (0, 1, or 2), and `depth` ansatz layers. When
// `trainable_scales` is true the encoder phase scales are parameters,
// initialized to the data-bound value; otherwise they are fixed. Angles
// start at small values drawn from `seed`. On success writes a handle the
// caller must release with `qnl_circuit_free`.
enum QnlStatus qnl_circuit_new(size_t encoder_reps,
                               uint32_t ansatz,
                               size_t depth,
                               bool trainable_scales,
                               uint64_t seed,
                               struct QnlCircuit **out);

// Releases a circuit handle. Passing null is a no-op.
void qnl_circuit_free(struct QnlCircuit *circuit);

// Writes the circuit's trainable parameter count.
enum QnlStatus qnl_circuit_num_params(const struct QnlCircuit *circuit, size_t *out);

// Copies the current parameter values into `out`, which must hold exactly
// `qnl_circuit_num_params` values. See the handle docs for the flat order.
enum QnlStatus qnl_circuit_get_params(const struct QnlCircuit *circuit, double *out, size_t len);

// Replaces all parameter values from `values`, which must hold exactly
// `qnl_circuit_num_params` finite values. On any failure the circuit keeps
// its previous parameters.
enum QnlStatus qnl_circuit_set_params(struct QnlCircuit *circuit, const double *values, size_t len);

// Evaluates the circuit on `features` (QNL_NUM_FEATURES values) and writes
// the readout expectation, a value in [-1, 1], to `out_expectation`.
enum QnlStatus qnl_circuit_forward(const struct QnlCircuit *circuit,
                                   const double *features,
                                   size_t features_len,
                                   double *out_expectation);

// Computes exact derivatives of the readout expectation by parameter
// shifting. `grad_params` receives one derivative per trainable parameter
// in the flat order and must hold `qnl_circuit_num_params` values.
// `grad_features` may be null; when given it receives QNL_NUM_FEATURES
// derivatives with respect to the input features. `forward_evals` may be
// null; when given it receives the number of circuit evaluations spent.
enum QnlStatus qnl_circuit_gradient(const struct QnlCircuit *circuit,
                                    const double *features,
                                    size_t features_len,
                                    double *grad_params,
                                    size_t grad_params_len,
                                    double *grad_features,
                                    size_t *forward_evals);

// Restores a trained classifier from a checkpoint file written by the
// trainer. `path` is a nul-terminated UTF-8 file path. On success writes a
// handle the caller must release with `qnl_model_free`. The model is set to
// inference mode.
enum QnlStatus qnl_model_load(const char *path, struct QnlModel **out);

// Releases a model handle. Passing null is a no-op.
void qnl_model_free(struct QnlModel *model);

// Writes the pixel count one prediction consumes: image height times width
// times channels for the dataset the model was trained on.
enum QnlStatus qnl_model_input_len(const struct QnlModel *model, size_t *out);

// Classifies one raw image. `pixels` holds `qnl_model_input_len` byte
// values in [0, 255] as doubles, laid out row-major with channels
// interleaved last. The call applies the normalization statistics stored in
// the checkpoint, so callers pass pixels exactly as stored in the dataset
// files. `out_p1` (probability of class 1) and `out_label` (0 or 1) may
// each be null when not wanted. The handle is mutated by internal caches,
// which is why it is taken mutably; results do not depend on call order.
enum QnlStatus qnl_model_predict(struct QnlModel *model,
                                 const double *pixels,
                                 size_t pixels_len,
                                 double *out_p1,
                                 uint8_t *out_label);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNLNET_H */
