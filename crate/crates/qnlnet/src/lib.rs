//! Hybrid quantum-classical binary image classifier.
//!
//! A classical head (small CNN, or frozen PCA plus a linear map) compresses
//! an image to four features, which parameterize a four-qubit circuit
//! simulated exactly on a dense statevector. The circuit's Z expectation on
//! qubit 0 passes through a final linear unit and a sigmoid to give class
//! probabilities. Quantum parameters are trained with parameter-shift
//! gradients, classical ones by backpropagation, all under a single Adam
//! optimizer with exponential learning-rate decay.

pub mod checkpoint;
pub mod circuit;
pub mod data;
pub mod error;
pub mod grad;
pub mod model;
pub mod nn;
pub mod optim;
pub mod statevector;
pub mod sweep;
pub mod train;

pub use error::{Error, Result};
