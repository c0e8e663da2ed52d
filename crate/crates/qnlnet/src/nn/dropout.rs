//! Inverted dropout: training-time zeroing with 1/(1-p) rescaling so
//! inference is the identity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dropout with its own seeded RNG stream. The stream advances only during
/// training-mode forwards, and its position is exposed for checkpointing.
#[derive(Debug, Clone)]
pub struct DropoutState {
    pub p: f64,
    pub training: bool,
    seed: u64,
    rng: ChaCha8Rng,
}

impl DropoutState {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!(
                "dropout probability must be in [0, 1), got {p}"
            )));
        }
        Ok(DropoutState {
            p,
            training: true,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Rebuilds a state whose RNG stream continues from `word_pos`.
    pub fn restore(p: f64, training: bool, seed: u64, word_pos: u128) -> Result<Self> {
        let mut state = Self::new(p, seed)?;
        state.training = training;
        state.rng.set_word_pos(word_pos);
        Ok(state)
    }

    /// (seed, stream position) pair identifying the RNG state exactly.
    pub fn rng_state(&self) -> (u64, u128) {
        (self.seed, self.rng.get_word_pos())
    }

    /// Returns (output, mask). Mask entries are 0 for dropped elements and
    /// 1/(1-p) for survivors; backward is upstream * mask. Inference mode
    /// leaves the input and the RNG stream untouched.
    pub fn forward(&mut self, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if !self.training || self.p == 0.0 {
            return (input.to_vec(), vec![1.0; input.len()]);
        }
        let scale = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = (0..input.len())
            .map(|_| if self.rng.gen::<f64>() < self.p { 0.0 } else { scale })
            .collect();
        let output = input.iter().zip(&mask).map(|(x, m)| x * m).collect();
        (output, mask)
    }
}
