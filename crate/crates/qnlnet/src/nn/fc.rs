//! Fully connected (affine) layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// y = W x + b with W stored row-major [out][in].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcLayer {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl FcLayer {
    pub fn zeroed(in_features: usize, out_features: usize) -> Self {
        FcLayer {
            in_features,
            out_features,
            weights: vec![0.0; out_features * in_features],
            bias: vec![0.0; out_features],
        }
    }

    /// Weights and biases uniform in [-1/sqrt(in), +1/sqrt(in)].
    pub fn init_seeded(in_features: usize, out_features: usize, rng: &mut impl Rng) -> Self {
        let mut layer = Self::zeroed(in_features, out_features);
        let bound = 1.0 / (in_features as f64).sqrt();
        for w in layer.weights.iter_mut() {
            *w = rng.gen_range(-bound..=bound);
        }
        for b in layer.bias.iter_mut() {
            *b = rng.gen_range(-bound..=bound);
        }
        layer
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_features {
            return Err(Error::Shape(format!(
                "fc layer expects {} inputs, got {}",
                self.in_features,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = self.bias.clone();
        for (o, row) in out.iter_mut().zip(self.weights.chunks(self.in_features)) {
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        Ok(out)
    }

    /// Returns (grad_input, grad_weights, grad_bias).
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        if grad_out.len() != self.out_features {
            return Err(Error::Shape(format!(
                "fc layer expects {} upstream gradients, got {}",
                self.out_features,
                grad_out.len()
            )));
        }
        let mut grad_input = vec![0.0; self.in_features];
        let mut grad_weights = vec![0.0; self.weights.len()];
        for (o, g) in grad_out.iter().enumerate() {
            let row = &self.weights[o * self.in_features..(o + 1) * self.in_features];
            let grow = &mut grad_weights[o * self.in_features..(o + 1) * self.in_features];
            for i in 0..self.in_features {
                grad_input[i] += g * row[i];
                grow[i] = g * x[i];
            }
        }
        Ok((grad_input, grad_weights, grad_out.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weights_pass_input_through() {
        let mut layer = FcLayer::zeroed(3, 3);
        for i in 0..3 {
            layer.weights[i * 3 + i] = 1.0;
        }
        let out = layer.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(out, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn scalar_affine_example() {
        let layer = FcLayer {
            in_features: 1,
            out_features: 1,
            weights: vec![0.5],
            bias: vec![0.1],
        };
        assert_abs_diff_eq!(layer.forward(&[0.8]).unwrap()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        let mut layer = FcLayer::zeroed(4, 3);
        layer.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
        layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upstream: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let objective = |layer: &FcLayer, x: &[f64]| -> f64 {
            layer
                .forward(x)
                .unwrap()
                .iter()
                .zip(&upstream)
                .map(|(o, g)| o * g)
                .sum()
        };
        let (gi, gw, gb) = layer.backward(&x, &upstream).unwrap();
        let eps = 1e-4;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);

        for i in 0..4 {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let fd = (objective(&layer, &xp) - objective(&layer, &xm)) / (2.0 * eps);
            assert!(rel(gi[i], fd) < 1e-4);
        }
        for i in 0..12 {
            let mut lp = layer.clone();
            lp.weights[i] += eps;
            let mut lm = layer.clone();
            lm.weights[i] -= eps;
            let fd = (objective(&lp, &x) - objective(&lm, &x)) / (2.0 * eps);
            assert!(rel(gw[i], fd) < 1e-4);
        }
        for i in 0..3 {
            let mut lp = layer.clone();
            lp.bias[i] += eps;
            let mut lm = layer.clone();
            lm.bias[i] -= eps;
            let fd = (objective(&lp, &x) - objective(&lm, &x)) / (2.0 * eps);
            assert!(rel(gb[i], fd) < 1e-4);
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let layer = FcLayer::zeroed(3, 2);
        assert!(matches!(layer.forward(&[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(matches!(
            layer.backward(&[1.0, 2.0, 3.0], &[1.0]),
            Err(Error::Shape(_))
        ));
    }
}
