//! Binary negative log-likelihood loss, Adam, and the per-epoch
//! exponential learning-rate decay.

use crate::error::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

fn check_probs(p0: f64, p1: f64, label: u8) -> Result<()> {
    if label > 1 {
        return Err(Error::Domain(format!("label must be 0 or 1, got {label}")));
    }
    if !(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0) {
        return Err(Error::Domain(format!(
            "probabilities must lie strictly in (0, 1), got ({p0}, {p1})"
        )));
    }
    if (p0 + p1 - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "probabilities must sum to 1, got {p0} + {p1}"
        )));
    }
    Ok(())
}

/// -log of the probability assigned to the true class.
pub fn nll_loss(p0: f64, p1: f64, label: u8) -> Result<f64> {
    check_probs(p0, p1, label)?;
    Ok(if label == 1 { -p1.ln() } else { -p0.ln() })
}

/// Gradient of [`nll_loss`] with respect to (p0, p1) as independent inputs.
pub fn nll_grad(p0: f64, p1: f64, label: u8) -> Result<(f64, f64)> {
    check_probs(p0, p1, label)?;
    Ok(if label == 1 {
        (0.0, -1.0 / p1)
    } else {
        (-1.0 / p0, 0.0)
    })
}

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). The
/// learning rate is mutable so a schedule can drive it between epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Result<Self> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        Ok(AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            lr,
        })
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// (first moments, second moments, step count) for serialization.
    pub fn state(&self) -> (&[f64], &[f64], u64) {
        (&self.m, &self.v, self.t)
    }

    pub fn restore(lr: f64, m: Vec<f64>, v: Vec<f64>, t: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::Shape(format!(
                "moment vectors disagree in length: {} vs {}",
                m.len(),
                v.len()
            )));
        }
        let mut state = Self::new(m.len(), lr)?;
        state.m = m;
        state.v = v;
        state.t = t;
        Ok(state)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer holds {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + EPS);
        }
        Ok(())
    }
}

/// lr(epoch) = base * gamma^epoch; `advance` is called at each epoch end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub gamma: f64,
    pub epoch: u64,
}

impl LrSchedule {
    pub fn new(base_lr: f64, gamma: f64) -> Result<Self> {
        if !(base_lr.is_finite() && base_lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {base_lr}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Config(format!(
                "decay factor must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(LrSchedule {
            base_lr,
            gamma,
            epoch: 0,
        })
    }

    pub fn restore(base_lr: f64, gamma: f64, epoch: u64) -> Result<Self> {
        let mut s = Self::new(base_lr, gamma)?;
        s.epoch = epoch;
        Ok(s)
    }

    pub fn lr(&self) -> f64 {
        self.base_lr * self.gamma.powi(self.epoch as i32)
    }

    pub fn advance(&mut self) {
        self.epoch += 1;
    }
}
