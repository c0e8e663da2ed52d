//! Dense statevector simulator for small qubit registers.
//!
//! Qubit ordering is little-endian: qubit 0 is the least significant bit of
//! the amplitude index, so basis state |q3 q2 q1 q0> lives at index
//! q3*8 + q2*4 + q1*2 + q0. Expectations are computed analytically from the
//! amplitudes; there is no shot sampling anywhere.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude of one basis state.
pub type Amplitude = Complex64;

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 8;

/// Single-qubit gate as a dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate1Q {
    pub m: [[Amplitude; 2]; 2],
}

impl Gate1Q {
    /// Hadamard: maps |0> to (|0>+|1>)/sqrt(2).
    pub fn h() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Gate1Q {
            m: [
                [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
            ],
        }
    }

    /// Phase gate P(lambda) = diag(1, e^{i lambda}).
    pub fn p(lambda: f64) -> Self {
        Gate1Q {
            m: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, lambda)],
            ],
        }
    }

    /// Rotation about X: [[cos t/2, -i sin t/2], [-i sin t/2, cos t/2]].
    pub fn rx(theta: f64) -> Self {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Gate1Q {
            m: [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
        }
    }

    /// Rotation about Y: [[cos t/2, -sin t/2], [sin t/2, cos t/2]].
    pub fn ry(theta: f64) -> Self {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Gate1Q {
            m: [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
        }
    }

    /// Rotation about Z: diag(e^{-i theta/2}, e^{i theta/2}).
    /// Equals P(theta) up to the global phase e^{-i theta/2}.
    pub fn rz(theta: f64) -> Self {
        Gate1Q {
            m: [
                [Complex64::from_polar(1.0, -theta / 2.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, theta / 2.0)],
            ],
        }
    }

    /// Max absolute deviation of U U^dagger from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                let mut e = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    e += self.m[r][k] * self.m[c][k].conj();
                }
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((e - target).norm());
            }
        }
        worst
    }
}

/// Normalized pure state over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// All-zeros computational basis state |0...0>.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    /// Sum of squared amplitude magnitudes; 1 for a normalized state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {q} out of range for {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Applies a single-qubit gate to `qubit`, updating amplitudes pairwise
    /// over index pairs that differ only in that qubit's bit.
    pub fn apply_1q(&mut self, gate: &Gate1Q, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = gate.m[0][0] * a0 + gate.m[0][1] * a1;
                self.amps[j] = gate.m[1][0] * a0 + gate.m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Controlled-X: flips `target` on every basis state whose `control`
    /// bit is 1.
    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Config(format!(
                "cx control and target must differ, both are {control}"
            )));
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    /// Pauli-Z expectation at `qubit`: P(bit = 0) - P(bit = 1).
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let sign = if i & bit == 0 { 1.0 } else { -1.0 };
            acc += sign * a.norm_sqr();
        }
        Ok(acc)
    }
}
