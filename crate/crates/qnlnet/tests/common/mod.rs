//! Shared fixtures for integration tests: an independent dense-matrix
//! circuit oracle, finite-difference helpers, and dataset setup.

#![allow(dead_code)]

use std::fs::{self, File};
use std::io::Read;
use std::path::PathBuf;
use std::sync::OnceLock;

use flate2::read::GzDecoder;
use num_complex::Complex64;

pub const N: usize = 4;
pub const DIM: usize = 1 << N;

// ---------------------------------------------------------------------
// Dense-matrix circuit oracle. Deliberately built from scratch: full
// 16x16 complex matrices via Kronecker products and explicit
// matrix-vector application, sharing no code with the library's
// amplitude-pair simulator.
// ---------------------------------------------------------------------

pub type CMat = Vec<Vec<Complex64>>;

pub fn identity(dim: usize) -> CMat {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); p]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = (a.len(), a[0].len());
    let (rb, cb) = (b.len(), b[0].len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn gate_h() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
    ]
}

pub fn gate_p(lambda: f64) -> CMat {
    vec![
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, lambda)],
    ]
}

pub fn gate_rx(theta: f64) -> CMat {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![
        vec![Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        vec![Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ]
}

pub fn gate_ry(theta: f64) -> CMat {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![
        vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

pub fn gate_rz(theta: f64) -> CMat {
    vec![
        vec![Complex64::from_polar(1.0, -theta / 2.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

/// Lifts a 2x2 gate onto qubit `q` of an `n`-qubit register. Qubit k is
/// index bit k (little-endian), so the full operator is
/// I_{2^(n-1-q)} (x) U (x) I_{2^q}.
pub fn lift_1q(u: &CMat, q: usize, n: usize) -> CMat {
    kron(&identity(1 << (n - 1 - q)), &kron(u, &identity(1 << q)))
}

/// CX as an explicit basis permutation.
pub fn lift_cx(control: usize, target: usize, n: usize) -> CMat {
    let dim = 1 << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for i in 0..dim {
        let j = if (i >> control) & 1 == 1 { i ^ (1 << target) } else { i };
        m[j][i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn apply(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dagger(m: &CMat) -> CMat {
    let (r, c) = (m.len(), m[0].len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); r]; c];
    for i in 0..r {
        for j in 0..c {
            out[j][i] = m[i][j].conj();
        }
    }
    out
}

pub fn max_abs_dev_from_identity(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

pub const CX_PATTERNS: [[(usize, usize); 3]; 3] = [
    [(3, 0), (2, 3), (1, 2)],
    [(1, 0), (2, 1), (3, 2)],
    [(2, 0), (3, 2), (1, 3)],
];

/// Full-circuit unitary for the 4-qubit classifier circuit: `reps`
/// encoder repetitions of [H on all, P(lambda_k) on k] followed by
/// `angles.len()` ansatz layers with the CX pattern of `ansatz`.
/// `lambdas[rep][k]` are the already-scaled encoder phases.
pub fn circuit_matrix(lambdas: &[[f64; N]], ansatz: usize, angles: &[[f64; 5]]) -> CMat {
    let mut u = identity(DIM);
    for rep_lambdas in lambdas {
        for q in 0..N {
            u = mat_mul(&lift_1q(&gate_h(), q, N), &u);
        }
        for q in 0..N {
            u = mat_mul(&lift_1q(&gate_p(rep_lambdas[q]), q, N), &u);
        }
    }
    for layer in angles {
        u = mat_mul(&lift_1q(&gate_rz(layer[0]), 0, N), &u);
        u = mat_mul(&lift_1q(&gate_ry(layer[1]), 1, N), &u);
        u = mat_mul(&lift_1q(&gate_ry(layer[2]), 2, N), &u);
        u = mat_mul(&lift_1q(&gate_rx(layer[3]), 3, N), &u);
        for (c, t) in CX_PATTERNS[ansatz] {
            u = mat_mul(&lift_cx(c, t, N), &u);
        }
        u = mat_mul(&lift_1q(&gate_rz(layer[4]), 0, N), &u);
    }
    u
}

pub fn zero_state() -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); DIM];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// <Z0> with qubit 0 as the least significant index bit.
pub fn expectation_z0(v: &[Complex64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * if i & 1 == 0 { 1.0 } else { -1.0 })
        .sum()
}

pub fn state_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------

/// Central difference of a scalar function of one coordinate.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, at: f64, h: f64) -> f64 {
    (f(at + h) - f(at - h)) / (2.0 * h)
}

/// Relative error with an absolute floor for near-zero references.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-6)
}

// ---------------------------------------------------------------------
// Dataset fixtures
// ---------------------------------------------------------------------

/// Decompresses the bundled MNIST archives into the shared test tmp dir
/// (once per process; idempotent across processes via atomic rename) and
/// returns that directory.
pub fn mnist_dir() -> PathBuf {
    static READY: OnceLock<PathBuf> = OnceLock::new();
    READY
        .get_or_init(|| {
            let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("mnist");
            fs::create_dir_all(&root).unwrap();
            let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
            for name in [
                "train-images-idx3-ubyte",
                "train-labels-idx1-ubyte",
                "t10k-images-idx3-ubyte",
                "t10k-labels-idx1-ubyte",
            ] {
                let dst = root.join(name);
                if dst.exists() {
                    continue;
                }
                let mut bytes = Vec::new();
                GzDecoder::new(File::open(src.join(format!("{name}.gz"))).unwrap())
                    .read_to_end(&mut bytes)
                    .unwrap();
                let tmp = root.join(format!(".{name}.{}", std::process::id()));
                fs::write(&tmp, &bytes).unwrap();
                fs::rename(&tmp, &dst).unwrap();
            }
            root
        })
        .clone()
}

/// Writes synthetic CIFAR-10-format batches: two visually separable
/// classes among `class_a`/`class_b` labels, `per_batch` records in each
/// of the five training batches plus one test batch. Returns the
/// directory.
pub fn synthetic_cifar_dir(
    dir: &std::path::Path,
    class_a: u8,
    class_b: u8,
    per_batch: usize,
) -> PathBuf {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC1FA);
    let mut write_batch = |path: PathBuf, n: usize| {
        let mut bytes = Vec::with_capacity(n * 3073);
        for i in 0..n {
            let label = if i % 2 == 0 { class_a } else { class_b };
            bytes.push(label);
            let base: u8 = if label == class_a { 60 } else { 190 };
            for _ in 0..3072 {
                bytes.push(base.saturating_add(rng.gen_range(0..50)));
            }
        }
        fs::write(path, bytes).unwrap();
    };
    fs::create_dir_all(dir).unwrap();
    for b in 1..=5 {
        write_batch(dir.join(format!("data_batch_{b}.bin")), per_batch);
    }
    write_batch(dir.join("test_batch.bin"), per_batch);
    dir.to_path_buf()
}
