//! Principal component analysis to four dimensions.
//!
//! The top right singular vectors of the centered data matrix are computed
//! from the covariance eigenproblem (or the Gram eigenproblem when there
//! are fewer rows than columns), solved by blocked subspace iteration with
//! a Rayleigh-Ritz step. Everything is seeded internally, so fitting the
//! same data always yields bit-identical components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output dimensionality of the projection.
pub const N_COMPONENTS: usize = 4;

const SUBSPACE_SEED: u64 = 0x70c1;
const MAX_ITERS: usize = 200;
const RITZ_TOL: f64 = 1e-11;

/// Fitted projection: center, orthonormal components, and the training
/// statistics used to standardize projected outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// dim x 4 column-major: components[j * dim + i] is entry i of
    /// component j. Columns are orthonormal; the largest-magnitude entry of
    /// each column is positive.
    pub components: Vec<f64>,
    pub out_mean: [f64; N_COMPONENTS],
    pub out_std: [f64; N_COMPONENTS],
}

impl PcaModel {
    /// Fits mean, components, and projection statistics on training rows.
    /// Errors when any projected dimension has (near) zero variance.
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let (mean, components) = principal_components(rows)?;
        let dim = mean.len();
        let n = rows.len();

        let mut sums = [0.0; N_COMPONENTS];
        let mut projections = vec![[0.0; N_COMPONENTS]; n];
        for (row, z) in rows.iter().zip(projections.iter_mut()) {
            *z = project_with(&mean, &components, dim, row);
            for (s, v) in sums.iter_mut().zip(z.iter()) {
                *s += v;
            }
        }
        let out_mean = sums.map(|s| s / n as f64);
        let mut var = [0.0; N_COMPONENTS];
        for z in &projections {
            for j in 0..N_COMPONENTS {
                let d = z[j] - out_mean[j];
                var[j] += d * d;
            }
        }
        let out_std = var.map(|v| (v / n as f64).sqrt());
        if out_std.iter().any(|&s| s <= 1e-12) {
            return Err(Error::Fit(format!(
                "zero variance in projected training data (stds {out_std:?})"
            )));
        }
        Ok(PcaModel {
            mean,
            components,
            out_mean,
            out_std,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Centered projection without standardization.
    pub fn project(&self, x: &[f64]) -> Result<[f64; N_COMPONENTS]> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "pca expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(project_with(&self.mean, &self.components, self.dim(), x))
    }

    /// Centered projection standardized with the training statistics.
    pub fn transform(&self, x: &[f64]) -> Result<[f64; N_COMPONENTS]> {
        let z = self.project(x)?;
        let mut out = [0.0; N_COMPONENTS];
        for j in 0..N_COMPONENTS {
            out[j] = (z[j] - self.out_mean[j]) / self.out_std[j];
        }
        Ok(out)
    }
}

fn project_with(mean: &[f64], components: &[f64], dim: usize, x: &[f64]) -> [f64; N_COMPONENTS] {
    let mut z = [0.0; N_COMPONENTS];
    for (j, zj) in z.iter_mut().enumerate() {
        let col = &components[j * dim..(j + 1) * dim];
        *zj = x
            .iter()
            .zip(mean)
            .zip(col)
            .map(|((xv, mv), w)| (xv - mv) * w)
            .sum();
    }
    z
}

/// Column mean and top-4 right singular vectors of the centered row matrix,
/// sign-fixed so the largest-magnitude entry of each component is positive.
pub fn principal_components(rows: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rows.len();
    if n <= N_COMPONENTS {
        return Err(Error::Config(format!(
            "pca needs more than {N_COMPONENTS} rows, got {n}"
        )));
    }
    let dim = rows[0].len();
    if dim < N_COMPONENTS {
        return Err(Error::Shape(format!(
            "pca needs at least {N_COMPONENTS} columns, got {dim}"
        )));
    }
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Shape("pca rows have inconsistent lengths".into()));
    }

    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }

    let mut components = if dim <= n {
        // Covariance path: eigenvectors of the dim x dim scatter matrix are
        // the right singular vectors directly.
        let mut scatter = vec![0.0; dim * dim];
        let mut centered = vec![0.0; dim];
        for row in rows {
            for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
                *c = v - m;
            }
            for a in 0..dim {
                let ca = centered[a];
                if ca != 0.0 {
                    let dst = &mut scatter[a * dim..(a + 1) * dim];
                    for (s, c) in dst[a..].iter_mut().zip(&centered[a..]) {
                        *s += ca * c;
                    }
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                scatter[a * dim + b] = scatter[b * dim + a];
            }
        }
        let (w, _) = top_eigenvectors(&scatter, dim, N_COMPONENTS);
        w
    } else {
        // Gram path: from X = U S W^T, the n x n Gram matrix gives U and
        // S^2; right singular vectors are X^T u / s.
        let mut centered: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect();
        let mut gram = vec![0.0; n * n];
        for u in 0..n {
            for v in u..n {
                let d: f64 = centered[u].iter().zip(&centered[v]).map(|(a, b)| a * b).sum();
                gram[u * n + v] = d;
                gram[v * n + u] = d;
            }
        }
        let (u_block, vals) = top_eigenvectors(&gram, n, N_COMPONENTS);
        let scale: f64 = vals[0].abs().max(1e-300);
        let mut w = vec![0.0; dim * N_COMPONENTS];
        for j in 0..N_COMPONENTS {
            let col = &mut w[j * dim..(j + 1) * dim];
            for (u, row) in u_block[j * n..(j + 1) * n].iter().zip(centered.iter_mut()) {
                for (wv, rv) in col.iter_mut().zip(row.iter()) {
                    *wv += u * rv;
                }
            }
            let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm * norm <= 1e-12 * scale {
                // Rank-deficient data: this singular value is ~0, leave the
                // column for the orthonormal completion below.
                col.fill(0.0);
            } else {
                col.iter_mut().for_each(|v| *v /= norm);
            }
        }
        w
    };

    // Final re-orthonormalization: tightens near-orthonormal columns to
    // machine precision and completes columns lost to rank deficiency.
    let mut rng = ChaCha8Rng::seed_from_u64(SUBSPACE_SEED ^ 0xc0);
    orthonormalize_columns(&mut components, dim, N_COMPONENTS, &mut rng);

    for j in 0..N_COMPONENTS {
        let col = &mut components[j * dim..(j + 1) * dim];
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok((mean, components))
}

/// Top-k eigenpairs of a symmetric PSD matrix (row-major, dim x dim) by
/// blocked subspace iteration with a final Rayleigh-Ritz rotation. Returns
/// (eigenvectors column-major dim x k, eigenvalues descending).
fn top_eigenvectors(a: &[f64], dim: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let nb = (k + 4).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(SUBSPACE_SEED);
    let mut q: Vec<f64> = (0..dim * nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthonormalize_columns(&mut q, dim, nb, &mut rng);

    let mut prev = vec![f64::INFINITY; k];
    for _ in 0..MAX_ITERS {
        let y = sym_mul_block(a, dim, &q, nb);
        let s = block_gram(&q, &y, dim, nb);
        let (vals, _) = jacobi_eig(&s, nb);
        let converged = vals[..k]
            .iter()
            .zip(&prev)
            .all(|(v, p)| (v - p).abs() <= RITZ_TOL * v.abs().max(1.0));
        prev.copy_from_slice(&vals[..k]);
        q = y;
        orthonormalize_columns(&mut q, dim, nb, &mut rng);
        if converged {
            break;
        }
    }

    let y = sym_mul_block(a, dim, &q, nb);
    let s = block_gram(&q, &y, dim, nb);
    let (vals, vecs) = jacobi_eig(&s, nb);
    let mut w = vec![0.0; dim * k];
    for j in 0..k {
        let col = &mut w[j * dim..(j + 1) * dim];
        for l in 0..nb {
            let coeff = vecs[j * nb + l];
            if coeff != 0.0 {
                for (wv, qv) in col.iter_mut().zip(&q[l * dim..(l + 1) * dim]) {
                    *wv += coeff * qv;
                }
            }
        }
    }
    (w, vals[..k].to_vec())
}

/// y = A q for column-major block q (dim x nb), A symmetric row-major.
fn sym_mul_block(a: &[f64], dim: usize, q: &[f64], nb: usize) -> Vec<f64> {
    let mut y = vec![0.0; dim * nb];
    for j in 0..nb {
        let qcol = &q[j * dim..(j + 1) * dim];
        let ycol = &mut y[j * dim..(j + 1) * dim];
        for i in 0..dim {
            ycol[i] = a[i * dim..(i + 1) * dim]
                .iter()
                .zip(qcol)
                .map(|(av, qv)| av * qv)
                .sum();
        }
    }
    y
}

/// s = q^T y, symmetrized; both blocks column-major dim x nb; s is nb x nb
/// column-major.
fn block_gram(q: &[f64], y: &[f64], dim: usize, nb: usize) -> Vec<f64> {
    let mut s = vec![0.0; nb * nb];
    for i in 0..nb {
        for j in 0..nb {
            let d: f64 = q[i * dim..(i + 1) * dim]
                .iter()
                .zip(&y[j * dim..(j + 1) * dim])
                .map(|(a, b)| a * b)
                .sum();
            s[j * nb + i] = d;
        }
    }
    for i in 0..nb {
        for j in 0..i {
            let m = (s[j * nb + i] + s[i * nb + j]) / 2.0;
            s[j * nb + i] = m;
            s[i * nb + j] = m;
        }
    }
    s
}

/// Modified Gram-Schmidt on column-major columns, two passes per column.
/// Columns that collapse (rank deficiency) are replaced by fresh random
/// vectors, falling back to canonical basis vectors so termination is
/// guaranteed.
fn orthonormalize_columns(cols: &mut [f64], dim: usize, nb: usize, rng: &mut ChaCha8Rng) {
    for j in 0..nb {
        let mut attempt = 0usize;
        loop {
            let pre_norm = {
                let col = &cols[j * dim..(j + 1) * dim];
                col.iter().map(|v| v * v).sum::<f64>().sqrt()
            };
            for _ in 0..2 {
                for i in 0..j {
                    let dot: f64 = {
                        let ci = &cols[i * dim..(i + 1) * dim];
                        let cj = &cols[j * dim..(j + 1) * dim];
                        ci.iter().zip(cj).map(|(a, b)| a * b).sum()
                    };
                    let (head, tail) = cols.split_at_mut(j * dim);
                    let ci = &head[i * dim..(i + 1) * dim];
                    let cj = &mut tail[..dim];
                    for (c, b) in cj.iter_mut().zip(ci) {
                        *c -= dot * b;
                    }
                }
            }
            let col = &mut cols[j * dim..(j + 1) * dim];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 * pre_norm.max(1e-300) && norm > 0.0 {
                col.iter_mut().for_each(|v| *v /= norm);
                break;
            }
            if attempt < 8 {
                for v in col.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
            } else {
                col.fill(0.0);
                col[(attempt - 8 + j) % dim] = 1.0;
            }
            attempt += 1;
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix (column-
/// major n x n). Returns eigenvalues descending with matching eigenvector
/// columns.
fn jacobi_eig(s: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = s.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * frob.max(1e-300);
    for _ in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[q * n + p] * a[q * n + p];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[q * n + p];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for i in 0..n {
                    let aip = a[p * n + i];
                    let aiq = a[q * n + i];
                    a[p * n + i] = c * aip - sn * aiq;
                    a[q * n + i] = sn * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[i * n + p];
                    let aqi = a[i * n + q];
                    a[i * n + p] = c * api - sn * aqi;
                    a[i * n + q] = sn * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[p * n + i];
                    let viq = v[q * n + i];
                    v[p * n + i] = c * vip - sn * viq;
                    v[q * n + i] = sn * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        vecs[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
    }
    (vals, vecs)
}
