use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure_dim, Error, Result};
use crate::preprocess::PatchBatch;

/// Default ZCA regularizer.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// ZCA whitening map `x -> W (x - mean)` with symmetric `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct WhiteningTransform {
    mean: Vec<f64>,
    /// Row-major `dim x dim`.
    matrix: Vec<f64>,
    epsilon: f64,
}

impl WhiteningTransform {
    pub fn new(mean: Vec<f64>, matrix: Vec<f64>, epsilon: f64) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::invalid("whitening dimension must be positive"));
        }
        ensure_dim(dim * dim, matrix.len())?;
        if mean.iter().chain(&matrix).any(|v| !v.is_finite()) || !epsilon.is_finite() {
            return Err(Error::NonFinite("whitening transform"));
        }
        Ok(Self {
            mean,
            matrix,
            epsilon,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Self {
            mean: vec![0.0; dim],
            matrix,
            epsilon: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Writes `W (x - mean)` into `out`. `scratch` must have length `dim`.
    pub fn apply_into(&self, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let dim = self.dim();
        for ((s, v), m) in scratch.iter_mut().zip(x).zip(&self.mean) {
            *s = v - m;
        }
        for (row, o) in self.matrix.chunks_exact(dim).zip(out.iter_mut()) {
            *o = row.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        let mut scratch = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut scratch, &mut out);
        Ok(out)
    }
}

/// Sample mean and (1/N-normalized) covariance of the batch rows.
pub fn batch_covariance(batch: &PatchBatch) -> (Vec<f64>, DMatrix<f64>) {
    let dim = batch.dim();
    let n = batch.count() as f64;
    let mut mean = vec![0.0; dim];
    for row in batch.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut acc = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for row in batch.rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            let dst = &mut acc[i * dim + i..(i + 1) * dim];
            for (a, cj) in dst.iter_mut().zip(&centered[i..]) {
                *a += ci * cj;
            }
        }
    }
    let cov = DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        acc[a * dim + b] / n
    });
    (mean, cov)
}

/// Fits a ZCA transform `V (L + eps I)^{-1/2} V^T` to the batch covariance.
pub fn fit_whitening(batch: &PatchBatch, epsilon: f64) -> Result<WhiteningTransform> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let (mean, cov) = batch_covariance(batch);
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("patch covariance"));
    }
    let dim = mean.len();
    let eig = SymmetricEigen::new(cov);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    // Directions with no energy (e.g. the DC direction after contrast
    // normalization) are dropped when unregularized.
    let floor = 1e-12 * lambda_max.max(1e-300);
    let scales: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(0.0) + epsilon;
            if l <= floor {
                0.0
            } else {
                1.0 / l.sqrt()
            }
        })
        .collect();
    let v = &eig.eigenvectors;
    let mut matrix = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let w: f64 = (0..dim).map(|k| v[(i, k)] * scales[k] * v[(j, k)]).sum();
            matrix[i * dim + j] = w;
            matrix[j * dim + i] = w;
        }
    }
    WhiteningTransform::new(mean, matrix, epsilon)
}

pub fn apply_whitening(t: &WhiteningTransform, batch: &PatchBatch) -> Result<PatchBatch> {
    let mut out = batch.clone();
    apply_whitening_in_place(t, &mut out)?;
    Ok(out)
}

pub fn apply_whitening_in_place(t: &WhiteningTransform, batch: &mut PatchBatch) -> Result<()> {
    let dim = batch.dim();
    ensure_dim(t.dim(), dim)?;
    let mut scratch = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    for row in batch.data_mut().chunks_exact_mut(dim) {
        t.apply_into(row, &mut scratch, &mut out);
        row.copy_from_slice(&out);
    }
    Ok(())
}
