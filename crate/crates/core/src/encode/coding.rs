use nalgebra::{DMatrix, DVector};

use crate::dictionary::Dictionary;
use crate::error::{ensure_dim, Error, Result};

const OMP_RESIDUAL_STOP: f64 = 1e-10;

/// KT code written into `out` (length `M`).
pub(crate) fn kt_into(codewords: &[f64], dim: usize, x: &[f64], out: &mut [f64]) {
    for (o, d) in out.iter_mut().zip(codewords.chunks_exact(dim)) {
        *o = d
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    for o in out.iter_mut() {
        *o = (mean - *o).max(0.0);
    }
}

pub(crate) fn sa_into(codewords: &[f64], dim: usize, x: &[f64], beta: f64, out: &mut [f64]) {
    let mut min = f64::INFINITY;
    for (o, d) in out.iter_mut().zip(codewords.chunks_exact(dim)) {
        *o = d.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        min = min.min(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (-beta * (*o - min)).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// K-means triangle encoding of one whitened patch.
pub fn encode_kt(dict: &Dictionary, patch: &[f64]) -> Result<Vec<f64>> {
    ensure_dim(dict.dim(), patch.len())?;
    let mut out = vec![0.0; dict.size()];
    kt_into(dict.codewords(), dict.dim(), patch, &mut out);
    Ok(out)
}

/// Soft-assignment encoding. Squared distances are shifted by their minimum
/// before exponentiation.
pub fn encode_sa(dict: &Dictionary, patch: &[f64], beta: f64) -> Result<Vec<f64>> {
    ensure_dim(dict.dim(), patch.len())?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
    }
    let mut out = vec![0.0; dict.size()];
    sa_into(dict.codewords(), dict.dim(), patch, beta, &mut out);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpSolution {
    /// Atoms in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients, aligned with `support`.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
}

fn least_squares(codewords: &[f64], dim: usize, support: &[usize], x: &[f64]) -> Vec<f64> {
    let s = support.len();
    let atom = |j: usize| &codewords[j * dim..(j + 1) * dim];
    let gram = DMatrix::from_fn(s, s, |a, b| {
        atom(support[a]).iter().zip(atom(support[b])).map(|(p, q)| p * q).sum::<f64>()
    });
    let rhs = DVector::from_iterator(
        s,
        support.iter().map(|&j| atom(j).iter().zip(x).map(|(p, q)| p * q).sum()),
    );
    if let Some(chol) = gram.clone().cholesky() {
        let sol = chol.solve(&rhs);
        if sol.iter().all(|v| v.is_finite()) {
            return sol.iter().copied().collect();
        }
    }
    // Rank-deficient active set (e.g. duplicated atoms): minimum-norm solution.
    let a = DMatrix::from_fn(dim, s, |r, c| atom(support[c])[r]);
    let b = DVector::from_column_slice(x);
    a.svd(true, true)
        .solve(&b, 1e-12)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; s])
}

/// Orthogonal matching pursuit over row-major unit-norm `codewords`.
///
/// Picks the inactive atom with the largest `|<d_j, r>|` (lowest index on
/// ties), refits all active coefficients by least squares, and stops after `k`
/// atoms or once the residual norm drops below `1e-10`.
pub fn omp(codewords: &[f64], dim: usize, x: &[f64], k: usize) -> OmpSolution {
    let m = codewords.len() / dim;
    let mut residual = x.to_vec();
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut coefficients = Vec::new();
    let mut active = vec![false; m];
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    while support.len() < k.min(m) && norm(&residual) >= OMP_RESIDUAL_STOP {
        let mut best: Option<(usize, f64)> = None;
        for (j, d) in codewords.chunks_exact(dim).enumerate() {
            if active[j] {
                continue;
            }
            let c = d.iter().zip(&residual).map(|(a, b)| a * b).sum::<f64>().abs();
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        let Some((j, _)) = best else { break };
        active[j] = true;
        support.push(j);
        coefficients = least_squares(codewords, dim, &support, x);
        residual.copy_from_slice(x);
        for (&a, &c) in support.iter().zip(&coefficients) {
            for (r, d) in residual.iter_mut().zip(&codewords[a * dim..(a + 1) * dim]) {
                *r -= c * d;
            }
        }
    }
    OmpSolution {
        support,
        coefficients,
        residual_norm: norm(&residual),
    }
}

pub(crate) fn omp_into(codewords: &[f64], dim: usize, x: &[f64], k: usize, out: &mut [f64]) {
    out.fill(0.0);
    let sol = omp(codewords, dim, x, k);
    for (j, c) in sol.support.into_iter().zip(sol.coefficients) {
        out[j] = c;
    }
}

/// OMP-k code as a dense `M`-vector with at most `k` non-zeros.
pub fn encode_omp(dict: &Dictionary, patch: &[f64], k: usize) -> Result<Vec<f64>> {
    ensure_dim(dict.dim(), patch.len())?;
    if k == 0 || k > dict.size() {
        return Err(Error::invalid(format!(
            "OMP sparsity {k} must be in 1..={}",
            dict.size()
        )));
    }
    let mut out = vec![0.0; dict.size()];
    omp_into(dict.codewords(), dict.dim(), patch, k, &mut out);
    Ok(out)
}
