//! Brute-force references for testing. Nothing here calls into the solver,
//! encoder or distance transform code it is meant to check.

use crate::error::{Error, Result};

/// Largest search space the exhaustive oracles will walk.
pub const MAX_LABELINGS: u128 = 1_000_000;
pub const MAX_SUPPORTS: u128 = 100_000;

fn truncated_l1(a: (i32, i32), b: (i32, i32), gamma: f64) -> f64 {
    let d = (a.0 - b.0).abs() + (a.1 - b.1).abs();
    if (d as f64) < gamma {
        d as f64
    } else {
        gamma
    }
}

/// Energy of one labeling, written out directly.
pub fn mrf_energy(
    unary: &[Vec<f64>],
    edges: &[(usize, usize)],
    labels: &[(i32, i32)],
    choice: &[usize],
    alpha: f64,
    gamma: f64,
) -> f64 {
    let mut e = 0.0;
    for i in 0..unary.len() {
        e += unary[i][choice[i]];
    }
    let mut s = 0.0;
    for &(a, b) in edges {
        s += truncated_l1(labels[choice[a]], labels[choice[b]], gamma);
    }
    e + alpha * s
}

/// Exhaustive minimum of the pairwise energy. Labelings are visited in
/// lexicographic order (node 0 most significant) and the first minimum wins.
pub fn brute_force_labeling(
    unary: &[Vec<f64>],
    edges: &[(usize, usize)],
    labels: &[(i32, i32)],
    alpha: f64,
    gamma: f64,
) -> Result<(Vec<usize>, f64)> {
    let n = unary.len();
    let l = labels.len();
    if n == 0 || l == 0 {
        return Err(Error::invalid("empty instance"));
    }
    if unary.iter().any(|u| u.len() != l) {
        return Err(Error::invalid("data cost length differs from label count"));
    }
    let total = (l as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > MAX_LABELINGS {
        return Err(Error::TooLarge(format!("{l}^{n} labelings")));
    }
    let mut choice = vec![0usize; n];
    let mut best = (choice.clone(), f64::INFINITY);
    loop {
        let e = mrf_energy(unary, edges, labels, &choice, alpha, gamma);
        if e < best.1 {
            best = (choice.clone(), e);
        }
        // Odometer increment, last node fastest.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < l {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// Same search in reverse index order, keeping the lexicographically first
/// minimizer. Used to cross-check [`brute_force_labeling`].
pub fn brute_force_labeling_reversed(
    unary: &[Vec<f64>],
    edges: &[(usize, usize)],
    labels: &[(i32, i32)],
    alpha: f64,
    gamma: f64,
) -> Result<(Vec<usize>, f64)> {
    let n = unary.len();
    let l = labels.len();
    let total = (l as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if n == 0 || l == 0 || total > MAX_LABELINGS {
        return Err(Error::TooLarge(format!("{l}^{n} labelings")));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for code in (0..total as usize).rev() {
        let mut choice = vec![0; n];
        let mut c = code;
        for slot in choice.iter_mut().rev() {
            *slot = c % l;
            c /= l;
        }
        let e = mrf_energy(unary, edges, labels, &choice, alpha, gamma);
        let better = match &best {
            None => true,
            Some((_, b)) => e <= *b,
        };
        if better {
            best = Some((choice, e));
        }
    }
    Ok(best.expect("non-empty search"))
}

/// `m(t) = min_t' h(t') + alpha * min(|t - t'|_1, gamma)` by a double loop.
pub fn naive_min_convolution(h: &[f64], labels: &[(i32, i32)], alpha: f64, gamma: f64) -> Vec<f64> {
    labels
        .iter()
        .map(|&t| {
            let mut best = f64::INFINITY;
            for (j, &s) in labels.iter().enumerate() {
                let c = h[j] + alpha * truncated_l1(t, s, gamma);
                if c < best {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r * (n as u128 - i) / (i + 1);
    }
    r
}

/// Least-squares residual norm of `x` on the atoms in `support`, by Gaussian
/// elimination with partial pivoting on the normal equations. `None` when the
/// atoms are linearly dependent.
fn ls_residual(codewords: &[f64], dim: usize, x: &[f64], support: &[usize]) -> Option<f64> {
    let k = support.len();
    let atom = |j: usize| &codewords[j * dim..(j + 1) * dim];
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dot(atom(support[r]), atom(support[c]));
        }
        a[r][k] = dot(atom(support[r]), x);
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut residual = x.to_vec();
    for r in 0..k {
        let coef = a[r][k] / a[r][r];
        for (ri, d) in residual.iter_mut().zip(atom(support[r])) {
            *ri -= coef * d;
        }
    }
    Some(residual.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Smallest least-squares residual norm of `x` over every support of at most
/// `k` atoms.
pub fn exhaustive_omp_bound(codewords: &[f64], dim: usize, x: &[f64], k: usize) -> Result<f64> {
    exhaustive_omp_search(codewords, dim, x, k).map(|(r, _)| r)
}

/// Like [`exhaustive_omp_bound`], also returning the first optimal support in
/// size-then-lexicographic order (empty when no atom helps).
pub fn exhaustive_omp_search(
    codewords: &[f64],
    dim: usize,
    x: &[f64],
    k: usize,
) -> Result<(f64, Vec<usize>)> {
    if dim == 0 || codewords.len() % dim != 0 || x.len() != dim {
        return Err(Error::invalid("inconsistent dictionary / patch dimensions"));
    }
    let m = codewords.len() / dim;
    let k = k.min(m);
    let count: u128 = (1..=k).map(|s| binomial(m, s)).sum();
    if count > MAX_SUPPORTS {
        return Err(Error::TooLarge(format!("{count} supports")));
    }
    let mut best = (x.iter().map(|v| v * v).sum::<f64>().sqrt(), Vec::new());
    for size in 1..=k {
        let mut support: Vec<usize> = (0..size).collect();
        loop {
            if let Some(r) = ls_residual(codewords, dim, x, &support) {
                if r < best.0 {
                    best = (r, support.clone());
                }
            }
            // Next combination in lexicographic order.
            let Some(i) = (0..size).rev().find(|&i| support[i] < m - size + i) else {
                break;
            };
            support[i] += 1;
            for j in i + 1..size {
                support[j] = support[j - 1] + 1;
            }
        }
    }
    Ok(best)
}

/// Mean L1 distance over every (test, exemplar) row pair.
pub fn full_pair_lambda(test: &[f64], exemplar: &[f64], dim: usize) -> Result<f64> {
    if dim == 0 || test.is_empty() || exemplar.is_empty() {
        return Err(Error::invalid("empty feature set"));
    }
    if test.len() % dim != 0 || exemplar.len() % dim != 0 {
        return Err(Error::invalid("feature length is not a multiple of dim"));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for a in test.chunks(dim) {
        for b in exemplar.chunks(dim) {
            let mut d = 0.0;
            for i in 0..dim {
                d += (a[i] - b[i]).abs();
            }
            sum += d;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}
