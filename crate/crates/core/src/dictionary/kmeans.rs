use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{normalize_rows, Dictionary, Method, Trained};
use crate::error::{Error, Result};
use crate::preprocess::{PatchBatch, WhiteningTransform};

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to the squared distance to the nearest chosen one.
pub fn kmeans_plus_plus(batch: &PatchBatch, m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let dim = batch.dim();
    let n = batch.count();
    let mut centers = Vec::with_capacity(m * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(batch.row(first));
    let mut nearest: Vec<f64> = batch.rows().map(|x| sq_dist(x, batch.row(first))).collect();
    for _ in 1..m {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        let c = batch.row(pick).to_vec();
        for (d, x) in nearest.iter_mut().zip(batch.rows()) {
            *d = d.min(sq_dist(x, &c));
        }
        centers.extend(c);
    }
    centers
}

#[derive(Clone, Debug)]
pub struct LloydOutcome {
    /// Row-major `M x n`, not normalized.
    pub centroids: Vec<f64>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

fn assign(batch: &PatchBatch, centroids: &[f64], dim: usize) -> Vec<(usize, f64)> {
    batch
        .data()
        .par_chunks_exact(dim)
        .map(|x| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centroids.chunks_exact(dim).enumerate() {
                let d = sq_dist(x, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect()
}

/// Lloyd iterations from the given centroids. Empty clusters are moved onto
/// the points farthest from their own centroid.
pub fn lloyd(batch: &PatchBatch, init: &[f64], iters: usize) -> LloydOutcome {
    let dim = batch.dim();
    let m = init.len() / dim;
    let mut centroids = init.to_vec();
    let mut assignments: Vec<usize> = Vec::new();
    let mut objective = Vec::with_capacity(iters);

    for _ in 0..iters {
        let assigned = assign(batch, &centroids, dim);
        let new_assignments: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        objective.push(assigned.iter().map(|a| a.1).sum());
        let converged = new_assignments == assignments;
        assignments = new_assignments;
        if converged {
            break;
        }

        let mut sums = vec![0.0; m * dim];
        let mut counts = vec![0usize; m];
        for (x, &j) in batch.rows().zip(&assignments) {
            counts[j] += 1;
            for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut empty = Vec::new();
        for j in 0..m {
            if counts[j] == 0 {
                empty.push(j);
                continue;
            }
            let inv = 1.0 / counts[j] as f64;
            for (c, s) in centroids[j * dim..(j + 1) * dim]
                .iter_mut()
                .zip(&sums[j * dim..(j + 1) * dim])
            {
                *c = s * inv;
            }
        }
        if !empty.is_empty() {
            let mut far: Vec<(usize, f64)> = batch
                .rows()
                .zip(&assignments)
                .map(|(x, &j)| sq_dist(x, &centroids[j * dim..(j + 1) * dim]))
                .enumerate()
                .collect();
            far.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (j, (i, _)) in empty.into_iter().zip(far) {
                centroids[j * dim..(j + 1) * dim].copy_from_slice(batch.row(i));
            }
        }
    }
    LloydOutcome {
        centroids,
        assignments,
        objective,
    }
}

/// K-means dictionary: k-means++ seeding, at most `iters` Lloyd iterations,
/// then unit-normalized centroids.
pub fn learn_kmeans(
    batch: &PatchBatch,
    whitening: &WhiteningTransform,
    m: usize,
    iters: usize,
    seed: u64,
) -> Result<Trained> {
    if m < 2 {
        return Err(Error::invalid("dictionary size must be at least 2"));
    }
    if batch.count() < m {
        return Err(Error::invalid(format!(
            "need at least {m} patches, got {}",
            batch.count()
        )));
    }
    if iters == 0 {
        return Err(Error::invalid("k-means needs at least one iteration"));
    }
    let dim = batch.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = kmeans_plus_plus(batch, m, &mut rng);
    let LloydOutcome {
        mut centroids,
        objective,
        ..
    } = lloyd(batch, &init, iters);

    let zero = normalize_rows(&mut centroids, dim);
    if !zero.is_empty() {
        let nonzero: Vec<usize> = batch
            .rows()
            .enumerate()
            .filter(|(_, x)| super::l2_norm(x) >= 1e-12)
            .map(|(i, _)| i)
            .collect();
        if nonzero.is_empty() {
            return Err(Error::invalid("all training patches are zero"));
        }
        for j in zero {
            let i = nonzero[rng.random_range(0..nonzero.len())];
            centroids[j * dim..(j + 1) * dim].copy_from_slice(batch.row(i));
            normalize_rows(&mut centroids[j * dim..(j + 1) * dim], dim);
        }
    }
    let dictionary = Dictionary::new(dim, centroids, Method::KMeans, whitening.clone())?;
    Ok(Trained {
        dictionary,
        objective,
    })
}
