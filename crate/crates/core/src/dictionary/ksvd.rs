use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{normalize_rows, Dictionary, Method, Trained};
use crate::encode::omp;
use crate::error::{Error, Result};
use crate::preprocess::{PatchBatch, WhiteningTransform};

/// Inner sparsity used for K-SVD training when none is given.
pub const DEFAULT_KSVD_SPARSITY: usize = 10;

const POWER_STEPS: usize = 8;

/// Rows whose directions agree to this many cosine units count as parallel.
const PARALLEL_TOLERANCE: f64 = 1e-9;

/// Unit-normalized initial atoms: shuffled non-zero rows, skipping rows
/// parallel to an atom already taken. Skipped rows fill any shortfall.
pub(crate) fn initial_atoms(batch: &PatchBatch, m: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let dim = batch.dim();
    let mut order: Vec<usize> = (0..batch.count()).collect();
    order.shuffle(rng);
    let mut atoms: Vec<f64> = Vec::with_capacity(m * dim);
    let mut parallel = Vec::new();
    for i in order {
        if atoms.len() == m * dim {
            break;
        }
        let row = batch.row(i);
        let norm = super::l2_norm(row);
        if norm < 1e-12 {
            continue;
        }
        let unit: Vec<f64> = row.iter().map(|v| v / norm).collect();
        let repeated = atoms.chunks_exact(dim).any(|a| {
            let c: f64 = a.iter().zip(&unit).map(|(x, y)| x * y).sum();
            c.abs() > 1.0 - PARALLEL_TOLERANCE
        });
        if repeated {
            if parallel.len() < m {
                parallel.push(unit);
            }
        } else {
            atoms.extend(unit);
        }
    }
    for unit in parallel {
        if atoms.len() == m * dim {
            break;
        }
        atoms.extend(unit);
    }
    if atoms.len() < m * dim {
        return Err(Error::invalid(format!(
            "need {m} non-zero patches, found {}",
            atoms.len() / dim
        )));
    }
    Ok(atoms)
}

/// Sparse codes `s_i`, one list of `(atom, coefficient)` pairs per sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseCodeMatrix {
    size: usize,
    codes: Vec<Vec<(usize, f64)>>,
}

impl SparseCodeMatrix {
    pub fn new(size: usize, codes: Vec<Vec<(usize, f64)>>) -> Self {
        Self { size, codes }
    }

    pub fn count(&self) -> usize {
        self.codes.len()
    }

    /// Dictionary size `M`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn code(&self, i: usize) -> &[(usize, f64)] {
        &self.codes[i]
    }

    pub fn max_nonzeros(&self) -> usize {
        self.codes
            .iter()
            .map(|c| c.iter().filter(|(_, v)| *v != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    pub fn dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for &(j, v) in &self.codes[i] {
            out[j] += v;
        }
        out
    }
}

fn residual_sq(x: &[f64], codewords: &[f64], dim: usize, code: &[(usize, f64)]) -> f64 {
    let mut r = x.to_vec();
    for &(j, c) in code {
        for (ri, d) in r.iter_mut().zip(&codewords[j * dim..(j + 1) * dim]) {
            *ri -= c * d;
        }
    }
    r.iter().map(|v| v * v).sum()
}

/// `sum_i ||x_i - D s_i||^2`.
pub fn sparse_objective(batch: &PatchBatch, codewords: &[f64], codes: &SparseCodeMatrix) -> f64 {
    let dim = batch.dim();
    batch
        .rows()
        .enumerate()
        .map(|(i, x)| residual_sq(x, codewords, dim, codes.code(i)))
        .sum()
}

/// OMP-codes every sample, keeping the previous code where it reconstructs
/// at least as well, so the objective cannot go up between iterations.
fn sparse_code(
    batch: &PatchBatch,
    codewords: &[f64],
    k: usize,
    previous: Option<&SparseCodeMatrix>,
) -> Vec<Vec<(usize, f64)>> {
    let dim = batch.dim();
    batch
        .data()
        .par_chunks_exact(dim)
        .enumerate()
        .map(|(i, x)| {
            let sol = omp(codewords, dim, x, k);
            let fresh: Vec<(usize, f64)> = sol.support.into_iter().zip(sol.coefficients).collect();
            match previous {
                Some(prev) => {
                    let old = prev.code(i);
                    if residual_sq(x, codewords, dim, old) <= residual_sq(x, codewords, dim, &fresh) {
                        old.to_vec()
                    } else {
                        fresh
                    }
                }
                None => fresh,
            }
        })
        .collect()
}

/// Rank-1 refit of atom `j` against the residual of the samples that use it.
fn update_atom(
    batch: &PatchBatch,
    codewords: &mut [f64],
    codes: &mut [Vec<(usize, f64)>],
    users: &[(usize, usize)],
    j: usize,
) {
    let dim = batch.dim();
    // Columns of E: residual of each user with atom j's contribution restored.
    let mut e = Vec::with_capacity(users.len() * dim);
    for &(i, _) in users {
        let mut r = batch.row(i).to_vec();
        for &(l, c) in &codes[i] {
            if l == j {
                continue;
            }
            for (ri, d) in r.iter_mut().zip(&codewords[l * dim..(l + 1) * dim]) {
                *ri -= c * d;
            }
        }
        e.extend(r);
    }
    let mut d = codewords[j * dim..(j + 1) * dim].to_vec();
    let mut g = vec![0.0; users.len()];
    let project = |d: &[f64], g: &mut [f64]| {
        for (gi, col) in g.iter_mut().zip(e.chunks_exact(dim)) {
            *gi = col.iter().zip(d).map(|(a, b)| a * b).sum();
        }
    };
    // Alternating least squares from the current atom: every half-step is
    // optimal given the other factor.
    for _ in 0..POWER_STEPS {
        project(&d, &mut g);
        let mut next = vec![0.0; dim];
        for (gi, col) in g.iter().zip(e.chunks_exact(dim)) {
            for (n, c) in next.iter_mut().zip(col) {
                *n += gi * c;
            }
        }
        let norm = super::l2_norm(&next);
        if norm < 1e-300 {
            break;
        }
        next.iter_mut().for_each(|v| *v /= norm);
        d = next;
    }
    project(&d, &mut g);
    codewords[j * dim..(j + 1) * dim].copy_from_slice(&d);
    for (&(i, slot), &gi) in users.iter().zip(&g) {
        codes[i][slot].1 = gi;
    }
}

/// Replaces atoms no sample uses with the worst-reconstructed samples.
fn replace_unused(
    batch: &PatchBatch,
    codewords: &mut [f64],
    codes: &[Vec<(usize, f64)>],
    unused: &[usize],
) {
    if unused.is_empty() {
        return;
    }
    let dim = batch.dim();
    let mut err: Vec<f64> = batch
        .rows()
        .enumerate()
        .map(|(i, x)| residual_sq(x, codewords, dim, &codes[i]))
        .collect();
    for &j in unused {
        let Some((worst, &e)) = err
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        else {
            return;
        };
        let x = batch.row(worst);
        if e <= 0.0 || super::l2_norm(x) < 1e-12 {
            return;
        }
        let atom = &mut codewords[j * dim..(j + 1) * dim];
        atom.copy_from_slice(x);
        normalize_rows(atom, dim);
        let atom = atom.to_vec();
        // Samples well explained by the new atom stop being candidates.
        for (i, x) in batch.rows().enumerate() {
            let p: f64 = x.iter().zip(&atom).map(|(a, b)| a * b).sum();
            let alone = x.iter().map(|v| v * v).sum::<f64>() - p * p;
            err[i] = err[i].min(alone.max(0.0));
        }
    }
}

pub(crate) fn ksvd_with_codes(
    batch: &PatchBatch,
    whitening: &WhiteningTransform,
    m: usize,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<(Trained, SparseCodeMatrix)> {
    if m < 2 {
        return Err(Error::invalid("dictionary size must be at least 2"));
    }
    if k == 0 || k > m {
        return Err(Error::invalid(format!("sparsity k={k} must be in 1..={m}")));
    }
    if batch.count() < m {
        return Err(Error::invalid(format!(
            "need at least {m} patches, got {}",
            batch.count()
        )));
    }
    let dim = batch.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codewords = initial_atoms(batch, m, &mut rng)?;

    let mut codes = SparseCodeMatrix::new(m, sparse_code(batch, &codewords, k, None));
    let mut objective = vec![sparse_objective(batch, &codewords, &codes)];

    for _ in 0..iters {
        let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        for (i, code) in codes.codes.iter().enumerate() {
            for (slot, &(j, _)) in code.iter().enumerate() {
                users[j].push((i, slot));
            }
        }
        let mut unused = Vec::new();
        for j in 0..m {
            if users[j].is_empty() {
                unused.push(j);
            } else {
                update_atom(batch, &mut codewords, &mut codes.codes, &users[j], j);
            }
        }
        replace_unused(batch, &mut codewords, &codes.codes, &unused);
        let recoded = sparse_code(batch, &codewords, k, Some(&codes));
        codes = SparseCodeMatrix::new(m, recoded);
        objective.push(sparse_objective(batch, &codewords, &codes));
    }

    let dictionary = Dictionary::new(dim, codewords, Method::Ksvd, whitening.clone())?;
    Ok((
        Trained {
            dictionary,
            objective,
        },
        codes,
    ))
}

/// K-SVD: alternates OMP-k coding with rank-1 atom refits. `objective[0]` is
/// the value at initialization; one entry is appended per iteration.
pub fn learn_ksvd(
    batch: &PatchBatch,
    whitening: &WhiteningTransform,
    m: usize,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<Trained> {
    ksvd_with_codes(batch, whitening, m, k, iters, seed).map(|(t, _)| t)
}
