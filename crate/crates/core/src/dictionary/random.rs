use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{l2_norm, normalize_rows, Dictionary, Method, Trained};
use crate::error::{Error, Result};
use crate::preprocess::{PatchBatch, WhiteningTransform};

/// Picks `m` distinct non-zero rows in shuffled order and unit-normalizes them.
pub(crate) fn sample_nonzero_rows(
    batch: &PatchBatch,
    m: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let dim = batch.dim();
    let mut order: Vec<usize> = (0..batch.count()).collect();
    order.shuffle(rng);
    let mut rows = Vec::with_capacity(m * dim);
    let mut taken = 0;
    for i in order {
        if taken == m {
            break;
        }
        let row = batch.row(i);
        if l2_norm(row) < 1e-12 {
            continue;
        }
        rows.extend_from_slice(row);
        taken += 1;
    }
    if taken < m {
        return Err(Error::invalid(format!(
            "need {m} non-zero patches, found {taken}"
        )));
    }
    normalize_rows(&mut rows, dim);
    Ok(rows)
}

/// Dictionary made of `m` randomly chosen training patches.
pub fn learn_random(
    batch: &PatchBatch,
    whitening: &WhiteningTransform,
    m: usize,
    seed: u64,
) -> Result<Trained> {
    if batch.count() < m {
        return Err(Error::invalid(format!(
            "need at least {m} patches, got {}",
            batch.count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codewords = sample_nonzero_rows(batch, m, &mut rng)?;
    let dictionary = Dictionary::new(batch.dim(), codewords, Method::Random, whitening.clone())?;
    Ok(Trained {
        dictionary,
        objective: Vec::new(),
    })
}
