use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::domain::TranslationDomain;
use crate::encode::{Cell, FeatureGrid, PatchFeatureMap};
use crate::error::{ensure_dim, Error, Result};

/// Lower bound applied to an estimated truncation threshold.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Number of random pairs used to estimate the data truncation threshold.
pub const DEFAULT_LAMBDA_SAMPLE: usize = 10_000;

#[inline]
pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Truncated L1 disagreement `min(|du| + |dv|, gamma)`.
#[inline]
pub fn smoothness_term(a: (i32, i32), b: (i32, i32), gamma: f64) -> f64 {
    let d = ((a.0 - b.0).abs() + (a.1 - b.1).abs()) as f64;
    d.min(gamma)
}

/// Mean L1 feature distance between test and exemplar nodes: over every pair
/// when there are at most `sample` of them, otherwise over `sample` seeded
/// uniform random pairs. The result is not floored.
pub fn estimate_lambda<F: FeatureGrid, G: FeatureGrid>(
    test: &F,
    exemplar: &G,
    sample: usize,
    seed: u64,
) -> Result<f64> {
    ensure_dim(test.dim(), exemplar.dim())?;
    let (nt, ne) = (test.len(), exemplar.len());
    if nt == 0 || ne == 0 {
        return Err(Error::invalid("cannot estimate lambda on empty feature maps"));
    }
    if sample == 0 {
        return Err(Error::invalid("lambda sample size must be positive"));
    }
    let (tw, ew) = (test.grid_width(), exemplar.grid_width());
    let dist = |i: usize, j: usize| {
        l1_distance(test.feature(i % tw, i / tw), exemplar.feature(j % ew, j / ew))
    };
    let total = nt as u128 * ne as u128;
    if total <= sample as u128 {
        let sum: f64 = (0..nt).map(|i| (0..ne).map(|j| dist(i, j)).sum::<f64>()).sum();
        return Ok(sum / total as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..sample)
        .map(|_| (rng.random_range(0..nt), rng.random_range(0..ne)))
        .collect();
    let sum: f64 = pairs.iter().map(|&(i, j)| dist(i, j)).sum();
    Ok(sum / sample as f64)
}

/// Grid-cell data term under a rigid translation of the whole cell.
///
/// Each patch contributes its L1 feature distance, or `lambda` when it lands
/// outside the exemplar grid. The sum is averaged over the `z` patches and
/// truncated at `lambda`, i.e. `(1/z) min(sum, z * lambda)`.
pub fn cell_data_term(
    cell: &Cell,
    t: (i32, i32),
    test: &PatchFeatureMap,
    exemplar: &PatchFeatureMap,
    lambda: f64,
) -> f64 {
    let z = cell.patch_count() as f64;
    let sum: f64 = cell
        .patches
        .iter()
        .map(|&p| {
            let (c, r) = ((p % test.cols) as i32, (p / test.cols) as i32);
            match target(c + t.0, r + t.1, exemplar.cols, exemplar.rows) {
                Some((x, y)) => l1_distance(test.feature(c as usize, r as usize), exemplar.feature(x, y)),
                None => lambda,
            }
        })
        .sum();
    (sum / z).min(lambda)
}

#[inline]
pub(crate) fn target(x: i32, y: i32, w: usize, h: usize) -> Option<(usize, usize)> {
    (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h).then_some((x as usize, y as usize))
}

/// Untruncated L1 distance of every test patch to its translated exemplar
/// patch, for every translation in the domain. Out-of-bounds entries are
/// `+inf`, so `min(d, lambda)` charges them exactly `lambda`.
#[derive(Clone, Debug)]
pub struct PatchCostTable {
    pub domain: TranslationDomain,
    pub lambda: f64,
    labels: usize,
    /// `patch x label`, row-major.
    distances: Vec<f64>,
}

impl PatchCostTable {
    pub fn build(
        test: &PatchFeatureMap,
        exemplar: &PatchFeatureMap,
        domain: TranslationDomain,
        lambda: f64,
    ) -> Result<Self> {
        ensure_dim(test.dim, exemplar.dim)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        let labels = domain.len();
        let translations: Vec<(i32, i32)> = domain.translations().collect();
        let mut distances = vec![0.0; test.cols * test.rows * labels];
        distances
            .par_chunks_mut(labels)
            .enumerate()
            .for_each(|(p, row)| {
                let (c, r) = ((p % test.cols) as i32, (p / test.cols) as i32);
                let f = test.feature(c as usize, r as usize);
                for (out, &(u, v)) in row.iter_mut().zip(&translations) {
                    *out = match target(c + u, r + v, exemplar.cols, exemplar.rows) {
                        Some((x, y)) => l1_distance(f, exemplar.feature(x, y)),
                        None => f64::INFINITY,
                    };
                }
            });
        Ok(Self {
            domain,
            lambda,
            labels,
            distances,
        })
    }

    pub fn patch_count(&self) -> usize {
        self.distances.len() / self.labels
    }

    /// Raw distances of one patch over the domain.
    pub fn row(&self, patch: usize) -> &[f64] {
        &self.distances[patch * self.labels..(patch + 1) * self.labels]
    }

    /// Patch-layer data term `min(d, lambda)` for every label.
    pub fn patch_costs(&self, patch: usize) -> impl Iterator<Item = f64> + '_ {
        let lambda = self.lambda;
        self.row(patch).iter().map(move |&d| d.min(lambda))
    }

    /// Cell data term for every label; agrees with [`cell_data_term`].
    pub fn cell_costs(&self, cell: &Cell) -> Vec<f64> {
        let mut sum = vec![0.0; self.labels];
        for &p in &cell.patches {
            for (s, &d) in sum.iter_mut().zip(self.row(p)) {
                *s += if d.is_finite() { d } else { self.lambda };
            }
        }
        let z = cell.patch_count() as f64;
        sum.iter().map(|s| (s / z).min(self.lambda)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{GridCellPyramid, PixelFeatureMap};

    fn pmap(cols: usize, rows: usize, dim: usize, seed: u64) -> PatchFeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PatchFeatureMap {
            cols,
            rows,
            dim,
            pool_width: 1,
            data: (0..cols * rows * dim).map(|_| rng.random::<f64>()).collect(),
        }
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness_term((3, -1), (3, -1), 0.5), 0.0);
        assert_eq!(smoothness_term((1, 2), (2, 4), 0.5), 0.5);
        assert_eq!(smoothness_term((1, 0), (0, 0), 5.0), 1.0);
    }

    #[test]
    fn lambda_of_identical_constant_maps_is_zero() {
        let m = PatchFeatureMap {
            cols: 3,
            rows: 3,
            dim: 2,
            pool_width: 1,
            data: vec![0.25; 18],
        };
        assert_eq!(estimate_lambda(&m, &m, 100, 0).unwrap(), 0.0);
    }

    #[test]
    fn lambda_single_pair() {
        let a = PixelFeatureMap {
            width: 1,
            height: 1,
            dim: 3,
            data: vec![1.0, 2.0, 3.0],
        };
        let b = PixelFeatureMap {
            width: 1,
            height: 1,
            dim: 3,
            data: vec![0.0, 4.0, 3.5],
        };
        assert_eq!(estimate_lambda(&a, &b, 10, 0).unwrap(), 3.5);
    }

    #[test]
    fn lambda_exhaustive_mean() {
        let a = pmap(10, 10, 4, 1);
        let b = pmap(10, 10, 4, 2);
        let got = estimate_lambda(&a, &b, 10_000, 0).unwrap();
        let mut sum = 0.0;
        for i in 0..100 {
            for j in 0..100 {
                sum += (0..4)
                    .map(|k| (a.data[i * 4 + k] - b.data[j * 4 + k]).abs())
                    .sum::<f64>();
            }
        }
        assert!((got - sum / 10_000.0).abs() < 1e-12);
        // Sampled estimate lands close to the exhaustive mean.
        let sampled = estimate_lambda(&a, &b, 5000, 3).unwrap();
        assert!((sampled - got).abs() < 0.05 * got);
    }

    #[test]
    fn lambda_guards() {
        let a = pmap(2, 2, 3, 0);
        let b = pmap(2, 2, 4, 0);
        assert!(estimate_lambda(&a, &b, 10, 0).is_err());
        assert!(estimate_lambda(&a, &a, 0, 0).is_err());
    }

    #[test]
    fn cell_term_identity_and_truncation() {
        let a = pmap(4, 4, 3, 5);
        let pyr = GridCellPyramid::new(4, 4, 2).unwrap();
        for cell in &pyr.cells {
            assert_eq!(cell_data_term(cell, (0, 0), &a, &a, 1.0), 0.0);
        }
        let t = PatchFeatureMap {
            cols: 1,
            rows: 1,
            dim: 1,
            pool_width: 1,
            data: vec![0.0],
        };
        let e = PatchFeatureMap {
            data: vec![3.0],
            ..t.clone()
        };
        let single = GridCellPyramid::new(1, 1, 1).unwrap();
        assert_eq!(cell_data_term(&single.cells[0], (0, 0), &t, &e, 2.0), 2.0);
        // Fully out of bounds costs exactly lambda.
        assert_eq!(cell_data_term(&single.cells[0], (5, 0), &t, &e, 2.0), 2.0);
    }

    #[test]
    fn cell_term_hand_sum() {
        let a = pmap(4, 4, 3, 6);
        let b = pmap(4, 4, 3, 7);
        let pyr = GridCellPyramid::new(4, 4, 2).unwrap();
        let cell = &pyr.cells[1]; // top-left 2x2 block: patches 0, 1, 4, 5
        assert_eq!(cell.patches, vec![0, 1, 4, 5]);
        let t = (1, 1);
        let mut sum = 0.0;
        for p in [0usize, 1, 4, 5] {
            let q = p + 5;
            for k in 0..3 {
                sum += (a.data[p * 3 + k] - b.data[q * 3 + k]).abs();
            }
        }
        for lambda in [0.1, 100.0] {
            let got = cell_data_term(cell, t, &a, &b, lambda);
            assert!((got - (sum / 4.0).min(lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_agrees_with_direct_terms() {
        let a = pmap(5, 4, 3, 8);
        let b = pmap(4, 5, 3, 9);
        let domain = TranslationDomain::covering(5, 4, 4, 5, 1).unwrap();
        let lambda = 0.8;
        let table = PatchCostTable::build(&a, &b, domain, lambda).unwrap();
        let pyr = GridCellPyramid::new(5, 4, 2).unwrap();
        for cell in &pyr.cells {
            let costs = table.cell_costs(cell);
            for (i, t) in domain.translations().enumerate() {
                let direct = cell_data_term(cell, t, &a, &b, lambda);
                assert!((costs[i] - direct).abs() < 1e-12);
            }
        }
    }
}
