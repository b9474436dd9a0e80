//! Codebook learning (K-means, K-SVD, random sampling) and persistence.

mod io;
mod kmeans;
mod ksvd;
mod random;

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_dim, Error, Result};
use crate::preprocess::{
    apply_whitening_in_place, extract_random_patches, fit_whitening, normalize_patches_in_place,
    Image, WhiteningTransform, DEFAULT_EPSILON,
};

pub use io::{decode_dictionary, encode_dictionary, load_dictionary, save_dictionary};
pub use kmeans::{kmeans_plus_plus, learn_kmeans, lloyd, LloydOutcome};
pub use ksvd::{learn_ksvd, sparse_objective, SparseCodeMatrix, DEFAULT_KSVD_SPARSITY};
pub use random::learn_random;

/// Tolerance on codeword unit norms.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    KMeans,
    Ksvd,
    Random,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::KMeans => "kmeans",
            Method::Ksvd => "ksvd",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(Method::KMeans),
            "ksvd" => Ok(Method::Ksvd),
            "random" => Ok(Method::Random),
            other => Err(Error::invalid(format!("unknown dictionary method `{other}`"))),
        }
    }
}

/// `M` unit-norm codewords of dimension `n`, together with the whitening
/// transform that was fit on the training patches.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    dim: usize,
    /// Row-major `M x n`.
    codewords: Vec<f64>,
    method: Method,
    whitening: WhiteningTransform,
}

impl Dictionary {
    pub fn new(
        dim: usize,
        codewords: Vec<f64>,
        method: Method,
        whitening: WhiteningTransform,
    ) -> Result<Self> {
        if dim == 0 || codewords.len() % dim != 0 {
            return Err(Error::invalid("codeword buffer is not a multiple of dim"));
        }
        ensure_dim(dim, whitening.dim())?;
        let size = codewords.len() / dim;
        if size < 2 {
            return Err(Error::invalid(format!("dictionary needs >= 2 codewords, got {size}")));
        }
        if codewords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codewords"));
        }
        for (j, d) in codewords.chunks_exact(dim).enumerate() {
            let norm = l2_norm(d);
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::invalid(format!("codeword {j} has norm {norm}, expected 1")));
            }
        }
        Ok(Self {
            dim,
            codewords,
            method,
            whitening,
        })
    }

    /// Number of codewords `M`.
    pub fn size(&self) -> usize {
        self.codewords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codeword(&self, j: usize) -> &[f64] {
        &self.codewords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn codewords(&self) -> &[f64] {
        &self.codewords
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn whitening(&self) -> &WhiteningTransform {
        &self.whitening
    }
}

/// A learned dictionary and the training objective recorded per iteration.
#[derive(Clone, Debug)]
pub struct Trained {
    pub dictionary: Dictionary,
    pub objective: Vec<f64>,
}

/// End-to-end dictionary training settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    /// Number of codewords `M`.
    pub size: usize,
    /// Number of training patches `N`.
    pub patches: usize,
    pub patch_width: usize,
    pub method: Method,
    /// K-means / K-SVD iterations; ignored by random sampling.
    pub iters: usize,
    /// K-SVD coding sparsity.
    pub sparsity: usize,
    /// Whitening regularizer.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            size: 100,
            patches: 1_000_000,
            patch_width: crate::encode::DEFAULT_PIXEL_PATCH,
            method: Method::KMeans,
            iters: 10,
            sparsity: DEFAULT_KSVD_SPARSITY,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
        }
    }
}

/// Samples patches from `images`, contrast-normalizes and whitens them, then
/// learns a dictionary with the configured method.
pub fn train_dictionary(images: &[Image], cfg: &TrainConfig) -> Result<Trained> {
    if cfg.patches < cfg.size {
        return Err(Error::invalid(format!(
            "{} training patches cannot support {} codewords",
            cfg.patches, cfg.size
        )));
    }
    let mut batch = extract_random_patches(images, cfg.patches, cfg.patch_width, cfg.seed)?;
    normalize_patches_in_place(&mut batch);
    let whitening = fit_whitening(&batch, cfg.epsilon)?;
    apply_whitening_in_place(&whitening, &mut batch)?;
    // Offset the seed so patch sampling and initialization draw independent streams.
    let seed = cfg.seed.wrapping_add(1);
    match cfg.method {
        Method::KMeans => learn_kmeans(&batch, &whitening, cfg.size, cfg.iters, seed),
        Method::Ksvd => {
            let k = cfg.sparsity.min(cfg.size);
            learn_ksvd(&batch, &whitening, cfg.size, k, cfg.iters, seed)
        }
        Method::Random => learn_random(&batch, &whitening, cfg.size, seed),
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales rows to unit norm. Rows with norm below `1e-12` are left alone and
/// their indices returned.
pub(crate) fn normalize_rows(rows: &mut [f64], dim: usize) -> Vec<usize> {
    let mut zero = Vec::new();
    for (j, row) in rows.chunks_exact_mut(dim).enumerate() {
        let norm = l2_norm(row);
        if norm < 1e-12 {
            zero.push(j);
        } else {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    zero
}
