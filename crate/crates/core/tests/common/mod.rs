#![allow(dead_code)]

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uflmatch::dictionary::{train_dictionary, Dictionary, Method, TrainConfig};
use uflmatch::encode::{EncoderConfig, PatchFeatureMap};
use uflmatch::synth::texture;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_map(cols: usize, rows: usize, dim: usize, seed: u64) -> PatchFeatureMap {
    let mut r = rng(seed);
    PatchFeatureMap {
        cols,
        rows,
        dim,
        pool_width: 1,
        data: (0..cols * rows * dim).map(|_| r.random::<f64>()).collect(),
    }
}

/// Small K-means dictionary on 7x7 patches of synthetic texture.
pub fn texture_dictionary() -> &'static Dictionary {
    static DICT: OnceLock<Dictionary> = OnceLock::new();
    DICT.get_or_init(|| {
        let images: Vec<_> = (0..4).map(|s| texture(96, 96, 1000 + s).unwrap()).collect();
        let cfg = TrainConfig {
            size: 32,
            patches: 20_000,
            patch_width: 7,
            method: Method::KMeans,
            iters: 10,
            seed: 7,
            ..TrainConfig::default()
        };
        train_dictionary(&images, &cfg).unwrap().dictionary
    })
}

pub fn small_encoder() -> EncoderConfig {
    EncoderConfig {
        pixel_patch_width: 7,
        ..EncoderConfig::default()
    }
}
