use rayon::prelude::*;

use super::coding::{kt_into, omp_into, sa_into};
use super::{EncoderConfig, Encoding};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::preprocess::{normalize_patch, Image};

/// A 2-D grid of equal-length feature vectors.
pub trait FeatureGrid {
    fn grid_width(&self) -> usize;
    fn grid_height(&self) -> usize;
    fn dim(&self) -> usize;
    fn raw(&self) -> &[f64];

    #[inline]
    fn feature(&self, x: usize, y: usize) -> &[f64] {
        let d = self.dim();
        let i = (y * self.grid_width() + x) * d;
        &self.raw()[i..i + d]
    }

    fn len(&self) -> usize {
        self.grid_width() * self.grid_height()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-pixel codes `s_i`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelFeatureMap {
    pub width: usize,
    pub height: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

/// Max-pooled per-patch features `f` on a `cols x rows` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchFeatureMap {
    pub cols: usize,
    pub rows: usize,
    pub dim: usize,
    pub pool_width: usize,
    pub data: Vec<f64>,
}

impl FeatureGrid for PixelFeatureMap {
    fn grid_width(&self) -> usize {
        self.width
    }
    fn grid_height(&self) -> usize {
        self.height
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn raw(&self) -> &[f64] {
        &self.data
    }
}

impl FeatureGrid for PatchFeatureMap {
    fn grid_width(&self) -> usize {
        self.cols
    }
    fn grid_height(&self) -> usize {
        self.rows
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn raw(&self) -> &[f64] {
        &self.data
    }
}

/// Encodes the `w x w` neighbourhood of every pixel (replicate padding at the
/// border): contrast-normalize, whiten with the dictionary's transform, then
/// apply the configured encoder.
pub fn encode_image(dict: &Dictionary, img: &Image, cfg: &EncoderConfig) -> Result<PixelFeatureMap> {
    cfg.validate(dict.size())?;
    let pw = cfg.pixel_patch_width;
    if dict.dim() != pw * pw {
        return Err(Error::invalid(format!(
            "dictionary dimension {} does not match a {pw}x{pw} patch",
            dict.dim()
        )));
    }
    let (width, height) = (img.width(), img.height());
    let m = dict.size();
    let n = dict.dim();
    let half = (pw / 2) as isize;
    let whitening = dict.whitening();
    let codewords = dict.codewords();

    let mut data = vec![0.0; width * height * m];
    data.par_chunks_mut(width * m)
        .enumerate()
        .for_each(|(y, row_out)| {
            let mut patch = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            let mut white = vec![0.0; n];
            for (x, out) in row_out.chunks_exact_mut(m).enumerate() {
                let (cx, cy) = (x as isize, y as isize);
                let mut k = 0;
                for dy in -half..=half {
                    for dx in -half..=half {
                        patch[k] = img.get_clamped(cx + dx, cy + dy);
                        k += 1;
                    }
                }
                normalize_patch(&mut patch);
                whitening.apply_into(&patch, &mut scratch, &mut white);
                match cfg.encoding {
                    Encoding::Triangle => kt_into(codewords, n, &white, out),
                    Encoding::SoftAssignment { beta } => sa_into(codewords, n, &white, beta, out),
                    Encoding::Omp { sparsity } => omp_into(codewords, n, &white, sparsity, out),
                }
            }
        });
    Ok(PixelFeatureMap {
        width,
        height,
        dim: m,
        data,
    })
}

/// Component-wise max over non-overlapping `pool_width` tiles anchored at the
/// origin. Partial tiles at the right and bottom edges are dropped.
pub fn max_pool(pf: &PixelFeatureMap, pool_width: usize) -> Result<PatchFeatureMap> {
    if pool_width == 0 {
        return Err(Error::invalid("pool width must be positive"));
    }
    if pf.width < pool_width || pf.height < pool_width {
        return Err(Error::invalid(format!(
            "{}x{} feature map is smaller than the {pool_width}px pool",
            pf.width, pf.height
        )));
    }
    let cols = pf.width / pool_width;
    let rows = pf.height / pool_width;
    let dim = pf.dim;
    let mut data = vec![f64::NEG_INFINITY; cols * rows * dim];
    for (j, out_row) in data.chunks_exact_mut(cols * dim).enumerate() {
        for y in j * pool_width..(j + 1) * pool_width {
            for (i, out) in out_row.chunks_exact_mut(dim).enumerate() {
                for x in i * pool_width..(i + 1) * pool_width {
                    for (o, v) in out.iter_mut().zip(pf.feature(x, y)) {
                        *o = o.max(*v);
                    }
                }
            }
        }
    }
    Ok(PatchFeatureMap {
        cols,
        rows,
        dim,
        pool_width,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{learn_kmeans, Method};
    use crate::encode::encode_kt;
    use crate::preprocess::{
        apply_whitening, extract_random_patches, fit_whitening, normalize_patches,
        WhiteningTransform,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random::<f64>())
    }

    fn small_dict(pw: usize) -> Dictionary {
        let imgs = vec![noise(40, 40, 1), noise(40, 40, 2)];
        let batch = normalize_patches(&extract_random_patches(&imgs, 600, pw, 3).unwrap());
        let w = fit_whitening(&batch, 0.1).unwrap();
        let white = apply_whitening(&w, &batch).unwrap();
        learn_kmeans(&white, &w, 16, 10, 4).unwrap().dictionary
    }

    fn map(width: usize, height: usize, dim: usize, data: Vec<f64>) -> PixelFeatureMap {
        PixelFeatureMap {
            width,
            height,
            dim,
            data,
        }
    }

    #[test]
    fn constant_image_gives_identical_codes() {
        let d = small_dict(5);
        let cfg = EncoderConfig {
            pixel_patch_width: 5,
            ..Default::default()
        };
        let img = Image::from_fn(9, 7, |_, _| 0.4);
        let f = encode_image(&d, &img, &cfg).unwrap();
        let zero = vec![0.0; 25];
        let white = d.whitening().apply(&zero).unwrap();
        let want = encode_kt(&d, &white).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(f.feature(x, y), want.as_slice());
            }
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let d = small_dict(5);
        let cfg = EncoderConfig {
            pixel_patch_width: 5,
            ..Default::default()
        };
        let img = noise(20, 16, 9);
        assert_eq!(
            encode_image(&d, &img, &cfg).unwrap(),
            encode_image(&d, &img.clone(), &cfg).unwrap()
        );
    }

    #[test]
    fn interior_codes_match_per_pixel_oracle() {
        let d = small_dict(5);
        let cfg = EncoderConfig {
            pixel_patch_width: 5,
            ..Default::default()
        };
        let img = noise(32, 32, 5);
        let f = encode_image(&d, &img, &cfg).unwrap();
        for (x, y) in [(2, 2), (10, 17), (29, 29), (15, 3)] {
            let mut patch: Vec<f64> = (0..5)
                .flat_map(|dy| (0..5).map(move |dx| (dx, dy)))
                .map(|(dx, dy)| img.get(x + dx - 2, y + dy - 2))
                .collect();
            normalize_patch(&mut patch);
            let want = encode_kt(&d, &d.whitening().apply(&patch).unwrap()).unwrap();
            assert_eq!(f.feature(x, y), want.as_slice());
        }
    }

    #[test]
    fn mismatched_dictionary_is_rejected() {
        let d = small_dict(5);
        let img = noise(20, 20, 1);
        assert!(encode_image(&d, &img, &EncoderConfig::default()).is_err());
        let identity = Dictionary::new(
            4,
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            Method::Random,
            WhiteningTransform::identity(4),
        )
        .unwrap();
        let even = EncoderConfig {
            pixel_patch_width: 2,
            ..Default::default()
        };
        assert!(encode_image(&identity, &img, &even).is_err());
    }

    #[test]
    fn pool_of_one_is_identity() {
        let pf = map(3, 2, 2, (0..12).map(|v| v as f64).collect());
        let pooled = max_pool(&pf, 1).unwrap();
        assert_eq!(pooled.data, pf.data);
        assert_eq!((pooled.cols, pooled.rows), (3, 2));
    }

    #[test]
    fn pool_hand_example() {
        let pf = map(2, 2, 2, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.5, 1.0]);
        let pooled = max_pool(&pf, 2).unwrap();
        assert_eq!(pooled.data, vec![1.0, 2.0]);
    }

    #[test]
    fn pool_drops_partial_tiles_and_guards() {
        let pf = map(5, 4, 1, (0..20).map(|v| v as f64).collect());
        let pooled = max_pool(&pf, 2).unwrap();
        assert_eq!((pooled.cols, pooled.rows), (2, 2));
        assert_eq!(pooled.data, vec![6.0, 8.0, 16.0, 18.0]);
        assert!(max_pool(&pf, 0).is_err());
        assert!(max_pool(&pf, 5).is_err());
    }

    proptest! {
        #[test]
        fn pooled_values_are_attained_in_their_tile(
            w in 1usize..12, h in 1usize..12, p in 1usize..4, seed in any::<u64>()
        ) {
            prop_assume!(w >= p && h >= p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pf = map(w, h, 3, (0..w * h * 3).map(|_| rng.random::<f64>()).collect());
            let pooled = max_pool(&pf, p).unwrap();
            for r in 0..pooled.rows {
                for c in 0..pooled.cols {
                    for k in 0..3 {
                        let v = pooled.feature(c, r)[k];
                        let mut hit = false;
                        for y in r * p..(r + 1) * p {
                            for x in c * p..(c + 1) * p {
                                let s = pf.feature(x, y)[k];
                                prop_assert!(s <= v);
                                hit |= s == v;
                            }
                        }
                        prop_assert!(hit);
                    }
                }
            }
        }

        #[test]
        fn pooling_is_monotone(seed in any::<u64>(), bump in 0.0f64..5.0, at in 0usize..36) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pf = map(6, 6, 2, (0..72).map(|_| rng.random::<f64>()).collect());
            let mut bumped = pf.clone();
            bumped.data[at * 2] += bump;
            let a = max_pool(&pf, 3).unwrap();
            let b = max_pool(&bumped, 3).unwrap();
            for (x, y) in a.data.iter().zip(&b.data) {
                prop_assert!(y >= x);
            }
        }
    }
}
