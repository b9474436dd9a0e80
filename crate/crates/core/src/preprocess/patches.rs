use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::preprocess::Image;

/// Variance regularizer for contrast normalization, on the 0-255 intensity scale.
pub const CONTRAST_REGULARIZER: f64 = 10.0;

/// Row-major `count x dim` matrix of square patches.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchBatch {
    patch_width: usize,
    count: usize,
    data: Vec<f64>,
}

impl PatchBatch {
    /// Wraps raw rows. `dim` must equal `patch_width^2`.
    pub fn new(patch_width: usize, data: Vec<f64>) -> Result<Self> {
        let dim = patch_width * patch_width;
        if dim == 0 || data.is_empty() {
            return Err(Error::invalid("patch batch must be non-empty"));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.len() % dim,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("patch batch"));
        }
        Ok(Self {
            patch_width,
            count: data.len() / dim,
            data,
        })
    }

    /// Builds a batch of arbitrary row dimension (not necessarily square patches).
    /// `patch_width` is then reported as 0.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::invalid("rows must be non-empty multiples of dim"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("patch batch"));
        }
        let count = data.len() / dim;
        Ok(Self {
            patch_width: if is_square(dim) { isqrt(dim) } else { 0 },
            count,
            data,
        })
    }

    pub fn patch_width(&self) -> usize {
        self.patch_width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.data.len() / self.count
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim())
    }
}

fn isqrt(v: usize) -> usize {
    (v as f64).sqrt().round() as usize
}

fn is_square(v: usize) -> bool {
    let r = isqrt(v);
    r * r == v
}

/// Samples `count` fully-contained patches uniformly over all (image, position)
/// pairs of `images`.
pub fn extract_random_patches(
    images: &[Image],
    count: usize,
    patch_width: usize,
    seed: u64,
) -> Result<PatchBatch> {
    if count == 0 {
        return Err(Error::invalid("patch count must be at least 1"));
    }
    if images.is_empty() {
        return Err(Error::invalid("no images to sample patches from"));
    }
    if patch_width == 0 || patch_width % 2 == 0 {
        return Err(Error::invalid(format!(
            "patch width must be odd, got {patch_width}"
        )));
    }
    let mut cumulative = Vec::with_capacity(images.len());
    let mut total = 0usize;
    for img in images {
        if img.width() < patch_width || img.height() < patch_width {
            return Err(Error::invalid(format!(
                "image {}x{} is smaller than the {patch_width}px patch",
                img.width(),
                img.height()
            )));
        }
        total += (img.width() - patch_width + 1) * (img.height() - patch_width + 1);
        cumulative.push(total);
    }

    let dim = patch_width * patch_width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(count * dim);
    for _ in 0..count {
        let r = rng.random_range(0..total);
        let which = cumulative.partition_point(|&c| c <= r);
        let offset = r - if which == 0 { 0 } else { cumulative[which - 1] };
        let img = &images[which];
        let cols = img.width() - patch_width + 1;
        let (x0, y0) = (offset % cols, offset / cols);
        for y in y0..y0 + patch_width {
            let start = y * img.width() + x0;
            data.extend_from_slice(&img.data()[start..start + patch_width]);
        }
    }
    PatchBatch::new(patch_width, data)
}

/// Per-patch brightness and contrast normalization in place.
///
/// Subtracts the patch mean and divides by `sqrt(var + 10/255^2)`, which is the
/// `+10` regularizer expressed on the `[0, 1]` scale. Constant patches become zero.
pub fn normalize_patch(patch: &mut [f64]) {
    let n = patch.len() as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sum = 0.0;
    for &v in patch.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
    }
    if lo == hi {
        patch.fill(0.0);
        return;
    }
    let mean = sum / n;
    let var = patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = 1.0 / (var + CONTRAST_REGULARIZER / (255.0 * 255.0)).sqrt();
    for v in patch.iter_mut() {
        *v = (*v - mean) * scale;
    }
}

pub fn normalize_patches(batch: &PatchBatch) -> PatchBatch {
    let mut out = batch.clone();
    normalize_patches_in_place(&mut out);
    out
}

pub fn normalize_patches_in_place(batch: &mut PatchBatch) {
    let dim = batch.dim();
    for patch in batch.data_mut().chunks_exact_mut(dim) {
        normalize_patch(patch);
    }
}
