//! Pixel-layer encoding, patch-layer max-pooling and the grid-cell pyramid.

mod coding;
mod features;
mod pyramid;

use crate::error::{Error, Result};

pub use coding::{encode_kt, encode_omp, encode_sa, omp, OmpSolution};
pub use features::{encode_image, max_pool, FeatureGrid, PatchFeatureMap, PixelFeatureMap};
pub use pyramid::{build_grid_pyramid, Cell, EdgeKind, GridCellPyramid, PyramidEdge};

pub const DEFAULT_PIXEL_PATCH: usize = 11;
pub const DEFAULT_POOL: usize = 7;
pub const DEFAULT_SA_BETA: f64 = 1.0;
pub const DEFAULT_OMP_SPARSITY: usize = 10;

/// How a whitened patch is mapped to an `M`-dimensional code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Encoding {
    /// K-means triangle: `max(0, mean(z) - z_j)` over codeword distances `z`.
    Triangle,
    /// Softmax of `-beta * ||x - d_j||^2`.
    SoftAssignment { beta: f64 },
    /// Orthogonal matching pursuit with at most `sparsity` atoms.
    Omp { sparsity: usize },
}

impl Encoding {
    pub fn name(&self) -> &'static str {
        match self {
            Encoding::Triangle => "kt",
            Encoding::SoftAssignment { .. } => "sa",
            Encoding::Omp { .. } => "omp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    pub encoding: Encoding,
    /// Side of the square region encoded around each pixel (odd).
    pub pixel_patch_width: usize,
    /// Side of the non-overlapping max-pooling tile.
    pub pool_width: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            encoding: Encoding::Triangle,
            pixel_patch_width: DEFAULT_PIXEL_PATCH,
            pool_width: DEFAULT_POOL,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self, dictionary_size: usize) -> Result<()> {
        if self.pixel_patch_width == 0 || self.pixel_patch_width % 2 == 0 {
            return Err(Error::invalid(format!(
                "pixel patch width must be odd, got {}",
                self.pixel_patch_width
            )));
        }
        if self.pool_width == 0 {
            return Err(Error::invalid("pool width must be positive"));
        }
        match self.encoding {
            Encoding::SoftAssignment { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::invalid(format!("beta must be > 0, got {beta}")))
            }
            Encoding::Omp { sparsity } if sparsity == 0 || sparsity > dictionary_size => Err(
                Error::invalid(format!("OMP sparsity {sparsity} must be in 1..={dictionary_size}")),
            ),
            _ => Ok(()),
        }
    }
}
