//! Dense correspondence between images of different scenes.
//!
//! Patch features are learned without supervision (K-means, K-SVD or random
//! dictionaries with KT / soft-assignment / OMP-k encoders), max-pooled into a
//! patch layer and grouped into a grid-cell spatial pyramid. Matching minimizes
//! a truncated-L1 MRF energy over the pyramid with min-sum loopy belief
//! propagation, then refines per patch and optionally per pixel.
//!
//! Pipeline entry point: [`matching::match_images`].

pub mod dictionary;
pub mod encode;
pub mod error;
pub mod eval;
pub mod io_util;
pub mod matching;
pub mod oracle;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
