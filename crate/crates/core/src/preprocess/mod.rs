//! Input stage shared by dictionary training and encoding: image loading,
//! patch sampling, contrast normalization and ZCA whitening.

mod image;
mod patches;
mod whitening;

pub use self::image::{decode_image, load_image, Image};
pub use patches::{
    extract_random_patches, normalize_patch, normalize_patches, normalize_patches_in_place,
    PatchBatch, CONTRAST_REGULARIZER,
};
pub use whitening::{
    apply_whitening, apply_whitening_in_place, batch_covariance, fit_whitening,
    WhiteningTransform, DEFAULT_EPSILON,
};
