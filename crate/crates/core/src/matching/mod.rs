//! Hierarchical matching: grid-cell MRF solved by loopy BP, then per-patch
//! and per-pixel refinement guided by the parent translation.

mod bp;
mod cost;
mod domain;
mod dt;
mod flow;
mod layers;

use crate::error::{Error, Result};

pub use bp::{labeling_energy, min_sum_bp, BpOutcome, LabelingSource, Mrf};
pub use cost::{
    cell_data_term, estimate_lambda, smoothness_term, PatchCostTable, DEFAULT_LAMBDA_SAMPLE,
    LAMBDA_FLOOR,
};
pub use domain::{argmin_label, TranslationDomain};
pub use dt::dt_message;
pub use flow::{decode_flow, encode_flow, load_flow, save_flow, FlowField, Granularity};
pub use layers::{
    build_cost_table, match_images, solve_grid_layer, solve_patch_layer, solve_pixel_layer, GridSolution,
    MatchResult, StageTimings,
};

pub const DEFAULT_ALPHA: f64 = 0.02;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_BP_ITERS: usize = 20;
pub const DEFAULT_LEVELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchParams {
    /// Smoothness weight.
    pub alpha: f64,
    /// Smoothness truncation, in translation-grid steps (may be infinite).
    pub gamma: f64,
    /// Data truncation at the patch and cell layers; estimated when `None`.
    pub lambda: Option<f64>,
    pub bp_iters: usize,
    pub levels: usize,
    /// Step of the candidate translation grid, in patches.
    pub candidate_stride: i32,
    /// Pairs sampled when estimating a truncation threshold.
    pub lambda_sample: usize,
    pub seed: u64,
    /// Pixel-layer search radius; defaults to the pool width.
    pub pixel_radius: Option<usize>,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            lambda: None,
            bp_iters: DEFAULT_BP_ITERS,
            levels: DEFAULT_LEVELS,
            candidate_stride: 1,
            lambda_sample: DEFAULT_LAMBDA_SAMPLE,
            seed: 0,
            pixel_radius: None,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda must be > 0, got {l}")));
            }
        }
        if self.bp_iters == 0 {
            return Err(Error::invalid("bp_iters must be >= 1"));
        }
        if self.levels == 0 {
            return Err(Error::invalid("levels must be >= 1"));
        }
        if self.candidate_stride < 1 {
            return Err(Error::invalid("candidate stride must be >= 1"));
        }
        if self.lambda_sample == 0 {
            return Err(Error::invalid("lambda sample must be positive"));
        }
        Ok(())
    }
}
