use std::time::Instant;

use rayon::prelude::*;

use super::bp::{min_sum_bp, BpOutcome, Mrf};
use super::cost::{estimate_lambda, l1_distance, target, PatchCostTable, LAMBDA_FLOOR};
use super::domain::{argmin_label, TranslationDomain};
use super::flow::{FlowField, Granularity};
use super::MatchParams;
use crate::dictionary::Dictionary;
use crate::encode::{
    build_grid_pyramid, encode_image, max_pool, EncoderConfig, FeatureGrid, GridCellPyramid,
    PatchFeatureMap, PixelFeatureMap,
};
use crate::error::{Error, Result};
use crate::preprocess::Image;

/// Grid-cell labeling plus the BP bookkeeping behind it.
#[derive(Clone, Debug)]
pub struct GridSolution {
    /// One vector per pyramid node (`width` = node count, `height` = 1).
    pub flow: FlowField,
    pub outcome: BpOutcome,
}

/// Minimizes the grid-cell energy over the pyramid with min-sum BP.
pub fn solve_grid_layer(
    pyramid: &GridCellPyramid,
    table: &PatchCostTable,
    params: &MatchParams,
) -> Result<GridSolution> {
    params.validate()?;
    if table.patch_count() != pyramid.cols * pyramid.rows {
        return Err(Error::DimensionMismatch {
            expected: pyramid.cols * pyramid.rows,
            actual: table.patch_count(),
        });
    }
    let unary: Vec<Vec<f64>> = pyramid.cells.par_iter().map(|c| table.cell_costs(c)).collect();
    let edges = pyramid.edge_pairs();
    let mrf = Mrf {
        domain: &table.domain,
        unary: &unary,
        edges: &edges,
    };
    let outcome = min_sum_bp(&mrf, params.alpha, params.gamma, params.bp_iters)?;
    let vectors = outcome.labels.iter().map(|&l| table.domain.translation(l)).collect();
    let mut flow = FlowField::new(Granularity::Cell, pyramid.node_count(), 1, vectors)?;
    flow.costs = unary.iter().zip(&outcome.labels).map(|(u, &l)| u[l]).collect();
    Ok(GridSolution { flow, outcome })
}

/// Per patch: `argmin_t min(d(t), lambda) + alpha * min(|t - t_p|_1, gamma)`
/// where `t_p` is the translation of the finest cell containing the patch.
pub fn solve_patch_layer(
    pyramid: &GridCellPyramid,
    cell_flow: &FlowField,
    table: &PatchCostTable,
    params: &MatchParams,
) -> Result<FlowField> {
    params.validate()?;
    cell_flow.require(Granularity::Cell)?;
    if cell_flow.vectors.len() != pyramid.node_count() {
        return Err(Error::invalid("cell flow does not cover the pyramid"));
    }
    let n = pyramid.cols * pyramid.rows;
    if table.patch_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: table.patch_count(),
        });
    }
    let domain = table.domain;
    let translations: Vec<(i32, i32)> = domain.translations().collect();
    let (alpha, gamma) = (params.alpha, params.gamma);
    let picked: Vec<((i32, i32), f64)> = (0..n)
        .into_par_iter()
        .map(|p| {
            let parent = cell_flow.vectors[pyramid.leaf_of(p)];
            let data: Vec<f64> = table.patch_costs(p).collect();
            let total: Vec<f64> = data
                .iter()
                .zip(&translations)
                .map(|(&d, &t)| d + alpha * super::cost::smoothness_term(t, parent, gamma))
                .collect();
            let best = argmin_label(&total, &domain);
            (translations[best], data[best])
        })
        .collect();
    let mut flow = FlowField::new(
        Granularity::Patch,
        pyramid.cols,
        pyramid.rows,
        picked.iter().map(|p| p.0).collect(),
    )?;
    flow.costs = picked.iter().map(|p| p.1).collect();
    Ok(flow)
}

/// Per pixel: search `±radius` pixels around the parent patch translation
/// (scaled to pixels) for `min(d, lambda_pix) + alpha * min(|t - t_p|_1,
/// gamma * pool_width)`. Pixels beyond the truncated patch grid use the
/// nearest patch as parent. Out-of-bounds candidates cost `lambda_pix`.
pub fn solve_pixel_layer(
    patch_flow: &FlowField,
    test: &PixelFeatureMap,
    exemplar: &PixelFeatureMap,
    pool_width: usize,
    lambda_pix: f64,
    params: &MatchParams,
    radius: usize,
) -> Result<FlowField> {
    params.validate()?;
    patch_flow.require(Granularity::Patch)?;
    if test.dim != exemplar.dim {
        return Err(Error::DimensionMismatch {
            expected: test.dim,
            actual: exemplar.dim,
        });
    }
    if pool_width == 0 {
        return Err(Error::invalid("pool width must be positive"));
    }
    if (test.width / pool_width, test.height / pool_width) != (patch_flow.width, patch_flow.height)
        || patch_flow.width == 0
        || patch_flow.height == 0
    {
        return Err(Error::invalid(format!(
            "{}x{} patch flow does not fit a {}x{} image pooled by {pool_width}",
            patch_flow.width, patch_flow.height, test.width, test.height
        )));
    }
    if !(lambda_pix > 0.0 && lambda_pix.is_finite()) {
        return Err(Error::invalid(format!("pixel lambda must be positive, got {lambda_pix}")));
    }
    let r = i32::try_from(radius).map_err(|_| Error::invalid("radius too large"))?;
    let (alpha, gamma) = (params.alpha, params.gamma * pool_width as f64);
    let (w, h) = (test.width, test.height);
    let pw = pool_width as i32;

    let mut vectors = vec![(0, 0); w * h];
    let mut costs = vec![0.0; w * h];
    vectors
        .par_chunks_mut(w)
        .zip(costs.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (vrow, crow))| {
            let py = (y / pool_width).min(patch_flow.height - 1);
            let mut total = Vec::with_capacity((2 * radius + 1).pow(2));
            let mut data = Vec::with_capacity(total.capacity());
            for x in 0..w {
                let px = (x / pool_width).min(patch_flow.width - 1);
                let (pu, pv) = patch_flow.at(px, py);
                let parent = (pu * pw, pv * pw);
                let window = TranslationDomain::new(
                    (parent.0 - r, parent.0 + r),
                    (parent.1 - r, parent.1 + r),
                    1,
                )
                .expect("window is well formed");
                let f = test.feature(x, y);
                total.clear();
                data.clear();
                for t in window.translations() {
                    let d = match target(x as i32 + t.0, y as i32 + t.1, exemplar.width, exemplar.height) {
                        Some((ex, ey)) => l1_distance(f, exemplar.feature(ex, ey)).min(lambda_pix),
                        None => lambda_pix,
                    };
                    data.push(d);
                    total.push(d + alpha * super::cost::smoothness_term(t, parent, gamma));
                }
                let best = argmin_label(&total, &window);
                vrow[x] = window.translation(best);
                crow[x] = data[best];
            }
        });
    let mut flow = FlowField::new(Granularity::Pixel, w, h, vectors)?;
    flow.costs = costs;
    Ok(flow)
}

/// Wall-clock milliseconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub encode_ms: f64,
    /// Pooling, pyramid, lambda estimation and the cost table.
    pub pool_ms: f64,
    pub grid_ms: f64,
    pub patch_ms: f64,
    pub pixel_ms: f64,
}

impl StageTimings {
    /// Everything up to and including the patch layer.
    pub fn patch_level_ms(&self) -> f64 {
        self.encode_ms + self.pool_ms + self.grid_ms + self.patch_ms
    }
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    pub pyramid: GridCellPyramid,
    pub domain: TranslationDomain,
    pub lambda: f64,
    pub grid: GridSolution,
    pub patch_flow: FlowField,
    pub pixel_flow: Option<FlowField>,
    pub lambda_pixel: Option<f64>,
    pub timings: StageTimings,
}

impl MatchResult {
    /// Grid-cell energy of the returned labeling.
    pub fn energy(&self) -> f64 {
        self.grid.outcome.energy
    }
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs encode, pool, pyramid, grid, patch and optionally pixel matching.
pub fn match_images(
    test: &Image,
    exemplar: &Image,
    dict: &Dictionary,
    enc: &EncoderConfig,
    params: &MatchParams,
    pixel_refine: bool,
) -> Result<MatchResult> {
    params.validate()?;
    let mut timings = StageTimings::default();

    let start = Instant::now();
    let (pix_test, pix_ex) = rayon::join(
        || encode_image(dict, test, enc),
        || encode_image(dict, exemplar, enc),
    );
    let (pix_test, pix_ex) = (pix_test?, pix_ex?);
    timings.encode_ms = elapsed_ms(start);

    let start = Instant::now();
    let pf_test = max_pool(&pix_test, enc.pool_width)?;
    let pf_ex = max_pool(&pix_ex, enc.pool_width)?;
    let pyramid = build_grid_pyramid(&pf_test, params.levels)?;
    let table = build_cost_table(&pf_test, &pf_ex, params)?;
    timings.pool_ms = elapsed_ms(start);

    let start = Instant::now();
    let grid = solve_grid_layer(&pyramid, &table, params)?;
    timings.grid_ms = elapsed_ms(start);

    let start = Instant::now();
    let patch_flow = solve_patch_layer(&pyramid, &grid.flow, &table, params)?;
    timings.patch_ms = elapsed_ms(start);

    let (pixel_flow, lambda_pixel) = if pixel_refine {
        let start = Instant::now();
        let lp = floored(estimate_lambda(&pix_test, &pix_ex, params.lambda_sample, params.seed)?);
        let radius = params.pixel_radius.unwrap_or(enc.pool_width);
        let flow = solve_pixel_layer(&patch_flow, &pix_test, &pix_ex, enc.pool_width, lp, params, radius)?;
        timings.pixel_ms = elapsed_ms(start);
        (Some(flow), Some(lp))
    } else {
        (None, None)
    };

    Ok(MatchResult {
        pyramid,
        domain: table.domain,
        lambda: table.lambda,
        grid,
        patch_flow,
        pixel_flow,
        lambda_pixel,
        timings,
    })
}

fn floored(lambda: f64) -> f64 {
    lambda.max(LAMBDA_FLOOR)
}

/// Estimates lambda (unless fixed in `params`), builds the covering domain
/// and tabulates patch distances for it.
pub fn build_cost_table(
    test: &PatchFeatureMap,
    exemplar: &PatchFeatureMap,
    params: &MatchParams,
) -> Result<PatchCostTable> {
    let lambda = match params.lambda {
        Some(l) => l,
        None => floored(estimate_lambda(test, exemplar, params.lambda_sample, params.seed)?),
    };
    let domain = TranslationDomain::covering(
        test.cols,
        test.rows,
        exemplar.cols,
        exemplar.rows,
        params.candidate_stride,
    )?;
    PatchCostTable::build(test, exemplar, domain, lambda)
}
