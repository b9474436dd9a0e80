mod common;

use common::{random_map, rng};
use rand::Rng;
use uflmatch::encode::{max_pool, FeatureGrid, GridCellPyramid, PatchFeatureMap, PixelFeatureMap};
use uflmatch::matching::{
    build_cost_table, labeling_energy, min_sum_bp, solve_grid_layer, solve_patch_layer,
    solve_pixel_layer, FlowField, Granularity, MatchParams, Mrf, PatchCostTable, TranslationDomain,
};
use uflmatch::oracle::{brute_force_labeling, mrf_energy};

fn params(lambda: f64) -> MatchParams {
    MatchParams {
        lambda: Some(lambda),
        ..MatchParams::default()
    }
}

/// Exemplar grid that contains `test` translated by `d`, padded with noise.
fn translated(test: &PatchFeatureMap, d: (usize, usize), pad: (usize, usize), seed: u64) -> PatchFeatureMap {
    let (cols, rows) = (test.cols + pad.0, test.rows + pad.1);
    let mut ex = random_map(cols, rows, test.dim, seed);
    for r in 0..test.rows {
        for c in 0..test.cols {
            let at = ((r + d.1) * cols + c + d.0) * test.dim;
            ex.data[at..at + test.dim].copy_from_slice(test.feature(c, r));
        }
    }
    ex
}

#[test]
fn identity_pair_gives_zero_flow_at_grid_and_patch_layers() {
    let m = random_map(8, 6, 5, 1);
    let p = MatchParams::default();
    let table = build_cost_table(&m, &m, &p).unwrap();
    let pyr = GridCellPyramid::new(8, 6, 3).unwrap();
    let grid = solve_grid_layer(&pyr, &table, &p).unwrap();
    assert!(grid.flow.is_zero());
    assert_eq!(grid.outcome.energy, 0.0);
    let patch = solve_patch_layer(&pyr, &grid.flow, &table, &p).unwrap();
    assert!(patch.is_zero());
    assert_eq!((patch.width, patch.height), (8, 6));
}

#[test]
fn translated_feature_maps_recover_the_shift() {
    for (seed, d) in [(3u64, (3usize, 2usize)), (4, (0, 4)), (5, (5, 0))] {
        let test = random_map(8, 8, 6, seed);
        let ex = translated(&test, d, (5, 4), seed + 100);
        let p = MatchParams::default();
        let table = build_cost_table(&test, &ex, &p).unwrap();
        let pyr = GridCellPyramid::new(8, 8, 3).unwrap();
        let grid = solve_grid_layer(&pyr, &table, &p).unwrap();
        let want = (d.0 as i32, d.1 as i32);
        assert!(grid.flow.vectors.iter().all(|&t| t == want));
        let patch = solve_patch_layer(&pyr, &grid.flow, &table, &p).unwrap();
        assert!(patch.vectors.iter().all(|&t| t == want));

        // The constant shift beats sampled alternatives.
        let unary: Vec<Vec<f64>> = pyr.cells.iter().map(|c| table.cell_costs(c)).collect();
        let edges = pyr.edge_pairs();
        let mrf = Mrf { domain: &table.domain, unary: &unary, edges: &edges };
        let truth = vec![table.domain.index_of(want.0, want.1).unwrap(); pyr.node_count()];
        let e_truth = labeling_energy(&mrf, &truth, p.alpha, p.gamma);
        let mut r = rng(seed);
        for _ in 0..200 {
            let other: Vec<usize> = (0..pyr.node_count()).map(|_| r.random_range(0..table.domain.len())).collect();
            if other != truth {
                assert!(e_truth < labeling_energy(&mrf, &other, p.alpha, p.gamma));
            }
        }
    }
}

#[test]
fn two_cell_tree_matches_exhaustive_search() {
    let domain = TranslationDomain::new((-1, 1), (0, 0), 1).unwrap();
    let labels: Vec<(i32, i32)> = domain.translations().collect();
    let mut r = rng(8);
    for _ in 0..100 {
        let unary: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| r.random::<f64>()).collect()).collect();
        let edges = [(0, 1)];
        let alpha = r.random_range(0.0..1.0);
        let out = min_sum_bp(&Mrf { domain: &domain, unary: &unary, edges: &edges }, alpha, 1.5, 20).unwrap();
        let (_, best) = brute_force_labeling(&unary, &edges, &labels, alpha, 1.5).unwrap();
        assert_eq!(mrf_energy(&unary, &edges, &labels, &out.labels, alpha, 1.5), best);
    }
}

/// Per-patch scan written against the cost definition.
fn scan_patch_layer(
    test: &PatchFeatureMap,
    ex: &PatchFeatureMap,
    parents: &[(i32, i32)],
    domain: &TranslationDomain,
    p: &MatchParams,
) -> Vec<(i32, i32)> {
    let lambda = p.lambda.unwrap();
    (0..test.cols * test.rows)
        .map(|i| {
            let (c, r) = ((i % test.cols) as i32, (i / test.cols) as i32);
            let mut best = ((0, 0), f64::INFINITY, i32::MAX);
            for v in (domain.v_min..=domain.v_max).step_by(domain.stride as usize) {
                for u in (domain.u_min..=domain.u_max).step_by(domain.stride as usize) {
                    let (x, y) = (c + u, r + v);
                    let d = if x >= 0 && y >= 0 && (x as usize) < ex.cols && (y as usize) < ex.rows {
                        let a = test.feature(c as usize, r as usize);
                        let b = ex.feature(x as usize, y as usize);
                        a.iter().zip(b).map(|(s, t)| (s - t).abs()).sum::<f64>().min(lambda)
                    } else {
                        lambda
                    };
                    let pt = parents[i];
                    let smooth = (((u - pt.0).abs() + (v - pt.1).abs()) as f64).min(p.gamma);
                    let cost = d + p.alpha * smooth;
                    let norm = u.abs() + v.abs();
                    if cost < best.1 || (cost == best.1 && norm < best.2) {
                        best = ((u, v), cost, norm);
                    }
                }
            }
            best.0
        })
        .collect()
}

#[test]
fn patch_layer_matches_exhaustive_scan() {
    let mut r = rng(21);
    for case in 0..30u64 {
        let (tc, tr) = (r.random_range(2..7), r.random_range(2..7));
        let (ec, er) = (r.random_range(2..7), r.random_range(2..7));
        let test = random_map(tc, tr, 3, case);
        let ex = random_map(ec, er, 3, case + 50);
        let p = MatchParams {
            alpha: [0.0, 0.02, 0.3][case as usize % 3],
            gamma: [0.5, 2.0, f64::INFINITY][(case as usize / 3) % 3],
            lambda: Some(r.random_range(0.3..1.5)),
            levels: 2,
            candidate_stride: 1 + (case % 2) as i32,
            ..MatchParams::default()
        };
        let table = build_cost_table(&test, &ex, &p).unwrap();
        let pyr = GridCellPyramid::new(tc, tr, 2).unwrap();
        let cell_vectors: Vec<(i32, i32)> = (0..pyr.node_count())
            .map(|_| table.domain.translation(r.random_range(0..table.domain.len())))
            .collect();
        let cells = FlowField::new(Granularity::Cell, pyr.node_count(), 1, cell_vectors.clone()).unwrap();
        let got = solve_patch_layer(&pyr, &cells, &table, &p).unwrap();
        let parents: Vec<(i32, i32)> = (0..tc * tr).map(|i| cell_vectors[pyr.leaf_of(i)]).collect();
        assert_eq!(got.vectors, scan_patch_layer(&test, &ex, &parents, &table.domain, &p));
    }
}

#[test]
fn huge_alpha_copies_the_parent() {
    let test = random_map(6, 6, 4, 30);
    let ex = random_map(7, 5, 4, 31);
    let p = MatchParams {
        alpha: 1e9,
        levels: 2,
        ..params(0.7)
    };
    let table = build_cost_table(&test, &ex, &p).unwrap();
    let pyr = GridCellPyramid::new(6, 6, 2).unwrap();
    let mut r = rng(32);
    let vectors: Vec<(i32, i32)> = (0..pyr.node_count())
        .map(|_| table.domain.translation(r.random_range(0..table.domain.len())))
        .collect();
    let cells = FlowField::new(Granularity::Cell, pyr.node_count(), 1, vectors.clone()).unwrap();
    let got = solve_patch_layer(&pyr, &cells, &table, &p).unwrap();
    for (i, &t) in got.vectors.iter().enumerate() {
        assert_eq!(t, vectors[pyr.leaf_of(i)]);
    }
}

fn random_pixels(w: usize, h: usize, dim: usize, seed: u64) -> PixelFeatureMap {
    let mut r = rng(seed);
    PixelFeatureMap {
        width: w,
        height: h,
        dim,
        data: (0..w * h * dim).map(|_| r.random::<f64>()).collect(),
    }
}

#[test]
fn pixel_radius_zero_upsamples_patch_flow() {
    let pix_t = random_pixels(15, 11, 3, 40);
    let pix_e = random_pixels(15, 11, 3, 41);
    let patch = FlowField::new(Granularity::Patch, 5, 3, (0..15).map(|i| (i % 3 - 1, i / 5)).collect()).unwrap();
    let out = solve_pixel_layer(&patch, &pix_t, &pix_e, 3, 0.5, &MatchParams::default(), 0).unwrap();
    for y in 0..11 {
        for x in 0..15 {
            let (u, v) = patch.at(x / 3, (y / 3).min(2));
            assert_eq!(out.at(x, y), (u * 3, v * 3));
        }
    }
}

#[test]
fn pixel_identity_gives_zero_flow() {
    let pix = random_pixels(14, 14, 4, 42);
    let patch = FlowField::constant(Granularity::Patch, 2, 2, (0, 0));
    let out = solve_pixel_layer(&patch, &pix, &pix, 7, 0.8, &MatchParams::default(), 2).unwrap();
    assert!(out.is_zero());
    assert!(out.costs.iter().all(|&c| c == 0.0));
}

#[test]
fn pixel_layer_matches_exhaustive_scan() {
    let mut r = rng(50);
    for case in 0..10u64 {
        let (w, h) = (r.random_range(6..14), r.random_range(6..14));
        let pool = r.random_range(1..4);
        let radius = r.random_range(0..4usize);
        let t = random_pixels(w, h, 3, case);
        let e = random_pixels(r.random_range(4..14), r.random_range(4..14), 3, case + 9);
        let (cols, rows) = (w / pool, h / pool);
        let patch = FlowField::new(
            Granularity::Patch,
            cols,
            rows,
            (0..cols * rows).map(|_| (r.random_range(-2..3), r.random_range(-2..3))).collect(),
        )
        .unwrap();
        let p = MatchParams { alpha: 0.1, gamma: 0.5, ..MatchParams::default() };
        let lambda = 0.9;
        let got = solve_pixel_layer(&patch, &t, &e, pool, lambda, &p, radius).unwrap();
        let gamma = p.gamma * pool as f64;
        for y in 0..h {
            for x in 0..w {
                let (pu, pv) = patch.at((x / pool).min(cols - 1), (y / pool).min(rows - 1));
                let parent = (pu * pool as i32, pv * pool as i32);
                let r_ = radius as i32;
                let mut best = ((0, 0), f64::INFINITY, i32::MAX);
                for v in parent.1 - r_..=parent.1 + r_ {
                    for u in parent.0 - r_..=parent.0 + r_ {
                        let (sx, sy) = (x as i32 + u, y as i32 + v);
                        let d = if sx >= 0 && sy >= 0 && (sx as usize) < e.width && (sy as usize) < e.height {
                            t.feature(x, y)
                                .iter()
                                .zip(e.feature(sx as usize, sy as usize))
                                .map(|(a, b)| (a - b).abs())
                                .sum::<f64>()
                                .min(lambda)
                        } else {
                            lambda
                        };
                        let s = (((u - parent.0).abs() + (v - parent.1).abs()) as f64).min(gamma);
                        let c = d + p.alpha * s;
                        let n = u.abs() + v.abs();
                        if c < best.1 || (c == best.1 && n < best.2) {
                            best = ((u, v), c, n);
                        }
                    }
                }
                assert_eq!(got.at(x, y), best.0, "pixel ({x}, {y})");
            }
        }
    }
}

#[test]
fn layers_reject_mismatched_inputs() {
    let m = random_map(4, 4, 2, 60);
    let p = MatchParams::default();
    let table = build_cost_table(&m, &m, &p).unwrap();
    let pyr = GridCellPyramid::new(4, 4, 2).unwrap();
    let other = GridCellPyramid::new(5, 4, 2).unwrap();
    assert!(solve_grid_layer(&other, &table, &p).is_err());
    let patch_flow = FlowField::constant(Granularity::Patch, 4, 4, (0, 0));
    assert!(solve_patch_layer(&pyr, &patch_flow, &table, &p).is_err());
    let bad = MatchParams { bp_iters: 0, ..p };
    assert!(solve_grid_layer(&pyr, &table, &bad).is_err());
    let pix = random_pixels(8, 8, 2, 61);
    let cells = FlowField::constant(Granularity::Cell, 5, 1, (0, 0));
    assert!(solve_pixel_layer(&cells, &pix, &pix, 2, 1.0, &p, 1).is_err());
    let wrong = FlowField::constant(Granularity::Patch, 3, 4, (0, 0));
    assert!(solve_pixel_layer(&wrong, &pix, &pix, 2, 1.0, &p, 1).is_err());
    let _ = PatchCostTable::build(&m, &m, table.domain, 0.0).unwrap_err();
    let _ = max_pool(&pix, 2).unwrap();
}
