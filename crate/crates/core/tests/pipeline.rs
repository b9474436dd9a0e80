mod common;

use common::{small_encoder, texture_dictionary};
use uflmatch::matching::{match_images, MatchParams};
use uflmatch::synth::{noise_pair, shift_pair, texture};

#[test]
fn identity_pair_has_zero_flow_everywhere() {
    let img = texture(56, 49, 3).unwrap();
    let r = match_images(&img, &img, texture_dictionary(), &small_encoder(), &MatchParams::default(), true)
        .unwrap();
    assert!(r.grid.flow.is_zero());
    assert!(r.patch_flow.is_zero());
    assert!(r.pixel_flow.as_ref().unwrap().is_zero());
    assert!(r.energy().abs() <= 1e-9);
    assert_eq!((r.patch_flow.width, r.patch_flow.height), (8, 7));
}

#[test]
fn three_pixel_shift_is_recovered_per_pixel() {
    let pair = shift_pair(84, 84, (3, 0), 11).unwrap();
    let p = MatchParams {
        pixel_radius: Some(7),
        ..MatchParams::default()
    };
    let r = match_images(&pair.test, &pair.exemplar, texture_dictionary(), &small_encoder(), &p, true).unwrap();
    let flow = r.pixel_flow.unwrap();
    let (mut hit, mut total) = (0, 0);
    // Interior: away from the encoding border and with the match inside the exemplar.
    for y in 7..77 {
        for x in 7..74 {
            total += 1;
            hit += usize::from(flow.at(x, y) == (3, 0));
        }
    }
    let frac = hit as f64 / total as f64;
    assert!(frac >= 0.95, "recovered {frac}");
}

#[test]
fn unrelated_images_complete_with_finite_energy() {
    let pair = noise_pair(70, 63, 5).unwrap();
    let r = match_images(
        &pair.test,
        &pair.exemplar,
        texture_dictionary(),
        &small_encoder(),
        &MatchParams::default(),
        true,
    )
    .unwrap();
    assert!(r.energy().is_finite());
    assert!(r.grid.outcome.energy <= r.grid.outcome.independent_energy);
    assert!(r.grid.outcome.energy <= r.grid.outcome.zero_energy.unwrap());
    assert!(r.lambda > 0.0 && r.lambda_pixel.unwrap() > 0.0);
}

#[test]
fn matching_is_deterministic() {
    let pair = shift_pair(63, 63, (7, -7), 2).unwrap();
    let run = || {
        match_images(&pair.test, &pair.exemplar, texture_dictionary(), &small_encoder(), &MatchParams::default(), true)
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.patch_flow, b.patch_flow);
    assert_eq!(a.pixel_flow, b.pixel_flow);
    assert_eq!(a.energy().to_bits(), b.energy().to_bits());
}
