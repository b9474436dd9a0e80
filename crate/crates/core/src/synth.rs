//! Seeded synthetic image pairs with exact ground truth.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::LabelMap;
use crate::matching::{FlowField, Granularity};
use crate::preprocess::Image;

/// Feature scales of the generated texture, in pixels, with their weights.
const OCTAVES: [(usize, f64); 4] = [(16, 1.0), (8, 0.7), (4, 0.5), (2, 0.3)];
/// Scale of the blobs that define the label regions.
const REGION_SCALE: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Exemplar is the test image translated by an integer offset.
    Shift,
    /// Exemplar equals the test image.
    WarpFree,
    /// Independent textures, no correspondence.
    Noise,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => Ok(Self::Shift),
            "warp-free" => Ok(Self::WarpFree),
            "noise" => Ok(Self::Noise),
            other => Err(Error::invalid(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Shift => "shift",
            Self::WarpFree => "warp-free",
            Self::Noise => "noise",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SynthPair {
    pub test: Image,
    pub exemplar: Image,
    pub test_labels: LabelMap,
    pub exemplar_labels: LabelMap,
    /// Pixel flow from test to exemplar, when one exists.
    pub flow: Option<FlowField>,
}

/// Random lattice values with spacing `cell`, bilinearly interpolated.
fn value_noise(width: usize, height: usize, cell: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let (gy, fy) = (y / cell, (y % cell) as f64 / cell as f64);
        for x in 0..width {
            let (gx, fx) = (x / cell, (x % cell) as f64 / cell as f64);
            let at = |i: usize, j: usize| grid[j * gw + i];
            let top = at(gx, gy) * (1.0 - fx) + at(gx + 1, gy) * fx;
            let bottom = at(gx, gy + 1) * (1.0 - fx) + at(gx + 1, gy + 1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

fn texture_with(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut acc = vec![0.0; width * height];
    for (cell, weight) in OCTAVES {
        for (a, v) in acc.iter_mut().zip(value_noise(width, height, cell, rng)) {
            *a += weight * v;
        }
    }
    let lo = acc.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = acc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    acc.iter().map(|v| (v - lo) / span).collect()
}

/// Labels 1..=3 from thresholded large-scale noise.
fn regions_with(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<u16> {
    value_noise(width, height, REGION_SCALE, rng)
        .into_iter()
        .map(|v| 1 + (v * 3.0).floor().min(2.0) as u16)
        .collect()
}

fn check_size(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("synthetic image must be non-empty"));
    }
    Ok(())
}

/// Multi-scale value-noise texture in `[0, 1]`.
pub fn texture(width: usize, height: usize, seed: u64) -> Result<Image> {
    check_size(width, height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::new(width, height, texture_with(width, height, &mut rng))
}

fn crop<T: Copy>(src: &[T], src_w: usize, x0: usize, y0: usize, w: usize, h: usize) -> Vec<T> {
    (0..h)
        .flat_map(|y| src[(y0 + y) * src_w + x0..(y0 + y) * src_w + x0 + w].iter().copied())
        .collect()
}

/// `exemplar(p) = test(p - shift)`, so the true flow is `shift` at every
/// pixel. Both images are cut from one larger canvas, so the exemplar has
/// real texture where the test image has none.
pub fn shift_pair(width: usize, height: usize, shift: (i32, i32), seed: u64) -> Result<SynthPair> {
    check_size(width, height)?;
    let (du, dv) = (shift.0.unsigned_abs() as usize, shift.1.unsigned_abs() as usize);
    let (cw, ch) = (width + du, height + dv);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let canvas = texture_with(cw, ch, &mut rng);
    let regions = regions_with(cw, ch, &mut rng);
    // Test origin on the canvas; exemplar origin is that minus the shift.
    let (tx, ty) = (shift.0.max(0) as usize, shift.1.max(0) as usize);
    let (ex, ey) = ((tx as i32 - shift.0) as usize, (ty as i32 - shift.1) as usize);
    Ok(SynthPair {
        test: Image::new(width, height, crop(&canvas, cw, tx, ty, width, height))?,
        exemplar: Image::new(width, height, crop(&canvas, cw, ex, ey, width, height))?,
        test_labels: LabelMap::new(width, height, crop(&regions, cw, tx, ty, width, height))?,
        exemplar_labels: LabelMap::new(width, height, crop(&regions, cw, ex, ey, width, height))?,
        flow: Some(FlowField::constant(Granularity::Pixel, width, height, shift)),
    })
}

/// Test and exemplar are the same image.
pub fn warp_free_pair(width: usize, height: usize, seed: u64) -> Result<SynthPair> {
    shift_pair(width, height, (0, 0), seed)
}

/// Two unrelated textures.
pub fn noise_pair(width: usize, height: usize, seed: u64) -> Result<SynthPair> {
    check_size(width, height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let test = texture_with(width, height, &mut rng);
    let test_labels = regions_with(width, height, &mut rng);
    let exemplar = texture_with(width, height, &mut rng);
    let exemplar_labels = regions_with(width, height, &mut rng);
    Ok(SynthPair {
        test: Image::new(width, height, test)?,
        exemplar: Image::new(width, height, exemplar)?,
        test_labels: LabelMap::new(width, height, test_labels)?,
        exemplar_labels: LabelMap::new(width, height, exemplar_labels)?,
        flow: None,
    })
}

pub fn synth_pair(kind: SynthKind, width: usize, height: usize, shift: (i32, i32), seed: u64) -> Result<SynthPair> {
    match kind {
        SynthKind::Shift => shift_pair(width, height, shift, seed),
        SynthKind::WarpFree => warp_free_pair(width, height, seed),
        SynthKind::Noise => noise_pair(width, height, seed),
    }
}
