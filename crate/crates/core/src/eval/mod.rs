//! Label transfer through a pixel flow, image warping and the LT-ACC, IOU
//! and LOC-ERR metrics.

mod labels;

use crate::error::{Error, Result};
use crate::matching::{FlowField, Granularity};
use crate::preprocess::Image;

pub use labels::{decode_label_pgm, BoundingBox, LabelMap};

#[inline]
fn source(flow: &FlowField, x: usize, y: usize, w: usize, h: usize) -> Option<(usize, usize)> {
    let (u, v) = flow.at(x, y);
    let (sx, sy) = (x as i64 + u as i64, y as i64 + v as i64);
    (sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h).then_some((sx as usize, sy as usize))
}

fn require_pixel(flow: &FlowField) -> Result<()> {
    if flow.granularity != Granularity::Pixel {
        return Err(Error::invalid("label transfer and warping need a pixel flow"));
    }
    Ok(())
}

/// `o(p) = a_e(p + t_p)`, 0 where the target leaves the exemplar.
pub fn transfer_labels(flow: &FlowField, exemplar: &LabelMap) -> Result<LabelMap> {
    require_pixel(flow)?;
    let (w, h) = (exemplar.width(), exemplar.height());
    Ok(LabelMap::from_fn(flow.width, flow.height, |x, y| {
        source(flow, x, y, w, h).map_or(0, |(sx, sy)| exemplar.get(sx, sy))
    }))
}

/// `out(p) = exemplar(p + t_p)`, 0 where the target leaves the exemplar.
pub fn warp_image(flow: &FlowField, exemplar: &Image) -> Result<Image> {
    require_pixel(flow)?;
    let (w, h) = (exemplar.width(), exemplar.height());
    Ok(Image::from_fn(flow.width, flow.height, |x, y| {
        source(flow, x, y, w, h).map_or(0.0, |(sx, sy)| exemplar.get(sx, sy))
    }))
}

fn same_dims(a: &LabelMap, b: &LabelMap) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::invalid(format!(
            "label maps differ in size: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Fraction of labeled ground-truth pixels whose transferred label matches,
/// pooled over all `(output, truth)` pairs.
pub fn lt_acc(pairs: &[(&LabelMap, &LabelMap)]) -> Result<f64> {
    let (mut hits, mut labeled) = (0usize, 0usize);
    for (output, truth) in pairs {
        same_dims(output, truth)?;
        for (&o, &a) in output.labels().iter().zip(truth.labels()) {
            if a > 0 {
                labeled += 1;
                hits += usize::from(o == a);
            }
        }
    }
    if labeled == 0 {
        return Err(Error::UndefinedMetric("LT-ACC has no labeled pixels"));
    }
    Ok(hits as f64 / labeled as f64)
}

/// `tp / (tp + fp + fn)` for one class; 1.0 when the class appears in neither map.
pub fn iou(output: &LabelMap, truth: &LabelMap, class: u16) -> Result<f64> {
    same_dims(output, truth)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&o, &a) in output.labels().iter().zip(truth.labels()) {
        match (o == class, a == class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = tp + fp + fn_;
    Ok(if denom == 0 { 1.0 } else { tp as f64 / denom as f64 })
}

/// Mean of `0.5 (|x1 - x2| + |y1 - y2|)` over the pixels of `box_test`, where
/// `(x1, y1)` is the pixel in `box_test` coordinates and `(x2, y2)` its match
/// in `box_ex` coordinates.
pub fn loc_err(flow: &FlowField, box_test: BoundingBox, box_ex: BoundingBox) -> Result<f64> {
    require_pixel(flow)?;
    if box_test.w == 0 || box_test.h == 0 || box_ex.w == 0 || box_ex.h == 0 {
        return Err(Error::invalid("empty bounding box"));
    }
    if !box_test.fits(flow.width, flow.height) {
        return Err(Error::invalid("test box leaves the flow field"));
    }
    let mut sum = 0.0;
    for y in box_test.y..box_test.y + box_test.h {
        for x in box_test.x..box_test.x + box_test.w {
            let (u, v) = flow.at(x, y);
            let x1 = (x as f64 - box_test.x as f64) / box_test.w as f64;
            let y1 = (y as f64 - box_test.y as f64) / box_test.h as f64;
            let x2 = (x as f64 + u as f64 - box_ex.x as f64) / box_ex.w as f64;
            let y2 = (y as f64 + v as f64 - box_ex.y as f64) / box_ex.h as f64;
            sum += 0.5 * ((x1 - x2).abs() + (y1 - y2).abs());
        }
    }
    Ok(sum / (box_test.w * box_test.h) as f64)
}
