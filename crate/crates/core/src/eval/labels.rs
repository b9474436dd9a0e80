use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io_util;

/// Per-pixel class ids, row-major; 0 means unlabeled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("label map must be non-empty"));
        }
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: labels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u16) -> Self {
        let labels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    /// Binary PGM; 8-bit when every id fits, otherwise 16-bit big-endian.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let max = self.labels.iter().copied().max().unwrap_or(0);
        if max <= 255 {
            let pixels: Vec<u8> = self.labels.iter().map(|&l| l as u8).collect();
            return io_util::encode_pgm(self.width, self.height, &pixels);
        }
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for l in &self.labels {
            out.extend_from_slice(&l.to_be_bytes());
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io_util::write_atomic(path.as_ref(), &self.to_pgm_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        decode_label_pgm(&io_util::read_file(path)?)
    }
}

/// Parses a P5 PGM without rescaling, so gray values are label ids as stored.
pub fn decode_label_pgm(bytes: &[u8]) -> Result<LabelMap> {
    let bad = |reason: &str| Error::Format {
        kind: "label PGM",
        reason: reason.to_string(),
    };
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // Skip whitespace and comments.
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("expected a binary (P5) graymap"));
    }
    let num = |s: &str| usize::from_str(s).map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() {
        return Err(bad("missing raster"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| bad("dimensions overflow"))?;
    let labels: Vec<u16> = if maxval <= 255 {
        if raster.len() != n {
            return Err(bad("raster length does not match dimensions"));
        }
        raster.iter().map(|&b| b as u16).collect()
    } else {
        if raster.len() != 2 * n {
            return Err(bad("raster length does not match dimensions"));
        }
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if labels.iter().any(|&l| l as usize > maxval) {
        return Err(bad("value above maxval"));
    }
    LabelMap::new(width, height, labels)
}

/// Axis-aligned box in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::invalid("bounding box must have positive size"));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x + self.w <= width && self.y + self.h <= height
    }
}

impl FromStr for BoundingBox {
    type Err = Error;

    /// `x,y,w,h`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::invalid(format!("box `{s}` is not x,y,w,h")));
        }
        let mut v = [0usize; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::invalid(format!("box `{s}` has a bad number `{p}`")))?;
        }
        Self::new(v[0], v[1], v[2], v[3])
    }
}
