//! Flow fields and the binary `UFLF` flow file.
//!
//! Layout (little-endian): magic `UFLF`, `u32` version = 1, `u32` granularity
//! (0 = patch, 1 = pixel), `u32` width, `u32` height, then `width * height`
//! pairs of `i32` `(u, v)` in row-major order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util;

const MAGIC: &[u8; 4] = b"UFLF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Granularity {
    /// Grid-cell nodes; `width` is the node count and `height` is 1.
    Cell,
    /// Patch grid, translations in patch units.
    Patch,
    /// Pixel grid, translations in pixels.
    Pixel,
}

/// Per-node integer translations and the data cost at the chosen translation.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub granularity: Granularity,
    pub width: usize,
    pub height: usize,
    pub vectors: Vec<(i32, i32)>,
    pub costs: Vec<f64>,
}

impl FlowField {
    pub fn new(granularity: Granularity, width: usize, height: usize, vectors: Vec<(i32, i32)>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: vectors.len(),
            });
        }
        let costs = vec![0.0; vectors.len()];
        Ok(Self {
            granularity,
            width,
            height,
            vectors,
            costs,
        })
    }

    pub fn constant(granularity: Granularity, width: usize, height: usize, t: (i32, i32)) -> Self {
        Self::new(granularity, width, height, vec![t; width * height]).expect("sizes agree")
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (i32, i32) {
        self.vectors[y * self.width + x]
    }

    pub fn is_zero(&self) -> bool {
        self.vectors.iter().all(|&t| t == (0, 0))
    }

    pub(crate) fn require(&self, g: Granularity) -> Result<()> {
        if self.granularity != g {
            return Err(Error::invalid(format!(
                "expected a {g:?}-level flow, got {:?}",
                self.granularity
            )));
        }
        Ok(())
    }
}

pub fn encode_flow(flow: &FlowField) -> Result<Vec<u8>> {
    let code: u32 = match flow.granularity {
        Granularity::Patch => 0,
        Granularity::Pixel => 1,
        Granularity::Cell => {
            return Err(Error::invalid("cell-level flows have no file representation"))
        }
    };
    let mut out = Vec::with_capacity(HEADER_LEN + flow.vectors.len() * 8);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, code, flow.width as u32, flow.height as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &(u, v) in &flow.vectors {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "flow",
        reason: reason.into(),
    }
}

pub fn decode_flow(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < HEADER_LEN {
        return Err(bad("file shorter than header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    if word(0) != VERSION {
        return Err(bad(format!("unsupported version {}", word(0))));
    }
    let granularity = match word(1) {
        0 => Granularity::Patch,
        1 => Granularity::Pixel,
        g => return Err(bad(format!("unknown granularity {g}"))),
    };
    let (width, height) = (word(2) as usize, word(3) as usize);
    let n = width
        .checked_mul(height)
        .ok_or_else(|| bad("dimensions overflow"))?;
    if bytes.len() != HEADER_LEN + n * 8 {
        return Err(bad(format!(
            "expected {} bytes of vectors, found {}",
            n * 8,
            bytes.len() - HEADER_LEN
        )));
    }
    let vectors = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| {
            (
                i32::from_le_bytes(c[..4].try_into().unwrap()),
                i32::from_le_bytes(c[4..].try_into().unwrap()),
            )
        })
        .collect();
    FlowField::new(granularity, width, height, vectors)
}

pub fn save_flow(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    io_util::write_atomic(path.as_ref(), &encode_flow(flow)?)
}

pub fn load_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    decode_flow(&io_util::read_file(path.as_ref())?)
}
