use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::io_util;

/// Grayscale image with luminance values in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "zero-dimension image {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invalid("pixel values must be finite and in [0, 1]"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from a per-pixel function; values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "zero-dimension image");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                data.push(if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 });
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with replicate padding outside the lattice.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    /// Serializes as an 8-bit binary PGM, rounding to the nearest level.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let pixels: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        io_util::encode_pgm(self.width, self.height, &pixels)
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        io_util::write_atomic(path.as_ref(), &self.to_pgm_bytes())
    }
}

/// Loads a PNG or binary PGM/PPM file as a luminance image.
///
/// Color pixels are reduced with `(0.299 R + 0.587 G + 0.114 B) / 255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = io_util::read_file(path)?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode { reason, .. } => Error::Decode {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

/// Decodes an in-memory PNG or P5/P6 file.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let format = image::guess_format(bytes)
        .map_err(|_| Error::UnsupportedFormat("unrecognized image header".into()))?;
    match format {
        ImageFormat::Png => {}
        ImageFormat::Pnm => {
            if !(bytes.starts_with(b"P5") || bytes.starts_with(b"P6")) {
                return Err(Error::UnsupportedFormat(
                    "only binary PGM (P5) and PPM (P6) are supported".into(),
                ));
            }
        }
        other => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
    }
    let decoded = ImageReader::with_format(std::io::Cursor::new(bytes), format)
        .decode()
        .map_err(|e| Error::Decode {
            path: Default::default(),
            reason: e.to_string(),
        })?;
    from_dynamic(&decoded)
}

fn from_dynamic(img: &DynamicImage) -> Result<Image> {
    let (width, height) = (img.width() as usize, img.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::invalid("zero-dimension image"));
    }
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(gray) => gray.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(gray) => gray.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(gray) => {
            gray.pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
        }
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
            })
            .collect(),
    };
    let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Image::new(width, height, data)
}
