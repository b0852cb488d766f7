//! Grayscale float images and their on-disk forms.
//!
//! Samples live in `[0, 1]` nominally but are allowed to leave that range
//! while a restoration is in flight; they are clamped and quantized only
//! when written out.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{DeconvError, Result};

/// A row-major single-channel image of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major samples, validating dimensions and
    /// finiteness.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(DeconvError::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(DeconvError::LengthMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(DeconvError::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Internal constructor for buffers produced by our own arithmetic.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false: images have at least one pixel.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Population variance of the samples.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image::from_parts(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Elementwise combination of two same-shaped images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.ensure_same_shape(other)?;
        Ok(Image::from_parts(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn flip_horizontal(&self) -> Image {
        let mut data = Vec::with_capacity(self.len());
        for row in self.data.chunks_exact(self.width) {
            data.extend(row.iter().rev());
        }
        Image::from_parts(self.width, self.height, data)
    }

    pub fn flip_vertical(&self) -> Image {
        let mut data = Vec::with_capacity(self.len());
        for row in self.data.chunks_exact(self.width).rev() {
            data.extend_from_slice(row);
        }
        Image::from_parts(self.width, self.height, data)
    }

    pub fn ensure_same_shape(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(DeconvError::SizeMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Reads an 8-bit grayscale PGM (`P5`) or grayscale PNG, scaling bytes to
/// `[0, 1]` by `value / 255`. The format is sniffed from the file contents.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DeconvError::io(path, e))?;
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P3") {
        Err(DeconvError::Unsupported("not grayscale".into()))
    } else if bytes.starts_with(b"P") {
        Err(DeconvError::Unsupported(
            "only binary (P5) PGM is supported".into(),
        ))
    } else {
        Err(DeconvError::Unsupported("unrecognized image format".into()))
    }
}

/// Writes `img` as PGM (`.pgm`/`.pnm`) or PNG (`.png`) chosen by extension.
/// Samples are clamped to `[0, 1]` and quantized with `round(v * 255)`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("pgm") | Some("pnm") => encode_pgm(img),
        Some("png") => encode_png(img)?,
        _ => {
            return Err(DeconvError::Unsupported(format!(
                "cannot infer output format from {}",
                path.display()
            )))
        }
    };
    let mut file = fs::File::create(path).map_err(|e| DeconvError::io(path, e))?;
    file.write_all(&bytes).map_err(|e| DeconvError::io(path, e))
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|&v| quantize(v)));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let malformed = |detail: &str| DeconvError::Malformed {
        what: "PGM",
        detail: detail.to_string(),
    };
    if !bytes.starts_with(b"P5") {
        return Err(malformed("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and '#' comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("header value out of range"))?;
    }
    let [width, height, maxval] = fields;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(malformed("missing whitespace after maxval"));
    }
    pos += 1;
    if width == 0 || height == 0 {
        return Err(DeconvError::InvalidDimensions { width, height });
    }
    if maxval != 255 {
        return Err(DeconvError::Unsupported(format!(
            "PGM maxval {maxval}, only 8-bit (255) is supported"
        )));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| malformed("dimensions overflow"))?;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| malformed("raster shorter than header dimensions"))?;
    Image::new(
        width,
        height,
        raster.iter().map(|&b| f64::from(b) / 255.0).collect(),
    )
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let decoded =
        image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| {
            DeconvError::Malformed {
                what: "PNG",
                detail: e.to_string(),
            }
        })?;
    let gray = match decoded {
        image::DynamicImage::ImageLuma8(buf) => buf,
        image::DynamicImage::ImageLuma16(_) | image::DynamicImage::ImageLumaA16(_) => {
            return Err(DeconvError::Unsupported("16-bit PNG".into()))
        }
        image::DynamicImage::ImageLumaA8(_) => {
            return Err(DeconvError::Unsupported("grayscale with alpha".into()))
        }
        _ => return Err(DeconvError::Unsupported("not grayscale".into())),
    };
    let (width, height) = (gray.width() as usize, gray.height() as usize);
    Image::new(
        width,
        height,
        gray.into_raw()
            .into_iter()
            .map(|b| f64::from(b) / 255.0)
            .collect(),
    )
}

fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, raw)
        .expect("buffer sized from image dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| DeconvError::Malformed {
            what: "PNG",
            detail: e.to_string(),
        })?;
    Ok(out.into_inner())
}
