//! Image decoding/encoding, luminance conversion, block padding, PFM maps and PSNR.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage as Luma8Image, ImageFormat};

use crate::error::{JndError, Result};

const PEAK: f64 = 255.0;

/// BT.601 luma weights.
const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// A single-channel image with real-valued samples, row-major.
///
/// Samples loaded from disk lie in `[0, 255]`. Intermediate results such as a
/// CPL reconstruction may stray slightly outside that range; they are only
/// clamped when exported as 8-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(JndError::InvalidImage(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(JndError::DimensionMismatch {
                expected: format!("{} samples", width * height),
                actual: format!("{} samples", samples.len()),
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(JndError::InvalidImage(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(GrayImage {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    /// Wraps samples already known to be valid.
    pub(crate) fn from_parts(width: usize, height: usize, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        GrayImage {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    pub fn is_constant(&self) -> bool {
        let first = self.samples[0];
        self.samples.iter().all(|&v| v == first)
    }

    /// Checks the `[0, 255]` range and the minimum size needed for JND processing.
    pub fn validate_for_jnd(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(JndError::InvalidImage(format!(
                "{}x{} is smaller than 8x8",
                self.width, self.height
            )));
        }
        if let Some(v) = self.samples.iter().find(|v| !(0.0..=PEAK).contains(*v)) {
            return Err(JndError::InvalidImage(format!(
                "sample {v} outside [0, 255]"
            )));
        }
        Ok(())
    }

    pub(crate) fn check_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(JndError::dims(self.dims(), other));
        }
        Ok(())
    }

    /// Rounds and clamps to 8 bits.
    pub fn to_luma8(&self) -> Luma8Image {
        let bytes = self
            .samples
            .iter()
            .map(|v| v.round().clamp(0.0, PEAK) as u8)
            .collect();
        Luma8Image::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions")
    }

    /// Copies the top-left `width`×`height` region.
    pub fn crop(&self, width: usize, height: usize) -> GrayImage {
        GrayImage::from_parts(
            width,
            height,
            crop_plane(&self.samples, self.width, width, height),
        )
    }
}

pub(crate) fn crop_plane(data: &[f64], stride: usize, width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for row in data.chunks(stride).take(height) {
        out.extend_from_slice(&row[..width]);
    }
    out
}

/// Loads a PNG, PGM (P5) or PPM (P6) file as luminance.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| JndError::io(path, e))?;
    let format = image::guess_format(&bytes).map_err(|_| {
        JndError::UnsupportedFormat(format!("{}: unrecognized signature", path.display()))
    })?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(JndError::UnsupportedFormat(format!(
            "{}: {format:?}",
            path.display()
        )));
    }
    decode_bytes(&bytes, format, path)
}

/// Decodes any format the codec adapters may produce (PNG, PNM, JPEG).
pub(crate) fn decode_any(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let format = image::guess_format(bytes).map_err(|_| {
        JndError::UnsupportedFormat(format!("{}: unrecognized signature", path.display()))
    })?;
    decode_bytes(bytes, format, path)
}

fn decode_bytes(bytes: &[u8], format: ImageFormat, path: &Path) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| JndError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    luminance(&img)
}

fn luminance(img: &DynamicImage) -> Result<GrayImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(JndError::InvalidImage("zero-dimension image".into()));
    }
    let samples = match img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| f64::from(v)).collect(),
        DynamicImage::ImageLumaA8(_) => img
            .to_luma8()
            .as_raw()
            .iter()
            .map(|&v| f64::from(v))
            .collect(),
        _ => img
            .to_rgb8()
            .pixels()
            .map(|p| LUMA_R * f64::from(p[0]) + LUMA_G * f64::from(p[1]) + LUMA_B * f64::from(p[2]))
            .collect(),
    };
    GrayImage::new(w, h, samples)
}

/// Writes an 8-bit PNG or PGM, chosen by extension (`.pgm` → PGM, otherwise PNG).
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => ImageFormat::Pnm,
        _ => ImageFormat::Png,
    };
    let mut buf = Vec::new();
    if format == ImageFormat::Pnm {
        use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
        use image::ImageEncoder;
        let luma = img.to_luma8();
        PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(
                luma.as_raw(),
                luma.width(),
                luma.height(),
                image::ExtendedColorType::L8,
            )
            .map_err(|e| JndError::Codec(e.to_string()))?;
    } else {
        img.to_luma8()
            .write_to(&mut Cursor::new(&mut buf), format)
            .map_err(|e| JndError::Codec(e.to_string()))?;
    }
    fs::write(path, buf).map_err(|e| JndError::io(path, e))
}

/// A padded image together with the extent of the original.
#[derive(Debug, Clone)]
pub struct PaddedImage {
    pub image: GrayImage,
    pub original_width: usize,
    pub original_height: usize,
}

impl PaddedImage {
    pub fn crop(&self, padded: &GrayImage) -> GrayImage {
        padded.crop(self.original_width, self.original_height)
    }

    pub fn crop_plane(&self, data: &[f64]) -> Vec<f64> {
        crop_plane(
            data,
            self.image.width(),
            self.original_width,
            self.original_height,
        )
    }
}

/// Pads right and bottom edges by replication up to the next multiple of `block`.
pub fn pad_to_block_multiple(img: &GrayImage, block: usize) -> PaddedImage {
    assert!(block >= 1, "block size must be positive");
    let (w, h) = img.dims();
    let pw = w.div_ceil(block) * block;
    let ph = h.div_ceil(block) * block;
    let mut samples = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let row = &img.samples[y.min(h - 1) * w..][..w];
        samples.extend_from_slice(row);
        samples.extend(std::iter::repeat_n(row[w - 1], pw - w));
    }
    PaddedImage {
        image: GrayImage::from_parts(pw, ph, samples),
        original_width: w,
        original_height: h,
    }
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.check_same_dims(b.dims())?;
    let sum: f64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.samples.len() as f64)
}

/// Peak signal-to-noise ratio in dB with peak 255.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Err(JndError::IdenticalImages);
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

/// Writes a single-channel little-endian PFM (scale −1.0, rows bottom to top).
pub fn write_pfm(path: impl AsRef<Path>, width: usize, height: usize, data: &[f64]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(width, height, data)).map_err(|e| JndError::io(path, e))
}

pub fn encode_pfm(width: usize, height: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(data.len(), width * height);
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    for row in data.chunks(width).rev() {
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Reads a PFM file. Colour (`PF`) files are reduced to luminance.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| JndError::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn decode_pfm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut tokens = Vec::with_capacity(4);
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(JndError::Pfm("truncated header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;

    let channels = match tokens[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(JndError::Pfm(format!("bad magic {other:?}"))),
    };
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| JndError::Pfm(format!("bad dimension {s:?}")))
    };
    let width = parse_dim(&tokens[1])?;
    let height = parse_dim(&tokens[2])?;
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| JndError::Pfm(format!("bad scale {:?}", tokens[3])))?;
    if scale == 0.0 {
        return Err(JndError::Pfm("zero scale".into()));
    }
    let little = scale < 0.0;

    let count = width * height * channels;
    let raster = bytes
        .get(pos..pos + count * 4)
        .ok_or_else(|| JndError::Pfm("truncated raster".into()))?;
    let values: Vec<f64> = raster
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            f64::from(if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            })
        })
        .collect();

    let mut data = Vec::with_capacity(width * height);
    for row in values.chunks(width * channels).rev() {
        if channels == 1 {
            data.extend_from_slice(row);
        } else {
            data.extend(
                row.chunks(3)
                    .map(|p| LUMA_R * p[0] + LUMA_G * p[1] + LUMA_B * p[2]),
            );
        }
    }
    Ok((width, height, data))
}

/// Loads a real-valued map from PFM, or from any 8-bit image via [`load_image`].
pub fn load_map(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let path = path.as_ref();
    let mut magic = [0u8; 2];
    {
        use std::io::Read;
        let mut f = fs::File::open(path).map_err(|e| JndError::io(path, e))?;
        let _ = f.read(&mut magic).map_err(|e| JndError::io(path, e))?;
    }
    if &magic == b"Pf" || &magic == b"PF" {
        read_pfm(path)
    } else {
        let img = load_image(path)?;
        let (w, h) = img.dims();
        Ok((w, h, img.into_samples()))
    }
}

/// Linearly scales `data` (expected in `[0, 1]`) to an 8-bit grayscale PNG.
pub fn save_unit_map_png(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    data: &[f64],
) -> Result<()> {
    let scaled: Vec<f64> = data.iter().map(|v| v * PEAK).collect();
    save_image(&GrayImage::from_parts(width, height, scaled), path)
}
