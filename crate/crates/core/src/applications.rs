//! JND-guided noise injection, pre-compression smoothing and compression gain.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{JndError, Result};
use crate::image_io::{self, pad_to_block_multiple, GrayImage, PaddedImage};
use crate::jnd::JndMap;

const PSNR_TOLERANCE_DB: f64 = 0.05;
const BISECTION_STEPS: usize = 60;
const THETA_CAP: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Noise energy regulating factor.
    pub theta: f64,
    pub seed: u64,
    pub target_psnr: Option<f64>,
}

impl NoiseConfig {
    pub fn new(theta: f64, seed: u64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(JndError::InvalidParameter(format!(
                "theta must be finite and non-negative, got {theta}"
            )));
        }
        Ok(NoiseConfig {
            theta,
            seed,
            target_psnr: None,
        })
    }
}

/// Row-major field of ±1, each sign with probability ½.
pub fn bipolar_noise(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// `clamp(X + θ·N·M, 0, 255)` with a seeded bipolar field `N`.
pub fn inject_noise(img: &GrayImage, m: &JndMap, cfg: &NoiseConfig) -> Result<GrayImage> {
    img.check_same_dims(m.dims())?;
    NoiseConfig::new(cfg.theta, cfg.seed)?;
    let noise = bipolar_noise(cfg.seed, img.samples().len());
    let out = img
        .samples()
        .iter()
        .zip(m.data())
        .zip(&noise)
        .map(|((x, t), n)| (x + cfg.theta * n * t).clamp(0.0, 255.0))
        .collect();
    GrayImage::new(img.width(), img.height(), out)
}

/// PSNR of the noisy image against the original; infinite when nothing changes.
fn noisy_psnr(samples: &[f64], signed_jnd: &[f64], theta: f64) -> f64 {
    let sum: f64 = samples
        .iter()
        .zip(signed_jnd)
        .map(|(x, d)| {
            let e = (x + theta * d).clamp(0.0, 255.0) - x;
            e * e
        })
        .sum();
    let mse = sum / samples.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

/// Finds θ whose noisy image sits within 0.05 dB of `target_psnr`.
///
/// The noise field is fixed by `seed`, so PSNR falls monotonically as θ
/// grows until clamping saturates.
pub fn calibrate_theta(img: &GrayImage, m: &JndMap, target_psnr: f64, seed: u64) -> Result<f64> {
    img.check_same_dims(m.dims())?;
    if m.is_zero() {
        return Err(JndError::ZeroJndMap);
    }
    if !target_psnr.is_finite() {
        return Err(JndError::UnreachableTarget {
            target: target_psnr,
            reason: "only identical images have infinite PSNR".into(),
        });
    }
    let signed: Vec<f64> = bipolar_noise(seed, m.data().len())
        .iter()
        .zip(m.data())
        .map(|(n, t)| n * t)
        .collect();
    let psnr_at = |theta: f64| noisy_psnr(img.samples(), &signed, theta);

    let mut hi = 1.0;
    let mut at_hi = psnr_at(hi);
    while at_hi >= target_psnr {
        if (at_hi - target_psnr).abs() <= PSNR_TOLERANCE_DB {
            return Ok(hi);
        }
        if hi >= THETA_CAP {
            return Err(JndError::UnreachableTarget {
                target: target_psnr,
                reason: format!("PSNR is still {at_hi:.3} dB at theta {hi}"),
            });
        }
        hi *= 2.0;
        at_hi = psnr_at(hi);
    }

    let mut lo = 0.0;
    let mut best = (hi, (at_hi - target_psnr).abs());
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let p = psnr_at(mid);
        let err = (p - target_psnr).abs();
        if err < best.1 {
            best = (mid, err);
        }
        if err <= PSNR_TOLERANCE_DB {
            return Ok(mid);
        }
        if p > target_psnr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(JndError::UnreachableTarget {
        target: target_psnr,
        reason: format!("closest probe theta {} misses by {:.3} dB", best.0, best.1),
    })
}

/// Shrinks each pixel toward its block mean by at most its JND value.
///
/// Pixels deviating from the block mean by more than `M` move by exactly `M`;
/// the rest snap to the mean.
pub fn jnd_smooth(img: &GrayImage, m: &JndMap, block: usize) -> Result<GrayImage> {
    img.check_same_dims(m.dims())?;
    if block == 0 {
        return Err(JndError::InvalidParameter(
            "block size must be positive".into(),
        ));
    }
    let padded = pad_to_block_multiple(img, block);
    let map_img = GrayImage::from_parts(m.width(), m.height(), m.data().to_vec());
    let padded_map = pad_to_block_multiple(&map_img, block);
    let out = smooth_padded(&padded, padded_map.image.samples(), block);
    Ok(padded.crop(&out))
}

fn smooth_padded(padded: &PaddedImage, jnd: &[f64], block: usize) -> GrayImage {
    let (w, h) = padded.image.dims();
    let src = padded.image.samples();
    let mut out = vec![0.0; w * h];
    let area = (block * block) as f64;
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let mut sum = 0.0;
            for y in by..by + block {
                sum += src[y * w + bx..y * w + bx + block].iter().sum::<f64>();
            }
            let mean = sum / area;
            for y in by..by + block {
                for x in bx..bx + block {
                    let i = y * w + x;
                    let (t, tol) = (src[i], jnd[i]);
                    let dev = t - mean;
                    out[i] = if dev < -tol {
                        t + tol
                    } else if dev > tol {
                        t - tol
                    } else {
                        mean
                    };
                }
            }
        }
    }
    GrayImage::from_parts(w, h, out)
}

/// Bitrate saving and PSNR reduction (both percent) and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionGain {
    pub delta_bitrate: f64,
    pub delta_psnr: f64,
    /// `None` when the PSNR did not drop.
    pub gain: Option<f64>,
}

pub fn compression_gain(
    bitrate_ori: f64,
    bitrate_jnd: f64,
    psnr_ori: f64,
    psnr_jnd: f64,
) -> Result<CompressionGain> {
    if !(bitrate_ori > 0.0) || !(psnr_ori > 0.0) {
        return Err(JndError::InvalidParameter(format!(
            "reference bitrate and PSNR must be positive (got {bitrate_ori}, {psnr_ori})"
        )));
    }
    let delta_bitrate = (bitrate_ori - bitrate_jnd) / bitrate_ori * 100.0;
    let delta_psnr = (psnr_ori - psnr_jnd) / psnr_ori * 100.0;
    let gain = (delta_psnr > 0.0).then(|| delta_bitrate / delta_psnr);
    Ok(CompressionGain {
        delta_bitrate,
        delta_psnr,
        gain,
    })
}

pub fn bits_per_pixel(compressed_bytes: usize, width: usize, height: usize) -> f64 {
    (compressed_bytes * 8) as f64 / (width * height) as f64
}

/// Something that can compress an image and decode the result.
pub trait CodecAdapter {
    fn compress(&self, img: &GrayImage, quality: u8) -> Result<Vec<u8>>;
    fn decompress(&self, bytes: &[u8]) -> Result<GrayImage>;
}

/// Baseline JPEG through the `image` crate encoder.
#[derive(Debug, Clone, Copy, Default)]
pub struct JpegCodec;

impl CodecAdapter for JpegCodec {
    fn compress(&self, img: &GrayImage, quality: u8) -> Result<Vec<u8>> {
        use image::codecs::jpeg::JpegEncoder;
        if !(1..=100).contains(&quality) {
            return Err(JndError::Codec(format!(
                "JPEG quality {quality} outside 1..=100"
            )));
        }
        let luma = img.to_luma8();
        let mut buf = Vec::new();
        JpegEncoder::new_with_quality(&mut buf, quality)
            .encode_image(&luma)
            .map_err(|e| JndError::Codec(e.to_string()))?;
        Ok(buf)
    }

    fn decompress(&self, bytes: &[u8]) -> Result<GrayImage> {
        image_io::decode_any(bytes, Path::new("<jpeg>")).map_err(|e| JndError::Codec(e.to_string()))
    }
}

/// Runs an external command built from a template containing `{in}`,
/// `{out}` and `{quality}`. The input is handed over as 8-bit PNG; the output
/// must be PNG, PNM or JPEG.
#[derive(Debug, Clone)]
pub struct CommandCodec {
    pub template: String,
    /// Extension given to the `{out}` path, which some encoders use to pick a format.
    pub output_extension: String,
}

impl CommandCodec {
    pub fn new(template: impl Into<String>) -> Self {
        CommandCodec {
            template: template.into(),
            output_extension: "jpg".into(),
        }
    }
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

impl CodecAdapter for CommandCodec {
    fn compress(&self, img: &GrayImage, quality: u8) -> Result<Vec<u8>> {
        let dir = std::env::temp_dir().join(format!(
            "kltjnd-codec-{}-{}",
            std::process::id(),
            SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::create_dir_all(&dir).map_err(|e| JndError::io(&dir, e))?;
        let result = (|| {
            let input = dir.join("in.png");
            let output = dir.join(format!("out.{}", self.output_extension));
            image_io::save_image(img, &input)?;
            let cmd = self
                .template
                .replace("{in}", &shell_quote(&input))
                .replace("{out}", &shell_quote(&output))
                .replace("{quality}", &quality.to_string());
            let status = Command::new("sh")
                .arg("-c")
                .arg(&cmd)
                .status()
                .map_err(|e| JndError::Codec(format!("cannot spawn `{cmd}`: {e}")))?;
            if !status.success() {
                return Err(JndError::Codec(format!("`{cmd}` exited with {status}")));
            }
            fs::read(&output).map_err(|e| JndError::Codec(format!("codec produced no output: {e}")))
        })();
        let _ = fs::remove_dir_all(&dir);
        result
    }

    fn decompress(&self, bytes: &[u8]) -> Result<GrayImage> {
        image_io::decode_any(bytes, Path::new("<codec output>"))
            .map_err(|e| JndError::Codec(e.to_string()))
    }
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

#[derive(Debug, Clone)]
pub struct CodecOutput {
    /// Bits per pixel.
    pub bitrate: f64,
    pub compressed_bytes: usize,
    pub decoded: GrayImage,
}

pub fn run_codec(img: &GrayImage, quality: u8, codec: &dyn CodecAdapter) -> Result<CodecOutput> {
    let bytes = codec.compress(img, quality)?;
    if bytes.is_empty() {
        return Err(JndError::Codec("codec produced an empty stream".into()));
    }
    let decoded = codec.decompress(&bytes)?;
    if decoded.dims() != img.dims() {
        return Err(JndError::Codec(format!(
            "decoded {}x{} from a {}x{} input",
            decoded.width(),
            decoded.height(),
            img.width(),
            img.height()
        )));
    }
    Ok(CodecOutput {
        bitrate: bits_per_pixel(bytes.len(), img.width(), img.height()),
        compressed_bytes: bytes.len(),
        decoded,
    })
}
