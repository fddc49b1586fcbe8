//! Top-down just noticeable difference (JND) estimation.
//!
//! An image is split into non-overlapping 8×8 patches, decorrelated with a
//! Karhunen-Loève transform learned from the image itself, and reconstructed
//! from the leading `L` spectral components. `L` is the expected component
//! index under a Weibull prior over cumulative coefficient energy. The
//! absolute difference between the image and that critical perceptual
//! lossless (CPL) reconstruction is the JND map.
//!
//! The map drives three downstream uses: noise injection at a target PSNR,
//! smoothing before compression, and conversion to a per-pixel detection
//! probability. [`calibration`] rebuilds the Weibull prior from subjective
//! vote data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod calibration;
pub mod critical_point;
mod error;
pub mod image_io;
pub mod jnd;
pub mod klt;
pub mod spectral;
pub mod vdp;

pub use applications::{
    calibrate_theta, compression_gain, inject_noise, jnd_smooth, run_codec, CodecAdapter,
    CodecOutput, CommandCodec, CompressionGain, JpegCodec, NoiseConfig,
};
pub use calibration::{
    aggregate_critical_point, collect_energy_thresholds, fit_weibull, sigma_filter,
    AggregationResult, VoteRecord,
};
pub use critical_point::{
    estimate_critical_point, reconstruct_cpl, weibull_log_pdf, CplResult, CriticalPoint,
    WeibullParams,
};
pub use error::{JndError, Result};
pub use image_io::{load_image, pad_to_block_multiple, psnr, GrayImage, PaddedImage};
pub use jnd::{estimate_jnd, jnd_map, map_rmse, normalize_map, JndMap, JndResult};
pub use klt::{
    assemble_image, covariance, eigendecompose_sym, extract_patches, forward_klt, inverse_klt,
    truncate_coefficients, CoefficientMatrix, CovarianceMatrix, KltKernel, PatchMatrix,
};
pub use spectral::{coefficient_energy, cumulative_energy, normalize_energy, EnergyProfile};
pub use vdp::{jnd_to_vdp, psychometric, vdp_rmse, ProbabilityMap, PsychometricParams};

/// Patch side length used throughout unless configured otherwise.
pub const DEFAULT_BLOCK: usize = 8;
