//! Conversion of a JND map into a per-pixel distortion detection probability.

use std::path::Path;

use crate::error::{JndError, Result};
use crate::image_io::{self, GrayImage};
use crate::jnd::{rmse, JndMap};

/// Floor on the JND denominator, in intensity units.
pub const JND_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsychometricParams {
    pub beta_slope: f64,
}

impl PsychometricParams {
    pub const DEFAULT_SLOPE: f64 = 3.5;

    pub fn new(beta_slope: f64) -> Result<Self> {
        if !(beta_slope > 0.0 && beta_slope.is_finite()) {
            return Err(JndError::InvalidParameter(format!(
                "psychometric slope must be positive, got {beta_slope}"
            )));
        }
        Ok(PsychometricParams { beta_slope })
    }
}

impl Default for PsychometricParams {
    fn default() -> Self {
        PsychometricParams {
            beta_slope: Self::DEFAULT_SLOPE,
        }
    }
}

/// Per-pixel probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(JndError::DimensionMismatch {
                expected: format!("{} samples", width * height),
                actual: format!("{} samples", data.len()),
            });
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(JndError::InvalidParameter(format!(
                "probability {v} outside [0, 1]"
            )));
        }
        Ok(ProbabilityMap {
            width,
            height,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (w, h, data) = image_io::load_map(path.as_ref())?;
        // 8-bit marking maps are stored as 0..255
        let is_pfm = {
            let mut magic = [0u8; 2];
            use std::io::Read;
            std::fs::File::open(path.as_ref())
                .and_then(|mut f| f.read_exact(&mut magic))
                .map(|_| magic[0] == b'P' && (magic[1] == b'f' || magic[1] == b'F'))
                .unwrap_or(false)
        };
        let data = if is_pfm {
            data
        } else {
            data.into_iter().map(|v| v / 255.0).collect()
        };
        Self::new(w, h, data)
    }

    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        image_io::write_pfm(path, self.width, self.height, &self.data)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        image_io::save_unit_map_png(path, self.width, self.height, &self.data)
    }
}

/// `p(x) = 1 − exp(ln(0.5)·x^β)`; `p(1) = 0.5`.
pub fn psychometric(x: f64, params: &PsychometricParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(JndError::InvalidParameter(format!(
            "psychometric input must be non-negative, got {x}"
        )));
    }
    let log_half = -std::f64::consts::LN_2;
    Ok(-(log_half * x.powf(params.beta_slope)).exp_m1())
}

/// Detection probability of `|distorted − original|` relative to the JND map.
pub fn jnd_to_vdp(
    original: &GrayImage,
    distorted: &GrayImage,
    m: &JndMap,
    params: &PsychometricParams,
) -> Result<ProbabilityMap> {
    original.check_same_dims(distorted.dims())?;
    original.check_same_dims(m.dims())?;
    let data = original
        .samples()
        .iter()
        .zip(distorted.samples())
        .zip(m.data())
        .map(|((o, d), t)| psychometric((d - o).abs() / t.max(JND_FLOOR), params))
        .collect::<Result<Vec<_>>>()?;
    ProbabilityMap::new(original.width(), original.height(), data)
}

pub fn vdp_rmse(pred: &ProbabilityMap, marking: &ProbabilityMap) -> Result<f64> {
    if pred.dims() != marking.dims() {
        return Err(JndError::dims(pred.dims(), marking.dims()));
    }
    Ok(rmse(&pred.data, &marking.data))
}
