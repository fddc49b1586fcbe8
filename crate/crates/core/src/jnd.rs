//! JND maps: construction from a CPL reconstruction, max-normalization and RMSE.

use std::path::Path;

use crate::critical_point::{reconstruct_cpl, CplResult, WeibullParams};
use crate::error::{JndError, Result};
use crate::image_io::{self, GrayImage};

/// Per-pixel visibility threshold in intensity units.
#[derive(Debug, Clone, PartialEq)]
pub struct JndMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl JndMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(JndError::DimensionMismatch {
                expected: format!("{} samples", width * height),
                actual: format!("{} samples", data.len()),
            });
        }
        if let Some(v) = data.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(JndError::InvalidParameter(format!(
                "JND samples must be finite and non-negative, got {v}"
            )));
        }
        Ok(JndMap {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        image_io::write_pfm(path, self.width, self.height, &self.data)
    }

    /// Loads a ground-truth or previously exported map (PFM or 8-bit image).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (w, h, data) = image_io::load_map(path)?;
        Self::new(w, h, data)
    }

    /// 8-bit visualization of the max-normalized map.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let n = normalize_map(self);
        image_io::save_unit_map_png(path, self.width, self.height, &n.data)
    }
}

/// `|original − cpl|` per pixel.
pub fn jnd_map(original: &GrayImage, cpl: &GrayImage) -> Result<JndMap> {
    original.check_same_dims(cpl.dims())?;
    let data = original
        .samples()
        .iter()
        .zip(cpl.samples())
        .map(|(a, b)| (a - b).abs())
        .collect();
    JndMap::new(original.width(), original.height(), data)
}

/// Divides by the map maximum. An all-zero map is returned unchanged.
pub fn normalize_map(m: &JndMap) -> JndMap {
    let max = m.max();
    if max == 0.0 {
        return m.clone();
    }
    JndMap {
        width: m.width,
        height: m.height,
        data: m.data.iter().map(|v| v / max).collect(),
    }
}

pub fn map_rmse(a: &JndMap, b: &JndMap) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(JndError::dims(a.dims(), b.dims()));
    }
    Ok(rmse(&a.data, &b.data))
}

pub(crate) fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// JND map together with the reconstruction it was derived from.
#[derive(Debug, Clone)]
pub struct JndResult {
    pub map: JndMap,
    pub cpl: CplResult,
}

/// Full pipeline: CPL reconstruction followed by the absolute difference.
pub fn estimate_jnd(img: &GrayImage, params: &WeibullParams, block: usize) -> Result<JndResult> {
    let cpl = reconstruct_cpl(img, params, block)?;
    let map = jnd_map(img, &cpl.cpl)?;
    Ok(JndResult { map, cpl })
}
