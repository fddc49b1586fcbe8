//! Weibull prior over cumulative energy, critical component count, and the
//! critical perceptual lossless (CPL) reconstruction pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{JndError, Result};
use crate::image_io::{pad_to_block_multiple, GrayImage, PaddedImage};
use crate::klt::{
    assemble_image, covariance, eigendecompose_sym, extract_patches, forward_klt, inverse_klt,
    truncate_coefficients, CoefficientMatrix, KltKernel,
};
use crate::spectral::EnergyProfile;

/// Shape and scale of the two-parameter Weibull prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub beta: f64,
    pub eta: f64,
}

impl WeibullParams {
    /// Shape fitted to subjectively determined critical energies.
    pub const DEFAULT_BETA: f64 = 894.16;
    /// Scale fitted to subjectively determined critical energies.
    pub const DEFAULT_ETA: f64 = 0.998;

    pub fn new(beta: f64, eta: f64) -> Result<Self> {
        let params = WeibullParams { beta, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite() && self.eta > 0.0 && self.eta.is_finite()) {
            return Err(JndError::InvalidParameter(format!(
                "Weibull parameters must be positive and finite (beta={}, eta={})",
                self.beta, self.eta
            )));
        }
        Ok(())
    }

    /// Reads `{"beta": .., "eta": ..}`; missing keys fall back to the defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Partial {
            beta: Option<f64>,
            eta: Option<f64>,
        }
        let partial: Partial = serde_json::from_str(text)
            .map_err(|e| JndError::InvalidParameter(format!("bad Weibull config: {e}")))?;
        let default = WeibullParams::default();
        WeibullParams::new(
            partial.beta.unwrap_or(default.beta),
            partial.eta.unwrap_or(default.eta),
        )
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| JndError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

impl Default for WeibullParams {
    fn default() -> Self {
        WeibullParams {
            beta: Self::DEFAULT_BETA,
            eta: Self::DEFAULT_ETA,
        }
    }
}

/// Number of leading spectral components kept, in `[1, K]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CriticalPoint(usize);

impl CriticalPoint {
    pub fn new(count: usize, max: usize) -> Result<Self> {
        if count == 0 || count > max {
            return Err(JndError::ComponentOutOfRange { count, max });
        }
        Ok(CriticalPoint(count))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Log-density of the Weibull distribution, evaluated without forming the
/// density itself so that large shapes do not underflow.
pub fn weibull_log_pdf(x: f64, params: &WeibullParams) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(JndError::InvalidParameter(format!(
            "Weibull density needs x > 0, got {x}"
        )));
    }
    let WeibullParams { beta, eta } = *params;
    let log_ratio = (x / eta).ln();
    Ok((beta / eta).ln() + (beta - 1.0) * log_ratio - (beta * log_ratio).exp())
}

/// Rounds up the prior-weighted mean component index.
///
/// Weights are `f(P_k)` shifted by the largest log-density, which leaves the
/// weighted mean unchanged while keeping every term representable.
pub fn estimate_critical_point(
    cumulative: &[f64],
    params: &WeibullParams,
) -> Result<CriticalPoint> {
    params.validate()?;
    let k = cumulative.len();
    if k == 0 {
        return Err(JndError::InvalidParameter("empty energy profile".into()));
    }
    let log_f = cumulative
        .iter()
        .map(|&p| weibull_log_pdf(p, params))
        .collect::<Result<Vec<_>>>()?;
    let peak = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (mut num, mut den) = (0.0, 0.0);
    for (i, lf) in log_f.iter().enumerate() {
        let w = (lf - peak).exp();
        num += (i + 1) as f64 * w;
        den += w;
    }
    let mean = num / den;
    CriticalPoint::new((mean.ceil() as usize).clamp(1, k), k)
}

/// Intermediate products of the transform stage for one image.
#[derive(Debug, Clone)]
pub struct KltAnalysis {
    pub padded: PaddedImage,
    pub kernel: KltKernel,
    pub coefficients: CoefficientMatrix,
    /// `None` when the image carries no usable energy.
    pub profile: Option<EnergyProfile>,
    pub block: usize,
}

impl KltAnalysis {
    pub fn components(&self) -> usize {
        self.block * self.block
    }
}

/// Pads, extracts patches, learns the kernel and transforms.
pub fn analyze(img: &GrayImage, block: usize) -> Result<KltAnalysis> {
    if block == 0 {
        return Err(JndError::InvalidParameter(
            "block size must be positive".into(),
        ));
    }
    img.validate_for_jnd()?;
    let padded = pad_to_block_multiple(img, block);
    let patches = extract_patches(&padded.image, block)?;
    let kernel = eigendecompose_sym(&covariance(&patches)?)?;
    let coefficients = forward_klt(&kernel, &patches)?;
    let profile = match EnergyProfile::from_coefficients(&coefficients) {
        Ok(p) => Some(p),
        Err(JndError::DegenerateEnergy(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(KltAnalysis {
        padded,
        kernel,
        coefficients,
        profile,
        block,
    })
}

/// Output of [`reconstruct_cpl`].
#[derive(Debug, Clone)]
pub struct CplResult {
    pub cpl: GrayImage,
    pub critical: CriticalPoint,
    /// Cumulative normalized energy at the critical point.
    pub cumulative_at_critical: f64,
    /// Set when the image is constant or has no energy: `L = K` and the CPL
    /// image is the input itself.
    pub fallback: bool,
}

/// Reconstructs `img` from its leading `L` spectral components, `L` chosen
/// by [`estimate_critical_point`]. Output is cropped to the input size and
/// left unclamped.
pub fn reconstruct_cpl(img: &GrayImage, params: &WeibullParams, block: usize) -> Result<CplResult> {
    params.validate()?;
    let analysis = analyze(img, block)?;
    reconstruct_from_analysis(img, &analysis, params)
}

pub fn reconstruct_from_analysis(
    img: &GrayImage,
    analysis: &KltAnalysis,
    params: &WeibullParams,
) -> Result<CplResult> {
    let k = analysis.components();
    let profile = match &analysis.profile {
        Some(p) if !img.is_constant() => p,
        _ => {
            return Ok(CplResult {
                cpl: img.clone(),
                critical: CriticalPoint::new(k, k)?,
                cumulative_at_critical: 1.0,
                fallback: true,
            })
        }
    };
    let critical = estimate_critical_point(&profile.cumulative, params)?;
    let truncated = truncate_coefficients(&analysis.coefficients, critical.get())?;
    let patches = inverse_klt(&analysis.kernel, &truncated)?;
    let padded = &analysis.padded;
    let full = assemble_image(
        &patches,
        padded.image.width(),
        padded.image.height(),
        analysis.block,
    )?;
    Ok(CplResult {
        cpl: padded.crop(&full),
        critical,
        cumulative_at_critical: profile.cumulative_at(critical.get())?,
        fallback: false,
    })
}
