//! Python bindings. Images and maps cross the boundary as flat row-major
//! lists of floats.

use std::path::PathBuf;

use kltjnd::{JndError, WeibullParams};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: JndError) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else if e.is_codec() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn weibull(beta: Option<f64>, eta: Option<f64>) -> PyResult<WeibullParams> {
    WeibullParams::new(
        beta.unwrap_or(WeibullParams::DEFAULT_BETA),
        eta.unwrap_or(WeibullParams::DEFAULT_ETA),
    )
    .map_err(to_py)
}

/// Grayscale image with real-valued samples.
#[pyclass(name = "Image", module = "pykltjnd", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImage(kltjnd::GrayImage);

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, samples: Vec<f64>) -> PyResult<Self> {
        kltjnd::GrayImage::new(width, height, samples)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: f64) -> PyResult<Self> {
        kltjnd::GrayImage::filled(width, height, value)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn samples(&self) -> Vec<f64> {
        self.0.samples().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(PyValueError::new_err("pixel out of range"));
        }
        Ok(self.0.get(x, y))
    }

    /// Writes 8-bit PNG, or binary PGM for `.pgm` paths.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        kltjnd::image_io::save_image(&self.0, path).map_err(to_py)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.0.width(), self.0.height())
    }
}

/// Non-negative per-pixel JND map.
#[pyclass(name = "JndMap", module = "pykltjnd", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyJndMap(kltjnd::JndMap);

#[pymethods]
impl PyJndMap {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        kltjnd::JndMap::new(width, height, data)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        kltjnd::JndMap::load(path).map(Self).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn data(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    fn max(&self) -> f64 {
        self.0.max()
    }

    fn write_pfm(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_pfm(path).map_err(to_py)
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        self.0.save_png(path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "JndMap({}x{}, max={})",
            self.0.width(),
            self.0.height(),
            self.0.max()
        )
    }
}

#[pyclass(name = "CplResult", module = "pykltjnd", frozen, get_all)]
struct PyCplResult {
    cpl: PyImage,
    critical: usize,
    cumulative_at_critical: f64,
    fallback: bool,
}

impl From<kltjnd::CplResult> for PyCplResult {
    fn from(r: kltjnd::CplResult) -> Self {
        Self {
            cpl: PyImage(r.cpl),
            critical: r.critical.get(),
            cumulative_at_critical: r.cumulative_at_critical,
            fallback: r.fallback,
        }
    }
}

#[pyfunction]
fn load_image(path: PathBuf) -> PyResult<PyImage> {
    kltjnd::load_image(path).map(PyImage).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (img, beta=None, eta=None, block=8))]
fn reconstruct_cpl(
    img: &PyImage,
    beta: Option<f64>,
    eta: Option<f64>,
    block: usize,
) -> PyResult<PyCplResult> {
    kltjnd::reconstruct_cpl(&img.0, &weibull(beta, eta)?, block)
        .map(Into::into)
        .map_err(to_py)
}

/// Returns `(map, cpl_result)`.
#[pyfunction]
#[pyo3(signature = (img, beta=None, eta=None, block=8))]
fn estimate_jnd(
    img: &PyImage,
    beta: Option<f64>,
    eta: Option<f64>,
    block: usize,
) -> PyResult<(PyJndMap, PyCplResult)> {
    let r = kltjnd::estimate_jnd(&img.0, &weibull(beta, eta)?, block).map_err(to_py)?;
    Ok((PyJndMap(r.map), r.cpl.into()))
}

#[pyfunction]
fn jnd_map(original: &PyImage, cpl: &PyImage) -> PyResult<PyJndMap> {
    kltjnd::jnd_map(&original.0, &cpl.0)
        .map(PyJndMap)
        .map_err(to_py)
}

#[pyfunction]
fn normalize_map(m: &PyJndMap) -> PyJndMap {
    PyJndMap(kltjnd::normalize_map(&m.0))
}

#[pyfunction]
fn map_rmse(a: &PyJndMap, b: &PyJndMap) -> PyResult<f64> {
    kltjnd::map_rmse(&a.0, &b.0).map_err(to_py)
}

#[pyfunction]
fn psnr(a: &PyImage, b: &PyImage) -> PyResult<f64> {
    match kltjnd::psnr(&a.0, &b.0) {
        Err(JndError::IdenticalImages) => Ok(f64::INFINITY),
        other => other.map_err(to_py),
    }
}

#[pyfunction]
fn inject_noise(img: &PyImage, m: &PyJndMap, theta: f64, seed: u64) -> PyResult<PyImage> {
    let cfg = kltjnd::NoiseConfig::new(theta, seed).map_err(to_py)?;
    kltjnd::inject_noise(&img.0, &m.0, &cfg)
        .map(PyImage)
        .map_err(to_py)
}

#[pyfunction]
fn calibrate_theta(img: &PyImage, m: &PyJndMap, target_psnr: f64, seed: u64) -> PyResult<f64> {
    kltjnd::calibrate_theta(&img.0, &m.0, target_psnr, seed).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (img, m, block=8))]
fn jnd_smooth(img: &PyImage, m: &PyJndMap, block: usize) -> PyResult<PyImage> {
    kltjnd::jnd_smooth(&img.0, &m.0, block)
        .map(PyImage)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, slope=kltjnd::PsychometricParams::DEFAULT_SLOPE))]
fn psychometric(x: f64, slope: f64) -> PyResult<f64> {
    let params = kltjnd::PsychometricParams::new(slope).map_err(to_py)?;
    kltjnd::psychometric(x, &params).map_err(to_py)
}

/// Per-pixel detection probability as a flat list.
#[pyfunction]
#[pyo3(signature = (reference, distorted, m, slope=kltjnd::PsychometricParams::DEFAULT_SLOPE))]
fn jnd_to_vdp(
    reference: &PyImage,
    distorted: &PyImage,
    m: &PyJndMap,
    slope: f64,
) -> PyResult<Vec<f64>> {
    let params = kltjnd::PsychometricParams::new(slope).map_err(to_py)?;
    kltjnd::jnd_to_vdp(&reference.0, &distorted.0, &m.0, &params)
        .map(|p| p.data().to_vec())
        .map_err(to_py)
}

/// Returns `(delta_bitrate, delta_psnr, gain)`; `gain` is `None` when the
/// PSNR did not drop.
#[pyfunction]
fn compression_gain(
    bitrate_ori: f64,
    bitrate_jnd: f64,
    psnr_ori: f64,
    psnr_jnd: f64,
) -> PyResult<(f64, f64, Option<f64>)> {
    let g =
        kltjnd::compression_gain(bitrate_ori, bitrate_jnd, psnr_ori, psnr_jnd).map_err(to_py)?;
    Ok((g.delta_bitrate, g.delta_psnr, g.gain))
}

/// Returns `(beta, eta)`.
#[pyfunction]
fn fit_weibull(samples: Vec<f64>) -> PyResult<(f64, f64)> {
    kltjnd::fit_weibull(&samples)
        .map(|p| (p.beta, p.eta))
        .map_err(to_py)
}

#[pyfunction]
fn sigma_filter(votes: Vec<u32>) -> PyResult<Vec<u32>> {
    kltjnd::sigma_filter(&votes).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cumulative, beta=None, eta=None))]
fn estimate_critical_point(
    cumulative: Vec<f64>,
    beta: Option<f64>,
    eta: Option<f64>,
) -> PyResult<usize> {
    kltjnd::estimate_critical_point(&cumulative, &weibull(beta, eta)?)
        .map(|l| l.get())
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, beta=None, eta=None))]
fn weibull_log_pdf(x: f64, beta: Option<f64>, eta: Option<f64>) -> PyResult<f64> {
    kltjnd::weibull_log_pdf(x, &weibull(beta, eta)?).map_err(to_py)
}

#[pymodule]
fn pykltjnd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyJndMap>()?;
    m.add_class::<PyCplResult>()?;
    m.add("DEFAULT_BETA", WeibullParams::DEFAULT_BETA)?;
    m.add("DEFAULT_ETA", WeibullParams::DEFAULT_ETA)?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_cpl, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_jnd, m)?)?;
    m.add_function(wrap_pyfunction!(jnd_map, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_map, m)?)?;
    m.add_function(wrap_pyfunction!(map_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(inject_noise, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_theta, m)?)?;
    m.add_function(wrap_pyfunction!(jnd_smooth, m)?)?;
    m.add_function(wrap_pyfunction!(psychometric, m)?)?;
    m.add_function(wrap_pyfunction!(jnd_to_vdp, m)?)?;
    m.add_function(wrap_pyfunction!(compression_gain, m)?)?;
    m.add_function(wrap_pyfunction!(fit_weibull, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_filter, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_critical_point, m)?)?;
    m.add_function(wrap_pyfunction!(weibull_log_pdf, m)?)?;
    Ok(())
}
