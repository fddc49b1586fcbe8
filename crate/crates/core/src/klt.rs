//! Patch extraction, covariance, symmetric eigendecomposition and the
//! forward/inverse/truncated Karhunen-Loève transform.
//!
//! Patches are non-overlapping `block`×`block` tiles taken in raster order
//! and flattened row-major into the columns of a `K`×`S` matrix, `K = block²`.
//! The kernel is learned from the centered covariance, but the transform
//! itself is applied to the raw (uncentered) patches, so the first component
//! carries the patch means and dominates the energy.

use nalgebra::DMatrix;

use crate::error::{JndError, Result};
use crate::image_io::GrayImage;

/// Symmetry tolerance accepted by [`eigendecompose_sym`], relative to `max(1, max|c|)`.
const SYMMETRY_TOL: f64 = 1e-8;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to the trace.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// `K`×`S` matrix of vectorized patches.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    block: usize,
    data: DMatrix<f64>,
}

impl PatchMatrix {
    pub fn new(block: usize, data: DMatrix<f64>) -> Result<Self> {
        if block == 0 || data.nrows() != block * block {
            return Err(JndError::DimensionMismatch {
                expected: format!("{} rows", block * block),
                actual: format!("{} rows", data.nrows()),
            });
        }
        Ok(PatchMatrix { block, data })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// Components per patch.
    pub fn components(&self) -> usize {
        self.data.nrows()
    }

    /// Number of patches.
    pub fn count(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Unbiased sample covariance of the patch vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Wraps an arbitrary square matrix; symmetry is checked at decomposition.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(JndError::DimensionMismatch {
                expected: "square matrix".into(),
                actual: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        Ok(CovarianceMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

/// Orthonormal eigenvectors (columns) with eigenvalues in non-increasing order.
///
/// Each column is signed so that its largest-magnitude entry (the first one,
/// on ties) is non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct KltKernel {
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl KltKernel {
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Negates one eigenvector. The result no longer follows the sign
    /// convention but spans the same subspaces.
    pub fn with_negated_column(&self, k: usize) -> KltKernel {
        let mut out = self.clone();
        out.vectors.column_mut(k).neg_mut();
        out
    }
}

/// `K`×`S` transform coefficients; row `k` is the `k`-th spectral component.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix(DMatrix<f64>);

impl CoefficientMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        CoefficientMatrix(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn components(&self) -> usize {
        self.0.nrows()
    }

    pub fn count(&self) -> usize {
        self.0.ncols()
    }
}

/// Splits an image whose dimensions are multiples of `block` into patch columns.
pub fn extract_patches(img: &GrayImage, block: usize) -> Result<PatchMatrix> {
    let (w, h) = img.dims();
    if block == 0 || w % block != 0 || h % block != 0 {
        return Err(JndError::DimensionMismatch {
            expected: format!("dimensions divisible by {block}"),
            actual: format!("{w}x{h}"),
        });
    }
    let (bx, by) = (w / block, h / block);
    let k = block * block;
    let samples = img.samples();
    let mut data = Vec::with_capacity(k * bx * by);
    for py in 0..by {
        for px in 0..bx {
            for r in 0..block {
                let start = (py * block + r) * w + px * block;
                data.extend_from_slice(&samples[start..start + block]);
            }
        }
    }
    // column-major storage: each patch is one contiguous column
    PatchMatrix::new(block, DMatrix::from_vec(k, bx * by, data))
}

/// Inverse of [`extract_patches`]. Samples are not clamped.
pub fn assemble_image(
    patches: &PatchMatrix,
    width: usize,
    height: usize,
    block: usize,
) -> Result<GrayImage> {
    if block != patches.block
        || !width.is_multiple_of(block)
        || !height.is_multiple_of(block)
        || patches.count() * block * block != width * height
    {
        return Err(JndError::DimensionMismatch {
            expected: format!("{width}x{height} image of {block}x{block} patches"),
            actual: format!(
                "{} patches of {}x{}",
                patches.count(),
                patches.block,
                patches.block
            ),
        });
    }
    let bx = width / block;
    let mut samples = vec![0.0; width * height];
    for (s, col) in patches.data.column_iter().enumerate() {
        let (px, py) = (s % bx, s / bx);
        for r in 0..block {
            let start = (py * block + r) * width + px * block;
            for c in 0..block {
                samples[start + c] = col[r * block + c];
            }
        }
    }
    GrayImage::new(width, height, samples)
}

/// Sample covariance `1/(S−1) Σ (x_s − x̄)(x_s − x̄)ᵀ`.
pub fn covariance(patches: &PatchMatrix) -> Result<CovarianceMatrix> {
    let s = patches.count();
    if s < 2 {
        return Err(JndError::TooFewSamples { needed: 2, got: s });
    }
    let x = &patches.data;
    let mean = x.column_sum() / s as f64;
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let mut c = &centered * centered.transpose();
    c /= (s - 1) as f64;
    let k = c.nrows();
    for i in 0..k {
        for j in 0..i {
            c[(j, i)] = c[(i, j)];
        }
    }
    Ok(CovarianceMatrix(c))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn eigendecompose_sym(c: &CovarianceMatrix) -> Result<KltKernel> {
    let m = &c.0;
    let n = m.nrows();
    let max_abs = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * max_abs.max(1.0) {
        return Err(JndError::NotSymmetric(asym));
    }

    // row-major working copy, symmetrized
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    // The trace bounds the Frobenius norm only for PSD input; take the larger
    // so that indefinite matrices (trace near zero) still converge.
    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * m.trace().abs().max(frobenius);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(JndError::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their solver order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let mut vectors = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues.push(diag[src]);
        let mut best = 0;
        for r in 0..n {
            if v[r * n + src].abs() > v[best * n + src].abs() {
                best = r;
            }
        }
        let sign = if v[best * n + src] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, dst)] = sign * v[r * n + src];
        }
    }
    Ok(KltKernel {
        vectors,
        eigenvalues,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Applies the rotation that annihilates `a[p][q]`, accumulating it into `v`.
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

/// `Y = Pᵀ X`, applied to the raw patches without mean removal.
pub fn forward_klt(kernel: &KltKernel, patches: &PatchMatrix) -> Result<CoefficientMatrix> {
    if kernel.components() != patches.components() {
        return Err(JndError::DimensionMismatch {
            expected: format!("{} components", kernel.components()),
            actual: format!("{} components", patches.components()),
        });
    }
    Ok(CoefficientMatrix(kernel.vectors.tr_mul(&patches.data)))
}

/// Keeps the first `count` rows and zeroes the rest.
pub fn truncate_coefficients(y: &CoefficientMatrix, count: usize) -> Result<CoefficientMatrix> {
    let k = y.components();
    if count == 0 || count > k {
        return Err(JndError::ComponentOutOfRange { count, max: k });
    }
    let mut out = y.0.clone();
    out.rows_mut(count, k - count).fill(0.0);
    Ok(CoefficientMatrix(out))
}

/// `X = P Y`.
pub fn inverse_klt(kernel: &KltKernel, y: &CoefficientMatrix) -> Result<PatchMatrix> {
    let k = kernel.components();
    if k != y.components() {
        return Err(JndError::DimensionMismatch {
            expected: format!("{k} components"),
            actual: format!("{} components", y.components()),
        });
    }
    let block = (k as f64).sqrt().round() as usize;
    PatchMatrix::new(block, &kernel.vectors * &y.0)
}
