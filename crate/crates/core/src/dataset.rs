//! Sample collections and the synthetic generators: gaussians, mixtures of
//! gaussians, and the noisy line segment used for the saturation argument.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::rng::Rng;

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Gaussian,
    Mog,
    LineManifold,
    Mnist,
    File,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Gaussian => "gaussian",
            Source::Mog => "mog",
            Source::LineManifold => "line_manifold",
            Source::Mnist => "mnist",
            Source::File => "file",
        }
    }
}

/// Row-major samples plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Matrix,
    source: Source,
    seed: Option<u64>,
}

impl Dataset {
    /// Validates finiteness, non-emptiness, and the `[0, 1]` range for MNIST data.
    pub fn new(samples: Matrix, source: Source, seed: Option<u64>) -> Result<Self> {
        if samples.rows() == 0 || samples.cols() == 0 {
            return Err(Error::EmptyDataset);
        }
        for (i, row) in samples.row_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if source == Source::Mnist && !(0.0..=1.0).contains(v) {
                    return Err(Error::Format(format!(
                        "mnist sample {i} coordinate {j} = {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Dataset {
            samples,
            source,
            seed,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Dataset::new(Matrix::from_rows(rows)?, Source::File, None)
    }

    #[inline]
    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn into_samples(self) -> Matrix {
        self.samples
    }

    #[inline]
    pub fn source(&self) -> Source {
        self.source
    }

    #[inline]
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn num_samples(&self) -> usize {
        self.samples.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.samples.row_iter()
    }

    /// Rows `start..end`, keeping provenance.
    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        let end = end.min(self.num_samples());
        if start >= end {
            return Err(Error::EmptyDataset);
        }
        let cols = self.dim();
        let data = self.samples.as_slice()[start * cols..end * cols].to_vec();
        Ok(Dataset {
            samples: Matrix::from_vec(end - start, cols, data)?,
            source: self.source,
            seed: self.seed,
        })
    }

    /// Sample mean per coordinate.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.dim()];
        for row in self.rows() {
            crate::linalg::axpy(1.0, row, &mut mean);
        }
        let n = self.num_samples() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Sample covariance with `1/(N-1)` normalization (`1/N` when `N = 1`).
    pub fn covariance(&self) -> Matrix {
        let mean = self.mean();
        let d = self.dim();
        let mut cov = Matrix::zeros(d, d);
        let mut centered = alloc::vec![0.0; d];
        for row in self.rows() {
            for ((c, x), m) in centered.iter_mut().zip(row).zip(&mean) {
                *c = x - m;
            }
            for i in 0..d {
                let ci = centered[i];
                if ci == 0.0 {
                    continue;
                }
                let dst = cov.row_mut(i);
                for j in i..d {
                    dst[j] += ci * centered[j];
                }
            }
        }
        let denom = (self.num_samples().max(2) - 1) as f64;
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        cov
    }
}

/// One weighted gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

/// Validated mixture of gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("mixture has no components".to_string()))?;
        let dim = first.mean.len();
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if !(c.weight >= 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "component {i} weight {} is not a probability",
                    c.weight
                )));
            }
            if c.mean.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.mean.len(),
                });
            }
            GaussianSampler::new(&c.mean, &c.covariance)?;
            total += c.weight;
        }
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(MixtureSpec { components })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }
}

/// Draws from `N(mean, cov)` as `mean + Q diag(sqrt(λ)) z`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    /// Columns are eigenvectors scaled by the square root of their eigenvalue.
    factor: Matrix,
}

const PSD_CLAMP: f64 = 1e-12;

impl GaussianSampler {
    pub fn new(mean: &[f64], covariance: &Matrix) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if covariance.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: covariance.rows(),
            });
        }
        if !covariance.is_finite() || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "mean and covariance must be finite".to_string(),
            ));
        }
        let scale = covariance
            .as_slice()
            .iter()
            .fold(1.0f64, |s, v| s.max(libm::fabs(*v)));
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = libm::fabs(covariance[(i, j)] - covariance[(j, i)]);
                if diff > 1e-12 * scale {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            }
        }
        let eig = symmetric_eigen(covariance)?;
        let mut factor = Matrix::zeros(n, n);
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda < -PSD_CLAMP * scale {
                return Err(Error::NotPsd {
                    index: k,
                    value: lambda,
                });
            }
            let root = if lambda < PSD_CLAMP { 0.0 } else { libm::sqrt(lambda) };
            for i in 0..n {
                factor[(i, k)] = eig.vectors[(k, i)] * root;
            }
        }
        Ok(GaussianSampler {
            mean: mean.to_vec(),
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        let z: Vec<f64> = (0..self.dim()).map(|_| rng.normal()).collect();
        out.copy_from_slice(&self.mean);
        for (i, o) in out.iter_mut().enumerate() {
            *o += crate::linalg::dot(self.factor.row(i), &z);
        }
    }
}

/// `num_samples` i.i.d. draws from `N(mean, covariance)`.
pub fn gen_gaussian(
    num_samples: usize,
    mean: &[f64],
    covariance: &Matrix,
    seed: u64,
) -> Result<Dataset> {
    let sampler = GaussianSampler::new(mean, covariance)?;
    let n = sampler.dim();
    let mut rng = Rng::from_seed(seed);
    let mut samples = Matrix::zeros(num_samples, n);
    for i in 0..num_samples {
        sampler.sample_into(&mut rng, samples.row_mut(i));
    }
    Dataset::new(samples, Source::Gaussian, Some(seed))
}

/// Samples a component by weight, then a point from it. A single-component
/// mixture skips the component draw and matches [`gen_gaussian`] exactly.
pub fn gen_mog(num_samples: usize, spec: &MixtureSpec, seed: u64) -> Result<Dataset> {
    let samplers = spec
        .components()
        .iter()
        .map(|c| GaussianSampler::new(&c.mean, &c.covariance))
        .collect::<Result<Vec<_>>>()?;
    let mut cumulative = Vec::with_capacity(samplers.len());
    let mut acc = 0.0;
    for c in spec.components() {
        acc += c.weight;
        cumulative.push(acc);
    }
    // rounding can leave u >= acc; fall back to the last component that has mass
    let last_live = spec
        .components()
        .iter()
        .rposition(|c| c.weight > 0.0)
        .unwrap_or(0);

    let mut rng = Rng::from_seed(seed);
    let mut samples = Matrix::zeros(num_samples, spec.dim());
    for i in 0..num_samples {
        let which = if samplers.len() == 1 {
            0
        } else {
            let u = rng.uniform();
            cumulative.iter().position(|&c| u < c).unwrap_or(last_live)
        };
        samplers[which].sample_into(&mut rng, samples.row_mut(i));
    }
    Dataset::new(samples, Source::Mog, Some(seed))
}

/// Rows `[x, ε]` with `x ~ U(0, extent)` and `ε ~ N(0, noise_std²)`.
pub fn gen_line_manifold(
    num_samples: usize,
    extent: f64,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "line extent must be positive and finite, got {extent}"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise std must be nonnegative, got {noise_std}"
        )));
    }
    let mut rng = Rng::from_seed(seed);
    let mut samples = Matrix::zeros(num_samples, 2);
    for i in 0..num_samples {
        let x = extent * rng.uniform_open();
        let eps = if noise_std == 0.0 {
            0.0
        } else {
            noise_std * rng.normal()
        };
        let row = samples.row_mut(i);
        // uniform_open can round up to the bound for large extents
        row[0] = if x >= extent { extent * (1.0 - f64::EPSILON) } else { x };
        row[1] = eps;
    }
    Dataset::new(samples, Source::LineManifold, Some(seed))
}
