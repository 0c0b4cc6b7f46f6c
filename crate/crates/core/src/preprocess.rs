//! Centering, principal components, and PCA/ZCA whitening.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Source};
use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Matrix};

/// Default whitening regularizer for image data.
pub const DEFAULT_IMAGE_EPSILON: f64 = 1e-5;

const EIGEN_CLAMP: f64 = 1e-12;

/// Top principal directions of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `k × n`, orthonormal rows.
    pub components: Matrix,
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
}

impl PcaBasis {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.components.cols()
    }

    /// Coordinates of `x` in the basis.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.components.matvec(&centered)
    }

    /// Back to input space from basis coordinates.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = self.components.matvec_t(coords);
        x.iter_mut().zip(&self.mean).for_each(|(v, m)| *v += m);
        x
    }

    /// Mean squared reconstruction error over `data` using the first `k` components.
    pub fn reconstruction_error(&self, data: &Dataset, k: usize) -> f64 {
        let k = k.min(self.k());
        let mut total = 0.0;
        for x in data.rows() {
            let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
            let mut residual = centered.clone();
            for c in 0..k {
                let row = self.components.row(c);
                let coeff = dot(row, &centered);
                crate::linalg::axpy(-coeff, row, &mut residual);
            }
            total += dot(&residual, &residual);
        }
        total / data.num_samples() as f64
    }
}

fn clamp_eigenvalues(values: &mut [f64]) {
    for v in values.iter_mut() {
        if *v < EIGEN_CLAMP {
            *v = 0.0;
        }
    }
}

/// Top-`k` eigenvectors of the sample covariance.
pub fn fit_pca(data: &Dataset, k: usize) -> Result<PcaBasis> {
    let limit = data.num_samples().min(data.dim());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={limit}"
        )));
    }
    let mean = data.mean();
    let eig = symmetric_eigen(&data.covariance())?;
    let mut eigenvalues = eig.values[..k].to_vec();
    clamp_eigenvalues(&mut eigenvalues);
    let n = data.dim();
    let components = Matrix::from_vec(k, n, eig.vectors.as_slice()[..k * n].to_vec())?;
    Ok(PcaBasis {
        mean,
        components,
        eigenvalues,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhitenMode {
    Pca,
    Zca,
}

impl WhitenMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WhitenMode::Pca => "pca",
            WhitenMode::Zca => "zca",
        }
    }
}

/// Affine whitening map and its exact inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenTransform {
    pub mean: Vec<f64>,
    /// `n × n`, rows are covariance eigenvectors.
    pub rotation: Matrix,
    /// `1 / sqrt(eigenvalue + epsilon)`.
    pub scales: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub epsilon: f64,
    pub mode: WhitenMode,
}

pub fn whiten_fit(data: &Dataset, epsilon: f64, mode: WhitenMode) -> Result<WhitenTransform> {
    if data.num_samples() < 2 {
        return Err(Error::InvalidArgument(
            "whitening needs at least two samples".into(),
        ));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let mean = data.mean();
    let eig = symmetric_eigen(&data.covariance())?;
    let mut eigenvalues = eig.values;
    clamp_eigenvalues(&mut eigenvalues);
    let mut scales = Vec::with_capacity(eigenvalues.len());
    for (index, &lambda) in eigenvalues.iter().enumerate() {
        let s = 1.0 / libm::sqrt(lambda + epsilon);
        if !s.is_finite() {
            return Err(Error::SingularWhitening {
                index,
                eigenvalue: lambda,
                epsilon,
            });
        }
        scales.push(s);
    }
    Ok(WhitenTransform {
        mean,
        rotation: eig.vectors,
        scales,
        eigenvalues,
        epsilon,
        mode,
    })
}

impl WhitenTransform {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check_dim(&self, data: &Dataset) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.dim(),
            });
        }
        Ok(())
    }

    /// PCA-whitened coordinates of one sample.
    pub fn pca_vector(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let mut y = self.rotation.matvec(&centered);
        y.iter_mut().zip(&self.scales).for_each(|(v, s)| *v *= s);
        y
    }

    pub fn apply_vector(&self, x: &[f64]) -> Vec<f64> {
        let y = self.pca_vector(x);
        match self.mode {
            WhitenMode::Pca => y,
            WhitenMode::Zca => self.rotation.matvec_t(&y),
        }
    }

    pub fn invert_vector(&self, y: &[f64]) -> Vec<f64> {
        let rotated = match self.mode {
            WhitenMode::Pca => y.to_vec(),
            WhitenMode::Zca => self.rotation.matvec(y),
        };
        let unscaled: Vec<f64> = rotated.iter().zip(&self.scales).map(|(v, s)| v / s).collect();
        let mut x = self.rotation.matvec_t(&unscaled);
        x.iter_mut().zip(&self.mean).for_each(|(v, m)| *v += m);
        x
    }

    fn map(&self, data: &Dataset, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Dataset> {
        self.check_dim(data)?;
        let mut out = Matrix::zeros(data.num_samples(), data.dim());
        for (i, x) in data.rows().enumerate() {
            out.row_mut(i).copy_from_slice(&f(x));
        }
        let source = if data.source() == Source::Mnist {
            Source::File
        } else {
            data.source()
        };
        Dataset::new(out, source, data.seed())
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        self.map(data, |x| self.apply_vector(x))
    }

    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        self.map(data, |y| self.invert_vector(y))
    }
}
