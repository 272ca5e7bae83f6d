use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Gaussian random-walk proposal `N(center, scale² Σ)`.
#[derive(Debug, Clone)]
pub struct ProposalKernel {
    scale: f64,
    covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl ProposalKernel {
    pub fn new(scale: f64, covariance: DMatrix<f64>) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("proposal scale {scale}")));
        }
        if !covariance.is_square() || covariance.nrows() == 0 {
            return Err(Error::InvalidParameter("covariance must be square".into()));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or(Error::SingularCovariance)?
            .l();
        let d = covariance.nrows() as f64;
        let log_det_l: f64 = chol.diagonal().iter().map(|v| v.ln()).sum();
        let log_norm = 0.5 * d * (2.0 * std::f64::consts::PI).ln() + d * scale.ln() + log_det_l;
        Ok(Self {
            scale,
            covariance,
            chol,
            log_norm,
        })
    }

    pub fn isotropic(dim: usize, scale: f64) -> Result<Self> {
        Self::new(scale, DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(scale, self.covariance.clone())
    }

    pub fn sample<R: Rng + ?Sized>(&self, center: &[f64], rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = &self.chol * z;
        center
            .iter()
            .zip(step.iter())
            .map(|(c, s)| c + self.scale * s)
            .collect()
    }

    /// `x` mapped to coordinates in which the kernel is `N(·, I)`.
    pub(crate) fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        let z = self
            .chol
            .solve_lower_triangular(&v)
            .expect("Cholesky factor has a positive diagonal");
        z.iter().map(|c| c / self.scale).collect()
    }

    pub(crate) fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn log_density(&self, x: &[f64], center: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
        let z = self.whiten(&diff);
        -0.5 * z.iter().map(|v| v * v).sum::<f64>() - self.log_norm
    }
}
