//! Target densities and priors.
//!
//! Every sampler in the crate consumes a [`LogDensity`]: an unnormalized log
//! density over `R^d` that returns `-inf` outside its support. Densities are
//! immutable once built and are shared across worker threads.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Unnormalized log density on a `dim`-dimensional parameter space.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Log density at `theta`; `-inf` outside the support. Never NaN.
    fn log_density(&self, theta: &[f64]) -> f64;
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
}

/// Maps NaN to `-inf` so callers can treat every non-finite value as zero density.
#[inline]
pub(crate) fn sanitize(lp: f64) -> f64 {
    if lp.is_nan() || lp == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

/// `log(sqrt(10) / pi)`, the Rosenbrock normalizing constant.
pub fn rosenbrock_log_normalizer() -> f64 {
    0.5 * 10f64.ln() - std::f64::consts::PI.ln()
}

/// Normalized log density of the two-dimensional Rosenbrock banana,
/// `log(sqrt(10)/pi) - (1 - t1)^2 - 10 (t2 - t1^2)^2`.
pub fn rosenbrock_logpdf(theta: &[f64]) -> Result<f64> {
    if theta.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: theta.len(),
        });
    }
    if !theta.iter().all(|t| t.is_finite()) {
        return Err(Error::NonFinite("rosenbrock argument"));
    }
    let (t1, t2) = (theta[0], theta[1]);
    let a = 1.0 - t1;
    let b = t2 - t1 * t1;
    Ok(rosenbrock_log_normalizer() - a * a - 10.0 * b * b)
}

/// The Rosenbrock benchmark target.
#[derive(Debug, Clone, Copy, Default)]
pub struct RosenbrockDensity;

impl RosenbrockDensity {
    /// Exact draw: `t1 ~ N(1, 1/2)`, `t2 | t1 ~ N(t1^2, 1/20)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let t1 = 1.0 + z1 * 0.5f64.sqrt();
        let t2 = t1 * t1 + z2 * 0.05f64.sqrt();
        [t1, t2]
    }

    /// Mean of the exact distribution.
    pub fn mean(&self) -> [f64; 2] {
        [1.0, 1.5]
    }

    /// Covariance of the exact distribution, row-major.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        // Var t1 = 1/2, Cov(t1, t1^2) = 2 E[t1] Var t1, Var t1^2 = 4 E[t1]^2 Var t1 + 2 Var t1^2
        [[0.5, 1.0], [1.0, 2.55]]
    }
}

impl LogDensity for RosenbrockDensity {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        rosenbrock_logpdf(theta).map_or(f64::NEG_INFINITY, sanitize)
    }
}

/// Shape-rate Gamma log density. `-inf` for `x <= 0`.
pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma shape {shape}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma rate {rate}")));
    }
    if x.is_nan() {
        return Err(Error::NonFinite("gamma argument"));
    }
    if x <= 0.0 || x == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x)
}

/// Gamma(shape, rate) prior on one coordinate. Mean is `shape / rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        gamma_logpdf(1.0, shape, rate)?;
        Ok(Self { shape, rate })
    }

    pub fn log_density(&self, x: f64) -> f64 {
        gamma_logpdf(x, self.shape, self.rate).map_or(f64::NEG_INFINITY, sanitize)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // rand_distr uses shape-scale
        Gamma::new(self.shape, 1.0 / self.rate)
            .expect("validated on construction")
            .sample(rng)
    }
}

/// Independent Gamma priors, one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPrior {
    pub components: Vec<GammaPrior>,
}

impl ProductPrior {
    pub fn new(components: Vec<GammaPrior>) -> Self {
        Self { components }
    }

    /// Builds from parallel `(shape, rate)` lists.
    pub fn from_pairs(shapes: &[f64], rates: &[f64]) -> Result<Self> {
        if shapes.len() != rates.len() {
            return Err(Error::DimensionMismatch {
                expected: shapes.len(),
                found: rates.len(),
            });
        }
        shapes
            .iter()
            .zip(rates)
            .map(|(&a, &b)| GammaPrior::new(a, b))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// Priors for `(k1 V, k2, k3, k4)` in the two-species multiscale system.
    pub fn two_species() -> Self {
        Self::from_pairs(
            &[150.0, 5.0, 5.0, 3.0],
            &[15.0 / 9.0, 5.0 / 12.0, 5.0 / 12.0, 1.0],
        )
        .expect("constants are valid")
    }

    /// Priors for the eight gene regulatory network rates.
    pub fn gene_regulatory() -> Self {
        Self::from_pairs(
            &[2.0, 100.0, 100.0, 3.0, 3.0, 3.0, 2.0, 2.0],
            &[50.0, 0.02, 1.0, 1.0, 0.6, 1.0, 50.0, 50.0],
        )
        .expect("constants are valid")
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Sum of per-coordinate Gamma log densities.
    pub fn log_density_checked(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.components.len() {
            return Err(Error::DimensionMismatch {
                expected: self.components.len(),
                found: theta.len(),
            });
        }
        let mut total = 0.0;
        for (prior, &x) in self.components.iter().zip(theta) {
            let lp = gamma_logpdf(x, prior.shape, prior.rate)?;
            if lp == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += lp;
        }
        Ok(total)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.components.iter().map(|p| p.sample(rng)).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(GammaPrior::mean).collect()
    }
}

/// Free-function form of [`ProductPrior::log_density_checked`].
pub fn product_prior(priors: &[GammaPrior], theta: &[f64]) -> Result<f64> {
    if priors.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: priors.len(),
            found: theta.len(),
        });
    }
    priors.iter().zip(theta).try_fold(0.0, |acc, (p, &x)| {
        Ok(acc + gamma_logpdf(x, p.shape, p.rate)?)
    })
}

impl LogDensity for ProductPrior {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        self.log_density_checked(theta)
            .map_or(f64::NEG_INFINITY, sanitize)
    }
}

/// Multivariate normal density, normalized.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cov.nrows(),
            });
        }
        let chol = cov.cholesky().ok_or(Error::SingularCovariance)?.unpack();
        let log_det: f64 = chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_norm = -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - log_det;
        Ok(Self {
            mean: DVector::from_vec(mean),
            chol,
            log_norm,
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], DMatrix::identity(d, d)).expect("identity is SPD")
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.mean + &self.chol * z).as_slice().to_vec()
    }
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.mean.len() {
            return f64::NEG_INFINITY;
        }
        let diff = DVector::from_column_slice(theta) - &self.mean;
        match self.chol.solve_lower_triangular(&diff) {
            Some(z) => sanitize(self.log_norm - 0.5 * z.norm_squared()),
            None => f64::NEG_INFINITY,
        }
    }
}

/// Adapts any closure into a [`LogDensity`].
pub struct FnDensity<F> {
    dim: usize,
    f: F,
}

impl<F> FnDensity<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> LogDensity for FnDensity<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        sanitize((self.f)(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rosenbrock_reference_points() {
        let c = rosenbrock_log_normalizer();
        assert_relative_eq!(rosenbrock_logpdf(&[1.0, 1.0]).unwrap(), c);
        assert_relative_eq!(c, 0.006_562_66, epsilon = 1e-7);
        assert_relative_eq!(rosenbrock_logpdf(&[0.0, 0.0]).unwrap(), c - 1.0);
        // (1-2)^2 = 1, 10 (1-4)^2 = 90
        assert_relative_eq!(
            rosenbrock_logpdf(&[2.0, 1.0]).unwrap(),
            c - 91.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rosenbrock_rejects_non_finite() {
        assert!(matches!(
            rosenbrock_logpdf(&[f64::NAN, 0.0]),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(
            RosenbrockDensity.log_density(&[f64::INFINITY, 0.0]),
            f64::NEG_INFINITY
        );
    }

    fn tensor_quadrature(ax: f64, bx: f64, ay: f64, by: f64, nx: usize, ny: usize) -> f64 {
        let (nodes, weights) = gauss_legendre_5();
        let hx = (bx - ax) / nx as f64;
        let hy = (by - ay) / ny as f64;
        let mut total = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                for (xi, wx) in nodes.iter().zip(&weights) {
                    for (yj, wy) in nodes.iter().zip(&weights) {
                        let x = ax + hx * (i as f64 + 0.5 + 0.5 * xi);
                        let y = ay + hy * (j as f64 + 0.5 + 0.5 * yj);
                        total +=
                            wx * wy * 0.25 * hx * hy * RosenbrockDensity.log_density(&[x, y]).exp();
                    }
                }
            }
        }
        total
    }

    /// Mass of the box from the factorization theta2 | theta1 ~ N(theta1^2, 1/20).
    fn box_mass(ax: f64, bx: f64, ay: f64, by: f64) -> f64 {
        use statrs::function::erf::erf;
        let phi = |z: f64| 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2));
        let (nodes, weights) = gauss_legendre_5();
        let n = 4000;
        let h = (bx - ax) / n as f64;
        let s2 = (1.0f64 / 20.0).sqrt();
        let mut total = 0.0;
        for i in 0..n {
            for (xi, wx) in nodes.iter().zip(&weights) {
                let x = ax + h * (i as f64 + 0.5 + 0.5 * xi);
                let marginal = (-(x - 1.0) * (x - 1.0)).exp() / std::f64::consts::PI.sqrt();
                let inner = phi((by - x * x) / s2) - phi((ay - x * x) / s2);
                total += 0.5 * h * wx * marginal * inner;
            }
        }
        total
    }

    #[test]
    fn rosenbrock_integrates_to_one() {
        // [-4,4]x[-2,10] misses the ridge tail beyond theta2 = 10 (about 1.1e-3 of
        // the mass), so compare against the exact box mass and use a taller box
        // for the normalization check.
        let small = tensor_quadrature(-4.0, 4.0, -2.0, 10.0, 160, 240);
        assert!(
            (small - box_mass(-4.0, 4.0, -2.0, 10.0)).abs() < 1e-6,
            "box {small}"
        );
        let tall = tensor_quadrature(-4.0, 4.0, -2.0, 17.0, 160, 380);
        assert!((tall - 1.0).abs() < 1e-3, "integral {tall}");
    }

    fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
        let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
        let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
        ([-b, -a, 0.0, a, b], [wb, wa, 128.0 / 225.0, wa, wb])
    }

    #[test]
    fn gamma_reference_values() {
        assert_relative_eq!(gamma_logpdf(1.0, 1.0, 1.0).unwrap(), -1.0, epsilon = 1e-14);
        // log Gamma(2) = 0
        let expected = 2.0 * 0.5f64.ln() - 0.0 + 2f64.ln() - 1.0;
        assert_relative_eq!(
            gamma_logpdf(2.0, 2.0, 0.5).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_eq!(gamma_logpdf(0.0, 2.0, 1.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(gamma_logpdf(-1.0, 2.0, 1.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn gamma_mode_is_stationary() {
        let (a, b) = (3.0, 1.0);
        let h = 1e-5;
        let d = |x: f64| {
            (gamma_logpdf(x + h, a, b).unwrap() - gamma_logpdf(x - h, a, b).unwrap()) / (2.0 * h)
        };
        assert!(d(2.0).abs() < 1e-8);
        assert!(d(3.0) < -0.1);
    }

    #[test]
    fn gamma_rejects_bad_parameters() {
        assert!(gamma_logpdf(1.0, 0.0, 1.0).is_err());
        assert!(gamma_logpdf(1.0, 1.0, -2.0).is_err());
        assert!(GammaPrior::new(1.0, 0.0).is_err());
    }

    /// Composite 5-point Gauss-Legendre on (0, hi]; no node sits on x = 0.
    #[test]
    fn gamma_integrates_to_one() {
        let (nodes, weights) = gauss_legendre_5();
        for &(a, b) in &[(1.0, 1.0), (3.0, 0.5), (150.0, 15.0 / 9.0)] {
            let mean: f64 = a / b;
            let sd: f64 = a.sqrt() / b;
            let hi = mean + 40.0 * sd + 50.0 / b;
            let n = 20_000;
            let h = hi / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                for (xi, wx) in nodes.iter().zip(&weights) {
                    let x = h * (i as f64 + 0.5 + 0.5 * xi);
                    total += 0.5 * h * wx * gamma_logpdf(x, a, b).unwrap().exp();
                }
            }
            assert!((total - 1.0).abs() < 1e-6, "alpha={a}: {total}");
        }
    }

    #[test]
    fn product_prior_is_additive() {
        let prior = ProductPrior::two_species();
        let modes: Vec<f64> = prior
            .components
            .iter()
            .map(|p| (p.shape - 1.0) / p.rate)
            .collect();
        let expected: f64 = prior
            .components
            .iter()
            .zip(&modes)
            .map(|(p, &x)| gamma_logpdf(x, p.shape, p.rate).unwrap())
            .sum();
        assert_relative_eq!(prior.log_density(&modes), expected, epsilon = 1e-12);

        let means = [90.0, 12.0, 12.0, 3.0];
        assert_eq!(prior.means(), means.to_vec());
        let sum: f64 = prior
            .components
            .iter()
            .zip(&means)
            .map(|(p, &x)| gamma_logpdf(x, p.shape, p.rate).unwrap())
            .sum();
        let lp = product_prior(&prior.components, &means).unwrap();
        assert!(lp.is_finite());
        assert_relative_eq!(lp, sum, epsilon = 1e-12);

        assert_eq!(prior.log_density(&[0.0, 1.0, 1.0, 1.0]), f64::NEG_INFINITY);
        assert!(matches!(
            product_prior(&prior.components, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluation_is_pure() {
        let prior = ProductPrior::gene_regulatory();
        let x = [0.04, 5000.0, 100.0, 1.0, 0.5, 2.0, 0.2, 0.05];
        let a = prior.log_density(&x);
        let b = prior.log_density(&x);
        assert_eq!(a.to_bits(), b.to_bits());
        let r1 = RosenbrockDensity.log_density(&[0.3, -0.7]);
        let r2 = RosenbrockDensity.log_density(&[0.3, -0.7]);
        assert_eq!(r1.to_bits(), r2.to_bits());
    }

    #[test]
    fn gaussian_density_normalized_at_mean() {
        let g = Gaussian::standard(2);
        assert_relative_eq!(
            g.log_density(&[0.0, 0.0]),
            -(2.0 * std::f64::consts::PI).ln(),
            epsilon = 1e-12
        );
    }
}
