//! Gaussian and Gaussian-mixture value types with linear pushforward,
//! moment merging and the closed-form Wasserstein functionals against the
//! Dirac reference at the origin.
//!
//! The Dirac distribution is represented as the zero-mean, zero-covariance
//! Gaussian, which keeps every functional here total. For a Gaussian
//! `N(mu, Sigma)` the squared order-2 Wasserstein distance to that
//! reference is `|mu|^2 + tr(Sigma)`; for a mixture it is the
//! weight-convex combination of the component values, which equals the
//! value of the moment-merged synthetic Gaussian.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{Scalar, lossy};
use crate::system::normalized_prob_vector;

/// Gaussian distribution as a mean vector and covariance matrix.
///
/// The covariance is validated on construction: it must be symmetric
/// within [`Scalar::SYM_TOL`] (and is exactly symmetrized), and positive
/// semidefinite under the clamp policy of [`linalg::clamp_psd`] (tiny
/// negative round-off eigenvalues are clamped to zero, genuinely negative
/// ones are an error). A zero mean and zero covariance is the valid Dirac
/// representative.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T> {
    mean: Vec<T>,
    cov: Matrix<T>,
}

impl<T: Scalar> Gaussian<T> {
    pub fn new(mean: Vec<T>, cov: Matrix<T>) -> Result<Self> {
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "gaussian mean".into(),
            });
        }
        if !cov.is_finite() {
            return Err(Error::NonFinite {
                what: "gaussian covariance".into(),
            });
        }
        if !cov.is_square() || cov.rows() != mean.len() {
            return Err(Error::DimensionMismatch {
                what: "gaussian covariance".into(),
                expected: mean.len(),
                found: cov.rows().max(cov.cols()),
            });
        }
        let asym = cov.max_asymmetry();
        let tol = T::SYM_TOL * cov.max_abs().max(T::one());
        if asym > tol {
            return Err(Error::CovarianceAsymmetric {
                max_asymmetry: lossy(asym),
                tol: lossy(tol),
            });
        }
        let (cov, _) = linalg::clamp_psd(&cov.symmetrized())?;
        Ok(Self { mean, cov })
    }

    /// The Dirac representative: zero mean, zero covariance.
    pub fn dirac(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            cov: Matrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix<T> {
        &self.cov
    }

    /// Pushforward through a linear map: `N(A·mu, A·Sigma·Aᵀ)`.
    pub fn pushforward(&self, map: &Matrix<T>) -> Result<Self> {
        if !map.is_square() || map.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "pushforward map".into(),
                expected: self.dim(),
                found: map.rows().max(map.cols()),
            });
        }
        Self::new(map.mul_vec(&self.mean), map.congruence(&self.cov))
    }

    /// Squared Wasserstein distance to the Dirac reference:
    /// `|mu|^2 + tr(Sigma)`.
    pub fn wasserstein_sq_to_dirac(&self) -> T {
        linalg::norm_sq(&self.mean) + self.cov.trace()
    }

    /// Wasserstein distance to the Dirac reference. Exactly zero for the
    /// Dirac representative itself.
    pub fn wasserstein_to_dirac(&self) -> T {
        self.wasserstein_sq_to_dirac().sqrt()
    }
}

/// Weighted list of Gaussians sharing one dimension.
///
/// Weights are validated like any probability vector (and silently
/// renormalized within tolerance). No pruning or thresholding happens
/// here; mixtures keep exactly the components they were built from.
#[derive(Debug, Clone)]
pub struct GaussianMixture<T> {
    components: Vec<(T, Gaussian<T>)>,
}

impl<T: Scalar> GaussianMixture<T> {
    pub fn new(components: Vec<(T, Gaussian<T>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyMixture);
        }
        let dim = components[0].1.dim();
        for (_, g) in &components {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    what: "mixture component".into(),
                    expected: dim,
                    found: g.dim(),
                });
            }
        }
        let weights = normalized_prob_vector(
            components.iter().map(|(w, _)| *w).collect(),
            "mixture weights",
        )?;
        let components = weights
            .into_iter()
            .zip(components)
            .map(|(w, (_, g))| (w, g))
            .collect();
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[(T, Gaussian<T>)] {
        &self.components
    }

    /// Componentwise pushforward; weights are untouched.
    pub fn pushforward(&self, map: &Matrix<T>) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|(w, g)| Ok((*w, g.pushforward(map)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    /// Moment-matching merge: the synthetic Gaussian carrying the
    /// mixture's exact first two moments,
    /// `mu_hat = sum w_j mu_j`,
    /// `Sigma_hat = sum w_j (Sigma_j + (mu_j - mu_hat)(mu_j - mu_hat)ᵀ)`.
    pub fn merge(&self) -> Gaussian<T> {
        let n = self.dim();
        let mut mean_hat = vec![T::zero(); n];
        for (w, g) in &self.components {
            for (slot, &mu_i) in mean_hat.iter_mut().zip(g.mean()) {
                *slot += *w * mu_i;
            }
        }
        let mut cov_hat = Matrix::zeros(n, n);
        for (w, g) in &self.components {
            let dev: Vec<T> = g
                .mean()
                .iter()
                .zip(&mean_hat)
                .map(|(&mu_i, &hat_i)| mu_i - hat_i)
                .collect();
            let spread = linalg::outer(&dev, &dev);
            cov_hat.add_assign(&g.cov().add(&spread).scale(*w));
        }
        Gaussian::new(mean_hat, cov_hat)
            .expect("moment merge of a valid mixture yields a PSD covariance")
    }

    /// Squared Wasserstein distance of the mixture to the Dirac reference:
    /// the weight-convex combination of the component squared distances.
    /// Note this returns W², not W.
    pub fn wasserstein_sq_to_dirac(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, (w, g)| acc + *w * g.wasserstein_sq_to_dirac())
    }
}
