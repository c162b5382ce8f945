//! Stable laws and the Poisson constructions of the limit objects.

mod integral;
mod levysub;
mod moving_average;
mod points;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

pub use integral::{integrate_buffer, sample_i, ThetaIntegral};
pub use levysub::{levysub_check, LevysubReport};
pub use moving_average::{joint_cf_limit_series, joint_cf_moving_average, sample_moving_average, MovingAverage, MovingAverageOptions};
pub use points::{expected_count, map_psi_to_theta, sample_poisson_points, Envelope, PointBuffer, PointKind};

use crate::error::{Error, Result};
use crate::scalar::{Alpha, Scalar};

/// How jumps below the truncation level enter a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SmallJumps {
    /// Discard them; the sample is the compensated truncated sum.
    Drop,
    /// Replace them by an independent Gaussian of the same variance.
    #[default]
    Gaussian,
}

/// Parameters of `S_alpha(sigma, beta, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StableParams<T: Scalar = f64> {
    pub alpha: Alpha<T>,
    pub sigma: T,
    pub beta: T,
    pub mu: T,
}

impl<T: Scalar> StableParams<T> {
    pub fn new(alpha: Alpha<T>, sigma: T, beta: T) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::Domain(format!("stable scale must be finite and nonnegative, got {sigma}")));
        }
        if !(beta.abs() <= T::one()) {
            return Err(Error::Domain(format!("stable skewness must lie in [-1, 1], got {beta}")));
        }
        Ok(Self { alpha, sigma, beta, mu: T::zero() })
    }

    /// Totally skewed law of the compensated sum of jumps with density `b y^{-1-alpha}`.
    pub fn from_jump_density(alpha: Alpha<T>, b: T) -> Result<Self> {
        let a = alpha.value();
        let sigma_a = b * T::PI() / (T::lit(2.0) * (T::PI() * a / T::lit(2.0)).sin() * (a + T::one()).gamma());
        Self::new(alpha, sigma_a.powf(a.recip()), T::one())
    }

    /// Law of `-Z`.
    pub fn negated(self) -> Self {
        Self { beta: -self.beta, mu: -self.mu, ..self }
    }
}

/// `psi(theta) = sigma^alpha |theta|^alpha (1 - i beta sgn(theta) tan(pi alpha / 2))`,
/// so that the characteristic function is `exp(i theta mu - psi)`.
pub fn stable_exponent<T: Scalar>(p: &StableParams<T>, theta: T) -> Complex<T> {
    let a = p.alpha.value();
    let mag = (p.sigma * theta.abs()).powf(a);
    let sgn = if theta > T::zero() {
        T::one()
    } else if theta < T::zero() {
        -T::one()
    } else {
        T::zero()
    };
    let tan = (T::PI() * a / T::lit(2.0)).tan();
    Complex::new(mag, -mag * p.beta * sgn * tan)
}

pub fn cf_stable<T: Scalar>(p: &StableParams<T>, theta: T) -> Complex<T> {
    (Complex::new(T::zero(), theta * p.mu) - stable_exponent(p, theta)).exp()
}

/// Exact draw by the Chambers-Mallows-Stuck method.
pub fn sample_stable<R: Rng + ?Sized>(p: &StableParams, rng: &mut R) -> f64 {
    let a = p.alpha.value();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let tan = (half_pi * a).tan();
    let b = (p.beta * tan).atan() / a;
    let s = (1.0 + p.beta * p.beta * tan * tan).powf(1.0 / (2.0 * a));
    let v = (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
    let w: f64 = Exp1.sample(rng);
    let x = s * (a * (v + b)).sin() / v.cos().powf(1.0 / a) * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a);
    p.sigma * x + p.mu
}
