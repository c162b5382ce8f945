use serde::{Deserialize, Serialize};

use crate::scalar::{Alpha, Scalar};

/// Constants of the limit objects that depend on alpha alone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LimitProfile<T: Scalar = f64> {
    alpha: Alpha<T>,
    kappa: T,
}

impl<T: Scalar> LimitProfile<T> {
    pub fn new(alpha: Alpha<T>) -> Self {
        let a = alpha.value();
        Self { alpha, kappa: a * a.gamma() }
    }

    pub fn alpha(&self) -> Alpha<T> {
        self.alpha
    }

    /// `alpha * Gamma(alpha)`
    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// Mean merger size of q, `1/(alpha - 1)`.
    pub fn gamma_mean(&self) -> T {
        self.alpha.gamma_mean()
    }

    fn sin_half(&self) -> T {
        (T::PI() * self.alpha.value() / T::lit(2.0)).sin()
    }

    /// Density of the control measure on (0, 1].
    pub fn rho_prime(&self) -> T {
        let a = self.alpha.value();
        T::PI() * (a - T::one()) / (T::lit(2.0) * self.sin_half() * a.gamma() * (T::lit(2.0) - a).gamma())
    }

    /// Constant of the Levy density `b_L u^{-1-alpha}` of the driving process.
    pub fn b_levy(&self) -> T {
        let a = self.alpha.value();
        (a.gamma() * (T::lit(2.0) - a).gamma()).recip()
    }

    /// Constant `a` linking a control measure to its Poisson intensity.
    pub fn a_control(&self) -> T {
        let a = self.alpha.value();
        T::lit(2.0) * self.sin_half() * (a + T::one()).gamma() / T::PI()
    }

    /// Constant of the (x, y) intensity `c dx y^{-1-alpha} dy` on (0, 1] x (0, inf).
    pub fn theta_intensity(&self) -> T {
        let a = self.alpha.value();
        a * (a - T::one()) / (T::lit(2.0) - a).gamma()
    }

    /// `sigma^alpha / b` for a totally skewed stable law built from jumps with density `b y^{-1-alpha}`.
    pub fn scale_per_density(&self) -> T {
        self.a_control().recip()
    }

    /// `K` with `sigma^alpha = K * int |g|^alpha` for integrals against the driving process.
    pub fn k_levy(&self) -> T {
        self.b_levy() * self.scale_per_density()
    }

    /// Fraction of surviving blocks at reverse scaled time r.
    pub fn m(&self, r: T) -> T {
        let a = self.alpha.value();
        (self.kappa / (r + self.kappa)).powf((a - T::one()).recip())
    }

    /// Inverse of `m` on (0, 1].
    pub fn m_inverse(&self, x: T) -> T {
        let a = self.alpha.value();
        self.kappa * (x.powf(T::one() - a) - T::one())
    }

    /// `dr/dx` along `r = m_inverse(x)`, as a positive density.
    pub fn m_inverse_jacobian(&self, x: T) -> T {
        let a = self.alpha.value();
        self.kappa * (a - T::one()) * x.powf(-a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_basics() {
        let p: LimitProfile = LimitProfile::new(Alpha::new(1.5).unwrap());
        assert_eq!(p.m(0.0), 1.0);
        assert!((p.m(1.0) - 0.325692).abs() < 5e-7);
        for r in [0.0, 0.3, 4.0, 100.0] {
            assert!((p.m_inverse(p.m(r)) - r).abs() < 1e-10 * (1.0 + r));
        }
        assert!(p.m(1e6) < p.m(1e5));
    }

    #[test]
    fn constants_agree() {
        for a in [1.1, 1.5, 1.9] {
            let p: LimitProfile = LimitProfile::new(Alpha::new(a).unwrap());
            // rho' = a^{-1} * theta intensity
            assert!((p.rho_prime() - p.theta_intensity() / p.a_control()).abs() < 1e-13);
            // the substitution x = m(r) turns K dr into rho' dx / x^alpha
            assert!((p.k_levy() * p.kappa() * (a - 1.0) - p.rho_prime()).abs() < 1e-13);
        }
    }
}
