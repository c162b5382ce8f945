use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::points::{pareto, poisson_count, Envelope, PointBuffer, PointKind};
use super::SmallJumps;
use crate::error::{Error, Result};
use crate::funcspec::{FunctionalSpec, LimitProfile};
use crate::quadrature::{integrate, integrate_power_map, Tolerance};

const COMPENSATOR_TOL: f64 = 1e-8;

/// `int_lo^hi x^{-s} dx`.
pub(crate) fn power_integral(s: f64, lo: f64, hi: f64) -> f64 {
    let e = 1.0 - s;
    if e.abs() < 1e-14 {
        hi.ln() - lo.ln()
    } else {
        (hi.powf(e) - lo.powf(e)) / e
    }
}

/// Accepts a closed-form compensator only if quadrature reproduces it.
pub(crate) fn checked(closed: f64, numeric: f64) -> Result<f64> {
    if (closed - numeric).abs() > COMPENSATOR_TOL * closed.abs().max(1.0) {
        return Err(Error::CompensatorMismatch { closed, numeric });
    }
    Ok(closed)
}

/// `E sum f(x) y` over Theta points with `D(x) y >= eps` and `x` in the window.
pub(crate) fn theta_compensator(
    f: &FunctionalSpec,
    env: Envelope,
    eps: f64,
    window: (f64, f64),
    profile: &LimitProfile,
) -> Result<f64> {
    let a = profile.alpha().value();
    let (lo, hi) = window;
    let lead = profile.theta_intensity() * eps.powf(1.0 - a) / (a - 1.0);
    let closed: f64 = f
        .terms()
        .iter()
        .map(|t| t.coef * env.scale.powf(a - 1.0) * power_integral(t.zeta + env.zeta * (a - 1.0), lo, hi))
        .sum();
    let integrand = |x: f64| f.eval(x) * env.at(x).powf(a - 1.0);
    let tol = Tolerance::new(1e-14, 1e-12);
    let s_max = f.zeta_max().unwrap_or(0.0) + env.zeta * (a - 1.0);
    let numeric = if lo == 0.0 && s_max > 0.0 {
        integrate_power_map(integrand, lo, hi, 1.0 / (1.0 - s_max), tol)?
    } else {
        integrate(integrand, lo, hi, tol)?
    };
    Ok(lead * checked(closed, numeric.value)?)
}

/// Variance of the compensated Theta jumps with `D(x) y < eps`.
pub(crate) fn theta_small_variance(
    f: &FunctionalSpec,
    env: Envelope,
    eps: f64,
    window: (f64, f64),
    profile: &LimitProfile,
) -> f64 {
    let a = profile.alpha().value();
    let lead = profile.theta_intensity() * eps.powf(2.0 - a) / (2.0 - a);
    let mut sum = 0.0;
    for s in f.terms() {
        for t in f.terms() {
            let e = s.zeta + t.zeta - env.zeta * (2.0 - a);
            sum += s.coef * t.coef * env.scale.powf(a - 2.0) * power_integral(e, window.0, window.1);
        }
    }
    lead * sum.max(0.0)
}

/// Compensated integral of `f` against the Theta point process, truncated
/// by the envelope `D(x) = sum|c| x^{-zeta_max} >= |f(x)|`.
#[derive(Debug, Clone)]
pub struct ThetaIntegral {
    f: FunctionalSpec,
    profile: LimitProfile,
    eps: f64,
    envelope: Envelope,
    mean_count: f64,
    compensator: f64,
    small_variance: f64,
    small_jumps: SmallJumps,
}

impl ThetaIntegral {
    pub fn new(f: &FunctionalSpec, eps: f64, small_jumps: SmallJumps) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("truncation level must be positive, got {eps}")));
        }
        let profile = LimitProfile::new(f.alpha());
        let a = profile.alpha().value();
        let envelope = Envelope { scale: f.abs_coef_sum(), zeta: f.zeta_max().unwrap_or(0.0) };
        let mean_count = if envelope.scale > 0.0 {
            profile.theta_intensity() * eps.powf(-a) / a * envelope.scale.powf(a) / (1.0 - a * envelope.zeta)
        } else {
            0.0
        };
        let compensator = theta_compensator(f, envelope, eps, (0.0, 1.0), &profile)?;
        let small_variance = theta_small_variance(f, envelope, eps, (0.0, 1.0), &profile);
        Ok(Self { f: f.clone(), profile, eps, envelope, mean_count, compensator, small_variance, small_jumps })
    }

    pub fn functional(&self) -> &FunctionalSpec {
        &self.f
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn mean_count(&self) -> f64 {
        self.mean_count
    }

    /// `E` of the truncated jump sum.
    pub fn compensator(&self) -> f64 {
        self.compensator
    }

    /// Variance carried by the discarded jumps.
    pub fn small_jump_variance(&self) -> f64 {
        self.small_variance
    }

    pub fn sample_points<R: Rng + ?Sized>(&self, rng: &mut R) -> PointBuffer {
        let a = self.profile.alpha().value();
        let count = poisson_count(self.mean_count, rng);
        let e = 1.0 - a * self.envelope.zeta;
        let mut first: Vec<f64> = (0..count).map(|_| (1.0 - rng.random::<f64>()).powf(1.0 / e)).collect();
        first.sort_by(f64::total_cmp);
        let second = first.iter().map(|&x| pareto(self.eps / self.envelope.at(x), a, rng)).collect();
        PointBuffer {
            kind: PointKind::Theta,
            eps: self.eps,
            window: (0.0, 1.0),
            envelope: self.envelope,
            first,
            second,
        }
    }

    /// Compensated jump sum of this functional over a buffer.
    pub fn evaluate(&self, buf: &PointBuffer) -> f64 {
        buf.iter().map(|(x, y)| self.f.eval(x) * y).sum::<f64>() - self.compensator
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let buf = self.sample_points(rng);
        let mut v = self.evaluate(&buf);
        if self.small_jumps == SmallJumps::Gaussian && self.small_variance > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            v += self.small_variance.sqrt() * z;
        }
        v
    }
}

/// Compensated integral of any functional over a Theta buffer, under the buffer's own truncation rule.
pub fn integrate_buffer(f: &FunctionalSpec, buf: &PointBuffer) -> Result<f64> {
    if buf.kind != PointKind::Theta {
        return Err(Error::Domain("expected a Theta buffer".into()));
    }
    let profile = LimitProfile::new(f.alpha());
    let comp = theta_compensator(f, buf.envelope, buf.eps, buf.window, &profile)?;
    Ok(buf.iter().map(|(x, y)| f.eval(x) * y).sum::<f64>() - comp)
}

/// One draw of `I(f)` with truncation level `eps`.
pub fn sample_i<R: Rng + ?Sized>(f: &FunctionalSpec, eps: f64, small_jumps: SmallJumps, rng: &mut R) -> Result<f64> {
    Ok(ThetaIntegral::new(f, eps, small_jumps)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::parse_fspec;
    use crate::scalar::Alpha;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plain_compensator_matches_closed_form() {
        let al = Alpha::new(1.5).unwrap();
        let p = LimitProfile::new(al);
        let f = parse_fspec("alpha - 1", al).unwrap();
        let eps = 0.05;
        let ti = ThetaIntegral::new(&f, eps, SmallJumps::Drop).unwrap();
        // a single positive term is its own envelope
        let expect = eps.powf(-0.5) * 1.5 / libm::tgamma(0.5) * 0.5f64.powf(1.5);
        assert!((ti.compensator() - expect).abs() < 1e-12);
        let var = p.theta_intensity() * eps.powf(0.5) / 0.5 * 0.5f64.powf(1.5);
        assert!((ti.small_jump_variance() - var).abs() < 1e-12);
        let empty = PointBuffer {
            kind: PointKind::Theta,
            eps,
            window: (0.0, 1.0),
            envelope: ti.envelope(),
            first: vec![],
            second: vec![],
        };
        assert_eq!(ti.evaluate(&empty), -ti.compensator());
    }

    #[test]
    fn sign_changing_compensator_and_linearity() {
        let al = Alpha::new(1.4).unwrap();
        let f1 = parse_fspec("x^-0.3 - 2", al).unwrap();
        let f2 = parse_fspec("3*x^0.5", al).unwrap();
        let sum = f1.plus(&f2).unwrap();
        let ti = ThetaIntegral::new(&sum, 0.01, SmallJumps::Drop).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = ti.sample_points(&mut rng);
            let whole = integrate_buffer(&sum, &b).unwrap();
            let parts = integrate_buffer(&f1, &b).unwrap() + integrate_buffer(&f2, &b).unwrap();
            assert!((whole - parts).abs() < 1e-9 * (1.0 + whole.abs()));
            assert!((whole - ti.evaluate(&b)).abs() < 1e-9 * (1.0 + whole.abs()));
        }
    }

    #[test]
    fn samples_follow_the_stable_law() {
        let al = Alpha::new(1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for text in ["alpha - 1", "x^-0.5 - 1.5"] {
            let f = parse_fspec(text, al).unwrap();
            let (sigma, beta) = f.sigma_beta().unwrap();
            let law = crate::stable::StableParams::new(al, sigma, beta).unwrap();
            let ti = ThetaIntegral::new(&f, 0.01, SmallJumps::Gaussian).unwrap();
            let n = 40_000;
            let xs: Vec<f64> = (0..n).map(|_| ti.sample(&mut rng)).collect();
            for t in [-1.0, 0.5, 2.0] {
                let e = xs.iter().map(|x| num_complex::Complex::new(0.0, t * x).exp()).sum::<num_complex::Complex<f64>>()
                    / n as f64;
                assert!((e - crate::stable::cf_stable(&law, t)).norm() < 0.02, "{text} {t}");
            }
        }
    }
}
