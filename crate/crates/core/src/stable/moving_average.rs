use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::integral::checked;
use super::points::{pareto, poisson_count, Envelope, PointBuffer, PointKind};
use super::SmallJumps;
use crate::error::{Error, Result};
use crate::funcspec::{FunctionalSpec, LimitProfile};
use crate::quadrature::{integrate, integrate_semi_infinite, Tolerance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingAverageOptions {
    pub eps: f64,
    /// Lag horizon of the driving process; `None` samples the whole past.
    pub r_max: Option<f64>,
    /// Largest admissible share of `int |g|^alpha` beyond `r_max`.
    pub tail_tol: f64,
    pub small_jumps: SmallJumps,
}

impl Default for MovingAverageOptions {
    fn default() -> Self {
        Self { eps: 0.01, r_max: None, tail_tol: 1e-4, small_jumps: SmallJumps::Gaussian }
    }
}

fn check_times<T: Scalar>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Dimension("at least one time is required".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("times must be finite and nondecreasing".into()));
    }
    Ok(())
}

/// Compensated sums `sum_{w <= s_j} g(s_j - w) u` over points of the driving
/// process, jointly for several times.
///
/// A point `(w, u)` is kept when `E(s_k - w) u >= eps`, where `s_k` is the
/// first time at or after `w` and `E(r) = A (kappa/(r + kappa))^gamma`
/// dominates `|g|`.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    f: FunctionalSpec,
    profile: LimitProfile,
    times: Vec<f64>,
    opts: MovingAverageOptions,
    scale: f64,
    gamma: f64,
    lengths: Vec<f64>,
    masses: Vec<f64>,
    compensators: Vec<f64>,
    chol: Vec<f64>,
    tail_share: f64,
}

impl MovingAverage {
    pub fn new(f: &FunctionalSpec, times: &[f64], opts: MovingAverageOptions) -> Result<Self> {
        check_times(times)?;
        if !(opts.eps > 0.0) || !opts.eps.is_finite() {
            return Err(Error::Domain(format!("truncation level must be positive, got {}", opts.eps)));
        }
        let profile = LimitProfile::new(f.alpha());
        let a = profile.alpha().value();
        let kappa = profile.kappa();
        let scale = f.abs_coef_sum();
        let gamma = (1.0 - f.zeta_max().unwrap_or(0.0)) / (a - 1.0);
        let p = a * gamma;
        let horizon = opts.r_max.unwrap_or(f64::INFINITY);
        if !(horizon > 0.0) {
            return Err(Error::Domain(format!("lag horizon must be positive, got {horizon}")));
        }
        let (total, _) = f.abs_power_integrals()?;
        let total = kappa * (a - 1.0) * total;
        let tail_bound = if horizon.is_finite() && scale > 0.0 {
            scale.powf(a) * kappa.powf(p) * (horizon + kappa).powf(1.0 - p) / (p - 1.0)
        } else {
            0.0
        };
        let tail_share = if total > 0.0 { tail_bound / total } else { 0.0 };
        if tail_share > opts.tail_tol {
            return Err(Error::TruncationBudget { tail: tail_share, tol: opts.tail_tol });
        }
        let mut lengths = vec![horizon];
        lengths.extend(times.windows(2).map(|w| w[1] - w[0]));
        let lead = profile.b_levy() * opts.eps.powf(-a) / a * scale.powf(a) * kappa.powf(p) / (p - 1.0);
        let masses: Vec<f64> = lengths
            .iter()
            .map(|&l| if scale > 0.0 { lead * (kappa.powf(1.0 - p) - tail_power(l, kappa, 1.0 - p)) } else { 0.0 })
            .collect();
        let mut ma = Self {
            f: f.clone(),
            profile,
            times: times.to_vec(),
            opts,
            scale,
            gamma,
            lengths,
            masses,
            compensators: Vec::new(),
            chol: Vec::new(),
            tail_share,
        };
        if scale > 0.0 {
            ma.compensators = ma.build_compensators()?;
            if opts.small_jumps == SmallJumps::Gaussian {
                ma.chol = cholesky(&ma.build_covariance()?, times.len());
            }
        } else {
            ma.compensators = vec![0.0; times.len()];
        }
        Ok(ma)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn options(&self) -> &MovingAverageOptions {
        &self.opts
    }

    /// Bound on the share of `int |g|^alpha` lost beyond the horizon.
    pub fn tail_share(&self) -> f64 {
        self.tail_share
    }

    pub fn mean_count(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn compensators(&self) -> &[f64] {
        &self.compensators
    }

    fn envelope_power(&self, r: f64, power: f64) -> f64 {
        let kappa = self.profile.kappa();
        (kappa / (r + kappa)).powf(self.gamma * power)
    }

    fn piece_integral<F: Fn(f64) -> f64>(&self, k: usize, decay: f64, h: F) -> Result<f64> {
        let tol = Tolerance::new(1e-15, 1e-12);
        let l = self.lengths[k];
        Ok(if l.is_finite() { integrate(h, 0.0, l, tol)?.value } else { integrate_semi_infinite(h, 0.0, decay, tol)?.value })
    }

    fn build_compensators(&self) -> Result<Vec<f64>> {
        let a = self.profile.alpha().value();
        let kappa = self.profile.kappa();
        let p = a * self.gamma;
        let lead = self.profile.b_levy() * self.opts.eps.powf(1.0 - a) / (a - 1.0) * self.scale.powf(a - 1.0);
        let d = self.times.len();
        let mut out = vec![0.0; d];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for k in 0..=j {
                let shift = self.times[j] - self.times[k];
                let integrand = |r: f64| self.f.kernel_g_closed(&self.profile, shift + r) * self.envelope_power(r, a - 1.0);
                let numeric = self.piece_integral(k, p, integrand)?;
                if k == j {
                    let closed: f64 = self
                        .f
                        .terms()
                        .iter()
                        .map(|t| {
                            let e = (1.0 - t.zeta) / (a - 1.0) + self.gamma * (a - 1.0);
                            t.coef * kappa.powf(e) * (kappa.powf(1.0 - e) - tail_power(self.lengths[k], kappa, 1.0 - e)) / (e - 1.0)
                        })
                        .sum();
                    sum += checked(closed, numeric)?;
                } else {
                    sum += numeric;
                }
            }
            *slot = lead * sum;
        }
        Ok(out)
    }

    fn build_covariance(&self) -> Result<Vec<f64>> {
        let a = self.profile.alpha().value();
        let p = a * self.gamma;
        let lead = self.profile.b_levy() * self.opts.eps.powf(2.0 - a) / (2.0 - a) * self.scale.powf(a - 2.0);
        let d = self.times.len();
        let mut cov = vec![0.0; d * d];
        for j in 0..d {
            for l in 0..=j {
                let mut sum = 0.0;
                for k in 0..=l {
                    let (sj, sl) = (self.times[j] - self.times[k], self.times[l] - self.times[k]);
                    let integrand = |r: f64| {
                        self.f.kernel_g_closed(&self.profile, sj + r)
                            * self.f.kernel_g_closed(&self.profile, sl + r)
                            * self.envelope_power(r, a - 2.0)
                    };
                    sum += self.piece_integral(k, p, integrand)?;
                }
                cov[j * d + l] = lead * sum;
                cov[l * d + j] = lead * sum;
            }
        }
        Ok(cov)
    }

    /// Points of the driving process kept by the truncation rule.
    pub fn sample_points<R: Rng + ?Sized>(&self, rng: &mut R) -> PointBuffer {
        let a = self.profile.alpha().value();
        let kappa = self.profile.kappa();
        let p = a * self.gamma;
        let mut first = Vec::new();
        let mut second = Vec::new();
        for (k, (&mass, &len)) in self.masses.iter().zip(&self.lengths).enumerate() {
            let top = kappa.powf(1.0 - p);
            let span = top - tail_power(len, kappa, 1.0 - p);
            for _ in 0..poisson_count(mass, rng) {
                let v = rng.random::<f64>();
                let r = ((top - v * span).powf(1.0 / (1.0 - p)) - kappa).max(0.0);
                let e = self.scale * self.envelope_power(r, 1.0);
                first.push(self.times[k] - r);
                second.push(pareto(self.opts.eps / e, a, rng));
            }
        }
        let lo = self.times[0] - self.lengths[0];
        PointBuffer {
            kind: PointKind::Levy,
            eps: self.opts.eps,
            window: (lo, self.times[self.times.len() - 1]),
            envelope: Envelope { scale: self.scale, zeta: self.f.zeta_max().unwrap_or(0.0) },
            first,
            second,
        }
    }

    /// Compensated sums over a buffer drawn by [`Self::sample_points`].
    pub fn evaluate(&self, buf: &PointBuffer) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.compensators)
            .map(|(&s, &c)| {
                buf.iter().filter(|&(w, _)| w <= s).map(|(w, u)| self.f.kernel_g_closed(&self.profile, s - w) * u).sum::<f64>()
                    - c
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let buf = self.sample_points(rng);
        let mut v = self.evaluate(&buf);
        if !self.chol.is_empty() {
            let d = v.len();
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += (0..=j).map(|l| self.chol[j * d + l] * z[l]).sum::<f64>();
            }
        }
        v
    }
}

/// `(l + kappa)^e` with the convention `inf^e = 0` for `e < 0`.
fn tail_power(l: f64, kappa: f64, e: f64) -> f64 {
    if l.is_finite() {
        (l + kappa).powf(e)
    } else {
        0.0
    }
}

fn cholesky(cov: &[f64], d: usize) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let diag = cov[j * d + j] - (0..j).map(|k| l[j * d + k] * l[j * d + k]).sum::<f64>();
        if diag <= 1e-300 {
            continue;
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let s = cov[i * d + j] - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
            l[i * d + j] = s / ljj;
        }
    }
    l
}

/// One joint draw of the moving-average process at the given times.
pub fn sample_moving_average<R: Rng + ?Sized>(
    f: &FunctionalSpec,
    times: &[f64],
    opts: MovingAverageOptions,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(MovingAverage::new(f, times, opts)?.sample(rng))
}

/// Characteristic function of the compensated sums at `theta`:
/// `exp(-K int |h|^alpha (1 - i sgn(h) tan(pi alpha/2)) dw)` with
/// `h(w) = sum_j theta_j g(s_j - w) 1{w <= s_j}`.
pub fn joint_cf_moving_average<T: Scalar>(f: &FunctionalSpec<T>, times: &[T], theta: &[T]) -> Result<Complex<T>> {
    check_times(times)?;
    if times.len() != theta.len() {
        return Err(Error::Dimension(format!("{} times against {} frequencies", times.len(), theta.len())));
    }
    let profile = LimitProfile::new(f.alpha());
    let a = profile.alpha().value();
    let gamma = (T::one() - f.zeta_max().unwrap_or(T::zero())) / (a - T::one());
    let rel = (T::epsilon().as_f64() * 1e4).max(1e-11);
    let tol = Tolerance::new(0.0, rel);
    let mut total = T::zero();
    let mut signed = T::zero();
    for k in 0..times.len() {
        let h = |r: T| {
            (k..times.len()).fold(T::zero(), |s, j| s + theta[j] * f.kernel_g_closed(&profile, times[j] - times[k] + r))
        };
        let pw = |r: T| h(r).abs().powf(a);
        let sg = |r: T| {
            let v = h(r);
            v.abs().powf(a) * v.signum()
        };
        if k == 0 {
            let decay = a * gamma;
            total = total + integrate_semi_infinite(pw, T::zero(), decay, tol)?.value;
            signed = signed + integrate_semi_infinite(sg, T::zero(), decay, tol)?.value;
        } else {
            let len = times[k] - times[k - 1];
            total = total + integrate(pw, T::zero(), len, tol)?.value;
            signed = signed + integrate(sg, T::zero(), len, tol)?.value;
        }
    }
    let k_levy = profile.k_levy();
    let tan = (T::PI() * a / T::lit(2.0)).tan();
    Ok(Complex::new(-k_levy * total, k_levy * tan * signed).exp())
}

/// Characteristic function of the limit of `(J_{n, s_j})_j`, which is the
/// negated compensated sum process.
pub fn joint_cf_limit_series<T: Scalar>(f: &FunctionalSpec<T>, times: &[T], theta: &[T]) -> Result<Complex<T>> {
    let neg: Vec<T> = theta.iter().map(|&t| -t).collect();
    joint_cf_moving_average(f, times, &neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::parse_fspec;
    use crate::scalar::Alpha;
    use crate::stable::{cf_stable, StableParams};

    #[test]
    fn marginal_cf_is_stable_with_the_j_scale() {
        for (al, text) in [(1.5, "alpha - 1"), (1.3, "x^-0.5 - 1"), (1.6, "length")] {
            let alpha = Alpha::new(al).unwrap();
            let f = parse_fspec(text, alpha).unwrap();
            let (sigma, beta) = f.sigma_beta().unwrap();
            let law = StableParams::new(alpha, sigma, beta).unwrap();
            for t in [-1.5, 0.7, 2.0] {
                let got = joint_cf_moving_average(&f, &[0.0], &[t]).unwrap();
                assert!((got - cf_stable(&law, t)).norm() < 1e-8, "{text} {t}");
            }
        }
    }

    #[test]
    fn joint_cf_reduces_and_is_hermitian() {
        let alpha = Alpha::new(1.5).unwrap();
        let f = parse_fspec("alpha - 1", alpha).unwrap();
        let one = joint_cf_moving_average(&f, &[2.0], &[0.8]).unwrap();
        let two = joint_cf_moving_average(&f, &[0.0, 2.0], &[0.0, 0.8]).unwrap();
        assert!((one - two).norm() < 1e-9);
        let plus = joint_cf_moving_average(&f, &[0.0, 1.0], &[0.4, -1.1]).unwrap();
        let minus = joint_cf_moving_average(&f, &[0.0, 1.0], &[-0.4, 1.1]).unwrap();
        assert!((plus.conj() - minus).norm() < 1e-12);
        let g = f.cast::<f32>();
        let low = joint_cf_moving_average(&g, &[0.0f32], &[0.8f32]).unwrap();
        assert!((low.re as f64 - one.re).abs() < 1e-4);
    }

    #[test]
    fn finite_horizon_respects_budget() {
        let alpha = Alpha::new(1.5).unwrap();
        let f = parse_fspec("alpha - 1", alpha).unwrap();
        let short = MovingAverageOptions { r_max: Some(5.0), ..Default::default() };
        assert!(matches!(MovingAverage::new(&f, &[0.0], short), Err(Error::TruncationBudget { .. })));
        let long = MovingAverageOptions { r_max: Some(1e4), ..Default::default() };
        let ma = MovingAverage::new(&f, &[0.0], long).unwrap();
        assert!(ma.tail_share() < 1e-4);
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let c = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&c, 2);
        assert!((l[0] * l[0] - 4.0).abs() < 1e-15);
        assert!((l[2] * l[0] - 2.0).abs() < 1e-15);
        assert!((l[2] * l[2] + l[3] * l[3] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_pairs_match_joint_cf() {
        use rand::SeedableRng;
        let alpha = Alpha::new(1.5).unwrap();
        let f = parse_fspec("alpha - 1", alpha).unwrap();
        let times = [0.0, 1.0];
        let ma = MovingAverage::new(&f, &times, MovingAverageOptions::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let n = 30_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| ma.sample(&mut rng)).collect();
        for th in [[1.0, 0.0], [0.5, -0.7], [1.0, 1.0]] {
            let e = draws.iter().map(|v| Complex::new(0.0, th[0] * v[0] + th[1] * v[1]).exp()).sum::<Complex<f64>>() / n as f64;
            let exact = joint_cf_moving_average(&f, &times, &th).unwrap();
            assert!((e - exact).norm() < 0.025, "{th:?} {e} {exact}");
        }
    }
}
