use serde::{Deserialize, Serialize};

use super::integral::theta_compensator;
use super::points::{map_psi_to_theta, PointBuffer, PointKind};
use crate::error::{Error, Result};
use crate::funcspec::{FunctionalSpec, LimitProfile};
use crate::quadrature::{integrate, Tolerance};

/// Both sides of the change of variables between the driving process and the
/// Theta picture, evaluated on one Psi buffer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevysubReport {
    pub points: usize,
    /// `sum g(r_i) u_i` minus `sum f(x_i) y_i`.
    pub jump_difference: f64,
    /// Left compensated integral.
    pub left: f64,
    /// Right compensated integral on the mapped points.
    pub right: f64,
    /// Difference of the two compensators for the common point set.
    pub compensator_difference: f64,
    /// Realized difference between truncating at `u >= eps` and at `y >= eps`.
    pub natural_gap: f64,
    /// Standard deviation of `natural_gap`; vanishes as `eps -> 0`.
    pub natural_gap_rms: f64,
}

pub fn levysub_check(f: &FunctionalSpec, buf: &PointBuffer) -> Result<LevysubReport> {
    if buf.kind != PointKind::Psi {
        return Err(Error::Domain("the substitution check needs a Psi buffer".into()));
    }
    let profile = LimitProfile::new(f.alpha());
    let a = profile.alpha().value();
    let eps = buf.eps;
    let (r_lo, r_hi) = (-buf.window.1, -buf.window.0);
    let g = |r: f64| f.kernel_g(&profile, r);

    let tol = Tolerance::new(1e-15, 1e-12);
    let left_mean = profile.b_levy() * eps.powf(1.0 - a) / (a - 1.0) * integrate(g, r_lo, r_hi, tol)?.value;
    let left_jumps: f64 = buf.iter().map(|(s, u)| g(-s) * u).sum();

    let theta = map_psi_to_theta(buf, &profile)?;
    let right_mean = theta_compensator(f, theta.envelope, eps, theta.window, &profile)?;
    let right_jumps: f64 = theta.iter().map(|(x, y)| f.eval(x) * y).sum();

    let gap_jumps: f64 = theta.iter().filter(|&(_, y)| y < eps).map(|(x, y)| f.eval(x) * y).sum();
    let gap_mean = profile.b_levy() * eps.powf(1.0 - a) / (a - 1.0)
        * integrate(|r| g(r) * (1.0 - profile.m(r).powf(a - 1.0)), r_lo, r_hi, tol)?.value;
    let gap_var = profile.b_levy() * eps.powf(2.0 - a) / (2.0 - a)
        * integrate(|r| g(r).powi(2) * (profile.m(r).powf(a - 2.0) - 1.0), r_lo, r_hi, tol)?.value;


    Ok(LevysubReport {
        points: buf.len(),
        jump_difference: left_jumps - right_jumps,
        left: left_jumps - left_mean,
        right: right_jumps - right_mean,
        compensator_difference: left_mean - right_mean,
        natural_gap: gap_jumps - gap_mean,
        natural_gap_rms: gap_var.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::parse_fspec;
    use crate::scalar::Alpha;
    use crate::stable::sample_poisson_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sides_agree_on_common_points() {
        let alpha = Alpha::new(1.5).unwrap();
        let p = LimitProfile::new(alpha);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for text in ["alpha - 1", "x^-0.4 - 2*x", "length"] {
            let f = parse_fspec(text, alpha).unwrap();
            let buf = sample_poisson_points(PointKind::Psi, (-20.0, 0.0), 0.05, &p, &mut rng).unwrap();
            let rep = levysub_check(&f, &buf).unwrap();
            assert!(rep.jump_difference.abs() < 1e-9 * (1.0 + rep.left.abs()), "{text} {rep:?}");
            assert!(rep.compensator_difference.abs() < 1e-8, "{text} {rep:?}");
        }
    }

    #[test]
    fn natural_gap_shrinks() {
        let alpha = Alpha::new(1.5).unwrap();
        let p = LimitProfile::new(alpha);
        let f = parse_fspec("alpha - 1", alpha).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut last = f64::INFINITY;
        for eps in [0.5, 0.1, 0.02] {
            let buf = sample_poisson_points(PointKind::Psi, (-10.0, 0.0), eps, &p, &mut rng).unwrap();
            let rep = levysub_check(&f, &buf).unwrap();
            assert!(rep.natural_gap_rms < last);
            last = rep.natural_gap_rms;
        }
    }
}
