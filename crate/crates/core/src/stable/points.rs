use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspec::LimitProfile;

/// Which intensity a buffer was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    /// Points `(s, u)` of the driving Levy process on a time window.
    Levy,
    /// Points `(s, u)` with `s <= 0` that feed the time-changed picture.
    Psi,
    /// Points `(x, y)` on `(0, 1] x (0, inf)`.
    Theta,
}

/// `D(x) = scale * x^{-zeta}`; a Theta point is kept when `D(x) y >= eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub scale: f64,
    pub zeta: f64,
}

impl Envelope {
    pub const PLAIN: Envelope = Envelope { scale: 1.0, zeta: 0.0 };

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.scale * x.powf(-self.zeta)
    }
}

/// A finite sample of a Poisson point process, truncated at `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointBuffer {
    pub kind: PointKind,
    pub eps: f64,
    /// Window of the first coordinate.
    pub window: (f64, f64),
    /// Truncation rule of Theta buffers; Levy and Psi buffers keep `u >= eps`.
    pub envelope: Envelope,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl PointBuffer {
    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.first.iter().copied().zip(self.second.iter().copied())
    }
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    let k: f64 = d.sample(rng);
    k as usize
}

/// Pareto draw `lower * V^{-1/alpha}`.
#[inline]
pub(crate) fn pareto<R: Rng + ?Sized>(lower: f64, alpha: f64, rng: &mut R) -> f64 {
    let v = 1.0 - rng.random::<f64>();
    lower * v.powf(-1.0 / alpha)
}

/// Expected number of points of a buffer drawn with [`sample_poisson_points`].
pub fn expected_count(kind: PointKind, window: (f64, f64), eps: f64, profile: &LimitProfile) -> f64 {
    let a = profile.alpha().value();
    let c = match kind {
        PointKind::Levy | PointKind::Psi => profile.b_levy(),
        PointKind::Theta => profile.theta_intensity(),
    };
    c * (window.1 - window.0) * eps.powf(-a) / a
}

/// All points with second coordinate at least `eps` in the given window.
///
/// Psi windows must lie in `s <= 0`; Theta windows in `(0, 1]`.
pub fn sample_poisson_points<R: Rng + ?Sized>(
    kind: PointKind,
    window: (f64, f64),
    eps: f64,
    profile: &LimitProfile,
    rng: &mut R,
) -> Result<PointBuffer> {
    let (lo, hi) = window;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("truncation level must be positive, got {eps}")));
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid window [{lo}, {hi}]")));
    }
    match kind {
        PointKind::Psi if hi > 0.0 => return Err(Error::Domain("Psi windows must lie in s <= 0".into())),
        PointKind::Theta if lo < 0.0 || hi > 1.0 => {
            return Err(Error::Domain("Theta windows must lie in (0, 1]".into()))
        }
        _ => {}
    }
    let a = profile.alpha().value();
    let count = poisson_count(expected_count(kind, window, eps, profile), rng);
    let mut first: Vec<f64> = (0..count).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    first.sort_by(f64::total_cmp);
    let second = (0..count).map(|_| pareto(eps, a, rng)).collect();
    Ok(PointBuffer { kind, eps, window, envelope: Envelope::PLAIN, first, second })
}

/// Image of a Psi buffer under `(s, u) -> (m(-s), m(-s) u)`.
///
/// The rule `u >= eps` becomes `y / x >= eps`, recorded as the envelope `x^{-1}`.
pub fn map_psi_to_theta(buf: &PointBuffer, profile: &LimitProfile) -> Result<PointBuffer> {
    if buf.kind != PointKind::Psi {
        return Err(Error::Domain("only Psi buffers map to the Theta picture".into()));
    }
    let mut first = Vec::with_capacity(buf.len());
    let mut second = Vec::with_capacity(buf.len());
    for (s, u) in buf.iter() {
        let x = profile.m(-s);
        first.push(x);
        second.push(x * u);
    }
    let window = (profile.m(-buf.window.0), profile.m(-buf.window.1));
    Ok(PointBuffer {
        kind: PointKind::Theta,
        eps: buf.eps,
        window,
        envelope: Envelope { scale: 1.0, zeta: 1.0 },
        first,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Alpha;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_and_ranges() {
        let p = LimitProfile::new(Alpha::new(1.5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = expected_count(PointKind::Theta, (0.0, 1.0), 0.05, &p);
        let c = p.theta_intensity() * 0.05f64.powf(-1.5) / 1.5;
        assert!((mean - c).abs() < 1e-12);
        let reps = 400;
        let mut total = 0usize;
        for _ in 0..reps {
            let b = sample_poisson_points(PointKind::Theta, (0.0, 1.0), 0.05, &p, &mut rng).unwrap();
            assert!(b.iter().all(|(x, y)| x > 0.0 && x <= 1.0 && y >= 0.05));
            total += b.len();
        }
        let avg = total as f64 / reps as f64;
        assert!((avg - mean).abs() < 4.0 * (mean / reps as f64).sqrt(), "{avg} vs {mean}");
        assert!(sample_poisson_points(PointKind::Psi, (-1.0, 0.5), 0.1, &p, &mut rng).is_err());
    }

    #[test]
    fn psi_map_preserves_order_and_rule() {
        let p = LimitProfile::new(Alpha::new(1.4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = sample_poisson_points(PointKind::Psi, (-5.0, 0.0), 0.2, &p, &mut rng).unwrap();
        let t = map_psi_to_theta(&b, &p).unwrap();
        assert_eq!(t.len(), b.len());
        assert!(t.first.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.iter().all(|(x, y)| t.envelope.at(x) * y >= 0.2 * (1.0 - 1e-12)));
    }
}
