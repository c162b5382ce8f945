//! Transition rates of the Beta(2 - alpha, alpha) n-coalescent and the
//! limiting merger-size law q.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Alpha;
use crate::special::{ln_beta, ln_binomial, ln_gamma_ratio, CompensatedSum};

/// Largest merger size tabulated for the q proposal.
pub const Q_TABLE_MAX: usize = 10_000;

/// Largest block count scanned when calibrating the envelope constant.
pub const ENVELOPE_SCAN: usize = 2000;

#[derive(Debug, Clone)]
pub struct RatesContext {
    alpha: Alpha,
    ln_beta_norm: f64,
    /// `alpha * Gamma(alpha)`
    kappa: f64,
    q_scale: f64,
    q_table: Vec<f64>,
    q_cum: Vec<f64>,
    tail_mass: f64,
    envelope: f64,
}

impl RatesContext {
    pub fn new(alpha: Alpha) -> Self {
        let a = alpha.value();
        let q_scale = a / libm::tgamma(2.0 - a);
        let mut ctx = Self {
            alpha,
            ln_beta_norm: ln_beta(2.0 - a, a),
            kappa: a * libm::tgamma(a),
            q_scale,
            q_table: Vec::with_capacity(Q_TABLE_MAX),
            q_cum: Vec::with_capacity(Q_TABLE_MAX),
            tail_mass: 0.0,
            envelope: 0.0,
        };
        let mut acc = CompensatedSum::new();
        for i in 1..=Q_TABLE_MAX {
            let q = ctx.q_unchecked(i);
            acc.add(q);
            ctx.q_table.push(q);
            ctx.q_cum.push(acc.value().min(1.0));
        }
        ctx.tail_mass = (1.0 - acc.value()).max(0.0);
        // p_j(i)/q_i grows with j - i, so i = 1 is the worst case for each j
        let worst = (2..=ENVELOPE_SCAN)
            .map(|j| ctx.size_ratio(j, 1))
            .fold(0.0_f64, f64::max);
        ctx.envelope = 2.0 * worst;
        ctx
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// `alpha * Gamma(alpha)`, the constant in m(r) and the rate asymptotics.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Rejection envelope constant `M`.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    /// Mass of q beyond the tabulated range.
    pub fn q_tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q_table
    }

    pub fn q_cumulative(&self) -> &[f64] {
        &self.q_cum
    }

    /// `lambda_{b,k}`, the rate at which a given k-tuple of b blocks merges.
    pub fn merger_rate(&self, b: usize, k: usize) -> Result<f64> {
        if b < 2 || k < 2 || k > b {
            return Err(Error::Domain(format!("merger_rate needs 2 <= k <= b, got b = {b}, k = {k}")));
        }
        Ok(self.ln_merger_rate(b, k).exp())
    }

    fn ln_merger_rate(&self, b: usize, k: usize) -> f64 {
        let a = self.alpha.value();
        ln_beta(k as f64 - a, (b - k) as f64 + a) - self.ln_beta_norm
    }

    /// `lambda_b`, the total merger rate among b blocks.
    ///
    /// Telescoping the k-sum gives `Gamma(b - 1 + alpha) / (alpha Gamma(alpha) Gamma(b - 1))`.
    pub fn total_rate(&self, b: usize) -> Result<f64> {
        if b < 2 {
            return Err(Error::Domain(format!("total_rate needs b >= 2, got {b}")));
        }
        Ok(self.total_rate_unchecked(b))
    }

    pub(crate) fn total_rate_unchecked(&self, b: usize) -> f64 {
        let a = self.alpha.value();
        let m = (b - 1) as f64;
        ln_gamma_ratio(m + a, m).exp() / self.kappa
    }

    /// `lambda_b` as the compensated sum of `C(b, k) lambda_{b,k}` from k = b down to 2.
    pub fn total_rate_by_sum(&self, b: usize) -> Result<f64> {
        if b < 2 {
            return Err(Error::Domain(format!("total_rate needs b >= 2, got {b}")));
        }
        let sum: CompensatedSum = (2..=b)
            .rev()
            .map(|k| (ln_binomial(b as u64, k as u64) + self.ln_merger_rate(b, k)).exp())
            .collect();
        Ok(sum.value())
    }

    /// Law of the number of blocks lost at a merger among j blocks,
    /// `p_j(i) = C(j, i + 1) lambda_{j,i+1} / lambda_j` for i in 1..j-1.
    /// Entry `v[i - 1]` holds `p_j(i)`.
    pub fn merger_size_pmf(&self, j: usize) -> Result<Vec<f64>> {
        if j < 2 {
            return Err(Error::Domain(format!("merger_size_pmf needs j >= 2, got {j}")));
        }
        if j == 2 {
            return Ok(vec![1.0]);
        }
        let ln_total = self.total_rate_unchecked(j).ln();
        Ok((1..j)
            .map(|i| {
                let k = i + 1;
                (ln_binomial(j as u64, k as u64) + self.ln_merger_rate(j, k) - ln_total).exp()
            })
            .collect())
    }

    /// `q_i`, the limit of `p_j(i)` as `j -> infinity`.
    pub fn limit_q(&self, i: usize) -> Result<f64> {
        if i < 1 {
            return Err(Error::Domain("limit_q needs i >= 1".into()));
        }
        Ok(match self.q_table.get(i - 1) {
            Some(&q) => q,
            None => self.q_unchecked(i),
        })
    }

    fn q_unchecked(&self, i: usize) -> f64 {
        let a = self.alpha.value();
        let x = i as f64;
        self.q_scale * ln_gamma_ratio(x + 1.0 - a, x + 2.0).exp()
    }

    /// `p_j(i) / q_i = j Gamma(j - i + alpha - 1) / (alpha Gamma(alpha) lambda_j Gamma(j - i))`,
    /// zero for `i >= j`.
    pub fn size_ratio(&self, j: usize, i: usize) -> f64 {
        if i >= j || i == 0 {
            return 0.0;
        }
        let a = self.alpha.value();
        let m = (j - i) as f64;
        let jm = (j - 1) as f64;
        // lambda_j kappa = Gamma(j - 1 + alpha) / Gamma(j - 1)
        let ln = (j as f64).ln() + ln_gamma_ratio(m + a - 1.0, m) - ln_gamma_ratio(jm + a, jm);
        ln.exp()
    }

    /// `p_j(i)` from the factorized form used by the sampler.
    pub fn merger_size_prob(&self, j: usize, i: usize) -> f64 {
        if i == 0 || i >= j {
            return 0.0;
        }
        let q = match self.q_table.get(i - 1) {
            Some(&q) => q,
            None => self.q_unchecked(i),
        };
        q * self.size_ratio(j, i)
    }

    /// Draws from q by table inversion, with a discrete Pareto tail beyond
    /// the table. Returns the value and its proposal probability.
    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let top = *self.q_cum.last().expect("q table is non-empty");
        if u < top {
            let i = self.q_cum.partition_point(|&c| c <= u);
            let i = i.min(Q_TABLE_MAX - 1);
            return (i + 1, self.q_table[i]);
        }
        let a = self.alpha.value();
        let base = (Q_TABLE_MAX + 1) as f64;
        let v: f64 = 1.0 - rng.random::<f64>();
        let x = (base * v.powf(-1.0 / a)).floor();
        let i = if x.is_finite() && x < usize::MAX as f64 / 2.0 { x as usize } else { usize::MAX / 2 };
        let xf = i as f64;
        let prob = self.tail_mass * base.powf(a) * (xf.powf(-a) - (xf + 1.0).powf(-a));
        (i, prob)
    }

    /// Exact draw from `p_j(.)` by rejection from q.
    pub fn sample_merger_size<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Result<usize> {
        if j < 2 {
            return Err(Error::Domain(format!("sample_merger_size needs j >= 2, got {j}")));
        }
        if j == 2 {
            return Ok(1);
        }
        loop {
            let (i, proposal) = self.propose(rng);
            if i >= j {
                continue;
            }
            let target = self.merger_size_prob(j, i);
            let ratio = target / (self.envelope * proposal);
            if ratio > 1.0 {
                return Err(Error::EnvelopeViolation { j, i, ratio });
            }
            if rng.random::<f64>() < ratio {
                return Ok(i);
            }
        }
    }
}

/// Inversion sampler over a fixed merger-size law.
#[derive(Debug, Clone)]
pub struct MergerSizeTable {
    cum: Vec<f64>,
}

impl MergerSizeTable {
    /// Table for `p_j(.)`.
    pub fn new(ctx: &RatesContext, j: usize) -> Result<Self> {
        let pmf = ctx.merger_size_pmf(j)?;
        let mut acc = CompensatedSum::new();
        let mut cum = Vec::with_capacity(pmf.len());
        for p in pmf {
            acc.add(p);
            cum.push(acc.value());
        }
        let total = *cum.last().expect("j >= 2");
        cum.iter_mut().for_each(|c| *c /= total);
        Ok(Self { cum })
    }

    /// Blocks lost, in `1..j`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cum.partition_point(|&c| c <= u).min(self.cum.len() - 1) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(a: f64) -> RatesContext {
        RatesContext::new(Alpha::new(a).unwrap())
    }

    #[test]
    fn small_rates() {
        let c = ctx(1.5);
        assert!((c.merger_rate(2, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!((c.merger_rate(3, 2).unwrap() - 0.75).abs() < 1e-14);
        assert!((c.merger_rate(3, 3).unwrap() - 0.25).abs() < 1e-14);
        assert!((c.total_rate(2).unwrap() - 1.0).abs() < 1e-14);
        assert!((c.total_rate(3).unwrap() - 2.5).abs() < 1e-14);
        assert!(c.merger_rate(3, 4).is_err());
        assert!(c.merger_rate(3, 1).is_err());
        assert!(c.total_rate(1).is_err());
    }

    #[test]
    fn closed_total_rate_matches_sum() {
        for a in [1.1, 1.5, 1.9] {
            let c = ctx(a);
            for b in [2, 3, 10, 100, 1000, 20_000] {
                let x = c.total_rate(b).unwrap();
                let y = c.total_rate_by_sum(b).unwrap();
                assert!((x / y - 1.0).abs() < 1e-10, "a={a} b={b} {x} {y}");
            }
        }
    }

    #[test]
    fn total_rate_asymptotics() {
        let c = ctx(1.5);
        let b = 100_000usize;
        let l = c.total_rate(b).unwrap();
        assert!((l * c.kappa() / (b as f64).powf(1.5) - 1.0).abs() <= 1e-3);
        assert!(c.total_rate(1_000_000).unwrap().is_finite());
    }

    #[test]
    fn pmf_small_cases() {
        let c = ctx(1.5);
        assert_eq!(c.merger_size_pmf(2).unwrap(), vec![1.0]);
        let p = c.merger_size_pmf(3).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-13 && (p[1] - 0.1).abs() < 1e-13);
    }

    #[test]
    fn factorized_pmf_agrees() {
        let c = ctx(1.3);
        for j in [2, 3, 7, 50, 400] {
            let p = c.merger_size_pmf(j).unwrap();
            for (idx, &v) in p.iter().enumerate() {
                let w = c.merger_size_prob(j, idx + 1);
                assert!((v - w).abs() <= 1e-12 * v.max(1e-300) + 1e-300, "j={j} i={} {v} {w}", idx + 1);
            }
        }
    }

    #[test]
    fn q_values() {
        let c = ctx(1.5);
        assert!((c.limit_q(1).unwrap() - 0.75).abs() < 1e-14);
        assert!((c.limit_q(2).unwrap() - 0.125).abs() < 1e-14);
        assert!((c.limit_q(Q_TABLE_MAX + 5).unwrap() / c.q_unchecked(Q_TABLE_MAX + 5) - 1.0).abs() < 1e-15);
        assert!(c.limit_q(0).is_err());
    }

    #[test]
    fn envelope_is_two_max_ratio() {
        let c = ctx(1.5);
        // sup over j of p_j(1)/q_1 is attained at j = 2 where it equals 2/alpha
        assert!((c.envelope() - 4.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn sampler_small_j() {
        let c = ctx(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(c.sample_merger_size(2, &mut rng).unwrap(), 1);
        let n = 200_000;
        let ones = (0..n).filter(|_| c.sample_merger_size(3, &mut rng).unwrap() == 1).count();
        let f = ones as f64 / n as f64;
        assert!((f - 0.9).abs() < 4.0 * (0.09f64 / n as f64).sqrt());
    }

    #[test]
    fn size_table_matches_pmf() {
        let c = ctx(1.5);
        let t = MergerSizeTable::new(&c, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000;
        let ones = (0..n).filter(|_| t.sample(&mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.9).abs() < 0.003);
    }
}
