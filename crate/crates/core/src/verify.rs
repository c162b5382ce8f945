//! Comparison of Monte Carlo output against limit laws.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;

/// Provenance of a sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub label: String,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub functional: Option<String>,
    pub seed: Option<u64>,
}

/// Row-major sample of `dim`-vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    dim: usize,
    values: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn univariate(values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        Self::multivariate(1, values, meta)
    }

    pub fn multivariate(dim: usize, values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!("{} values do not form rows of length {dim}", values.len())));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample contains a non-finite value {bad}")));
        }
        Ok(Self { dim, values, meta })
    }

    pub fn from_rows(rows: &[Vec<f64>], meta: SampleMeta) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("rows of unequal length".into()));
        }
        Self::multivariate(dim, rows.concat(), meta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    /// Coordinate `j` as a univariate sample.
    pub fn coordinate(&self, j: usize) -> Result<SampleSet> {
        if j >= self.dim {
            return Err(Error::Dimension(format!("coordinate {j} of a {}-variate sample", self.dim)));
        }
        let values = self.rows().map(|r| r[j]).collect();
        Ok(Self { dim: 1, values, meta: self.meta.clone() })
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        (0..self.dim).map(|j| self.rows().map(|r| r[j]).sum::<f64>() / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Pass when the statistic does not exceed the threshold.
    AtMost,
    /// Pass when the statistic is at least the threshold.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub orientation: Orientation,
    pub pass: bool,
    pub meta: BTreeMap<String, Value>,
}

impl TestReport {
    pub fn new(test: impl Into<String>, statistic: f64, threshold: f64, orientation: Orientation) -> Self {
        let pass = match orientation {
            Orientation::AtMost => statistic <= threshold,
            Orientation::AtLeast => statistic >= threshold,
        };
        Self { test: test.into(), statistic, threshold, orientation, pass, meta: BTreeMap::new() }
    }

    pub fn at_most(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self::new(test, statistic, threshold, Orientation::AtMost)
    }

    /// Same statistic judged against another threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        let prior = self.threshold;
        self = Self { meta: self.meta, ..Self::new(self.test, self.statistic, threshold, self.orientation) };
        self.meta.insert("default_threshold".into(), prior.into());
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    fn with_sample(self, key: &str, s: &SampleSet) -> Self {
        self.with_meta(key, serde_json::to_value(&s.meta).unwrap_or(Value::Null)).with_meta(&format!("{key}_size"), s.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// Critical value `c(a)` of the scaled two-sample KS statistic.
pub fn ks_critical(significance: f64) -> f64 {
    (-(significance / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic Kolmogorov tail probability `P(K > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Largest gap between the two empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov test at the given significance.
pub fn ks_two_sample(a: &SampleSet, b: &SampleSet, significance: f64) -> Result<TestReport> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(Error::Dimension("KS needs univariate samples".into()));
    }
    if a.len() < 50 || b.len() < 50 {
        return Err(Error::Domain(format!("KS needs at least 50 values per sample, got {} and {}", a.len(), b.len())));
    }
    let d = ks_statistic(a.values(), b.values());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let ne = n * m / (n + m);
    let threshold = ks_critical(significance) / ne.sqrt();
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestReport::at_most("ks_two_sample", d, threshold)
        .with_meta("significance", significance)
        .with_meta("p_value", kolmogorov_tail(lambda))
        .with_sample("a", a)
        .with_sample("b", b))
}

/// `(1/N) sum exp(i theta . X_k)` at each grid point.
pub fn ecf(sample: &SampleSet, grid: &[Vec<f64>]) -> Result<Vec<Complex<f64>>> {
    let n = sample.len().max(1) as f64;
    grid.iter()
        .map(|theta| {
            if theta.len() != sample.dim() {
                return Err(Error::Dimension(format!("frequency of length {} for a {}-variate sample", theta.len(), sample.dim())));
            }
            let (mut re, mut im) = (0.0, 0.0);
            for row in sample.rows() {
                let phase: f64 = row.iter().zip(theta).map(|(x, t)| x * t).sum();
                let (s, c) = phase.sin_cos();
                re += c;
                im += s;
            }
            Ok(Complex::new(re / n, im / n))
        })
        .collect()
}

/// Largest modulus gap between the empirical and a reference characteristic function.
///
/// The default threshold is `3 sqrt(2/N) + model_tol`.
pub fn ecf_distance<F>(sample: &SampleSet, cf: F, grid: &[Vec<f64>], model_tol: f64) -> Result<TestReport>
where
    F: Fn(&[f64]) -> Complex<f64>,
{
    let emp = ecf(sample, grid)?;
    let mut worst: f64 = 0.0;
    let mut per_point = Vec::with_capacity(grid.len());
    for (theta, e) in grid.iter().zip(&emp) {
        let gap = (e - cf(theta)).norm();
        per_point.push(gap);
        worst = worst.max(gap);
    }
    let threshold = 3.0 * (2.0 / sample.len().max(1) as f64).sqrt() + model_tol;
    Ok(TestReport::at_most("ecf_distance", worst, threshold)
        .with_meta("grid", serde_json::to_value(grid).unwrap_or(Value::Null))
        .with_meta("gaps", per_point)
        .with_sample("sample", sample))
}

/// Pearson goodness of fit of observed counts against expected counts.
pub fn chi_squared(observed: &[u64], expected: &[f64], significance: f64) -> Result<TestReport> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::Dimension("chi-squared needs matching count vectors with at least two cells".into()));
    }
    if expected.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Domain("expected counts must be positive".into()));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    let df = (observed.len() - 1) as f64;
    let law = ChiSquared::new(df).map_err(|e| Error::Domain(e.to_string()))?;
    let threshold = law.inverse_cdf(1.0 - significance);
    Ok(TestReport::at_most("chi_squared", stat, threshold)
        .with_meta("df", df)
        .with_meta("p_value", 1.0 - law.cdf(stat))
        .with_meta("significance", significance))
}

/// Whether a statistic decreases along an n-ladder, allowing each step to
/// rise by at most the slack factor.
pub fn trend_report(ladder: &[(u64, f64)], slack: f64) -> Result<TestReport> {
    if ladder.len() < 3 {
        return Err(Error::Domain(format!("trend needs at least three ladder points, got {}", ladder.len())));
    }
    let worst = ladder
        .windows(2)
        .map(|w| if w[0].1 > 0.0 { w[1].1 / w[0].1 } else if w[1].1 > 0.0 { f64::INFINITY } else { 1.0 })
        .fold(0.0, f64::max);
    let ns: Vec<u64> = ladder.iter().map(|p| p.0).collect();
    let vals: Vec<f64> = ladder.iter().map(|p| p.1).collect();
    Ok(TestReport::at_most("trend", worst, slack).with_meta("n", ns).with_meta("values", vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::{sample_stable, StableParams};
    use crate::Alpha;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(v: Vec<f64>) -> SampleSet {
        SampleSet::univariate(v, SampleMeta::default()).unwrap()
    }

    #[test]
    fn ks_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let a = set(u.clone());
        assert_eq!(ks_two_sample(&a, &a, 1e-3).unwrap().statistic, 0.0);
        let shifted = set(u.iter().map(|x| x + 0.5).collect());
        let v: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        assert!(!ks_two_sample(&set(v), &shifted, 1e-3).unwrap().pass);
        assert!((ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!(ks_two_sample(&set(vec![0.0; 10]), &a, 1e-3).is_err());
    }

    #[test]
    fn ks_calibration_on_stable_draws() {
        let p = StableParams::new(Alpha::new(1.5).unwrap(), 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..10_000).map(|_| sample_stable(&p, &mut rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| sample_stable(&p, &mut rng)).collect();
        let r = ks_two_sample(&set(a), &set(b), 1e-3).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.meta["p_value"].as_f64().unwrap() > 1e-3);
    }

    #[test]
    fn kolmogorov_tail_reference() {
        // c(0.05) = 1.3581 is the classical 5% point
        assert!((kolmogorov_tail(1.358_099) - 0.05).abs() < 1e-5);
        assert!((ks_critical(0.05) - 1.358_099).abs() < 1e-3);
    }

    #[test]
    fn ecf_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..20_000).map(|_| vec![rng.random::<f64>(), rng.random::<f64>() * 2.0]).collect();
        let s = SampleSet::from_rows(&rows, SampleMeta::default()).unwrap();
        let e = ecf(&s, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(e[0], Complex::new(1.0, 0.0));
        let joint = ecf(&s, &[vec![1.0, 0.7]]).unwrap()[0];
        let a = ecf(&s.coordinate(0).unwrap(), &[vec![1.0]]).unwrap()[0];
        let b = ecf(&s.coordinate(1).unwrap(), &[vec![0.7]]).unwrap()[0];
        assert!((joint - a * b).norm() < 0.02);
        assert!(ecf(&s, &[vec![1.0]]).is_err());
    }

    #[test]
    fn ecf_distance_on_stable_reference() {
        let al = Alpha::new(1.5).unwrap();
        let p = StableParams::new(al, 0.8, -1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = set((0..100_000).map(|_| sample_stable(&p, &mut rng)).collect());
        let grid: Vec<Vec<f64>> = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0].iter().map(|&t| vec![t]).collect();
        let r = ecf_distance(&s, |t| crate::stable::cf_stable(&p, t[0]), &grid, 0.0).unwrap();
        assert!(r.statistic <= 0.02 && r.pass, "{r:?}");
        let json: Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["test", "statistic", "threshold", "pass", "meta"] {
            assert!(json.get(key).is_some());
        }
    }

    #[test]
    fn chi_squared_and_trend() {
        let r = chi_squared(&[100, 100, 100], &[100.0, 100.0, 100.0], 1e-3).unwrap();
        assert!(r.pass && r.statistic == 0.0);
        assert!((r.threshold - 13.8155).abs() < 1e-3);
        assert!(!chi_squared(&[200, 50, 50], &[100.0, 100.0, 100.0], 1e-3).unwrap().pass);
        assert!(trend_report(&[(1, 0.1), (2, 0.1), (3, 0.1)], 1.2).unwrap().pass);
        assert!(!trend_report(&[(1, 0.1), (2, 0.2), (3, 0.4)], 1.2).unwrap().pass);
        assert!(trend_report(&[(1, 0.1), (2, 0.05)], 1.2).is_err());
        let t = TestReport::at_most("x", 0.5, 0.1).with_threshold(1.0);
        assert!(t.pass && t.meta["default_threshold"] == 0.1);
    }
}
