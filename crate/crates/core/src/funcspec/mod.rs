//! Functionals of the block-counting process drawn from finite power sums
//! `f(x) = sum_j c_j x^{-zeta_j}` on (0, 1].

mod parse;
mod profile;

use serde::{Deserialize, Serialize};

pub use profile::LimitProfile;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_power_map, Tolerance};
use crate::scalar::{Alpha, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Term<T: Scalar = f64> {
    pub coef: T,
    pub zeta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FunctionalSpec<T: Scalar = f64> {
    alpha: Alpha<T>,
    terms: Vec<Term<T>>,
}

/// Named functionals: `tau`, `length`, `extlength`, `ratio-linearization`.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "tau" => "alpha - 1",
        "length" => "alpha*(alpha-1)*gammafn(alpha)*x^(1-alpha)",
        "extlength" => "alpha*(alpha-1)*(2-alpha)*gammafn(alpha)",
        "ratio-linearization" => "(2-alpha)^2*(x^(1-alpha) - 1)",
        _ => return None,
    })
}

/// Parses `text`, expanding preset names first.
pub fn parse_fspec<T: Scalar>(text: &str, alpha: Alpha<T>) -> Result<FunctionalSpec<T>> {
    let source = preset(text.trim()).unwrap_or(text);
    let poly = parse::Parser::new(source, alpha)?.parse()?;
    let terms = parse::canonical(poly);
    FunctionalSpec::from_pairs(alpha, terms)
}

impl<T: Scalar> FunctionalSpec<T> {
    /// Builds from `(coef, zeta)` pairs, merging equal exponents.
    pub fn from_terms(alpha: Alpha<T>, terms: &[(T, T)]) -> Result<Self> {
        let poly = parse::Poly(terms.to_vec());
        Self::from_pairs(alpha, parse::canonical(poly))
    }

    pub fn constant(alpha: Alpha<T>, c: T) -> Result<Self> {
        Self::from_terms(alpha, &[(c, T::zero())])
    }

    fn from_pairs(alpha: Alpha<T>, pairs: Vec<(T, T)>) -> Result<Self> {
        let bound = alpha.value().recip();
        for &(c, z) in &pairs {
            if !c.is_finite() || !z.is_finite() {
                return Err(Error::Domain(format!("non-finite term {c} x^{}", -z)));
            }
            if z >= bound {
                return Err(Error::Membership { zeta: z.as_f64(), bound: bound.as_f64() });
            }
        }
        let terms = pairs.into_iter().map(|(coef, zeta)| Term { coef, zeta }).collect();
        Ok(Self { alpha, terms })
    }

    pub fn alpha(&self) -> Alpha<T> {
        self.alpha
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent, or `None` for the zero function.
    pub fn zeta_max(&self) -> Option<T> {
        self.terms.last().map(|t| t.zeta)
    }

    /// `sum |c_j|`, so that `|f(x)| <= abs_coef_sum() * x^{-zeta_max}` on (0, 1].
    pub fn abs_coef_sum(&self) -> T {
        self.terms.iter().fold(T::zero(), |s, t| s + t.coef.abs())
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        self.terms.iter().fold(T::zero(), |s, t| {
            if t.zeta == T::zero() {
                s + t.coef
            } else {
                s + t.coef * x.powf(-t.zeta)
            }
        })
    }

    pub fn eval_checked(&self, x: T) -> Result<T> {
        if !(x > T::zero() && x <= T::one()) {
            return Err(Error::Domain(format!("f is defined on (0, 1], got x = {x}")));
        }
        Ok(self.eval(x))
    }

    /// `int_0^1 f(x) dx`.
    pub fn integral(&self) -> T {
        self.terms.iter().fold(T::zero(), |s, t| s + t.coef / (T::one() - t.zeta))
    }

    pub fn scaled(&self, c: T) -> Self {
        let pairs: Vec<(T, T)> = self.terms.iter().map(|t| (t.coef * c, t.zeta)).collect();
        Self::from_pairs(self.alpha, parse::canonical(parse::Poly(pairs))).expect("scaling keeps membership")
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.alpha != other.alpha {
            return Err(Error::Domain("functionals built for different alpha".into()));
        }
        let pairs: Vec<(T, T)> =
            self.terms.iter().chain(other.terms.iter()).map(|t| (t.coef, t.zeta)).collect();
        Self::from_pairs(self.alpha, parse::canonical(parse::Poly(pairs)))
    }

    /// Sign changes of f inside (0, 1), located on a logarithmic grid and
    /// refined by bisection.
    pub fn roots(&self) -> Vec<T> {
        if self.terms.len() < 2 {
            return Vec::new();
        }
        let steps = 6000;
        let t_max = T::lit(300.0);
        let at = |t: T| self.eval((-t).exp());
        let mut roots = Vec::new();
        let mut t_prev = T::zero();
        let mut f_prev = at(t_prev);
        for s in 1..=steps {
            let t = t_max * T::lit(s as f64 / steps as f64);
            let ft = at(t);
            if f_prev == T::zero() && s > 1 {
                roots.push((-t_prev).exp());
            } else if f_prev * ft < T::zero() {
                let (mut lo, mut hi) = (t_prev, t);
                let f_lo = f_prev;
                for _ in 0..200 {
                    let mid = T::lit(0.5) * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if at(mid) * f_lo > T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push((-(T::lit(0.5) * (lo + hi))).exp());
            }
            t_prev = t;
            f_prev = ft;
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
        roots
    }

    /// `(int |f|^alpha, int |f|^alpha sgn f)` over (0, 1].
    pub fn abs_power_integrals(&self) -> Result<(T, T)> {
        let a = self.alpha.value();
        if self.terms.is_empty() {
            return Ok((T::zero(), T::zero()));
        }
        if let [t] = self.terms.as_slice() {
            let v = t.coef.abs().powf(a) / (T::one() - t.zeta * a);
            return Ok((v, v * t.coef.signum()));
        }
        let mut cuts = vec![T::zero()];
        cuts.extend(self.roots());
        cuts.push(T::one());
        let tol = Tolerance::new(0.0, T::epsilon().as_f64().max(1e-16) * 1e5);
        let zmax = self.zeta_max().unwrap_or(T::zero()).max(T::zero());
        let q = (T::one() - zmax * a).recip();
        let mut total = T::zero();
        let mut signed = T::zero();
        for (idx, w) in cuts.windows(2).enumerate() {
            let (lo, hi) = (w[0], w[1]);
            let mid = T::lit(0.5) * (lo + hi);
            let sign = self.eval(mid).signum();
            let integrand = |x: T| self.eval(x).abs().powf(a);
            let est = if idx == 0 {
                integrate_power_map(integrand, lo, hi, q, tol)?
            } else {
                integrate(integrand, lo, hi, tol)?
            };
            total = total + est.value;
            signed = signed + sign * est.value;
        }
        Ok((total, signed))
    }

    /// Scale and skewness of `I(f)`.
    pub fn sigma_beta(&self) -> Result<(T, T)> {
        let (total, signed) = self.abs_power_integrals()?;
        if total == T::zero() {
            return Ok((T::zero(), T::zero()));
        }
        let profile = LimitProfile::new(self.alpha);
        let sigma = (profile.rho_prime() * total).powf(self.alpha.value().recip());
        let beta = (signed / total).max(-T::one()).min(T::one());
        Ok((sigma, beta))
    }

    /// Limit law of `J_n(f)`: `S(sigma_f, -beta_f, 0)`.
    pub fn j_limit(&self) -> Result<(T, T)> {
        let (s, b) = self.sigma_beta()?;
        Ok((s, -b))
    }

    /// `g(r) = f(m(r)) m(r)`.
    pub fn kernel_g(&self, profile: &LimitProfile<T>, r: T) -> T {
        let m = profile.m(r);
        self.eval(m) * m
    }

    /// `g(r)` written directly as a power sum in `r + alpha Gamma(alpha)`.
    pub fn kernel_g_closed(&self, profile: &LimitProfile<T>, r: T) -> T {
        let inv = (self.alpha.value() - T::one()).recip();
        let k = profile.kappa();
        let ratio = k / (r + k);
        self.terms.iter().fold(T::zero(), |s, t| s + t.coef * ratio.powf((T::one() - t.zeta) * inv))
    }

    pub fn cast<U: Scalar>(&self) -> FunctionalSpec<U> {
        FunctionalSpec {
            alpha: self.alpha.cast(),
            terms: self.terms.iter().map(|t| Term { coef: U::lit(t.coef.as_f64()), zeta: U::lit(t.zeta.as_f64()) }).collect(),
        }
    }
}

impl<T: Scalar> std::fmt::Display for FunctionalSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let c = t.coef;
            if i > 0 {
                write!(f, " {} ", if c < T::zero() { '-' } else { '+' })?;
            } else if c < T::zero() {
                write!(f, "-")?;
            }
            if t.zeta == T::zero() {
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{}*x^{}", c.abs(), -t.zeta)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a15() -> Alpha {
        Alpha::new(1.5).unwrap()
    }

    #[test]
    fn parses_examples() {
        let f = parse_fspec("0.5", a15()).unwrap();
        assert_eq!(f.terms(), &[Term { coef: 0.5, zeta: 0.0 }]);
        let f = parse_fspec("alpha*(alpha-1)*gammafn(alpha)*x^-0.5", a15()).unwrap();
        assert_eq!(f.terms().len(), 1);
        assert!((f.terms()[0].coef - 0.664670).abs() < 5e-7);
        assert_eq!(f.terms()[0].zeta, 0.5);
        match parse_fspec("x^-0.7", a15()) {
            Err(Error::Membership { zeta, bound }) => {
                assert_eq!(zeta, 0.7);
                assert!((bound - 2.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        for (src, pos) in [("1 +", 4), ("2 * (x", 7), ("x ^ x", 5), ("foo", 1), ("3 $ 4", 3), ("1/(x+1)", 2)] {
            match parse_fspec(src, a15()) {
                Err(Error::Parse { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn algebra_is_canonical() {
        let f = parse_fspec("x^-0.25 - 1 + 2*x^(-1/4) + 1", a15()).unwrap();
        assert_eq!(f.terms(), &[Term { coef: 3.0, zeta: 0.25 }]);
        let f = parse_fspec("(1 + x)^2 - 2*x", a15()).unwrap();
        assert_eq!(f.terms(), &[Term { coef: 1.0, zeta: -2.0 }, Term { coef: 1.0, zeta: 0.0 }]);
        assert!(parse_fspec("x - x", a15()).unwrap().is_zero());
        let f = parse_fspec("-x^2", a15()).unwrap();
        assert_eq!(f.terms(), &[Term { coef: -1.0, zeta: -2.0 }]);
        let f = parse_fspec("2 \u{2212} x/2", a15()).unwrap();
        assert_eq!(f.eval(1.0), 1.5);
    }

    #[test]
    fn integrals() {
        let a = a15();
        assert!((parse_fspec("alpha-1", a).unwrap().integral() - 0.5).abs() < 1e-15);
        assert!((parse_fspec("length", a).unwrap().integral() - 1.32934).abs() < 1e-5);
        assert!((parse_fspec("x^-0.25 - 1", a).unwrap().integral() - 1.0 / 3.0).abs() < 1e-15);
        assert!(parse_fspec("tau", a).unwrap().eval_checked(0.0).is_err());
    }

    #[test]
    fn golden_ratio_gate() {
        assert!(parse_fspec("length", Alpha::new(1.618).unwrap()).is_ok());
        assert!(parse_fspec("length", Alpha::new(1.6181).unwrap()).is_err());
        assert!(parse_fspec("length", Alpha::new(1.7).unwrap()).is_err());
    }

    #[test]
    fn sigma_of_sign_changing_function() {
        // 1 - 2x changes sign at 1/2 and |f|^alpha integrates symmetrically
        let f = parse_fspec("1 - 2*x", a15()).unwrap();
        let roots = f.roots();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.5).abs() < 1e-12);
        let (total, signed) = f.abs_power_integrals().unwrap();
        assert!((total - 2.0 / (2.0 * 2.5)).abs() < 1e-10, "{total}");
        assert!(signed.abs() < 1e-10);
        let (_, beta) = f.sigma_beta().unwrap();
        assert!(beta.abs() < 1e-10);
    }

    #[test]
    fn kernel_forms_agree() {
        let a = a15();
        let p = LimitProfile::new(a);
        let f = parse_fspec("length", a).unwrap();
        assert!((f.kernel_g(&p, 0.0) - 0.664670).abs() < 5e-7);
        for r in [0.0, 0.5, 3.0, 40.0] {
            let d = f.kernel_g(&p, r) - f.kernel_g_closed(&p, r);
            assert!(d.abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn single_precision_functional() {
        let a = Alpha::new(1.5f32).unwrap();
        let f = parse_fspec("ratio-linearization", a).unwrap();
        let (s, b) = f.sigma_beta().unwrap();
        let g = parse_fspec::<f64>("ratio-linearization", a.cast()).unwrap().sigma_beta().unwrap();
        assert!((s as f64 - g.0).abs() < 1e-4 && (b - 1.0).abs() < 1e-6);
    }
}
