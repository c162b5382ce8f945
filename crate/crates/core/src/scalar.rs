//! Scalar abstraction shared by the closed-form parts of the crate.
//!
//! Everything that is pure arithmetic (special functions, the functional
//! class, stable characteristic functions, kernel quadrature) is written
//! against [`Scalar`], so it runs in `f32` or `f64`. Samplers and the
//! coalescent simulations are `f64` only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync
    + Serialize + serde::de::DeserializeOwned + 'static
{
    /// `ln |Gamma(self)|`.
    fn ln_gamma(self) -> Self;
    fn gamma(self) -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn ln_gamma(self) -> f64 {
        libm::lgamma(self)
    }
    #[inline]
    fn gamma(self) -> f64 {
        libm::tgamma(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn ln_gamma(self) -> f32 {
        libm::lgammaf(self)
    }
    #[inline]
    fn gamma(self) -> f32 {
        libm::tgammaf(self)
    }
}

/// Stability index of the beta coalescent, restricted to the open interval (1, 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha<T: Scalar = f64>(T);

impl<T: Scalar> Alpha<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::one() && value < T::lit(2.0) {
            Ok(Self(value))
        } else {
            Err(Error::AlphaOutOfRange(value.as_f64()))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// Mean merger size of the limiting law q, `1/(alpha - 1)`.
    #[inline]
    pub fn gamma_mean(self) -> T {
        T::one() / (self.0 - T::one())
    }

    pub fn cast<U: Scalar>(self) -> Alpha<U> {
        Alpha(U::lit(self.0.as_f64()))
    }
}

impl<T: Scalar> Serialize for Alpha<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0.as_f64())
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Alpha<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Alpha::new(T::lit(v)).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Display for Alpha<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        Display::fmt(&self.0, f)
    }
}
