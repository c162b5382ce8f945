//! Simulation and limit theory for functionals of the beta coalescent and
//! of its evolving version.
//!
//! The crate is organized around the chain of objects a study needs: merger
//! rates ([`rates`]), block-counting paths of the static coalescent
//! ([`chain`]), event logs of the evolving population ([`evolving`]), the
//! functional class ([`funcspec`]), the stable limit objects ([`stable`]) and
//! the statistical comparisons between them ([`verify`]).

mod error;
pub mod chain;
pub mod evolving;
pub mod funcspec;
pub mod quadrature;
pub mod rates;
pub mod replicate;
pub mod scalar;
pub mod special;
pub mod stable;
pub mod verify;

pub use error::{Error, Result};
pub use funcspec::{parse_fspec, FunctionalSpec, LimitProfile};
pub use rates::{MergerSizeTable, RatesContext};
pub use scalar::{Alpha, Scalar};
pub use stable::StableParams;

pub type AlphaF32 = Alpha<f32>;
pub type AlphaF64 = Alpha<f64>;
pub type FunctionalSpecF32 = FunctionalSpec<f32>;
pub type FunctionalSpecF64 = FunctionalSpec<f64>;
pub type LimitProfileF32 = LimitProfile<f32>;
pub type LimitProfileF64 = LimitProfile<f64>;
pub type StableParamsF32 = StableParams<f32>;
pub type StableParamsF64 = StableParams<f64>;
