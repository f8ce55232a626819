//! The NGNB family: a negative binomial whose combinatorial term is raised
//! to a real power `gamma`,
//!
//! ```text
//! P(Y = y) = C(y + k - 1, y)^gamma q^y / Z(gamma, k, q),   y = 0, 1, ...
//! ```
//!
//! `gamma = 0` gives the geometric law, `gamma = 1` the negative binomial,
//! and `k = 1` collapses to the geometric for every `gamma`.
//!
//! The crate is organised around a truncated series engine ([`series`]) on
//! top of which sit the normalized probability table ([`distribution`]),
//! the hypergeometric representation for integer `gamma` ([`hypergeom`]),
//! closed-form moment approximations and their error analysis ([`approx`]),
//! and the COM-Poisson limit ([`limits`]). [`input`] holds the text parsers
//! shared with the command-line tool.

pub mod approx;
pub mod distribution;
mod error;
pub mod hypergeom;
pub mod input;
pub mod limits;
pub mod series;
mod sum;

pub use distribution::{DistributionTable, HazardCurve, ShapeClass};
pub use error::{Error, Result};
pub use series::{NgnbParams, SeriesOptions, SeriesTruncation};
pub use sum::NeumaierSum;
