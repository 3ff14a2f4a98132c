//! Exact truncated power series in `eps`.
//!
//! Coefficients are Laurent polynomials in `x, y, y0, y1` whose scalar
//! coefficients are polynomials in `n` over the rationals. Nothing in this
//! module rounds.

mod binomial;
mod eps;
mod monomial;
mod polynomial;

pub use binomial::{binomial_expand, generalized_binomial, poly_div_linear_n, AffineExponent};
pub use eps::EpsSeries;
pub use monomial::{Monomial, Symbol};
pub use polynomial::{integer, rational, Polynomial};

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("negative exponent {exponent} on {symbol} is not allowed")]
    NegativeExponent { symbol: Symbol, exponent: i32 },
    #[error("series to invert has constant coefficient {found}, expected 1")]
    NotUnitLeading { found: String },
    #[error("expected a single-term polynomial")]
    NotMonomial,
    #[error("replacement for {symbol} has a zero eps^0 coefficient but {symbol} appears with a negative power")]
    ZeroLeading { symbol: Symbol },
    #[error("{symbol} = 0 substituted into a negative power")]
    ZeroToNegativePower { symbol: Symbol },
    #[error("order {requested} requested from a series truncated at order {order}")]
    OrderOutOfRange { requested: usize, order: usize },
    #[error("cannot divide by eps^{shift}: coefficient of eps^{index} is {found}")]
    NonzeroBelowShift {
        shift: usize,
        index: usize,
        found: String,
    },
    #[error("polynomial is not divisible by (n - {c}); remainder {remainder}")]
    NotDivisible { c: i64, remainder: String },
}
