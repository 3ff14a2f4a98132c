//! Symbolic replay of the local expansion around the singular point.
//!
//! With `p = 1`, `X = eps x`, `Y = eps y`, the right-hand side of the
//! recentered equation is built as an eps-series, divided by
//! `(1/2) eps^2 y^2 (1 + eps y)^(n-3)`, truncated at first order, and checked
//! term by term against the closed forms
//!
//! ```text
//! y0' + eps y1' = (y^2 - x^2)/y^2 + eps (3-n)(y-x)^2(2x+y)/(3y^2)
//! ```
//!
//! Substituting `y = y0 + eps y1` and balancing `eps^1` gives the linear
//! correction equation `y1' = forcing + gain * y1`.

use std::fmt;

use crate::series::{
    binomial_expand, integer, poly_div_linear_n, rational, AffineExponent, EpsSeries, Monomial,
    Polynomial, SeriesError, Symbol,
};

pub const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("truncation order {0} is too small (need at least {1})")]
    OrderTooSmall(usize, usize),
    #[error("{stage} does not match its closed form\n  expected: {expected}\n  actual:   {actual}\n  diff:     {diff}")]
    IdentityMismatch {
        stage: &'static str,
        expected: String,
        actual: String,
        diff: String,
    },
    #[error("first-order balance is nonlinear in y1 (found y1^{0})")]
    Nonlinear(i32),
}

/// How the denominator `(1 + eps (n-3) y)` is inverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inversion {
    /// Geometric series kept to every retained order.
    Full,
    /// Only `1 - eps (n-3) y`, the two-term truncation.
    TwoTerm,
}

/// The order-0 and order-1 parts of the normalized equation, each as
/// numerator over a monomial denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderEquations {
    pub leading_numerator: Polynomial,
    pub leading_denominator: Monomial,
    /// Includes the `1/3` prefactor.
    pub first_numerator: Polynomial,
    pub first_denominator: Monomial,
}

impl OrderEquations {
    /// `[leading, first]` as a first-order eps-series with Laurent coefficients.
    pub fn as_series(&self) -> Result<EpsSeries, SeriesError> {
        let lead = self
            .leading_numerator
            .mul_monomial(&self.leading_denominator.inverse()?);
        let first = self
            .first_numerator
            .mul_monomial(&self.first_denominator.inverse()?);
        Ok(EpsSeries::from_coeffs(vec![lead, first]))
    }

    /// The first-order part with `n` fixed to a value.
    pub fn first_numerator_at(&self, n: i64) -> Result<Polynomial, SeriesError> {
        self.first_numerator.evaluate_symbol(Symbol::N, &integer(n))
    }
}

impl fmt::Display for OrderEquations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "leading:     ({}) / ({})",
            self.leading_numerator, self.leading_denominator
        )?;
        write!(
            f,
            "first order: ({}) / ({})",
            self.first_numerator, self.first_denominator
        )
    }
}

/// Intermediate values of one derivation, kept for printing.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub order: usize,
    /// Right-hand side after expansion and cancellation (orders `0..=order`).
    pub rhs: EpsSeries,
    /// After division by `(1/2) eps^2 y^2 (1 + eps y)^(n-3)`, truncated at
    /// first order.
    pub normalized: EpsSeries,
    pub equations: OrderEquations,
}

/// `y1' = forcing + gain * y1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbationSplit {
    /// The eps^0 balance, `(y0^2 - x^2) y0^-2`.
    pub leading: Polynomial,
    pub forcing: Polynomial,
    pub gain: Polynomial,
}

impl PerturbationSplit {
    /// Numeric value of the forcing term at `(x, y0, n)`.
    pub fn forcing_at(&self, x: f64, y0: f64, n: f64) -> f64 {
        self.forcing.eval(&[x, 0.0, y0, 0.0, n])
    }

    pub fn gain_at(&self, x: f64, y0: f64) -> f64 {
        self.gain.eval(&[x, 0.0, y0, 0.0, 0.0])
    }
}

impl fmt::Display for PerturbationSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "y0' = {}", self.leading)?;
        write!(f, "y1' = {} + ({})*y1", self.forcing, self.gain)
    }
}

fn x() -> Polynomial {
    Polynomial::var(Symbol::X)
}

fn y() -> Polynomial {
    Polynomial::var(Symbol::Y)
}

fn n() -> Polynomial {
    Polynomial::var(Symbol::N)
}

fn y_power(symbol: Symbol, e: i32) -> Polynomial {
    Polynomial::monomial(Monomial::power(symbol, e).expect("x, y and y0 admit negative powers"))
}

/// `[(1+eps x)^(n-2) - (1+eps y)^(n-2)]/(n-2) - [(1+eps x)^(n-1) - (1+eps y)^(n-1)]/(n-1)`
pub fn build_rhs_series(order: usize) -> Result<EpsSeries, PipelineError> {
    if order < 2 {
        return Err(PipelineError::OrderTooSmall(order, 2));
    }
    let bracket = |m: i64| -> Result<EpsSeries, SeriesError> {
        let exponent = AffineExponent::n_plus(-m);
        let diff =
            binomial_expand(exponent, &x(), order).sub(&binomial_expand(exponent, &y(), order));
        diff.try_map(|c| poly_div_linear_n(c, m))
    };
    Ok(bracket(2)?.sub(&bracket(1)?))
}

/// Closed form of the expanded right-hand side at order 3:
/// `eps^2 (y^2 - x^2)/2 + eps^3 (n-3)(y^3 - x^3)/3`.
pub fn expected_rhs_series(order: usize) -> EpsSeries {
    let mut coeffs = vec![Polynomial::zero(); 4];
    coeffs[2] = (y().pow(2) - x().pow(2)).scale(&rational(1, 2));
    coeffs[3] =
        (&(&n() - &Polynomial::from_int(3)) * &(y().pow(3) - x().pow(3))).scale(&rational(1, 3));
    EpsSeries::from_coeffs(coeffs).truncate(order)
}

/// Closed forms of the two order equations.
pub fn expected_order_equations() -> OrderEquations {
    let y2 = Monomial::power(Symbol::Y, 2).expect("positive power");
    let three_minus_n = &Polynomial::from_int(3) - &n();
    let y_minus_x = &y() - &x();
    let first = (three_minus_n * &y_minus_x * &y_minus_x * (x().scale(&integer(2)) + y()))
        .scale(&rational(1, 3));
    OrderEquations {
        leading_numerator: y().pow(2) - x().pow(2),
        leading_denominator: y2,
        first_numerator: first,
        first_denominator: y2,
    }
}

/// Closed forms of the correction equation at `p = 1`:
/// gain `2 x^2 y0^-3`, forcing
/// `((6-2n) x^3 y0 + (3n-9) x^2 y0^2 + (3-n) y0^4) / (3 y0^3)`.
pub fn expected_split() -> PerturbationSplit {
    let x = x();
    let y0 = Polynomial::var(Symbol::Y0);
    let n = n();
    let c = |a: i64, b: i64| &n.scale(&integer(a)) + &Polynomial::from_int(b);
    let y0_m2 = y_power(Symbol::Y0, -2);
    let y0_m3 = y_power(Symbol::Y0, -3);
    let numerator =
        c(-2, 6) * x.pow(3) * &y0 + c(3, -9) * x.pow(2) * y0.pow(2) + c(-1, 3) * y0.pow(4);
    PerturbationSplit {
        leading: (y0.pow(2) - x.pow(2)) * y0_m2,
        forcing: (numerator * &y0_m3).scale(&rational(1, 3)),
        gain: (x.pow(2) * y0_m3).scale(&integer(2)),
    }
}

fn check<T: PartialEq + fmt::Display>(
    stage: &'static str,
    expected: &T,
    actual: &T,
    diff: impl FnOnce() -> String,
) -> Result<(), PipelineError> {
    if expected == actual {
        Ok(())
    } else {
        Err(PipelineError::IdentityMismatch {
            stage,
            expected: expected.to_string(),
            actual: actual.to_string(),
            diff: diff(),
        })
    }
}

/// Runs the full derivation at the given truncation order and asserts each
/// stage against its closed form.
pub fn derive(order: usize, inversion: Inversion) -> Result<Derivation, PipelineError> {
    if order < 3 {
        return Err(PipelineError::OrderTooSmall(order, 3));
    }
    let rhs = build_rhs_series(order)?;
    let expected_rhs = expected_rhs_series(order.min(3));
    check(
        "expanded right-hand side",
        &expected_rhs,
        &rhs.truncate(3.min(order)),
        || rhs.truncate(3).sub(&expected_rhs).to_string(),
    )?;

    // Divide by (1/2) eps^2 y^2: shift eps down by two, multiply by 2 y^-2.
    let reduced = rhs
        .shift_down(2)?
        .scale(&Polynomial::from_int(2))
        .mul_monomial(&Monomial::power(Symbol::Y, -2)?);
    let working = reduced.order();
    let denominator = binomial_expand(AffineExponent::n_plus(-3), &y(), working);
    let inverse = match inversion {
        Inversion::Full => denominator.geometric_invert()?,
        Inversion::TwoTerm => denominator.truncate(1).geometric_invert()?,
    };
    let normalized = reduced.mul(&inverse).truncate(1);

    let y2 = Monomial::power(Symbol::Y, 2)?;
    let equations = OrderEquations {
        leading_numerator: normalized.extract_order(0)?.mul_monomial(&y2),
        leading_denominator: y2,
        first_numerator: normalized.extract_order(1)?.mul_monomial(&y2),
        first_denominator: y2,
    };
    let expected = expected_order_equations();
    check(
        "leading-order equation",
        &expected.leading_numerator,
        &equations.leading_numerator,
        || (&equations.leading_numerator - &expected.leading_numerator).to_string(),
    )?;
    check(
        "first-order equation",
        &expected.first_numerator,
        &equations.first_numerator,
        || (&equations.first_numerator - &expected.first_numerator).to_string(),
    )?;

    Ok(Derivation {
        order,
        rhs,
        normalized,
        equations,
    })
}

/// Derives and verifies the order-0 / order-1 equations.
pub fn derive_order_equations(order: usize) -> Result<OrderEquations, PipelineError> {
    derive(order, Inversion::Full).map(|d| d.equations)
}

/// Substitutes `y = y0 + eps y1` into the order equations and isolates the
/// `eps^1` balance.
pub fn split_from(equations: &OrderEquations) -> Result<PerturbationSplit, PipelineError> {
    let replacement = EpsSeries::from_coeffs(vec![
        Polynomial::var(Symbol::Y0),
        Polynomial::var(Symbol::Y1),
    ]);
    let substituted = equations.as_series()?.substitute(Symbol::Y, &replacement)?;
    let leading = substituted.extract_order(0)?.clone();

    let mut forcing = Polynomial::zero();
    let mut gain = Polynomial::zero();
    for (power, part) in substituted.extract_order(1)?.collect_by(Symbol::Y1) {
        match power {
            0 => forcing = part,
            1 => gain = part,
            other => return Err(PipelineError::Nonlinear(other)),
        }
    }
    let split = PerturbationSplit {
        leading,
        forcing,
        gain,
    };

    let expected = expected_split();
    check("leading balance", &expected.leading, &split.leading, || {
        (&split.leading - &expected.leading).to_string()
    })?;
    check("correction gain", &expected.gain, &split.gain, || {
        (&split.gain - &expected.gain).to_string()
    })?;
    check(
        "correction forcing",
        &expected.forcing,
        &split.forcing,
        || (&split.forcing - &expected.forcing).to_string(),
    )?;
    Ok(split)
}

pub fn split_perturbation() -> Result<PerturbationSplit, PipelineError> {
    split_from(&derive_order_equations(DEFAULT_ORDER)?)
}
