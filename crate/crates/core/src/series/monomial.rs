use std::fmt;

use super::SeriesError;

/// The five indeterminates of the coefficient ring.
///
/// `x` and `y` are the rescaled distances from the singular point, `y0`/`y1`
/// the leading and first-order parts of `y`, and `n` the number of bidders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    X,
    Y,
    Y0,
    Y1,
    N,
}

impl Symbol {
    pub const ALL: [Symbol; 5] = [Symbol::X, Symbol::Y, Symbol::Y0, Symbol::Y1, Symbol::N];

    pub(crate) fn index(self) -> usize {
        match self {
            Symbol::X => 0,
            Symbol::Y => 1,
            Symbol::Y0 => 2,
            Symbol::Y1 => 3,
            Symbol::N => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::X => "x",
            Symbol::Y => "y",
            Symbol::Y0 => "y0",
            Symbol::Y1 => "y1",
            Symbol::N => "n",
        }
    }

    /// Whether the symbol may carry a negative exponent.
    pub fn is_laurent(self) -> bool {
        matches!(self, Symbol::X | Symbol::Y | Symbol::Y0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A power product `x^a y^b y0^c y1^d n^e`.
///
/// Ordering is lexicographic on the exponent vector in symbol order, which is
/// also the order terms are printed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial([i32; 5]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; 5]);

    pub fn var(symbol: Symbol) -> Self {
        let mut e = [0; 5];
        e[symbol.index()] = 1;
        Monomial(e)
    }

    /// `symbol^exponent`, rejecting negative powers of `n` and `y1`.
    pub fn power(symbol: Symbol, exponent: i32) -> Result<Self, SeriesError> {
        Self::from_exponents(&[(symbol, exponent)])
    }

    pub fn from_exponents(exponents: &[(Symbol, i32)]) -> Result<Self, SeriesError> {
        let mut e = [0; 5];
        for &(symbol, exponent) in exponents {
            e[symbol.index()] += exponent;
        }
        Self::checked(e)
    }

    fn checked(e: [i32; 5]) -> Result<Self, SeriesError> {
        for symbol in Symbol::ALL {
            let exponent = e[symbol.index()];
            if exponent < 0 && !symbol.is_laurent() {
                return Err(SeriesError::NegativeExponent { symbol, exponent });
            }
        }
        Ok(Monomial(e))
    }

    pub fn exponent(&self, symbol: Symbol) -> i32 {
        self.0[symbol.index()]
    }

    pub fn is_one(&self) -> bool {
        self.0 == [0; 5]
    }

    /// Copy of `self` with `symbol` removed (exponent set to zero).
    pub fn without(&self, symbol: Symbol) -> Self {
        let mut e = self.0;
        e[symbol.index()] = 0;
        Monomial(e)
    }

    // Exponents only ever add, and the sum of two admissible vectors stays
    // admissible, so this cannot fail.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        Monomial(e)
    }

    pub fn inverse(&self) -> Result<Monomial, SeriesError> {
        Self::checked(self.0.map(|a| -a))
    }

    pub fn pow(&self, exponent: i32) -> Result<Monomial, SeriesError> {
        Self::checked(self.0.map(|a| a * exponent))
    }

    pub fn eval(&self, values: &[f64; 5]) -> f64 {
        self.0
            .iter()
            .zip(values.iter())
            .filter(|(e, _)| **e != 0)
            .map(|(e, v)| v.powi(*e))
            .product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        for symbol in Symbol::ALL {
            let e = self.exponent(symbol);
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{symbol}")?;
            } else {
                write!(f, "{symbol}^{e}")?;
            }
        }
        Ok(())
    }
}
