use num_traits::One;

use super::{integer, EpsSeries, Polynomial, Rational, SeriesError, Symbol};

/// An exponent of the form `a*n + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AffineExponent {
    pub n_coefficient: i64,
    pub offset: i64,
}

impl AffineExponent {
    pub const fn new(n_coefficient: i64, offset: i64) -> Self {
        AffineExponent {
            n_coefficient,
            offset,
        }
    }

    /// `n + offset`
    pub const fn n_plus(offset: i64) -> Self {
        Self::new(1, offset)
    }

    pub const fn integer(value: i64) -> Self {
        Self::new(0, value)
    }

    pub fn as_polynomial(&self) -> Polynomial {
        &Polynomial::var(Symbol::N).scale(&integer(self.n_coefficient))
            + &Polynomial::from_int(self.offset)
    }
}

/// Falling-factorial binomial coefficient `m (m-1) ... (m-k+1) / k!` as a
/// polynomial in `n`.
pub fn generalized_binomial(m: AffineExponent, k: u32) -> Polynomial {
    let mut acc = Polynomial::one();
    let mut factorial = Rational::one();
    for i in 0..k as i64 {
        acc = acc * AffineExponent::new(m.n_coefficient, m.offset - i).as_polynomial();
        factorial *= integer(i + 1);
    }
    acc.scale(&factorial.recip())
}

/// `(1 + eps u)^m` expanded to `order` by the generalized binomial theorem.
pub fn binomial_expand(m: AffineExponent, u: &Polynomial, order: usize) -> EpsSeries {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut u_power = Polynomial::one();
    for j in 0..=order {
        coeffs.push(generalized_binomial(m, j as u32) * &u_power);
        u_power = u_power * u;
    }
    EpsSeries::from_coeffs(coeffs)
}

/// Exact quotient of `p` by `(n - c)`, treating `p` as a polynomial in `n`
/// whose coefficients live in the other symbols.
pub fn poly_div_linear_n(p: &Polynomial, c: i64) -> Result<Polynomial, SeriesError> {
    let groups = p.collect_by(Symbol::N);
    let Some(&degree) = groups.keys().next_back() else {
        return Ok(Polynomial::zero());
    };
    // Synthetic division from the top degree down:
    // q_{d-1} = p_d + c q_d, remainder = p_0 + c q_0.
    let c_poly = Polynomial::from_int(c);
    let n = Polynomial::var(Symbol::N);
    let mut quotient = Polynomial::zero();
    let mut carry = Polynomial::zero();
    for d in (0..=degree).rev() {
        let p_d = groups.get(&d).cloned().unwrap_or_default();
        let value = &p_d + &(&c_poly * &carry);
        if d == 0 {
            if !value.is_zero() {
                return Err(SeriesError::NotDivisible {
                    c,
                    remainder: value.to_string(),
                });
            }
        } else {
            quotient = quotient + &value * &n.pow(d as u32 - 1);
            carry = value;
        }
    }
    Ok(quotient)
}

#[cfg(test)]
mod tests {
    use super::super::rational;
    use super::*;

    fn n() -> Polynomial {
        Polynomial::var(Symbol::N)
    }
    fn n_minus(c: i64) -> Polynomial {
        n() - Polynomial::from_int(c)
    }

    #[test]
    fn empty_product_is_one() {
        assert_eq!(
            generalized_binomial(AffineExponent::n_plus(-2), 0),
            Polynomial::one()
        );
    }

    #[test]
    fn second_coefficient_of_n_minus_2() {
        let expected = (n_minus(2) * n_minus(3)).scale(&rational(1, 2));
        assert_eq!(
            generalized_binomial(AffineExponent::n_plus(-2), 2),
            expected
        );
        // n^2/2 - 5n/2 + 3
        let expanded = &(&n().pow(2).scale(&rational(1, 2)) - &n().scale(&rational(5, 2)))
            + &Polynomial::from_int(3);
        assert_eq!(
            generalized_binomial(AffineExponent::n_plus(-2), 2),
            expanded
        );
    }

    #[test]
    fn third_coefficient_of_n_minus_1() {
        let expected = (n_minus(1) * n_minus(2) * n_minus(3)).scale(&rational(1, 6));
        assert_eq!(
            generalized_binomial(AffineExponent::n_plus(-1), 3),
            expected
        );
    }

    #[test]
    fn integer_exponent_terminates() {
        let x = Polynomial::var(Symbol::X);
        let s = binomial_expand(AffineExponent::integer(1), &x, 3);
        assert_eq!(
            s,
            EpsSeries::from_coeffs(vec![Polynomial::one(), x]).truncate(3)
        );
    }

    #[test]
    fn expansion_with_symbolic_exponent() {
        let x = Polynomial::var(Symbol::X);
        let s = binomial_expand(AffineExponent::n_plus(-2), &x, 3);
        let expected = EpsSeries::from_coeffs(vec![
            Polynomial::one(),
            n_minus(2) * &x,
            (n_minus(2) * n_minus(3) * x.pow(2)).scale(&rational(1, 2)),
            (n_minus(2) * n_minus(3) * n_minus(4) * x.pow(3)).scale(&rational(1, 6)),
        ]);
        assert_eq!(s, expected);

        let y = Polynomial::var(Symbol::Y);
        let d = binomial_expand(AffineExponent::n_plus(-3), &y, 1);
        assert_eq!(
            d,
            EpsSeries::from_coeffs(vec![Polynomial::one(), n_minus(3) * y])
        );
    }

    #[test]
    fn divide_by_n_minus_c() {
        let x = Polynomial::var(Symbol::X);
        let y = Polynomial::var(Symbol::Y);
        let diff = &x - &y;
        assert_eq!(poly_div_linear_n(&(n_minus(2) * &diff), 2).unwrap(), diff);

        let sq = x.pow(2) - y.pow(2);
        let p = (n_minus(2) * n_minus(3) * &sq).scale(&rational(1, 2));
        let q = (n_minus(3) * &sq).scale(&rational(1, 2));
        assert_eq!(poly_div_linear_n(&p, 2).unwrap(), q);

        assert!(matches!(
            poly_div_linear_n(&diff, 2),
            Err(SeriesError::NotDivisible { c: 2, .. })
        ));
        assert!(poly_div_linear_n(&Polynomial::zero(), 5).unwrap().is_zero());
    }
}
