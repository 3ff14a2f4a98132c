use std::collections::BTreeMap;
use std::fmt;

use super::{Monomial, Polynomial, SeriesError, Symbol};

/// `c_0 + c_1 eps + ... + c_O eps^O + O(eps^(O+1))`.
///
/// Every operation discards powers above the truncation order. Binary
/// operations on series of different orders truncate to the smaller one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpsSeries {
    coeffs: Vec<Polynomial>,
}

impl EpsSeries {
    pub fn zero(order: usize) -> Self {
        EpsSeries {
            coeffs: vec![Polynomial::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(Polynomial::one(), order)
    }

    pub fn constant(c: Polynomial, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// Series with the given coefficients; the order is `coeffs.len() - 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn from_coeffs(coeffs: Vec<Polynomial>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least the eps^0 coefficient"
        );
        EpsSeries { coeffs }
    }

    /// `c * eps^power`, truncated at `order`.
    pub fn eps_term(c: Polynomial, power: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Polynomial] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Polynomial> {
        self.coeffs
    }

    /// Coefficient of `eps^j`.
    pub fn extract_order(&self, j: usize) -> Result<&Polynomial, SeriesError> {
        self.coeffs.get(j).ok_or(SeriesError::OrderOutOfRange {
            requested: j,
            order: self.order(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Polynomial::is_zero)
    }

    /// Drops coefficients above `order`; a higher order is padded with zeros.
    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs: Vec<Polynomial> = self.coeffs.iter().take(order + 1).cloned().collect();
        coeffs.resize(order + 1, Polynomial::zero());
        EpsSeries { coeffs }
    }

    pub fn add(&self, rhs: &EpsSeries) -> EpsSeries {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &EpsSeries) -> EpsSeries {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &EpsSeries,
        op: impl Fn(&Polynomial, &Polynomial) -> Polynomial,
    ) -> EpsSeries {
        let order = self.order().min(rhs.order());
        EpsSeries {
            coeffs: (0..=order)
                .map(|j| op(&self.coeffs[j], &rhs.coeffs[j]))
                .collect(),
        }
    }

    /// Truncating Cauchy product.
    pub fn mul(&self, rhs: &EpsSeries) -> EpsSeries {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order)
            .map(|j| {
                (0..=j).fold(Polynomial::zero(), |acc, i| {
                    if self.coeffs[i].is_zero() || rhs.coeffs[j - i].is_zero() {
                        acc
                    } else {
                        acc + &self.coeffs[i] * &rhs.coeffs[j - i]
                    }
                })
            })
            .collect();
        EpsSeries { coeffs }
    }

    pub fn neg(&self) -> EpsSeries {
        self.map(|c| -c)
    }

    /// Multiplies every coefficient by an eps-free polynomial.
    pub fn scale(&self, factor: &Polynomial) -> EpsSeries {
        self.map(|c| c * factor)
    }

    pub fn map(&self, f: impl Fn(&Polynomial) -> Polynomial) -> EpsSeries {
        EpsSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn try_map<E>(
        &self,
        f: impl Fn(&Polynomial) -> Result<Polynomial, E>,
    ) -> Result<EpsSeries, E> {
        Ok(EpsSeries {
            coeffs: self.coeffs.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    /// Divides by `eps^shift`. The coefficients below `shift` must vanish; the
    /// result has order `order - shift`.
    pub fn shift_down(&self, shift: usize) -> Result<EpsSeries, SeriesError> {
        if shift > self.order() {
            return Err(SeriesError::OrderOutOfRange {
                requested: shift,
                order: self.order(),
            });
        }
        if let Some((index, c)) = self.coeffs[..shift]
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
        {
            return Err(SeriesError::NonzeroBelowShift {
                shift,
                index,
                found: c.to_string(),
            });
        }
        Ok(EpsSeries {
            coeffs: self.coeffs[shift..].to_vec(),
        })
    }

    /// Reciprocal of a series whose constant coefficient is exactly 1,
    /// i.e. the geometric series `1/(1 + eps q) = 1 - eps q + eps^2 q^2 - ...`
    /// summed to the retained order.
    pub fn geometric_invert(&self) -> Result<EpsSeries, SeriesError> {
        if !self.coeffs[0].is_one() {
            return Err(SeriesError::NotUnitLeading {
                found: self.coeffs[0].to_string(),
            });
        }
        // b_0 = 1, b_j = -sum_{i=1..j} a_i b_{j-i}
        let mut inv: Vec<Polynomial> = Vec::with_capacity(self.coeffs.len());
        inv.push(Polynomial::one());
        for j in 1..self.coeffs.len() {
            let mut acc = Polynomial::zero();
            for i in 1..=j {
                if !self.coeffs[i].is_zero() && !inv[j - i].is_zero() {
                    acc = acc + &self.coeffs[i] * &inv[j - i];
                }
            }
            inv.push(-acc);
        }
        Ok(EpsSeries { coeffs: inv })
    }

    /// Integer power. Negative powers need an eps^0 coefficient that is a
    /// single invertible term.
    pub fn pow(&self, exponent: i32) -> Result<EpsSeries, SeriesError> {
        if exponent >= 0 {
            return Ok(self.pow_unsigned(exponent as u32));
        }
        let lead = &self.coeffs[0];
        if lead.is_zero() {
            return Err(SeriesError::NotUnitLeading {
                found: lead.to_string(),
            });
        }
        let lead_inv = lead.monomial_inverse()?;
        let normalized = self.scale(&lead_inv).geometric_invert()?;
        Ok(normalized
            .pow_unsigned(exponent.unsigned_abs())
            .scale(&lead_inv.pow(exponent.unsigned_abs())))
    }

    fn pow_unsigned(&self, exponent: u32) -> EpsSeries {
        let mut result = EpsSeries::one(self.order());
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Replaces every occurrence of `target` by `replacement`, re-expanding
    /// negative powers through the geometric series. The result is truncated
    /// at the smaller of the two orders.
    pub fn substitute(
        &self,
        target: Symbol,
        replacement: &EpsSeries,
    ) -> Result<EpsSeries, SeriesError> {
        let order = self.order().min(replacement.order());
        let replacement = replacement.truncate(order);
        let mut powers: BTreeMap<i32, EpsSeries> = BTreeMap::new();
        let mut out = EpsSeries::zero(order);

        for (j, coeff) in self.coeffs.iter().enumerate().take(order + 1) {
            for (e, rest) in coeff.collect_by(target) {
                let power = match powers.entry(e) {
                    std::collections::btree_map::Entry::Occupied(slot) => slot.into_mut(),
                    std::collections::btree_map::Entry::Vacant(slot) => {
                        if e < 0 && replacement.coeffs[0].is_zero() {
                            return Err(SeriesError::ZeroLeading { symbol: target });
                        }
                        slot.insert(replacement.pow(e)?)
                    }
                };
                let shifted = shift_up(&power.scale(&rest), j);
                out = out.add(&shifted);
            }
        }
        Ok(out)
    }

    /// Replaces a symbol by an exact value in every coefficient.
    pub fn evaluate_symbol(
        &self,
        symbol: Symbol,
        value: &super::Rational,
    ) -> Result<EpsSeries, SeriesError> {
        self.try_map(|c| c.evaluate_symbol(symbol, value))
    }

    /// `self * m` for a Laurent monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> EpsSeries {
        self.map(|c| c.mul_monomial(m))
    }
}

/// Multiplies by `eps^shift` keeping the order.
fn shift_up(s: &EpsSeries, shift: usize) -> EpsSeries {
    let order = s.order();
    let mut coeffs = vec![Polynomial::zero(); order + 1];
    for (j, c) in s.coeffs.iter().enumerate() {
        if j + shift <= order {
            coeffs[j + shift] = c.clone();
        }
    }
    EpsSeries { coeffs }
}

impl fmt::Display for EpsSeries {
    /// One line per retained order, `eps^j: <coefficient>`, then the
    /// truncation marker.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.coeffs.iter().enumerate() {
            writeln!(f, "eps^{j}: {c}")?;
        }
        write!(f, "O(eps^{})", self.order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{integer, rational};
    use super::*;

    fn x() -> Polynomial {
        Polynomial::var(Symbol::X)
    }
    fn y() -> Polynomial {
        Polynomial::var(Symbol::Y)
    }
    fn lin(c0: Polynomial, c1: Polynomial, order: usize) -> EpsSeries {
        EpsSeries::from_coeffs(vec![c0, c1]).truncate(order)
    }

    #[test]
    fn product_of_conjugates() {
        let a = lin(Polynomial::one(), x(), 2);
        let b = lin(Polynomial::one(), -x(), 2);
        let expected =
            EpsSeries::from_coeffs(vec![Polynomial::one(), Polynomial::zero(), -x().pow(2)]);
        assert_eq!(a.mul(&b), expected);
    }

    #[test]
    fn product_truncates_above_order() {
        let a = lin(Polynomial::one(), x(), 1);
        let b = lin(Polynomial::one(), y(), 1);
        assert_eq!(a.mul(&b), lin(Polynomial::one(), x() + y(), 1));
    }

    #[test]
    fn mixed_orders_truncate_to_smaller() {
        let a = lin(Polynomial::one(), x(), 3);
        let b = lin(Polynomial::one(), y(), 1);
        assert_eq!(a.add(&b).order(), 1);
        assert_eq!(a.mul(&b).order(), 1);
    }

    #[test]
    fn geometric_inverse_first_order() {
        let q = Polynomial::var(Symbol::N) * y();
        let s = lin(Polynomial::one(), q.clone(), 1);
        assert_eq!(
            s.geometric_invert().unwrap(),
            lin(Polynomial::one(), -q.clone(), 1)
        );
        let s2 = lin(Polynomial::one(), q.clone(), 2);
        let expected = EpsSeries::from_coeffs(vec![Polynomial::one(), -q.clone(), q.pow(2)]);
        assert_eq!(s2.geometric_invert().unwrap(), expected);
        assert_eq!(
            EpsSeries::one(4).geometric_invert().unwrap(),
            EpsSeries::one(4)
        );
    }

    #[test]
    fn geometric_inverse_rejects_non_unit_constant() {
        let s = lin(Polynomial::from_int(2), x(), 2);
        assert!(matches!(
            s.geometric_invert(),
            Err(SeriesError::NotUnitLeading { .. })
        ));
        let s = lin(Polynomial::one() + x(), x(), 2);
        assert!(s.geometric_invert().is_err());
    }

    #[test]
    fn substitute_square() {
        let s = EpsSeries::constant(y().pow(2), 1);
        let repl = lin(Polynomial::var(Symbol::Y0), Polynomial::var(Symbol::Y1), 1);
        let y0 = Polynomial::var(Symbol::Y0);
        let y1 = Polynomial::var(Symbol::Y1);
        let expected = lin(y0.pow(2), (&y0 * &y1).scale(&integer(2)), 1);
        assert_eq!(s.substitute(Symbol::Y, &repl).unwrap(), expected);
    }

    #[test]
    fn substitute_inverse_square() {
        let s = EpsSeries::constant(
            Polynomial::monomial(Monomial::power(Symbol::Y, -2).unwrap()),
            1,
        );
        let repl = lin(Polynomial::var(Symbol::Y0), Polynomial::var(Symbol::Y1), 1);
        let y0_m2 = Polynomial::monomial(Monomial::power(Symbol::Y0, -2).unwrap());
        let y1_y0_m3 = Polynomial::monomial(
            Monomial::from_exponents(&[(Symbol::Y1, 1), (Symbol::Y0, -3)]).unwrap(),
        );
        let expected = lin(y0_m2, y1_y0_m3.scale(&integer(-2)), 1);
        assert_eq!(s.substitute(Symbol::Y, &repl).unwrap(), expected);
    }

    #[test]
    fn substitute_leaves_other_symbols() {
        let s = lin(x(), x().scale(&rational(1, 3)), 2);
        let repl = lin(Polynomial::var(Symbol::Y0), Polynomial::var(Symbol::Y1), 2);
        assert_eq!(s.substitute(Symbol::Y, &repl).unwrap(), s);
    }

    #[test]
    fn substitute_negative_power_needs_leading_term() {
        let s = EpsSeries::constant(
            Polynomial::monomial(Monomial::power(Symbol::Y, -1).unwrap()),
            1,
        );
        let repl = lin(Polynomial::zero(), Polynomial::var(Symbol::Y1), 1);
        assert_eq!(
            s.substitute(Symbol::Y, &repl),
            Err(SeriesError::ZeroLeading { symbol: Symbol::Y })
        );
        // positive powers are fine with a vanishing leading coefficient
        let s = EpsSeries::constant(y().pow(2), 2);
        let out = s.substitute(Symbol::Y, &repl.truncate(2)).unwrap();
        assert_eq!(
            out.extract_order(2).unwrap(),
            &Polynomial::var(Symbol::Y1).pow(2)
        );
    }

    #[test]
    fn extract_order_bounds() {
        let s = lin(Polynomial::one(), x(), 1);
        assert_eq!(s.extract_order(0).unwrap(), &Polynomial::one());
        assert_eq!(s.extract_order(1).unwrap(), &x());
        assert_eq!(
            s.extract_order(2),
            Err(SeriesError::OrderOutOfRange {
                requested: 2,
                order: 1
            })
        );
    }

    #[test]
    fn shift_down_requires_vanishing_low_orders() {
        let s = EpsSeries::eps_term(x(), 2, 3);
        let shifted = s.shift_down(2).unwrap();
        assert_eq!(shifted, lin(x(), Polynomial::zero(), 1));
        assert!(lin(Polynomial::one(), x(), 3).shift_down(1).is_err());
    }

    #[test]
    fn negative_power_with_scaled_leading_term() {
        // (2y + eps)^-1 = 1/(2y) - eps/(4y^2) + ...
        let s = lin(y().scale(&integer(2)), Polynomial::one(), 2);
        let inv = s.pow(-1).unwrap();
        assert!(s.mul(&inv) == EpsSeries::one(2));
    }

    #[test]
    fn display_lists_every_order() {
        let s = lin(Polynomial::one(), x(), 2);
        assert_eq!(s.to_string(), "eps^0: 1\neps^1: x\neps^2: 0\nO(eps^3)");
    }
}
