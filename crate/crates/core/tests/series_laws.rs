use perturb_core::series::{
    binomial_expand, integer, AffineExponent, EpsSeries, Monomial, Polynomial, Symbol,
};
use proptest::prelude::*;

const ORDER: usize = 3;

fn monomial() -> impl Strategy<Value = Monomial> {
    (-2i32..=2, -2i32..=2, 0i32..=2).prop_map(|(ex, ey, en)| {
        Monomial::from_exponents(&[(Symbol::X, ex), (Symbol::Y, ey), (Symbol::N, en)]).unwrap()
    })
}

fn polynomial() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-5i64..=5, monomial()), 0..4)
        .prop_map(|terms| Polynomial::from_terms(terms.into_iter().map(|(c, m)| (integer(c), m))))
}

fn series() -> impl Strategy<Value = EpsSeries> {
    prop::collection::vec(polynomial(), ORDER + 1).prop_map(EpsSeries::from_coeffs)
}

/// A series with constant coefficient 1, so it can be inverted.
fn unit_series() -> impl Strategy<Value = EpsSeries> {
    prop::collection::vec(polynomial(), ORDER).prop_map(|tail| {
        let mut coeffs = vec![Polynomial::one()];
        coeffs.extend(tail);
        EpsSeries::from_coeffs(coeffs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn addition_commutes(a in series(), b in series()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
    }

    #[test]
    fn multiplication_commutes(a in series(), b in series()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
    }

    #[test]
    fn multiplication_associates(a in series(), b in series(), c in series()) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn multiplication_distributes(a in series(), b in series(), c in series()) {
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    }

    #[test]
    fn subtraction_cancels(a in series()) {
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn inverse_is_two_sided(a in unit_series()) {
        let inv = a.geometric_invert().unwrap();
        prop_assert_eq!(a.mul(&inv), EpsSeries::one(ORDER));
        prop_assert_eq!(inv.mul(&a), EpsSeries::one(ORDER));
    }

    #[test]
    fn negative_power_inverts_positive_power(a in unit_series(), e in 1i32..4) {
        let up = a.pow(e).unwrap();
        let down = a.pow(-e).unwrap();
        prop_assert_eq!(up.mul(&down), EpsSeries::one(ORDER));
    }

    #[test]
    fn substituting_a_symbol_for_itself_is_identity(a in series()) {
        let x = EpsSeries::constant(Polynomial::var(Symbol::X), ORDER);
        prop_assert_eq!(a.substitute(Symbol::X, &x).unwrap(), a);
    }

    #[test]
    fn binomial_matches_repeated_product(u in polynomial(), m in 0i64..6) {
        // (1 + eps u)^m for integer m
        let mut base = EpsSeries::eps_term(u.clone(), 1, ORDER);
        base = base.add(&EpsSeries::one(ORDER));
        let expected = base.pow(m as i32).unwrap();
        prop_assert_eq!(binomial_expand(AffineExponent::integer(m), &u, ORDER), expected);
    }
}
