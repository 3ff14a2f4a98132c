//! The leading-order equation `dY/dX = (Y^2 - X^2)/Y^2`.
//!
//! It is homogeneous: with `Y = X F` it separates into
//! `dX/X = F^2 dF / (-(F^3 - F^2 + 1))`. The real root `k` of
//! `F^3 - F^2 + 1` gives the ray solution `Y = k X`, and partial fractions
//! give the first integral
//!
//! ```text
//! Phi(X, Y) = X * prod_i (F - r_i)^(s_i),   s_i = r_i^2 / q'(r_i)
//! ```
//!
//! which is constant along every solution.

use num_complex::Complex64;

use crate::ode::{integrate, Halt, StepControl};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LeadingError {
    #[error("{0} must be nonzero")]
    Zero(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trajectory reached Y = 0 near X = {x} (last Y = {y}); the right-hand side is singular there")]
    YCrossedZero { x: f64, y: f64 },
    #[error("integration did not finish: step budget exhausted at X = {x}")]
    Incomplete { x: f64 },
}

/// `q(F) = F^3 - F^2 + 1`
pub fn cubic(f: f64) -> f64 {
    (f - 1.0) * f * f + 1.0
}

fn cubic_derivative(f: f64) -> f64 {
    (3.0 * f - 2.0) * f
}

/// Roots of `F^3 - F^2 + 1`: one real root `k` and the pair
/// `pair_re +- i pair_im`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicRoots {
    pub k: f64,
    pub pair_re: f64,
    /// Positive.
    pub pair_im: f64,
}

impl CubicRoots {
    /// The root with positive imaginary part.
    pub fn pair(&self) -> Complex64 {
        Complex64::new(self.pair_re, self.pair_im)
    }

    pub fn roots(&self) -> [Complex64; 3] {
        [Complex64::new(self.k, 0.0), self.pair(), self.pair().conj()]
    }
}

const BRACKET: (f64, f64) = (-0.76, -0.75);

/// Bisection on the sign change in `(-0.76, -0.75)`, Newton polishing, then
/// the complex pair from the deflated quadratic `F^2 + (k-1) F - 1/k`.
pub fn solve_leading_cubic() -> CubicRoots {
    let (mut lo, mut hi) = BRACKET;
    debug_assert!(cubic(lo) < 0.0 && cubic(hi) > 0.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cubic(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..8 {
        let step = cubic(k) / cubic_derivative(k);
        k -= step;
        if step.abs() <= f64::EPSILON * k.abs() {
            break;
        }
    }
    // (F - k)(F^2 + b F + c) with b = k - 1 and c = -1/k.
    let b = k - 1.0;
    let c = -1.0 / k;
    let pair_re = -0.5 * b;
    let pair_im = 0.5 * (4.0 * c - b * b).sqrt();
    CubicRoots {
        k,
        pair_re,
        pair_im,
    }
}

/// `k - (k^2 - 1)/k^2`, which vanishes exactly when `Y = k X` solves the
/// leading equation.
pub fn ray_residual(k_candidate: f64) -> Result<f64, LeadingError> {
    if k_candidate == 0.0 {
        return Err(LeadingError::Zero("k"));
    }
    let k2 = k_candidate * k_candidate;
    Ok(k_candidate - (k2 - 1.0) / k2)
}

/// Residue weights of `F^2 / q(F)` at the three roots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstIntegral {
    pub roots: CubicRoots,
    /// Weight at the real root.
    pub s1: f64,
    /// Weight at `roots.pair()`; the conjugate root carries `s2.conj()`.
    pub s2: Complex64,
}

impl FirstIntegral {
    pub fn new(roots: CubicRoots) -> Self {
        let k = roots.k;
        let s1 = k * k / cubic_derivative(k);
        let r2 = roots.pair();
        let s2 = r2 * r2 / ((3.0 * r2 - 2.0) * r2);
        FirstIntegral { roots, s1, s2 }
    }

    /// `s1 + 2 Re(s2)`, which must equal 1.
    pub fn residue_sum(&self) -> f64 {
        self.s1 + 2.0 * self.s2.re
    }

    pub fn value(&self, x: f64, y: f64) -> Result<f64, LeadingError> {
        conserved_quantity(x, y, self)
    }
}

impl Default for FirstIntegral {
    fn default() -> Self {
        FirstIntegral::new(solve_leading_cubic())
    }
}

/// `Phi(X, Y) = X |F - k|^s1 exp(2 Re(s2 log(F - r2)))` with `F = Y/X`.
///
/// The conjugate factors combine into a single real exponential, so only the
/// real part of the complex logarithm enters and the branch cut does not
/// matter.
pub fn conserved_quantity(x: f64, y: f64, fi: &FirstIntegral) -> Result<f64, LeadingError> {
    if x == 0.0 {
        return Err(LeadingError::Zero("X"));
    }
    let f = y / x;
    let real_factor = (f - fi.roots.k).abs().powf(fi.s1);
    let pair_log = (Complex64::new(f, 0.0) - fi.roots.pair()).ln();
    let pair_factor = (2.0 * (fi.s2 * pair_log).re).exp();
    Ok(x * real_factor * pair_factor)
}

/// Integrates the leading-order equation from `(x0, y0)` to `x1` with an
/// adaptive 5(4) pair, returning the accepted points.
pub fn integrate_leading(
    x0: f64,
    y0: f64,
    x1: f64,
    tol: f64,
) -> Result<Vec<(f64, f64)>, LeadingError> {
    if y0 == 0.0 {
        return Err(LeadingError::Zero("Y0"));
    }
    if x0 == 0.0 || x1 == 0.0 || x0.signum() != x1.signum() {
        return Err(LeadingError::InvalidArgument(format!(
            "X0 = {x0} and X1 = {x1} must be nonzero with the same sign"
        )));
    }
    if !(tol > 0.0) {
        return Err(LeadingError::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let span = (x1 - x0).abs();
    let mut control = StepControl::new(tol, (span / 200.0).max(f64::MIN_POSITIVE));
    // Relative control: near the ray, Phi is sensitive to absolute errors
    // in Y that are small compared with tol.
    control.atol = tol * 1e-6;
    let side = y0.signum();
    let sol = integrate(
        |x, y| (y != 0.0).then(|| (y * y - x * x) / (y * y)),
        x0,
        y0,
        x1,
        &control,
        |_, y| (y.signum() != side || y == 0.0).then_some(()),
    );
    match sol.halt {
        Halt::Completed => Ok(sol.points().collect()),
        Halt::Guard(()) | Halt::StepUnderflow => Err(LeadingError::YCrossedZero {
            x: sol.t_end(),
            y: sol.y_end(),
        }),
        Halt::MaxSteps => Err(LeadingError::Incomplete { x: sol.t_end() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_root_and_pair() {
        let r = solve_leading_cubic();
        assert!((r.k + 0.754878).abs() < 1e-6, "{}", r.k);
        assert!(cubic(r.k).abs() < 1e-12);
        assert!((r.pair_re - 0.877439).abs() < 1e-6);
        assert!((r.pair_im - 0.744862).abs() < 1e-6);
        assert!(r.k > -0.76 && r.k < -0.75);
        // Vieta
        assert!((r.k + 2.0 * r.pair_re - 1.0).abs() < 1e-12);
        assert!((r.k * (r.pair_re.powi(2) + r.pair_im.powi(2)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_pair_is_a_root() {
        let r = solve_leading_cubic();
        let z = r.pair();
        let q = z * z * z - z * z + 1.0;
        assert!(q.norm() < 1e-12, "{q}");
    }

    #[test]
    fn ray_residual_values() {
        let k = solve_leading_cubic().k;
        assert!(ray_residual(k).unwrap().abs() < 1e-12);
        assert_eq!(ray_residual(1.0).unwrap(), 1.0);
        assert_eq!(ray_residual(-1.0).unwrap(), -1.0);
        assert_eq!(ray_residual(0.0), Err(LeadingError::Zero("k")));
    }

    #[test]
    fn residue_weights() {
        let fi = FirstIntegral::default();
        assert!((fi.residue_sum() - 1.0).abs() < 1e-12);
        assert!(fi.s1 > 0.0);
    }

    #[test]
    fn phi_vanishes_on_ray_and_rejects_zero_x() {
        let fi = FirstIntegral::default();
        let k = fi.roots.k;
        // Powers of two keep k*X and Y/X exact; elsewhere the rounding of
        // k*X alone is amplified by |F - k|^s1 with s1 ~ 0.18.
        for x in [0.015625, 0.5, 4.0] {
            assert_eq!(conserved_quantity(x, k * x, &fi).unwrap().abs(), 0.0);
        }
        assert_eq!(
            conserved_quantity(0.0, 1.0, &fi),
            Err(LeadingError::Zero("X"))
        );
    }

    #[test]
    fn phi_is_homogeneous() {
        let fi = FirstIntegral::default();
        for &(x, y) in &[(1.0, 0.5), (0.3, -0.9), (0.02, 0.07), (2.0, -0.2)] {
            let base = conserved_quantity(x, y, &fi).unwrap();
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = conserved_quantity(lambda * x, lambda * y, &fi).unwrap();
                assert!((scaled - lambda * base).abs() <= 1e-9 * (lambda * base).abs());
            }
        }
    }

    #[test]
    fn empty_interval() {
        let pts = integrate_leading(0.2, 0.1, 0.2, 1e-10).unwrap();
        assert_eq!(pts, vec![(0.2, 0.1)]);
    }

    #[test]
    fn argument_checks() {
        assert_eq!(
            integrate_leading(0.1, 0.0, 0.2, 1e-8),
            Err(LeadingError::Zero("Y0"))
        );
        assert!(integrate_leading(-0.1, 0.1, 0.2, 1e-8).is_err());
        assert!(integrate_leading(0.1, 0.1, 0.2, 0.0).is_err());
    }

    #[test]
    fn stays_on_ray() {
        let k = solve_leading_cubic().k;
        let pts = integrate_leading(0.01, k * 0.01, 0.1, 1e-10).unwrap();
        assert!(pts.len() > 2);
        let dev = pts
            .iter()
            .map(|(x, y)| (y - k * x).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-8, "{dev}");
    }

    #[test]
    fn crossing_zero_is_reported() {
        // From F = 0.2, X dF/dX = -q(F)/F^2 < 0 drives F (and Y) to zero.
        let err = integrate_leading(0.1, 0.02, 10.0, 1e-10).unwrap_err();
        match err {
            LeadingError::YCrossedZero { x, y } => {
                assert!(x > 0.1 && x < 10.0);
                assert!(y.abs() < 1e-3, "{y}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_integral_is_conserved() {
        let fi = FirstIntegral::default();
        for &(x0, y0, x1) in &[
            (0.01, -0.02, 0.1),
            (0.01, -0.005, 0.1),
            (1.0, -0.3, 3.0),
            (0.05, -0.1, 0.5),
            (0.2, -2.0, 0.02),
        ] {
            let pts = integrate_leading(x0, y0, x1, 1e-10).unwrap();
            let phi0 = conserved_quantity(x0, y0, &fi).unwrap();
            let drift = pts
                .iter()
                .map(|&(x, y)| ((conserved_quantity(x, y, &fi).unwrap() - phi0) / phi0).abs())
                .fold(0.0, f64::max);
            assert!(drift < 1e-6, "({x0}, {y0}) -> {x1}: drift {drift:e}");
        }
    }

    #[test]
    fn phi_matches_along_short_positive_branch() {
        // Starting above the ray with Y > 0, F falls to zero quickly; stay
        // on the part of the branch before Y reaches the singular line.
        let fi = FirstIntegral::default();
        let err = integrate_leading(1.0, 0.5, 1.1, 1e-10).unwrap_err();
        let LeadingError::YCrossedZero { x: x_cross, .. } = err else {
            panic!("unexpected {err:?}");
        };
        let x1 = 1.0 + 0.5 * (x_cross - 1.0);
        let pts = integrate_leading(1.0, 0.5, x1, 1e-10).unwrap();
        let phi0 = conserved_quantity(1.0, 0.5, &fi).unwrap();
        for (x, y) in pts {
            let phi = conserved_quantity(x, y, &fi).unwrap();
            assert!(((phi - phi0) / phi0).abs() < 1e-6, "x={x}: {phi} vs {phi0}");
        }
    }
}
