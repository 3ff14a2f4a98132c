//! First-order correction along the ray `y0 = k x` and the composed
//! quadratic approximation.
//!
//! With `y0 = k x` the correction equation becomes
//! `y1' = alpha x + beta y1 / x`, where `alpha = A(n) / (3k^3)`,
//! `beta = 2/k^3` and `A(n) = (6-2n)k + (3n-9)k^2 + (3-n)k^4`. The ansatz
//! `y1 = r x^2` gives `r = A(n) / (6(k^3 - 1))`. The other solutions add
//! `c x^beta`, which is unbounded as `x -> 0+` because `beta < 0`; `r x^2` is
//! the only one that vanishes at the expansion point.

use crate::leading_order::solve_leading_cubic;
use crate::ode::{integrate, Halt, Solution, StepControl};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerturbationError {
    #[error("posted price p = {0} must lie in (0, 1)")]
    PriceOutOfRange(f64),
    #[error("number of bidders n = {0} must be at least 3")]
    TooFewBidders(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("correction integration stopped early at x = {0}")]
    Incomplete(f64),
}

/// Rounded constants for side-by-side comparison with the published
/// closed form `z(v) = (7/4 + r) p - (3/4 + 2r) v + r v^2 / p`,
/// `r = 1.012 - 0.3373 n`.
pub mod published {
    pub const K: f64 = -0.7549;
    /// Slope used in the composed form: `1 - k` rounded to `7/4`.
    pub const COMPOSED_K: f64 = -0.75;
    pub const R_INTERCEPT: f64 = 1.012;
    pub const R_SLOPE: f64 = -0.3373;
    pub const A_CONST: f64 = -8.684;
    pub const A_N: f64 = 2.895;
    pub const INV_3K3: f64 = 0.775;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionCoefficients {
    pub n: f64,
    pub k: f64,
    /// `A(n) = a_const + a_n * n`.
    pub a_const: f64,
    pub a_n: f64,
    /// Coefficient of `x` in the forcing.
    pub alpha: f64,
    /// Coefficient of `y1 / x`.
    pub beta: f64,
}

impl CorrectionCoefficients {
    /// `a_const = -3 a_n` identically, so `A(n) = a_n (n - 3)`; this form
    /// vanishes exactly at `n = 3`.
    pub fn a(&self) -> f64 {
        self.a_n * (self.n - 3.0)
    }

    /// `|1 / (3k^3)|`
    pub fn inv_three_k_cubed(&self) -> f64 {
        (1.0 / (3.0 * self.k.powi(3))).abs()
    }

    /// Right-hand side of the correction equation at `(x, y1)`.
    pub fn rhs(&self, x: f64, y1: f64) -> f64 {
        self.alpha * x + self.beta * y1 / x
    }
}

pub fn correction_coefficients(n: f64, k: f64) -> CorrectionCoefficients {
    let k2 = k * k;
    let k3 = k2 * k;
    let k4 = k2 * k2;
    let a_const = 6.0 * k - 9.0 * k2 + 3.0 * k4;
    let a_n = -2.0 * k + 3.0 * k2 - k4;
    let mut c = CorrectionCoefficients {
        n,
        k,
        a_const,
        a_n,
        alpha: 0.0,
        beta: 2.0 / k3,
    };
    // `+ 0.0` turns a signed zero at n = 3 into +0.
    c.alpha = c.a() / (3.0 * k3) + 0.0;
    c
}

/// `r(n) = A(n) / (6 (k^3 - 1))`
pub fn correction_coefficient_r(n: f64, k: f64) -> f64 {
    let c = correction_coefficients(n, k);
    c.a() / (6.0 * (k.powi(3) - 1.0)) + 0.0
}

/// Integrates `y1' = alpha x + beta y1 / x` from `(x0, seed)` to `x1`.
pub fn integrate_correction(
    n: f64,
    k: f64,
    x0: f64,
    seed: f64,
    x1: f64,
    tol: f64,
) -> Result<Solution<()>, PerturbationError> {
    if !(x0 > 0.0 && x1 > x0) {
        return Err(PerturbationError::InvalidArgument(format!(
            "need 0 < x0 < x1, got x0 = {x0}, x1 = {x1}"
        )));
    }
    if !(tol > 0.0) {
        return Err(PerturbationError::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let coeffs = correction_coefficients(n, k);
    let mut control = StepControl::new(tol, (x1 - x0) / 50.0);
    // y1 spans several decades; control the error relative to |y1|, with an
    // absolute floor at the scale of the solution near x0.
    let scale = seed.abs().max(coeffs.alpha.abs() * x0 * x0);
    control.atol = (tol * scale).max(f64::MIN_POSITIVE);
    let sol = integrate(
        |x, y| Some(coeffs.rhs(x, y)),
        x0,
        seed,
        x1,
        &control,
        |_, _| None::<()>,
    );
    match sol.halt {
        Halt::Completed => Ok(sol),
        _ => Err(PerturbationError::Incomplete(sol.t_end())),
    }
}

/// Integrates the correction equation seeded on `r x0^2` and returns the
/// largest relative deviation from `r x^2` over the accepted steps (absolute
/// deviation when `r = 0`).
pub fn verify_particular(
    n: f64,
    k: f64,
    x0: f64,
    x1: f64,
    tol: f64,
) -> Result<f64, PerturbationError> {
    let r = correction_coefficient_r(n, k);
    let sol = integrate_correction(n, k, x0, r * x0 * x0, x1, tol)?;
    Ok(sol
        .points()
        .map(|(x, y)| {
            let target = r * x * x;
            if r == 0.0 {
                (y - target).abs()
            } else {
                ((y - target) / target).abs()
            }
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Exact `k` and `r(n)`.
    #[default]
    Exact,
    /// The published rounded constants: `k = -3/4`, `r = 1.012 - 0.3373 n`.
    Published,
}

/// `z(v) = p + k (v - p) + r (v - p)^2 / p`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxSolution {
    pub p: f64,
    pub n: f64,
    pub k: f64,
    pub r: f64,
}

impl ApproxSolution {
    pub fn evaluate(&self, v: f64) -> f64 {
        let x = v - self.p;
        self.p + x * (self.k + self.r * x / self.p)
    }

    pub fn slope(&self, v: f64) -> f64 {
        self.k + 2.0 * self.r * (v - self.p) / self.p
    }

    /// `[c0, c1, c2]` with `z(v) = c0 + c1 v + c2 v^2`, i.e.
    /// `c0 = p (1 - k + r)`, `c1 = k - 2r`, `c2 = r / p`.
    pub fn coefficients(&self) -> [f64; 3] {
        [
            self.p * (1.0 - self.k + self.r),
            self.k - 2.0 * self.r,
            self.r / self.p,
        ]
    }

    /// Whether `v` lies in the model domain `p < v < 1`.
    pub fn in_domain(&self, v: f64) -> bool {
        v > self.p && v < 1.0
    }

    /// The same curve with the correction dropped.
    pub fn leading_only(&self) -> Self {
        ApproxSolution { r: 0.0, ..*self }
    }
}

pub fn compose_solution(p: f64, n: f64) -> Result<ApproxSolution, PerturbationError> {
    compose_solution_with(p, n, Rounding::Exact)
}

pub fn compose_solution_with(
    p: f64,
    n: f64,
    rounding: Rounding,
) -> Result<ApproxSolution, PerturbationError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PerturbationError::PriceOutOfRange(p));
    }
    if !(n >= 3.0) {
        return Err(PerturbationError::TooFewBidders(n));
    }
    let (k, r) = match rounding {
        Rounding::Exact => {
            let k = solve_leading_cubic().k;
            (k, correction_coefficient_r(n, k))
        }
        Rounding::Published => (
            published::COMPOSED_K,
            published::R_INTERCEPT + published::R_SLOPE * n,
        ),
    };
    Ok(ApproxSolution { p, n, k, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> f64 {
        solve_leading_cubic().k
    }

    #[test]
    fn coefficient_constants() {
        let c = correction_coefficients(4.0, k());
        assert!(
            (c.a_const - published::A_CONST).abs() < 1e-3,
            "{}",
            c.a_const
        );
        assert!((c.a_n - published::A_N).abs() < 1e-3, "{}", c.a_n);
        assert!((c.inv_three_k_cubed() - published::INV_3K3).abs() < 1e-3);
        assert!((c.beta - 2.0 / k().powi(3)).abs() < 1e-15);
        assert!(c.beta < 0.0 && (c.beta + 4.649).abs() < 1e-3);
    }

    #[test]
    fn three_bidders_have_no_correction() {
        let c = correction_coefficients(3.0, k());
        assert!(c.a().abs() < 1e-14);
        assert!(correction_coefficient_r(3.0, k()).abs() < 1e-12);
    }

    #[test]
    fn r_is_affine_in_n() {
        let k = k();
        let intercept = correction_coefficient_r(0.0, k);
        let slope = correction_coefficient_r(1.0, k) - intercept;
        assert!((intercept - 1.01197).abs() < 1e-5, "{intercept}");
        assert!((slope + 0.337324).abs() < 1e-6, "{slope}");
        assert!((correction_coefficient_r(5.0, k) + 0.674647).abs() < 1e-6);
        let (r3, r6, r9) = (
            correction_coefficient_r(3.0, k),
            correction_coefficient_r(6.0, k),
            correction_coefficient_r(9.0, k),
        );
        assert!((r6 - 0.5 * (r3 + r9)).abs() < 1e-12);
    }

    #[test]
    fn ansatz_satisfies_equation() {
        let k = k();
        for n in [3.0, 4.5, 7.0, 10.0] {
            let c = correction_coefficients(n, k);
            let r = correction_coefficient_r(n, k);
            for x in [1e-3, 0.05, 0.1] {
                let lhs = 2.0 * r * x;
                let rhs = c.rhs(x, r * x * x);
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + (c.alpha * x).abs()));
            }
        }
    }

    #[test]
    fn particular_solution_tracks_integration() {
        let dev = verify_particular(4.0, k(), 1e-4, 0.1, 1e-10).unwrap();
        assert!(dev < 1e-6, "{dev:e}");
        let dev3 = verify_particular(3.0, k(), 1e-4, 0.1, 1e-10).unwrap();
        assert!(dev3 < 1e-10);
    }

    #[test]
    fn perturbed_seed_relaxes_onto_particular_solution() {
        let k = k();
        let n = 6.0;
        let r = correction_coefficient_r(n, k);
        let x0 = 1e-3;
        let sol = integrate_correction(n, k, x0, 1.1 * r * x0 * x0, 0.1, 1e-10).unwrap();
        let rel = |x: f64| ((sol.interpolate(x).unwrap() - r * x * x) / (r * x * x)).abs();
        assert!((rel(x0) - 0.1).abs() < 1e-12);
        let samples: Vec<f64> = [2e-3, 5e-3, 1e-2, 5e-2].iter().map(|&x| rel(x)).collect();
        assert!(samples.windows(2).all(|w| w[1] < w[0]), "{samples:?}");
        // the homogeneous part scales like x^(beta - 2) relative to x^2
        let beta = 2.0 / k.powi(3);
        let predicted = 0.1 * (2e-3 / x0).powf(beta - 2.0);
        assert!((samples[0] - predicted).abs() < 1e-6 * predicted.max(1e-12) + 1e-9);
    }

    #[test]
    fn verify_rejects_bad_interval() {
        assert!(verify_particular(4.0, k(), 0.1, 0.01, 1e-8).is_err());
        assert!(verify_particular(4.0, k(), 0.0, 0.1, 1e-8).is_err());
    }

    #[test]
    fn composed_solution_passes_through_singular_point() {
        for &(p, n) in &[(0.3, 3.0), (0.5, 4.0), (0.7, 8.0), (0.1, 12.0)] {
            let sol = compose_solution(p, n).unwrap();
            assert!((sol.evaluate(p) - p).abs() < 1e-14);
            assert!((sol.slope(p) - sol.k).abs() < 1e-14);
            let [c0, c1, c2] = sol.coefficients();
            for v in [p, 0.5 * (p + 1.0), 0.99] {
                let direct = c0 + c1 * v + c2 * v * v;
                assert!((direct - sol.evaluate(v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_bidders_is_a_line() {
        let sol = compose_solution(0.5, 3.0).unwrap();
        let [c0, c1, c2] = sol.coefficients();
        assert!((c0 - 0.877439).abs() < 1e-6);
        assert!((c1 + 0.754878).abs() < 1e-6);
        assert!(c2.abs() < 1e-12);
    }

    #[test]
    fn published_rounding_offset() {
        let exact = compose_solution(0.5, 5.0).unwrap();
        let rounded = compose_solution_with(0.5, 5.0, Rounding::Published).unwrap();
        assert!(((1.0 - exact.k) - 1.75 - 0.004878).abs() < 1e-6);
        assert_eq!(rounded.k, -0.75);
        assert!((rounded.r - (1.012 - 0.3373 * 5.0)).abs() < 1e-15);
        assert!((rounded.evaluate(0.5) - 0.5).abs() < 1e-15);
        // (7/4 + r) p - (3/4 + 2r) v + r v^2 / p
        let [c0, c1, c2] = rounded.coefficients();
        assert!((c0 - (1.75 + rounded.r) * 0.5).abs() < 1e-15);
        assert!((c1 + 0.75 + 2.0 * rounded.r).abs() < 1e-15);
        assert!((c2 - rounded.r / 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_taylor_and_homogeneity() {
        let sol = compose_solution(0.4, 6.0).unwrap();
        let d = 1e-3;
        let expected = 0.4 + sol.k * d + sol.r * d * d / 0.4;
        assert!((sol.evaluate(0.4 + d) - expected).abs() < 1e-15);
        for lambda in [0.5, 2.0] {
            let scaled = compose_solution(0.4 * lambda, 6.0).unwrap();
            for w in [0.45, 0.6] {
                let a = scaled.evaluate(lambda * w);
                let b = lambda * sol.evaluate(w);
                assert!((a - b).abs() <= 1e-12 * b.abs());
            }
        }
    }

    #[test]
    fn domain_checks() {
        assert_eq!(
            compose_solution(0.0, 4.0),
            Err(PerturbationError::PriceOutOfRange(0.0))
        );
        assert_eq!(
            compose_solution(1.0, 4.0),
            Err(PerturbationError::PriceOutOfRange(1.0))
        );
        assert_eq!(
            compose_solution(0.5, 2.0),
            Err(PerturbationError::TooFewBidders(2.0))
        );
        let sol = compose_solution(0.5, 4.0).unwrap();
        assert!(sol.in_domain(0.6) && !sol.in_domain(0.4) && !sol.in_domain(1.2));
    }
}
