use perturb_core::leading_order::solve_leading_cubic;
use perturb_core::perturbation::{correction_coefficient_r, integrate_correction, published};

/// Least-squares `c` in `y = c x^2`.
fn fit_quadratic(points: &[(f64, f64)]) -> f64 {
    let num: f64 = points.iter().map(|(x, y)| y * x * x).sum();
    let den: f64 = points.iter().map(|(x, _)| x.powi(4)).sum();
    num / den
}

/// Integrates from a zero seed far to the left, lets the homogeneous part
/// decay, and fits the tail.
fn fitted_r(n: f64, k: f64) -> f64 {
    let sol = integrate_correction(n, k, 0.01, 0.0, 1.0, 1e-12).unwrap();
    let tail: Vec<(f64, f64)> = sol.points().filter(|(x, _)| *x >= 0.5).collect();
    assert!(tail.len() >= 5);
    fit_quadratic(&tail)
}

#[test]
fn r_at_five_bidders_from_integration() {
    let k = solve_leading_cubic().k;
    let r = fitted_r(5.0, k);
    assert!((r - (-0.674647)).abs() < 1e-6, "{r}");
    assert!((r - correction_coefficient_r(5.0, k)).abs() < 1e-7);
}

#[test]
fn r_is_linear_in_n() {
    let k = solve_leading_cubic().k;
    let ns: Vec<f64> = (3..=8).map(f64::from).collect();
    let rs: Vec<f64> = ns.iter().map(|&n| fitted_r(n, k)).collect();
    let m = ns.len() as f64;
    let mean_n = ns.iter().sum::<f64>() / m;
    let mean_r = rs.iter().sum::<f64>() / m;
    let slope = ns
        .iter()
        .zip(&rs)
        .map(|(n, r)| (n - mean_n) * (r - mean_r))
        .sum::<f64>()
        / ns.iter().map(|n| (n - mean_n).powi(2)).sum::<f64>();
    let intercept = mean_r - slope * mean_n;
    assert!((slope - published::R_SLOPE).abs() < 5e-5, "{slope}");
    assert!(
        (intercept - published::R_INTERCEPT).abs() < 5e-4,
        "{intercept}"
    );
    let worst = ns
        .iter()
        .zip(&rs)
        .map(|(n, r)| (r - (intercept + slope * n)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
}
