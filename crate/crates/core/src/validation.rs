//! Numeric check of the approximate solution against the original equation
//!
//! ```text
//! (1/2) (p - z)^2 z^(n-3) z' = p (v^(n-2) - z^(n-2))/(n-2) - (v^(n-1) - z^(n-1))/(n-1)
//! ```
//!
//! integrated upward in `v` from a seed just right of the singular point
//! `(p, p)`.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::ode::{integrate, Halt, Solution, StepControl};
use crate::perturbation::{compose_solution_with, ApproxSolution, PerturbationError, Rounding};

/// Uniform checkpoints sampled through the dense output, in addition to the
/// accepted steps.
pub const CHECKPOINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("posted price p = {0} must lie in (0, 1)")]
    PriceOutOfRange(f64),
    #[error("number of bidders n = {0} must be at least 3")]
    TooFewBidders(u32),
    #[error("z = p = {p} is the singular line of the equation (v = {v})")]
    Singular { v: f64, p: f64 },
    #[error("z = {z} is outside the domain z > 0 (v = {v})")]
    NonPositiveZ { v: f64, z: f64 },
    #[error("invalid integration config: {0}")]
    InvalidConfig(String),
    #[error("seed z0 = {z0} at v0 = {v0} is outside (0, p = {p})")]
    SeedOutside { v0: f64, z0: f64, p: f64 },
    #[error("only {usable} of the window levels have a measurable error (need 3)")]
    TooFewLevels { usable: usize },
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub p: f64,
    pub n: u32,
}

impl ModelParams {
    pub fn new(p: f64, n: u32) -> Result<Self, ValidationError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ValidationError::PriceOutOfRange(p));
        }
        if n < 3 {
            return Err(ValidationError::TooFewBidders(n));
        }
        Ok(ModelParams { p, n })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SeedMode {
    /// `z0 = approx(p + delta)`.
    #[default]
    Approx,
    /// `z0 = p - delta`.
    Diagonal,
}

impl SeedMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeedMode::Approx => "approx",
            SeedMode::Diagonal => "diagonal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationConfig {
    /// Seed offset: integration starts at `v0 = p + delta`.
    pub delta: f64,
    /// Integration runs to `v = p + window` (clipped at 1).
    pub window: f64,
    pub local_tol: f64,
    /// Defaults to `window / 50`.
    pub max_step: Option<f64>,
    pub seed_mode: SeedMode,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            delta: 1e-3,
            window: 0.1,
            local_tol: 1e-10,
            max_step: None,
            seed_mode: SeedMode::Approx,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let bad = |msg: String| Err(ValidationError::InvalidConfig(msg));
        if !(self.delta > 0.0) {
            return bad(format!("delta = {} must be positive", self.delta));
        }
        if !(self.window > self.delta) {
            return bad(format!(
                "window = {} must exceed delta = {}",
                self.window, self.delta
            ));
        }
        if !(self.local_tol > 0.0 && self.local_tol <= 1e-4) {
            return bad(format!(
                "local_tol = {} must lie in (0, 1e-4]",
                self.local_tol
            ));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad(format!("max_step = {h} must be positive"));
            }
        }
        Ok(())
    }

    pub fn max_step(&self) -> f64 {
        self.max_step.unwrap_or(self.window / 50.0)
    }

    pub fn with_window(self, window: f64) -> Self {
        IntegrationConfig { window, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StopReason {
    WindowEnd,
    ZReachedP,
    ZReached0,
    VReached1,
    StepUnderflow,
    /// The seed itself was outside `(0, p)`; nothing was integrated.
    SeedRejected,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::WindowEnd => "window_end",
            StopReason::ZReachedP => "z_reached_p",
            StopReason::ZReached0 => "z_reached_0",
            StopReason::VReached1 => "v_reached_1",
            StopReason::StepUnderflow => "step_underflow",
            StopReason::SeedRejected => "seed_rejected",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `(p, n)` cell of the agreement study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRecord {
    pub p: f64,
    pub n: u32,
    pub delta: f64,
    pub window: f64,
    pub sup_err: f64,
    pub rms_err: f64,
    pub samples: usize,
    pub stop_reason: StopReason,
}

/// Anything that can be compared against the numeric solution.
pub trait Curve: Sync {
    fn value(&self, v: f64) -> f64;
}

impl Curve for ApproxSolution {
    fn value(&self, v: f64) -> f64 {
        self.evaluate(v)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Curve for F {
    fn value(&self, v: f64) -> f64 {
        self(v)
    }
}

/// `v^(m-1) + v^(m-2) z + ... + z^(m-1)`, so that
/// `v^m - z^m = (v - z) * power_sum(v, z, m)` without cancellation.
fn power_sum(v: f64, z: f64, m: u32) -> f64 {
    // s_{j+1} = s_j z + v^j
    let mut s = 0.0;
    let mut v_pow = 1.0;
    for _ in 0..m {
        s = s * z + v_pow;
        v_pow *= v;
    }
    s
}

/// `z'(v)` of the original equation.
pub fn rhs_original(v: f64, z: f64, params: &ModelParams) -> Result<f64, ValidationError> {
    let ModelParams { p, n } = *params;
    if !(z > 0.0) {
        return Err(ValidationError::NonPositiveZ { v, z });
    }
    if z == p {
        return Err(ValidationError::Singular { v, p });
    }
    let bracket =
        p * power_sum(v, z, n - 2) / f64::from(n - 2) - power_sum(v, z, n - 1) / f64::from(n - 1);
    let numerator = 2.0 * (v - z) * bracket;
    let denominator = (p - z).powi(2) * z.powi(n as i32 - 3);
    Ok(numerator / denominator)
}

/// A numeric solution of the original equation.
#[derive(Clone, Debug)]
pub struct NumericTrajectory {
    pub params: ModelParams,
    pub v0: f64,
    pub z0: f64,
    pub stop_reason: StopReason,
    solution: Solution<StopReason>,
}

impl NumericTrajectory {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.solution.points()
    }

    pub fn len(&self) -> usize {
        self.solution.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solution.is_empty()
    }

    pub fn v_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn z_end(&self) -> f64 {
        self.solution.y_end()
    }

    /// Dense-output value, `None` outside `[v0, v_end]`.
    pub fn interpolate(&self, v: f64) -> Option<f64> {
        self.solution.interpolate(v)
    }
}

impl Curve for NumericTrajectory {
    fn value(&self, v: f64) -> f64 {
        self.interpolate(v).unwrap_or(f64::NAN)
    }
}

pub fn seed(params: &ModelParams, config: &IntegrationConfig, curve: &impl Curve) -> (f64, f64) {
    let v0 = params.p + config.delta;
    let z0 = match config.seed_mode {
        SeedMode::Approx => curve.value(v0),
        SeedMode::Diagonal => params.p - config.delta,
    };
    (v0, z0)
}

/// Integrates the original equation from the seed over the configured window.
pub fn integrate_original(
    params: &ModelParams,
    config: &IntegrationConfig,
    curve: &impl Curve,
) -> Result<NumericTrajectory, ValidationError> {
    config.validate()?;
    let (v0, z0) = seed(params, config, curve);
    integrate_from(params, config, v0, z0)
}

/// Integrates the original equation from an explicit seed `(v0, z0)` to
/// `p + window` (or 1).
pub fn integrate_from(
    params: &ModelParams,
    config: &IntegrationConfig,
    v0: f64,
    z0: f64,
) -> Result<NumericTrajectory, ValidationError> {
    let p = params.p;
    if !(z0 > 0.0 && z0 < p) {
        return Err(ValidationError::SeedOutside { v0, z0, p });
    }
    let target = p + config.window;
    let (v_end, natural_end) = if target >= 1.0 {
        (1.0, StopReason::VReached1)
    } else {
        (target, StopReason::WindowEnd)
    };
    let control = StepControl::new(config.local_tol, config.max_step());
    let solution = integrate(
        |v, z| rhs_original(v, z, params).ok(),
        v0,
        z0,
        v_end,
        &control,
        |_, z| {
            if z >= p {
                Some(StopReason::ZReachedP)
            } else if z <= 0.0 {
                Some(StopReason::ZReached0)
            } else {
                None
            }
        },
    );
    let stop_reason = match solution.halt {
        Halt::Completed => natural_end,
        Halt::Guard(reason) => reason,
        Halt::StepUnderflow | Halt::MaxSteps => StopReason::StepUnderflow,
    };
    Ok(NumericTrajectory {
        params: *params,
        v0,
        z0,
        stop_reason,
        solution,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checkpoint {
    pub v: f64,
    pub z_numeric: f64,
    pub z_approx: f64,
}

impl Checkpoint {
    pub fn abs_err(&self) -> f64 {
        (self.z_numeric - self.z_approx).abs()
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub record: SweepRecord,
    pub checkpoints: Vec<Checkpoint>,
    pub trajectory: NumericTrajectory,
}

/// Sup and RMS distance between the numeric solution and `curve`, over the
/// accepted steps and [`CHECKPOINTS`] uniform points.
pub fn compare(
    params: &ModelParams,
    config: &IntegrationConfig,
    curve: &impl Curve,
) -> Result<Comparison, ValidationError> {
    let trajectory = integrate_original(params, config, curve)?;
    let (v0, v_end) = (trajectory.v0, trajectory.v_end());

    let checkpoints: Vec<Checkpoint> = (0..CHECKPOINTS)
        .map(|i| {
            let v = if i + 1 == CHECKPOINTS {
                v_end
            } else {
                v0 + (v_end - v0) * i as f64 / (CHECKPOINTS - 1) as f64
            };
            Checkpoint {
                v,
                z_numeric: trajectory.interpolate(v).unwrap_or(f64::NAN),
                z_approx: curve.value(v),
            }
        })
        .collect();

    let errors: Vec<f64> = trajectory
        .points()
        .map(|(v, z)| (z - curve.value(v)).abs())
        .chain(checkpoints.iter().map(Checkpoint::abs_err))
        .collect();
    let sup_err = errors.iter().copied().fold(0.0, f64::max);
    let rms_err = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();

    Ok(Comparison {
        record: SweepRecord {
            p: params.p,
            n: params.n,
            delta: config.delta,
            window: config.window,
            sup_err,
            rms_err,
            samples: errors.len(),
            stop_reason: trajectory.stop_reason,
        },
        checkpoints,
        trajectory,
    })
}

/// Compares the composed solution against the numeric one on every
/// `(p, n)` cell. Cells run in parallel; the output is sorted by `(p, n)`.
pub fn sweep(
    p_values: &[f64],
    n_values: &[u32],
    config: &IntegrationConfig,
    rounding: Rounding,
) -> Result<Vec<SweepRecord>, ValidationError> {
    config.validate()?;
    let mut cells = Vec::with_capacity(p_values.len() * n_values.len());
    for &p in p_values {
        for &n in n_values {
            cells.push(ModelParams::new(p, n)?);
        }
    }
    let mut records: Vec<SweepRecord> = cells
        .par_iter()
        .map(|params| {
            let sol = compose_solution_with(params.p, f64::from(params.n), rounding)?;
            match compare(params, config, &sol) {
                Ok(cmp) => Ok(cmp.record),
                Err(ValidationError::SeedOutside { .. }) => Ok(SweepRecord {
                    p: params.p,
                    n: params.n,
                    delta: config.delta,
                    window: config.window,
                    sup_err: f64::NAN,
                    rms_err: f64::NAN,
                    samples: 0,
                    stop_reason: StopReason::SeedRejected,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, ValidationError>>()?;
    records.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.n.cmp(&b.n)));
    Ok(records)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderEstimate {
    pub order: f64,
    pub windows: Vec<f64>,
    pub sup_errs: Vec<f64>,
    /// Whether each level entered the fit.
    pub used: Vec<bool>,
}

/// Errors below this are round-off and excluded from the fit.
pub const ERROR_FLOOR: f64 = 1e2 * f64::EPSILON;

/// Least-squares slope of `log(err)` against `log(window)`, skipping levels
/// whose error is below [`ERROR_FLOOR`].
pub fn fit_order(windows: &[f64], errors: &[f64]) -> Result<OrderEstimate, ValidationError> {
    let used: Vec<bool> = errors
        .iter()
        .map(|&e| e.is_finite() && e >= ERROR_FLOOR)
        .collect();
    let pts: Vec<(f64, f64)> = windows
        .iter()
        .zip(errors)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((w, e), _)| (w.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(ValidationError::TooFewLevels { usable: pts.len() });
    }
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    Ok(OrderEstimate {
        order: sxy / sxx,
        windows: windows.to_vec(),
        sup_errs: errors.to_vec(),
        used,
    })
}

/// Measures how `sup_err` scales with the window size over
/// `base_window / 2^j`, `j = 0..levels`.
pub fn convergence_order(
    params: &ModelParams,
    curve: &impl Curve,
    base_window: f64,
    levels: usize,
    config: &IntegrationConfig,
) -> Result<OrderEstimate, ValidationError> {
    if levels < 3 {
        return Err(ValidationError::InvalidConfig(format!(
            "need at least 3 levels, got {levels}"
        )));
    }
    let windows: Vec<f64> = (0..levels)
        .map(|j| base_window / f64::powi(2.0, j as i32))
        .collect();
    let errors = windows
        .iter()
        .map(|&w| compare(params, &config.with_window(w), curve).map(|c| c.record.sup_err))
        .collect::<Result<Vec<_>, _>>()?;
    fit_order(&windows, &errors)
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(cmp: &Comparison, mut out: W) -> io::Result<()> {
    out.write_all(b"p,n,delta,v,z_numeric,z_approx,abs_err\n")?;
    let r = &cmp.record;
    for c in &cmp.checkpoints {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_float(r.p),
            r.n,
            fmt_float(r.delta),
            fmt_float(c.v),
            fmt_float(c.z_numeric),
            fmt_float(c.z_approx),
            fmt_float(c.abs_err())
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    out.write_all(b"p,n,delta,window,sup_err,rms_err,samples,stop_reason\n")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.p),
            r.n,
            fmt_float(r.delta),
            fmt_float(r.window),
            fmt_float(r.sup_err),
            fmt_float(r.rms_err),
            r.samples,
            r.stop_reason
        )?;
    }
    Ok(())
}

/// Line chart of `sup_err` against `n`, one panel per `p`, log-scaled error
/// axis.
pub fn sweep_svg(records: &[SweepRecord]) -> String {
    const PANEL_W: f64 = 320.0;
    const PANEL_H: f64 = 240.0;
    const MARGIN: f64 = 50.0;

    let mut ps: Vec<f64> = records.iter().map(|r| r.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let finite: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.sup_err.is_finite() && r.sup_err > 0.0)
        .collect();
    let (n_min, n_max) = finite
        .iter()
        .fold((u32::MAX, 0), |(lo, hi), r| (lo.min(r.n), hi.max(r.n)));
    let (e_min, e_max) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.sup_err.log10()), hi.max(r.sup_err.log10()))
        });
    let (e_lo, e_hi) = if e_min.is_finite() {
        (e_min.floor(), e_max.ceil().max(e_min.floor() + 1.0))
    } else {
        (0.0, 1.0)
    };
    let n_span = f64::from(n_max.saturating_sub(n_min).max(1));

    let width = ps.len().max(1) as f64 * (PANEL_W + MARGIN) + MARGIN;
    let height = PANEL_H + 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    for (i, &p) in ps.iter().enumerate() {
        let x0 = MARGIN + i as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let sx = |n: u32| x0 + PANEL_W * f64::from(n - n_min) / n_span;
        let sy = |e: f64| y0 + PANEL_H * (e_hi - e.log10()) / (e_hi - e_lo);
        svg.push_str(&format!(
            "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"{PANEL_W:.1}\" height=\"{PANEL_H:.1}\" fill=\"none\" stroke=\"black\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">p = {p}</text>\n",
            x0 + PANEL_W / 2.0,
            y0 - 8.0
        ));
        let mut decade = e_lo as i32;
        while f64::from(decade) <= e_hi {
            let y = sy(10f64.powi(decade));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{decade}</text>\n",
                x0 - 4.0,
                y + 4.0
            ));
            decade += 1;
        }
        let row: Vec<&&SweepRecord> = finite.iter().filter(|r| r.p == p).collect();
        for r in &row {
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
                sx(r.n),
                y0 + PANEL_H + 14.0,
                r.n
            ));
        }
        let pts: Vec<String> = row
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.n), sy(r.sup_err)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">n</text>\n",
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 30.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"12\" y=\"{:.1}\" transform=\"rotate(-90 12 {:.1})\" text-anchor=\"middle\">sup error</text>\n",
        MARGIN + PANEL_H / 2.0,
        MARGIN + PANEL_H / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}
