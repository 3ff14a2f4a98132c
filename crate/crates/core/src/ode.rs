//! Scalar Dormand-Prince 5(4) integrator with dense output.
//!
//! The right-hand side returns `None` where it is undefined; such trial steps
//! are rejected and retried with a smaller step. A guard closure reports when
//! the state has left its admissible domain, which is handled the same way.
//! When the step size collapses the integration stops and reports why.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Hairer & Wanner, dopri5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on `|h|`.
    pub max_step: f64,
    /// Initial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tol: f64, max_step: f64) -> Self {
        StepControl {
            rtol: tol,
            atol: tol,
            max_step,
            initial_step: None,
            max_steps: 1_000_000,
        }
    }
}

/// How an integration ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Halt<R> {
    /// Reached the requested end point.
    Completed,
    /// The step size collapsed while the guard kept rejecting steps.
    Guard(R),
    /// The step size collapsed because the right-hand side was undefined or
    /// the error could not be controlled.
    StepUnderflow,
    MaxSteps,
}

/// One accepted step with its interpolation coefficients.
#[derive(Clone, Copy, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    rcont: [f64; 5],
}

impl Segment {
    fn eval(&self, t: f64) -> f64 {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = self.rcont;
        r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)))
    }
}

/// Accepted points plus a dense interpolant over `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct Solution<R> {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub halt: Halt<R>,
    segments: Vec<Segment>,
}

impl<R> Solution<R> {
    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self
            .t
            .last()
            .expect("solution has at least the initial point")
    }

    pub fn y_end(&self) -> f64 {
        *self
            .y
            .last()
            .expect("solution has at least the initial point")
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.y.iter().copied())
    }

    /// Dense-output value at `t`, or `None` outside the integrated range.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let (lo, hi) = if self.t_start() <= self.t_end() {
            (self.t_start(), self.t_end())
        } else {
            (self.t_end(), self.t_start())
        };
        if !(lo..=hi).contains(&t) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.y[0]);
        }
        let forward = self.segments[0].h > 0.0;
        let idx = self.segments.partition_point(|s| {
            let end = s.t0 + s.h;
            if forward {
                end < t
            } else {
                end > t
            }
        });
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        Some(seg.eval(t))
    }
}

/// Integrates `y' = rhs(t, y)` from `(t0, y0)` to `t1`.
///
/// `guard(t, y)` returns `Some(reason)` when `(t, y)` is outside the
/// admissible domain.
pub fn integrate<F, G, R>(
    mut rhs: F,
    t0: f64,
    y0: f64,
    t1: f64,
    control: &StepControl,
    mut guard: G,
) -> Solution<R>
where
    F: FnMut(f64, f64) -> Option<f64>,
    G: FnMut(f64, f64) -> Option<R>,
{
    let mut sol = Solution {
        t: vec![t0],
        y: vec![y0],
        halt: Halt::Completed,
        segments: Vec::new(),
    };
    let span = t1 - t0;
    if span == 0.0 {
        return sol;
    }
    let dir = span.signum();
    let Some(mut f0) = rhs(t0, y0) else {
        sol.halt = Halt::StepUnderflow;
        return sol;
    };

    let mut t = t0;
    let mut y = y0;
    let mut h = control
        .initial_step
        .unwrap_or_else(|| initial_step(&mut rhs, t0, y0, f0, dir, control))
        .abs()
        .min(control.max_step)
        .min(span.abs());
    let mut last_guard: Option<R> = None;
    let mut steps = 0usize;
    let mut rejected_last = false;

    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 0.0 {
            break;
        }
        let min_step = 16.0 * f64::EPSILON * t.abs().max(span.abs());
        if steps >= control.max_steps {
            sol.halt = Halt::MaxSteps;
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < min_step {
            sol.halt = match last_guard.take() {
                Some(reason) => Halt::Guard(reason),
                None => Halt::StepUnderflow,
            };
            break;
        }
        steps += 1;
        let hs = dir * h;

        let Some(trial) = dopri_step(&mut rhs, t, y, f0, hs) else {
            h *= 0.25;
            rejected_last = true;
            continue;
        };
        let t_new = if last { t1 } else { t + hs };

        let scale = control.atol + control.rtol * y.abs().max(trial.y.abs());
        let err = (trial.err / scale).abs();
        if !err.is_finite() {
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        if err > 1.0 {
            let factor = (0.9 * err.powf(-0.2)).max(0.2);
            h *= if rejected_last {
                factor.min(0.5)
            } else {
                factor
            };
            rejected_last = true;
            continue;
        }
        if let Some(reason) = guard(t_new, trial.y) {
            last_guard = Some(reason);
            h *= 0.5;
            rejected_last = true;
            continue;
        }

        let ydiff = trial.y - y;
        let bspl = hs * f0 - ydiff;
        let k = &trial.k;
        sol.segments.push(Segment {
            t0: t,
            h: hs,
            rcont: [
                y,
                ydiff,
                bspl,
                ydiff - hs * k[6] - bspl,
                hs * (D1 * k[0] + D3 * k[2] + D4 * k[3] + D5 * k[4] + D6 * k[5] + D7 * k[6]),
            ],
        });
        t = t_new;
        y = trial.y;
        f0 = k[6];
        sol.t.push(t);
        sol.y.push(y);
        last_guard = None;

        if last {
            break;
        }
        let mut factor = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        if rejected_last {
            factor = factor.min(1.0);
        }
        rejected_last = false;
        h = (h * factor).min(control.max_step);
    }
    sol
}

struct Trial {
    y: f64,
    err: f64,
    k: [f64; 7],
}

fn dopri_step<F>(rhs: &mut F, t: f64, y: f64, k1: f64, h: f64) -> Option<Trial>
where
    F: FnMut(f64, f64) -> Option<f64>,
{
    let k2 = rhs(t + C2 * h, y + h * A21 * k1)?;
    let k3 = rhs(t + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = rhs(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = rhs(
        t + C5 * h,
        y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
    )?;
    let k6 = rhs(
        t + h,
        y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
    )?;
    let y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    if !y_new.is_finite() {
        return None;
    }
    let k7 = rhs(t + h, y_new)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Some(Trial {
        y: y_new,
        err,
        k: [k1, k2, k3, k4, k5, k6, k7],
    })
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: f64, f0: f64, dir: f64, control: &StepControl) -> f64
where
    F: FnMut(f64, f64) -> Option<f64>,
{
    let sc = control.atol + control.rtol * y0.abs();
    let d0 = y0.abs() / sc;
    let d1 = f0.abs() / sc;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(control.max_step);
    let Some(f1) = rhs(t0 + dir * h0, y0 + dir * h0 * f0) else {
        return h0;
    };
    let d2 = (f1 - f0).abs() / sc / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    // A vanishing absolute tolerance at y0 = 0 makes d1 infinite.
    let h = (100.0 * h0).min(h1);
    if h > 0.0 && h.is_finite() {
        h
    } else {
        h0
    }
}
