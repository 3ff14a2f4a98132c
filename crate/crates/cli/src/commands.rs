use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use perturb_core::leading_order::{cubic, solve_leading_cubic, FirstIntegral};
use perturb_core::perturbation::{
    compose_solution_with, correction_coefficient_r, correction_coefficients, published, Rounding,
};
use perturb_core::pipeline::{derive, split_from, Inversion, PipelineError};
use perturb_core::validation::{
    compare, sweep, sweep_svg, write_sweep_csv, write_trajectory_csv, IntegrationConfig,
    ModelParams,
};

use crate::args::{Cli, Command, ModelArgs, RoundingArg, RunArgs};

pub enum Failure {
    /// Bad flags, out-of-domain parameters, I/O problems.
    Usage(anyhow::Error),
    /// An asserted identity did not hold.
    Identity(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(err: E) -> Self {
        Failure::Usage(err.into())
    }
}

type Outcome = Result<(), Failure>;

const RESIDUE_TOL: f64 = 1e-12;

pub fn run(cli: Cli) -> Outcome {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Derive { order, quiet } => run_derive(&mut out, order, quiet),
        Command::Leading { quiet } => run_leading(&mut out, quiet),
        Command::Correction { n } => run_correction(&mut out, n),
        Command::Solution { model, rounding } => run_solution(&mut out, model, rounding),
        Command::Validate { model, run, csv } => run_validate(&mut out, model, run, csv.as_deref()),
        Command::Sweep {
            p_values,
            n_values,
            run,
            csv,
            svg,
        } => run_sweep(
            &mut out,
            &p_values,
            &n_values,
            run,
            csv.as_deref(),
            svg.as_deref(),
        ),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn identity_failure(label: &str, err: PipelineError) -> Failure {
    match err {
        PipelineError::IdentityMismatch { .. } => {
            Failure::Identity(format!("{label}: FAIL\n{err}"))
        }
        other => Failure::Usage(anyhow!(other)),
    }
}

fn run_derive(out: &mut impl Write, order: usize, quiet: bool) -> Outcome {
    if order < 3 {
        return Err(anyhow!("--order must be at least 3, got {order}").into());
    }
    let full = derive(order, Inversion::Full).map_err(|e| {
        // The stage checks inside `derive` are the order-equation identity.
        identity_failure("order-equation identity", e)
    })?;
    if !quiet {
        writeln!(out, "expanded right-hand side (order {order})")?;
        writeln!(out, "{}", full.rhs)?;
        writeln!(out)?;
        writeln!(out, "normalized series")?;
        writeln!(out, "{}", full.normalized)?;
        writeln!(out)?;
        writeln!(out, "order equations")?;
        writeln!(out, "{}", full.equations)?;
    }
    writeln!(out, "order-equation identity: PASS")?;

    let short = derive(order, Inversion::TwoTerm)
        .map_err(|e| identity_failure("two-term truncation", e))?;
    let same = short.equations == full.equations;
    writeln!(out, "two-term truncation agrees: {}", verdict(same))?;
    if !same {
        return Err(Failure::Identity(format!(
            "two-term truncation gives different equations:\n{}",
            short.equations
        )));
    }

    let split = split_from(&full.equations).map_err(|e| identity_failure("split identity", e))?;
    if !quiet {
        writeln!(out)?;
        writeln!(out, "perturbation split, y = y0 + eps y1")?;
        writeln!(out, "{split}")?;
    }
    writeln!(out, "split identity: PASS")?;
    Ok(())
}

fn run_leading(out: &mut impl Write, quiet: bool) -> Outcome {
    let roots = solve_leading_cubic();
    let fi = FirstIntegral::new(roots);
    let residual = cubic(roots.k).abs();
    let sum = fi.residue_sum();
    if !quiet {
        writeln!(out, "k = {}", roots.k)?;
        writeln!(out, "pair = {} +- {}i", roots.pair_re, roots.pair_im)?;
        writeln!(out, "s1 = {}", fi.s1)?;
        writeln!(out, "s2 = {} (conjugate root: {})", fi.s2, fi.s2.conj())?;
        writeln!(
            out,
            "published k = {}, difference = {:.3e}",
            published::K,
            (roots.k - published::K).abs()
        )?;
    }
    writeln!(
        out,
        "|k^3 - k^2 + 1| = {residual:.3e}: {}",
        verdict(residual < RESIDUE_TOL)
    )?;
    writeln!(
        out,
        "s1 + 2 Re(s2) = {sum}: {}",
        verdict((sum - 1.0).abs() < RESIDUE_TOL)
    )?;
    if residual >= RESIDUE_TOL || (sum - 1.0).abs() >= RESIDUE_TOL {
        return Err(Failure::Identity("leading-order checks failed".into()));
    }
    Ok(())
}

fn run_correction(out: &mut impl Write, n: f64) -> Outcome {
    if !(n >= 3.0) || !n.is_finite() {
        return Err(anyhow!("--n must be a real number >= 3, got {n}").into());
    }
    let k = solve_leading_cubic().k;
    let c = correction_coefficients(n, k);
    let r = correction_coefficient_r(n, k);
    let r_rounded = published::R_INTERCEPT + published::R_SLOPE * n;
    writeln!(out, "n = {n}")?;
    writeln!(
        out,
        "A_const = {} (rounded {})",
        c.a_const,
        published::A_CONST
    )?;
    writeln!(out, "A_n = {} (rounded {})", c.a_n, published::A_N)?;
    writeln!(out, "A(n) = {}", c.a())?;
    writeln!(out, "alpha = {}", c.alpha)?;
    writeln!(out, "beta = {}", c.beta)?;
    writeln!(
        out,
        "|1/(3k^3)| = {} (rounded {})",
        c.inv_three_k_cubed(),
        published::INV_3K3
    )?;
    writeln!(out, "r = {r}")?;
    writeln!(
        out,
        "r rounded = {} + ({}) n = {r_rounded}",
        published::R_INTERCEPT,
        published::R_SLOPE
    )?;
    Ok(())
}

fn model_params(model: ModelArgs) -> Result<ModelParams, Failure> {
    ModelParams::new(model.p, model.n).map_err(|e| Failure::Usage(e.into()))
}

fn run_solution(out: &mut impl Write, model: ModelArgs, rounding: RoundingArg) -> Outcome {
    let params = model_params(model)?;
    let sol = compose_solution_with(params.p, f64::from(params.n), rounding.into())?;
    let [c0, c1, c2] = sol.coefficients();
    writeln!(
        out,
        "p = {}, n = {}, rounding = {rounding}",
        params.p, params.n
    )?;
    writeln!(out, "k = {}", sol.k)?;
    writeln!(out, "r = {}", sol.r)?;
    writeln!(out, "z(v) = p + k (v - p) + r (v - p)^2 / p")?;
    writeln!(out, "     = c0 + c1 v + c2 v^2")?;
    writeln!(out, "c0 = {c0}")?;
    writeln!(out, "c1 = {c1}")?;
    writeln!(out, "c2 = {c2}")?;
    Ok(())
}

fn integration_config(run: &RunArgs) -> Result<IntegrationConfig, Failure> {
    let config = IntegrationConfig {
        delta: run.delta,
        window: run.window,
        local_tol: run.tol,
        max_step: None,
        seed_mode: run.seed_mode.into(),
    };
    config.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn run_validate(
    out: &mut impl Write,
    model: ModelArgs,
    run: RunArgs,
    csv: Option<&Path>,
) -> Outcome {
    let params = model_params(model)?;
    let config = integration_config(&run)?;
    let mut csv_out = csv.map(create).transpose()?;

    let rounding: Rounding = run.rounding.into();
    let sol = compose_solution_with(params.p, f64::from(params.n), rounding)?;
    let cmp = compare(&params, &config, &sol)?;
    if let Some(w) = csv_out.as_mut() {
        write_trajectory_csv(&cmp, &mut *w)?;
        w.flush()?;
    }
    if !run.quiet {
        let r = &cmp.record;
        writeln!(
            out,
            "p = {}, n = {}, delta = {}, window = {}",
            r.p, r.n, r.delta, r.window
        )?;
        writeln!(
            out,
            "seed = ({}, {}), mode = {}",
            cmp.trajectory.v0, cmp.trajectory.z0, run.seed_mode
        )?;
        writeln!(
            out,
            "end = ({}, {}), stop = {}",
            cmp.trajectory.v_end(),
            cmp.trajectory.z_end(),
            r.stop_reason
        )?;
        writeln!(out, "sup_err = {:e}", r.sup_err)?;
        writeln!(out, "rms_err = {:e}", r.rms_err)?;
        writeln!(out, "samples = {}", r.samples)?;
    }
    Ok(())
}

fn run_sweep(
    out: &mut impl Write,
    p_values: &[f64],
    n_values: &[u32],
    run: RunArgs,
    csv: Option<&Path>,
    svg: Option<&Path>,
) -> Outcome {
    let config = integration_config(&run)?;
    if p_values.is_empty() || n_values.is_empty() {
        return Err(anyhow!("--p-values and --n-values must not be empty").into());
    }
    for &p in p_values {
        for &n in n_values {
            ModelParams::new(p, n).map_err(|e| Failure::Usage(e.into()))?;
        }
    }
    let mut csv_out = csv.map(create).transpose()?;
    let mut svg_out = svg.map(create).transpose()?;

    let records = sweep(p_values, n_values, &config, run.rounding.into())?;
    match csv_out.as_mut() {
        Some(w) => {
            write_sweep_csv(&records, &mut *w)?;
            w.flush()?;
            if !run.quiet {
                for r in &records {
                    writeln!(
                        out,
                        "p = {}, n = {}: sup_err = {:e}, stop = {}",
                        r.p, r.n, r.sup_err, r.stop_reason
                    )?;
                }
            }
        }
        None => write_sweep_csv(&records, &mut *out)?,
    }
    if let Some(w) = svg_out.as_mut() {
        w.write_all(sweep_svg(&records).as_bytes())?;
        w.flush()?;
    }
    Ok(())
}
