use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perturb_core::perturbation::Rounding;
use perturb_core::validation::SeedMode;

/// Local perturbation analysis of the first-price auction equation near the
/// singular point v = z = p.
#[derive(Parser, Debug)]
#[command(name = "perturb", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Replay the eps-expansion exactly and check each stage against its closed form
    Derive {
        /// Truncation order of the expansion (at least 3)
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Print only the PASS/FAIL lines [default: off]
        #[arg(long)]
        quiet: bool,
    },
    /// Roots of the leading-order cubic and the first-integral weights
    Leading {
        /// Print only the checks [default: off]
        #[arg(long)]
        quiet: bool,
    },
    /// Coefficients of the first-order correction for a (real) n >= 3
    Correction {
        /// Number of bidders; any real value >= 3
        #[arg(long, default_value_t = 3.0)]
        n: f64,
    },
    /// Coefficients of the composed quadratic approximation
    Solution {
        #[command(flatten)]
        model: ModelArgs,
        /// Constants used to compose the approximation
        #[arg(long, value_enum, default_value_t = RoundingArg::Exact)]
        rounding: RoundingArg,
    },
    /// Integrate the original equation at one (p, n) and compare
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Write the checkpoint table as CSV to PATH [default: none]
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Compare over a grid of (p, n)
    Sweep {
        /// Posted prices, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.7])]
        p_values: Vec<f64>,
        /// Bidder counts, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [3u32, 4, 5, 6, 7, 8])]
        n_values: Vec<u32>,
        #[command(flatten)]
        run: RunArgs,
        /// Write the sweep table as CSV to PATH instead of standard output [default: none]
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Write an error-versus-n chart as SVG to PATH [default: none]
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ModelArgs {
    /// Posted price, in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Number of bidders, an integer >= 3
    #[arg(long, default_value_t = 4)]
    pub n: u32,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct RunArgs {
    /// Seed offset: integration starts at v = p + delta
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Integration window: runs to v = p + window, clipped at 1
    #[arg(long, default_value_t = 0.1)]
    pub window: f64,
    /// Local error tolerance of the integrator
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Where the numeric solution is seeded
    #[arg(long, value_enum, default_value_t = SeedArg::Approx)]
    pub seed_mode: SeedArg,
    /// Constants used to compose the approximation
    #[arg(long, value_enum, default_value_t = RoundingArg::Exact)]
    pub rounding: RoundingArg,
    /// Suppress the summary on standard output [default: off]
    #[arg(long)]
    pub quiet: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    /// On the approximate curve at v = p + delta
    Approx,
    /// At (p + delta, p - delta)
    #[value(name = "paper")]
    Diagonal,
}

impl From<SeedArg> for SeedMode {
    fn from(s: SeedArg) -> Self {
        match s {
            SeedArg::Approx => SeedMode::Approx,
            SeedArg::Diagonal => SeedMode::Diagonal,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingArg {
    /// Exact k and r(n)
    Exact,
    /// Rounded published constants k = -3/4, r = 1.012 - 0.3373 n
    #[value(name = "paper")]
    Published,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Exact => Rounding::Exact,
            RoundingArg::Published => Rounding::Published,
        }
    }
}

impl std::fmt::Display for RoundingArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

impl std::fmt::Display for SeedArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}
