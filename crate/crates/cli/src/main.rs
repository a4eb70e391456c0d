//! `dkalman`: fit linear Gaussian state-space models by maximum
//! likelihood with exact filter-based derivatives, check those
//! derivatives against finite differences, simulate series, and compare
//! model families by AIC/GIC.

mod commands;
mod ingest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dkalman::{ModelBuilder, SeasonalArConfig, SeasonalConfig, TrendConfig};
use serde_json::{json, Value};

/// Error carrying the process exit code.
///
/// Exit codes: 0 success, 1 gradcheck tolerance failure, 2 configuration
/// error, 3 numerical failure (filter divergence, failed starts,
/// singular J).
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dkalman",
    version,
    about = "State-space model estimation with exact likelihood derivatives and AIC/GIC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model by maximum likelihood and report criteria.
    Fit(commands::FitArgs),
    /// Check analytic derivatives against finite differences.
    Gradcheck(commands::GradcheckArgs),
    /// Simulate a series from a model and write it as CSV.
    Simulate(commands::SimulateArgs),
    /// Fit the standard model sweep and rank by GIC.
    Compare(commands::CompareArgs),
}

/// Model family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Polynomial trend plus observation noise.
    Trend,
    /// Trend plus seasonal component.
    Seasonal,
    /// Trend plus seasonal plus stationary AR component.
    SeasonalAr,
}

/// Model structure flags shared by the subcommands.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model family.
    #[arg(long, value_enum)]
    pub model: Family,

    /// Trend order (1 or 2). Defaults to 1 for the trend family and 2
    /// for the seasonal families.
    #[arg(long)]
    pub trend_order: Option<usize>,

    /// Seasonal period.
    #[arg(long, default_value_t = 12)]
    pub period: usize,

    /// AR order (seasonal-ar family only).
    #[arg(long, default_value_t = 1)]
    pub ar_order: usize,
}

impl ModelArgs {
    pub fn trend_order(&self) -> usize {
        self.trend_order.unwrap_or(match self.model {
            Family::Trend => 1,
            Family::Seasonal | Family::SeasonalAr => 2,
        })
    }

    pub fn builder(&self) -> Box<dyn ModelBuilder<f64>> {
        match self.model {
            Family::Trend => Box::new(TrendConfig {
                order: self.trend_order(),
            }),
            Family::Seasonal => Box::new(SeasonalConfig::new(self.trend_order(), self.period)),
            Family::SeasonalAr => Box::new(SeasonalArConfig::new(
                SeasonalConfig::new(self.trend_order(), self.period),
                self.ar_order,
            )),
        }
    }

    pub fn json(&self) -> Value {
        match self.model {
            Family::Trend => json!({
                "family": "trend",
                "trend_order": self.trend_order(),
            }),
            Family::Seasonal => json!({
                "family": "seasonal",
                "trend_order": self.trend_order(),
                "period": self.period,
            }),
            Family::SeasonalAr => json!({
                "family": "seasonal-ar",
                "trend_order": self.trend_order(),
                "period": self.period,
                "ar_order": self.ar_order,
            }),
        }
    }
}

/// Scale on which `--init` values are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitScale {
    /// Variances as variances; taken through `ln` internally.
    Natural,
    /// Log-variances, as optimized.
    Working,
}

/// Optimizer flags shared by `fit` and `compare`.
#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Iteration cap for the quasi-Newton loop.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,

    /// Convergence threshold on the gradient infinity norm.
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
}

impl OptimizerArgs {
    pub fn config(&self) -> dkalman::OptimizerConfigF64 {
        dkalman::OptimizerConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            ..Default::default()
        }
    }
}

/// Data-source flags shared by the data-consuming subcommands.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Single-column CSV of observations.
    #[arg(long)]
    pub data: PathBuf,

    /// Natural-log-transform the observations after reading.
    #[arg(long)]
    pub log_data: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => commands::run_fit(&args),
        Command::Gradcheck(args) => commands::run_gradcheck(&args),
        Command::Simulate(args) => commands::run_simulate(&args),
        Command::Compare(args) => commands::run_compare(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
