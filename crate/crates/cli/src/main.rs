//! `chebfit`: active polynomial regression fits, weight curves,
//! verification sweeps and lower-bound experiments from the command line.
//!
//! Exit status: 0 on success, 1 on error, 2 when a fit did not converge
//! (its files are still written), 3 when a sweep has a failing or errored
//! cell.

mod commands;
mod config;
mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{AdversaryArgs, BenchArgs, FitArgs, VerifyArgs, WeightsArgs};
use config::{parse_p, parse_p_list, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "chebfit", version, about = "Active L_p polynomial regression from Chebyshev-distributed queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("cannot read {x:?} as a degree")))
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("cannot read {x:?} as a number")))
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Fit a degree-d polynomial to an oracle; writes fit.json and samples.csv.
    Fit {
        /// abs | runge | exp | step | spike:C,W,H | poly:FILE.json | FILE.csv
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        d: usize,
        /// Norm exponent: decimal, ratio (2/3) or inf.
        #[arg(long, value_parser = parse_p)]
        p: f64,
        /// Query budget.
        #[arg(long)]
        n: usize,
        #[arg(long, env = "CHEBFIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// One constant-factor stage instead of the two-stage relative-error fit.
        #[arg(long)]
        constant: bool,
        /// Row-weight exponent of the sup-norm fit (default max(3, ceil(ln(d+1)) + 2)).
        #[arg(long, value_parser = parse_p)]
        linf_p: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Chebyshev and clipped measures with their reweighted leverage on the standard grid.
    Weights {
        #[arg(long)]
        d: usize,
        #[arg(long, value_parser = parse_p)]
        p: f64,
        /// Clip constant C of the clipped measure (> 1/pi).
        #[arg(long, default_value_t = 1.0)]
        clip: f64,
        /// Interior grid points (the endcap points are always added).
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value = "weights.csv")]
        out: PathBuf,
    },
    /// Ratio, endcap and sensitivity sweeps; writes CSVs and summary.json.
    Verify {
        #[arg(long, value_parser = parse_usize_list, default_value = "4,8,16")]
        d: Vec<Vec<usize>>,
        #[arg(long, value_parser = parse_p_list, default_value = "2/3,1,3/2,2")]
        p: Vec<Vec<f64>>,
        /// Clip constants C of the clipped measure (> 1/pi), e.g. 0.5,1,2,4.
        #[arg(long, value_parser = parse_f64_list, default_value = "1")]
        clip: Vec<Vec<f64>>,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        /// Degrees of the sensitivity sweep (empty string to skip).
        #[arg(long, value_parser = parse_usize_list, default_value = "8,16")]
        sens_d: Vec<Vec<usize>>,
        #[arg(long, value_parser = parse_p_list, default_value = "1,2,4")]
        sens_p: Vec<Vec<f64>>,
        #[arg(long, default_value_t = 200)]
        sens_grid: usize,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
    },
    /// Hidden-spike experiment against the relative-error fit.
    Adversary {
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, env = "CHEBFIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Fit degree (default clamp(n/2 - 1, 0, 4)).
        #[arg(long)]
        degree: Option<usize>,
        /// Half-width of the hidden interval (default 1/(8n)).
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value = "adversary-out")]
        out: PathBuf,
    },
    /// Uniform versus Chebyshev nodes on 1/(1 + 25 t^2).
    Bench {
        /// Benchmark name (runge).
        which: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Number of consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, env = "CHEBFIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<commands::Status> {
    match cli.command {
        Command::Fit {
            oracle,
            d,
            p,
            n,
            seed,
            constant,
            linf_p,
            out,
        } => commands::fit(&FitArgs {
            oracle,
            d,
            p,
            n,
            seed,
            constant,
            linf_p,
            out,
        }),
        Command::Weights { d, p, clip, grid, out } => commands::weights(&WeightsArgs { d, p, clip, grid, out }),
        Command::Verify {
            d,
            p,
            clip,
            grid,
            sens_d,
            sens_p,
            sens_grid,
            out,
        } => commands::verify(&VerifyArgs {
            d: d.into_iter().flatten().collect(),
            p: p.into_iter().flatten().collect(),
            clip: clip.into_iter().flatten().collect(),
            grid,
            sens_d: sens_d.into_iter().flatten().collect(),
            sens_p: sens_p.into_iter().flatten().collect(),
            sens_grid,
            out,
        }),
        Command::Adversary {
            p,
            eps,
            n,
            trials,
            seed,
            degree,
            half_width,
            out,
        } => commands::adversary(&AdversaryArgs {
            p,
            eps,
            n,
            trials,
            seed,
            degree,
            half_width,
            out,
        }),
        Command::Bench {
            which,
            d,
            n,
            seeds,
            seed,
            out,
        } => commands::bench(&BenchArgs {
            which,
            d,
            n,
            seeds,
            seed,
            out,
        }),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
