//! Command-line front end. All substance lives in [`vortwave::harness`];
//! this file only parses flags, merges them over an optional `key = value`
//! config file, and maps outcomes onto process exit codes:
//!
//! * `0` — command ran and every built-in check passed;
//! * `1` — command ran but a verification check failed;
//! * `2` — usage error (bad flags, bad config, invalid parameter range);
//! * `3` — numerical failure (divergence, missing root, singular system).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vortwave::harness::{
    cmd_dispersion, cmd_homoclinic, cmd_reduced, cmd_resolvent, cmd_solve, cmd_spectrum,
    cmd_sweep, cmd_verify, parse_f64_list, resolve_out_root, DispersionArgs, HomoclinicArgs,
    ReducedArgs, ResolventArgs, RunConfig, SolveArgs, SpectrumArgs, SweepArgs, VerifyArgs,
};
use vortwave::{Error, Result};

/// Numerical toolkit for pure capillary solitary waves on water of finite
/// depth with constant vorticity.
#[derive(Parser)]
#[command(name = "vortwave", version, about)]
struct Cli {
    /// Plain-text `key = value` configuration file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory (default: $VORTWAVE_OUT, then ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the dispersion relation and bound every root's residual.
    Dispersion {
        /// Surface-tension coefficient (must exceed 1/3).
        #[arg(long)]
        sigma0: Option<f64>,
        /// Number of eigenvalues (+/- pairs counted separately).
        #[arg(long)]
        count: Option<usize>,
        /// Residual bound each root must meet.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Filtered collocation spectrum with dispersion cross checks.
    Spectrum {
        #[arg(long)]
        sigma0: Option<f64>,
        /// Collocation nodes (at least 32; the filter re-solves at 2n).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Weighted resolvent-gain sweep along the imaginary axis.
    Resolvent {
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        /// Logarithmically spaced sample count.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Reduced-plane coefficient table and truncated normal-form orbit.
    Reduced {
        #[arg(long)]
        sigma0: Option<f64>,
        /// Vorticity detuning for the orbit.
        #[arg(long)]
        eps1: Option<f64>,
    },
    /// Shoot the normal-form homoclinic and compare with the closed form.
    Homoclinic {
        /// Local tolerance of the shooting integrator.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// One traveling-wave Newton solve from the asymptotic guess.
    Solve {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Horizontal collocation points (even).
        #[arg(long)]
        nx: Option<usize>,
        /// Vertical collocation nodes.
        #[arg(long)]
        ny: Option<usize>,
    },
    /// Continuation sweep in eps for one or more sigma0 values.
    Sweep {
        /// Comma-separated increasing eps list, e.g. 0.02,0.04,0.08.
        #[arg(long)]
        eps: Option<String>,
        /// Comma-separated sigma0 list; values run in parallel.
        #[arg(long)]
        sigma0: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        /// Worker threads for the outer loop (0 = automatic).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the deterministic property suite and write the report.
    Verify {
        /// Seed of every randomized property.
        #[arg(long)]
        seed: Option<u64>,
        /// Case-insensitive substring filter on property names.
        #[arg(long)]
        only: Option<String>,
        /// Worker threads (0 = automatic).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::empty(),
    };
    let out = resolve_out_root(cli.out);

    match cli.command {
        Cmd::Dispersion { sigma0, count, tol } => {
            let d = DispersionArgs::default();
            let args = DispersionArgs {
                sigma0: cfg.f64_or("sigma0", sigma0, d.sigma0)?,
                count: cfg.usize_or("count", count, d.count)?,
                tol: cfg.f64_or("tol", tol, d.tol)?,
            };
            cmd_dispersion(&args, &out)
        }
        Cmd::Spectrum { sigma0, n } => {
            let d = SpectrumArgs::default();
            let args = SpectrumArgs {
                sigma0: cfg.f64_or("sigma0", sigma0, d.sigma0)?,
                n: cfg.usize_or("n", n, d.n)?,
            };
            cmd_spectrum(&args, &out)
        }
        Cmd::Resolvent {
            sigma0,
            n,
            alpha_min,
            alpha_max,
            points,
        } => {
            let d = ResolventArgs::default();
            let args = ResolventArgs {
                sigma0: cfg.f64_or("sigma0", sigma0, d.sigma0)?,
                n: cfg.usize_or("n", n, d.n)?,
                alpha_min: cfg.f64_or("alpha_min", alpha_min, d.alpha_min)?,
                alpha_max: cfg.f64_or("alpha_max", alpha_max, d.alpha_max)?,
                points: cfg.usize_or("points", points, d.points)?,
            };
            cmd_resolvent(&args, &out)
        }
        Cmd::Reduced { sigma0, eps1 } => {
            let d = ReducedArgs::default();
            let args = ReducedArgs {
                sigma0: cfg.f64_or("sigma0", sigma0, d.sigma0)?,
                eps1: cfg.f64_or("eps1", eps1, d.eps1)?,
            };
            cmd_reduced(&args, &out)
        }
        Cmd::Homoclinic { tol } => {
            let d = HomoclinicArgs::default();
            let args = HomoclinicArgs {
                tol: cfg.f64_or("tol", tol, d.tol)?,
            };
            cmd_homoclinic(&args, &out)
        }
        Cmd::Solve {
            eps,
            sigma0,
            tol,
            nx,
            ny,
        } => {
            let d = SolveArgs::default();
            let args = SolveArgs {
                eps: cfg.f64_or("eps", eps, d.eps)?,
                sigma0: cfg.f64_or("sigma0", sigma0, d.sigma0)?,
                tol: cfg.f64_or("tol", tol, d.tol)?,
                nx: cfg.usize_or("nx", nx, d.nx)?,
                ny: cfg.usize_or("ny", ny, d.ny)?,
            };
            cmd_solve(&args, &out)
        }
        Cmd::Sweep {
            eps,
            sigma0,
            tol,
            nx,
            ny,
            jobs,
        } => {
            let d = SweepArgs::default();
            let eps_flag = eps.as_deref().map(parse_f64_list).transpose()?;
            let sigma_flag = sigma0.as_deref().map(parse_f64_list).transpose()?;
            let args = SweepArgs {
                eps: cfg.list_or("eps", eps_flag, &d.eps)?,
                sigma0: cfg.list_or("sigma0", sigma_flag, &d.sigma0)?,
                tol: cfg.f64_or("tol", tol, d.tol)?,
                nx: cfg.usize_or("nx", nx, d.nx)?,
                ny: cfg.usize_or("ny", ny, d.ny)?,
                jobs: cfg.usize_or("jobs", jobs, d.jobs)?,
            };
            cmd_sweep(&args, &out)
        }
        Cmd::Verify { seed, only, jobs } => {
            let d = VerifyArgs::default();
            let args = VerifyArgs {
                seed: cfg.u64_or("seed", seed, d.seed)?,
                only: only.or_else(|| {
                    let s = cfg.str_or("only", None, "");
                    (!s.is_empty()).then_some(s)
                }),
                jobs: cfg.usize_or("jobs", jobs, d.jobs)?,
            };
            cmd_verify(&args, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
