//! `pencilspec`: command-line front end.
//!
//! Exit codes: 0 success, 1 parse or validation error, 2 solver failure,
//! 3 incomplete spectrum, 4 verification failure, 5 reconstruction not converged.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pencilspec::{Error, IntegratorSettings64};

#[derive(Parser, Debug)]
#[command(name = "pencilspec", version, about = "Spectra and half-inverse reconstruction for a diffusion pencil")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Integrator {
    /// Relative tolerance of the ODE integrator.
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    /// Absolute tolerance of the ODE integrator.
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    /// Upper bound on the integrator step.
    #[arg(long, default_value_t = 0.1)]
    max_step: f64,
}

impl Integrator {
    fn settings(&self) -> IntegratorSettings64 {
        IntegratorSettings64 {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            ..IntegratorSettings64::default()
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Suite {
    Green,
    Asymptotic,
    Volterra,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Estimates {
    Asymptotic,
    Charfn,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the first eigenvalues and write spectrum.csv.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        nmax: usize,
        /// Newton tolerance relative to max(1, |Delta'|).
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also start Newton at +-0.1i around every window (on by default when a gamma is nonzero).
        #[arg(long)]
        complex_probe: bool,
        /// Source of the initial eigenvalue estimates.
        #[arg(long, value_enum, default_value_t = Estimates::Asymptotic)]
        estimates: Estimates,
        #[command(flatten)]
        integrator: Integrator,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample Delta and Delta0 along a horizontal line and write charfn.csv.
    Charfn {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        #[arg(long)]
        samples: usize,
        /// Imaginary part of every sample.
        #[arg(long, default_value_t = 0.0)]
        im: f64,
        #[command(flatten)]
        integrator: Integrator,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run identity checks; exits 4 if any check fails.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Second problem for the Green identity; defaults to the first.
        #[arg(long)]
        config_b: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Seed of the random Volterra kernel.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        integrator: Integrator,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the left-half potentials from a spectrum file and the known right half.
    Reconstruct {
        /// Problem supplying the constants and the right-half potentials.
        #[arg(long)]
        config: PathBuf,
        /// spectrum.csv as written by the spectrum command.
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, default_value_t = 6)]
        basis_dim: usize,
        #[arg(long, default_value_t = 24)]
        n_eigen: usize,
        #[arg(long, default_value_t = 1)]
        multistart: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        regularization: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Expansion used on [0, pi/2]: chebyshev or even_cosine.
        #[arg(long, default_value = "chebyshev")]
        basis: String,
        #[command(flatten)]
        integrator: Integrator,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan the spectral misfit along each constant and write landscape.csv.
    Constants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long, default_value_t = 0.2)]
        span: f64,
        #[command(flatten)]
        integrator: Integrator,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure with its exit code.
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Validation(_) | Error::Domain(_) | Error::Io { .. } | Error::SpecMismatch(_) => 1,
            Error::IncompleteSpectrum { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PENCILSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Failure {
        code: 1,
        kind: "ValidationError".into(),
        message: format!("PENCILSPEC_THREADS must be a positive integer, got {v:?}"),
    })?;
    if n == 0 {
        return Err(Failure {
            code: 1,
            kind: "ValidationError".into(),
            message: "PENCILSPEC_THREADS must be positive".into(),
        });
    }
    // Fails only if a pool already exists, which cannot happen this early.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum {
            config,
            nmax,
            tol,
            complex_probe,
            estimates,
            integrator,
            out,
        } => commands::spectrum(&config, nmax, tol, complex_probe, estimates == Estimates::Charfn, &integrator.settings(), &out),
        Command::Charfn {
            config,
            lmin,
            lmax,
            samples,
            im,
            integrator,
            out,
        } => commands::charfn(&config, lmin, lmax, samples, im, &integrator.settings(), &out),
        Command::Verify {
            config,
            config_b,
            suite,
            seed,
            integrator,
            out,
        } => {
            let suites = commands::Suites {
                green: matches!(suite, Suite::Green | Suite::All),
                asymptotic: matches!(suite, Suite::Asymptotic | Suite::All),
                volterra: matches!(suite, Suite::Volterra | Suite::All),
            };
            commands::verify(&config, config_b.as_deref(), suites, seed, &integrator.settings(), &out)
        }
        Command::Reconstruct {
            config,
            spectrum,
            basis_dim,
            n_eigen,
            multistart,
            seed,
            regularization,
            max_iter,
            basis,
            integrator,
            out,
        } => {
            let basis = pencilspec::model::HalfBasis::from_name(&basis).ok_or_else(|| Failure {
                code: 1,
                kind: "ValidationError".into(),
                message: format!("unknown basis {basis:?}"),
            })?;
            let cfg = pencilspec::inverse::ReconstructionConfig {
                basis_dim,
                basis,
                n_eigen,
                multistart,
                seed,
                regularization,
                max_iter,
                integrator: integrator.settings(),
                ..Default::default()
            };
            commands::reconstruct(&config, &spectrum, &cfg, &out)
        }
        Command::Constants {
            config,
            spectrum,
            points,
            span,
            integrator,
            out,
        } => commands::constants(&config, &spectrum, points, span, &integrator.settings(), &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("ERROR 1 UsageError: {first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let message = f.message.replace('\n', " ");
            eprintln!("ERROR {} {}: {}", f.code, f.kind, message);
            ExitCode::from(f.code)
        }
    }
}
