//! Command-line grammar. Ranges are checked while parsing so that bad values
//! never reach a computation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::path::PathBuf;

pub const N_MIN: usize = 16;
pub const N_MAX: usize = 512;

#[derive(Debug, Parser)]
#[command(name = "qwe", version, about = "Self-similar blowup of the quadratic wave equation in d = 7")]
pub struct Cli {
    /// Write the primary output here instead of stdout
    #[arg(long, short = 'o', global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric coefficients c11, c12, c20, c21, V, w as CSV
    Coeffs {
        /// Comma-separated similarity radii y > 0 (dimensionless)
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true, num_args = 1..)]
        y: Vec<f64>,
        /// Spatial dimension
        #[arg(long, default_value_t = 7)]
        d: u32,
    },
    /// Closed-form profile and mode checks
    #[command(subcommand)]
    Profiles(ProfilesCommand),
    /// Eigenvalue scan, ratio recurrence and exact certificates
    #[command(subcommand)]
    Spectral(SpectralCommand),
    /// Projection coefficient of the localized data
    #[command(subcommand)]
    Resolvent(ResolventCommand),
    /// Evolve in similarity time s; CSV s,norm,a1,a4 on the output and a JSON summary on stderr
    Evolve(EvolveCommand),
    /// Run every acceptance check, write artifacts and summary.json to DIR
    ReproduceAll {
        /// Output directory (created if missing)
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Seed for all random sampling
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Perturb one constant of P1 so that certification must fail
        #[arg(long)]
        corrupt_p1: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProfilesCommand {
    /// JSON report of the maximal relative residual per identity
    Verify {
        /// Random sample points per identity
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpectralCommand {
    /// Connection mismatch on a line of constant Im lambda; CSV lambda_re,lambda_im,mismatch
    Scan {
        #[arg(long, allow_negative_numbers = true)]
        re_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        re_max: f64,
        /// Number of intervals; steps + 1 points are written
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        im: f64,
    },
    /// Exact ratio recurrence against its quasisolution; CSV n,r_re,r_im,tilde_r,delta_abs
    Ratio {
        /// Spectral parameter as RE or RE,IM
        #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
        lambda: Complex64,
        /// Last index n
        #[arg(long, default_value_t = 200)]
        n_max: i64,
    },
    /// JSON array of exact certificates; exit 1 if any fails
    Certify {
        /// Perturb one constant of P1 (mutation check)
        #[arg(long)]
        corrupt_p1: bool,
        /// Seed for the random rational test points
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ResolventCommand {
    /// JSON {r0, s0, y0, delta0, integral, positive, quadrature_error}
    Projection {
        /// Time of the localized data, in (0, 4/9)
        #[arg(long, default_value_t = 0.4, value_parser = parse_t0)]
        t0: f64,
    },
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct EvolveCommand {
    #[command(subcommand)]
    pub sub: Option<EvolveSubcommand>,
    #[command(flatten)]
    pub args: EvolveArgs,
}

#[derive(Debug, Subcommand)]
pub enum EvolveSubcommand {
    /// Discrete eigenvalues checked against a second resolution; CSV re,im,resolution_shift
    Spectrum {
        /// Collocation points on [0, R]
        #[arg(long, default_value_t = 64, value_parser = parse_n)]
        grid_n: usize,
        /// Companion resolution (default 3N/2, or 2N/3 if that exceeds 512)
        #[arg(long, value_parser = parse_n)]
        companion_n: Option<usize>,
        /// Outer radius R >= 1/2 in y
        #[arg(long, default_value_t = 0.5, value_parser = parse_r)]
        r: f64,
        /// Also list eigenvalues that move between the resolutions
        #[arg(long)]
        all: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FilterArg {
    None,
    Riesz,
    Shoot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DataArg {
    /// amp * exp(-y^2/0.05) in both components
    Bump,
    /// amp times a seeded sum of Gaussians
    Random,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Amplitude of the initial perturbation (dimensionless)
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub amp: f64,
    /// Extra multiple of f*_4 added to the data
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Extra multiple of f*_1 added to the data
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Collocation points on [0, R]
    #[arg(long, default_value_t = 64, value_parser = parse_n)]
    pub grid_n: usize,
    /// Time step in s
    #[arg(long, default_value_t = 1e-3)]
    pub ds: f64,
    /// Final similarity time s
    #[arg(long, default_value_t = 5.0)]
    pub s_max: f64,
    #[arg(long, value_enum, default_value_t = FilterArg::None)]
    pub filter: FilterArg,
    /// Drop the quadratic term
    #[arg(long)]
    pub linear: bool,
    /// Seed for random data
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Outer radius R >= 1/2 in y
    #[arg(long, default_value_t = 0.5, value_parser = parse_r)]
    pub r: f64,
    #[arg(long, value_enum, default_value_t = DataArg::Bump)]
    pub data: DataArg,
    /// Steps between CSV rows
    #[arg(long, default_value_t = 10)]
    pub output_every: usize,
    /// Write the JSON summary here instead of stderr
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

pub fn parse_lambda(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse_f64(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?)),
        _ => Err(format!("expected RE or RE,IM, got {s:?}")),
    }
}

pub fn parse_r(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.5 {
        Ok(v)
    } else {
        Err(format!("R must be at least 1/2, got {v}"))
    }
}

pub fn parse_t0(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 4.0 / 9.0 {
        Ok(v)
    } else {
        Err(format!("t0 must lie in (0, 4/9), got {v}"))
    }
}

pub fn parse_n(s: &str) -> Result<usize, String> {
    let v: usize = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if (N_MIN..=N_MAX).contains(&v) {
        Ok(v)
    } else {
        Err(format!("N must lie in [{N_MIN}, {N_MAX}], got {v}"))
    }
}
