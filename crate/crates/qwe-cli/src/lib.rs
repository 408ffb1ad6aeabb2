//! Command implementations behind the `qwe` binary. Every command writes its
//! primary output to a caller-supplied sink so the same code serves the
//! binary, `reproduce-all` and the tests.

pub mod args;
pub mod reproduce;

use num_complex::Complex64;
use qwe::evolution::run::Filter;
use qwe::evolution::{
    compare_resolutions, evolve, validate_spectrum, EvolutionConfig, FilterCoefficients, Operator, ShootResult, State,
    STABLE_SHIFT,
};
use qwe::spectral::certify::{certify_all, AppendixPolys};
use qwe::spectral::recurrence::{cq_from_c64, run_recurrence, Field};
use qwe::spectral::scan::{evaluate_grid, ScanConfig};
use serde::Serialize;
use std::fmt;
use std::io::Write;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or a domain, configuration or singularity error; exit 2.
    Usage(String),
    /// A computation failed or a check did not pass; exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qwe::Error> for CliError {
    fn from(e: qwe::Error) -> Self {
        use qwe::Error::*;
        match e {
            Domain(_) | Singular(_) | Config(_) | VariableMismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failed(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failed(format!("json error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, v: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

/// Empty cell for a missing value.
fn cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Shortest decimal that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn coeffs(ys: &[f64], d: u32, out: &mut dyn Write) -> CliResult<()> {
    let rows = ys
        .iter()
        .map(|&y| qwe::geometry::eval_coefficients(y, d))
        .collect::<qwe::Result<Vec<_>>>()?;
    let mut w = csv_writer(out);
    w.write_record(["y", "c11", "c12", "c20", "c21", "V", "w"])?;
    for c in rows {
        w.write_record([
            fmt_f64(c.y),
            fmt_f64(c.c11),
            fmt_f64(c.c12),
            fmt_f64(c.c20),
            fmt_f64(c.c21),
            cell(c.v),
            fmt_f64(c.w),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn profiles_verify(samples: usize, seed: u64, out: &mut dyn Write) -> CliResult<()> {
    write_json(out, &qwe::profiles::verify(samples, seed))
}

/// `lambda_re,lambda_im,mismatch` on `steps + 1` equispaced points. On the
/// real axis the mismatch is real and written signed; off it, its modulus.
pub fn spectral_scan(re_min: f64, re_max: f64, steps: usize, im: f64, out: &mut dyn Write) -> CliResult<()> {
    if steps == 0 || !(re_max > re_min) {
        return Err(CliError::Usage("need re-max > re-min and steps >= 1".into()));
    }
    let h = (re_max - re_min) / steps as f64;
    let grid: Vec<Complex64> = (0..=steps).map(|i| Complex64::new(re_min + h * i as f64, im)).collect();
    let pts = evaluate_grid(&grid, &ScanConfig::default());
    let mut w = csv_writer(out);
    w.write_record(["lambda_re", "lambda_im", "mismatch"])?;
    for p in pts {
        let m = p.mismatch.map(|m| if im == 0.0 { m[0] } else { m[0].hypot(m[1]) });
        w.write_record([fmt_f64(p.lambda[0]), fmt_f64(p.lambda[1]), cell(m)])?;
    }
    w.flush()?;
    Ok(())
}

/// `n,r_re,r_im,tilde_r,delta_abs` from the exact recurrence; `tilde_r` is
/// the modulus of the quasisolution.
pub fn spectral_ratio(lambda: Complex64, n_max: i64, out: &mut dyn Write) -> CliResult<()> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(CliError::Usage("lambda must be finite".into()));
    }
    let seq = run_recurrence(&cq_from_c64(lambda), n_max)?;
    let mut w = csv_writer(out);
    w.write_record(["n", "r_re", "r_im", "tilde_r", "delta_abs"])?;
    for t in seq {
        let r = t.r.to_c64();
        w.write_record([
            t.n.to_string(),
            fmt_f64(r.re),
            fmt_f64(r.im),
            cell(t.tilde_r.map(|x| x.to_c64().norm())),
            cell(t.delta.map(|x| x.to_c64().norm())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The JSON array of certificates; fails when any is not proved.
pub fn spectral_certify(corrupt_p1: bool, seed: u64, out: &mut dyn Write) -> CliResult<()> {
    let polys = if corrupt_p1 {
        AppendixPolys::with_corrupted_p1()
    } else {
        AppendixPolys::printed()
    };
    let certs = certify_all(&polys, seed);
    write_json(out, &certs)?;
    let failed: Vec<&str> = certs.iter().filter(|c| !c.proved()).map(|c| c.claim.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("certificates failed: {}", failed.join(", "))))
    }
}

pub fn resolvent_projection(t0: f64, out: &mut dyn Write) -> CliResult<()> {
    write_json(out, &qwe::resolvent::projection_report(t0)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialData {
    Bump,
    Random,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShootSummary {
    pub alpha: f64,
    pub beta: f64,
    pub iters: usize,
    pub residual: f64,
}

impl From<&ShootResult> for ShootSummary {
    fn from(s: &ShootResult) -> Self {
        ShootSummary {
            alpha: s.alpha_star,
            beta: s.beta_star,
            iters: s.iterations,
            residual: s.residual,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveSummary {
    pub n: usize,
    pub r: f64,
    pub ds: f64,
    pub s_max: f64,
    pub filter: Filter,
    pub amp: f64,
    pub seed: u64,
    /// Minus the fitted slope of log norm over [1, s_max] (or [s_max/2, s_max]);
    /// null if the norm vanishes or the run stopped early.
    pub omega_fit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shoot: Option<ShootSummary>,
}

/// Writes `s,norm,a1,a4` to `out` and returns the summary.
pub fn evolve_command(cfg: &EvolutionConfig, data: InitialData, out: &mut dyn Write) -> CliResult<EvolveSummary> {
    let op = Operator::new(cfg.n, cfg.r)?;
    cfg.validate(&op)?;
    let fc = FilterCoefficients::new(&op)?;
    let base = match data {
        InitialData::Bump => State::bump(&op.grid, cfg.amp),
        InitialData::Random => State::random_even(&op.grid, cfg.amp, cfg.seed),
    };
    let t = evolve(&op, &fc, &base, cfg)?;
    let mut w = csv_writer(out);
    w.write_record(["s", "norm", "a1", "a4"])?;
    for x in &t.amplitudes.samples {
        w.write_record([fmt_f64(x.s), fmt_f64(x.norm), fmt_f64(x.a1), fmt_f64(x.a4)])?;
    }
    w.flush()?;
    let omega_fit = if t.blowup_s.is_some() {
        None
    } else {
        t.omega_fit(1.0f64.min(0.5 * cfg.s_max)).ok()
    };
    Ok(EvolveSummary {
        n: cfg.n,
        r: cfg.r,
        ds: cfg.ds,
        s_max: cfg.s_max,
        filter: cfg.filter,
        amp: cfg.amp,
        seed: cfg.seed,
        omega_fit,
        blowup_s: t.blowup_s,
        shoot: t.shoot.as_ref().map(ShootSummary::from),
    })
}

/// Default companion resolution for the spectrum comparison.
pub fn companion_resolution(n: usize) -> usize {
    if 3 * n / 2 <= args::N_MAX {
        3 * n / 2
    } else {
        2 * n / 3
    }
}

/// `re,im,resolution_shift`; only eigenvalues that move by less than
/// the stability threshold unless `all` is set.
pub fn evolve_spectrum(n: usize, companion_n: usize, r: f64, all: bool, out: &mut dyn Write) -> CliResult<()> {
    let sp = compare_resolutions(n, companion_n, r)?;
    let mut w = csv_writer(out);
    w.write_record(["re", "im", "resolution_shift"])?;
    for e in sp.eigenvalues.iter().filter(|e| all || e.resolution_shift < STABLE_SHIFT) {
        w.write_record([fmt_f64(e.re), fmt_f64(e.im), fmt_f64(e.resolution_shift)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn spectrum_report(n: usize, companion_n: usize, r: f64, out: &mut dyn Write) -> CliResult<()> {
    write_json(out, &validate_spectrum(n, companion_n, r)?)
}

fn filter_of(f: args::FilterArg) -> Filter {
    match f {
        args::FilterArg::None => Filter::None,
        args::FilterArg::Riesz => Filter::Riesz,
        args::FilterArg::Shoot => Filter::Shoot,
    }
}

fn evolution_config(a: &args::EvolveArgs) -> CliResult<EvolutionConfig> {
    if a.output_every == 0 {
        return Err(CliError::Usage("output-every must be at least 1".into()));
    }
    Ok(EvolutionConfig {
        n: a.grid_n,
        r: a.r,
        ds: a.ds,
        s_max: a.s_max,
        filter: filter_of(a.filter),
        amp: a.amp,
        alpha: a.alpha,
        beta: a.beta,
        linear: a.linear,
        seed: a.seed,
        output_every: a.output_every,
    })
}

/// Runs a parsed command. `out` receives the primary output unless the
/// command line redirects it; `err` receives diagnostics and summaries.
pub fn dispatch(cli: &args::Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    use args::*;
    let mut file;
    let out: &mut dyn Write = match &cli.output {
        Some(p) => {
            file = std::io::BufWriter::new(std::fs::File::create(p)?);
            &mut file
        }
        None => out,
    };
    match &cli.command {
        Command::Coeffs { y, d } => coeffs(y, *d, out)?,
        Command::Profiles(ProfilesCommand::Verify { samples, seed }) => profiles_verify(*samples, *seed, out)?,
        Command::Spectral(SpectralCommand::Scan { re_min, re_max, steps, im }) => {
            spectral_scan(*re_min, *re_max, *steps, *im, out)?
        }
        Command::Spectral(SpectralCommand::Ratio { lambda, n_max }) => spectral_ratio(*lambda, *n_max, out)?,
        Command::Spectral(SpectralCommand::Certify { corrupt_p1, seed }) => spectral_certify(*corrupt_p1, *seed, out)?,
        Command::Resolvent(ResolventCommand::Projection { t0 }) => resolvent_projection(*t0, out)?,
        Command::Evolve(EvolveCommand { sub: Some(EvolveSubcommand::Spectrum { grid_n, companion_n, r, all }), .. }) => {
            let c = companion_n.unwrap_or_else(|| companion_resolution(*grid_n));
            evolve_spectrum(*grid_n, c, *r, *all, out)?
        }
        Command::Evolve(EvolveCommand { sub: None, args }) => {
            let cfg = evolution_config(args)?;
            let data = match args.data {
                DataArg::Bump => InitialData::Bump,
                DataArg::Random => InitialData::Random,
            };
            let summary = evolve_command(&cfg, data, out)?;
            match &args.summary {
                Some(p) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
                    write_json(&mut f, &summary)?;
                    f.flush()?;
                }
                None => write_json(err, &summary)?,
            }
        }
        Command::ReproduceAll { out: dir, seed, corrupt_p1 } => {
            reproduce::reproduce_command(dir, *seed, *corrupt_p1, out)?
        }
    }
    out.flush()?;
    Ok(())
}
