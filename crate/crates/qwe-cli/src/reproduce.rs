//! The reproduction driver: every acceptance criterion, its artifacts and a
//! summary that is byte-stable for a fixed seed. Wall times go to a separate
//! file so they cannot leak into the summary.

use crate::{evolve_spectrum, fmt_f64, write_json, CliError, CliResult};
use num_complex::Complex64;
use qwe::evolution::run::fit_log_slope;
use qwe::evolution::{
    evolve, evolve_to, validate_spectrum, EvolutionConfig, Filter, FilterCoefficients, Operator, SpectrumReport, State,
    Trajectory,
};
use qwe::profiles::{sample_omega, time_translation_error, verify, Mode};
use qwe::resolvent::{function_f, projection_report};
use qwe::spectral::certify::{certify_all, AppendixPolys};
use qwe::spectral::recurrence::{cq_int, track_delta_exact};
use qwe::spectral::scan::{eigenvalue_scan, real_grid, strip_check, ScanConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const PROFILE_SAMPLES: usize = 1000;
pub const T0: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, Value>,
    /// One entry per failed check.
    pub failures: Vec<String>,
}

impl CriterionOutcome {
    fn new(id: u32, name: &str) -> Self {
        CriterionOutcome {
            id,
            name: name.to_string(),
            passed: true,
            metrics: BTreeMap::new(),
            failures: vec![],
        }
    }

    fn metric(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.passed = false;
            self.failures.push(what());
        }
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.passed = false;
        self.failures.push(e.to_string());
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("[{tag}] {:>2} {}", self.id, self.name);
        if !self.failures.is_empty() {
            s.push_str(": ");
            s.push_str(&self.failures.join("; "));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub id: u32,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
    pub within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub package_version: String,
    pub target_os: String,
    pub target_arch: String,
    pub dimension: u32,
}

impl Environment {
    fn current() -> Self {
        Environment {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            target_os: std::env::consts::OS.to_string(),
            target_arch: std::env::consts::ARCH.to_string(),
            dimension: 7,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    /// Roots of the real connection scan.
    pub eigenvalues: Vec<f64>,
    pub omega_gap: Option<f64>,
    pub omega_fit: Option<f64>,
    pub projection_integral: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportBundle {
    pub seed: u64,
    pub corrupt_p1: bool,
    pub environment: Environment,
    pub all_passed: bool,
    pub metrics: Metrics,
    pub criteria: Vec<CriterionOutcome>,
}

impl ReportBundle {
    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Where artifacts go; `None` during the determinism rerun.
struct Sink<'a>(Option<&'a Path>);

impl Sink<'_> {
    fn file(&self, name: &str) -> CliResult<Option<BufWriter<File>>> {
        match self.0 {
            Some(d) => Ok(Some(BufWriter::new(File::create(d.join(name))?))),
            None => Ok(None),
        }
    }

    fn json(&self, name: &str, v: &impl Serialize) -> CliResult<()> {
        if let Some(mut f) = self.file(name)? {
            write_json(&mut f, v)?;
            f.flush()?;
        }
        Ok(())
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
        if let Some(f) = self.file(name)? {
            let mut w = csv::Writer::from_writer(f);
            w.write_record(header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn criterion_profiles(seed: u64, sink: &Sink) -> CliResult<CriterionOutcome> {
    let mut c = CriterionOutcome::new(1, "closed-form residual suite");
    let rep = verify(PROFILE_SAMPLES, seed);
    for r in &rep.identities {
        c.metric(&r.identity, r.max_relative_residual);
        c.check(r.max_relative_residual <= 1e-8, || {
            format!("{} residual {:e} > 1e-8", r.identity, r.max_relative_residual)
        });
    }
    c.metric("samples", PROFILE_SAMPLES);
    sink.json("profiles_verify.json", &rep)?;
    Ok(c)
}

fn criterion_time_translation(seed: u64) -> CriterionOutcome {
    let mut c = CriterionOutcome::new(2, "time-translation mode identity");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = (0..100)
        .map(|_| {
            let (t, r) = sample_omega(&mut rng);
            time_translation_error(1.0, t, r)
        })
        .fold(0.0, f64::max);
    c.metric("max_relative_error", worst);
    c.metric("points", 100);
    c.check(worst <= 1e-10, || format!("relative error {worst:e} > 1e-10"));
    c
}

fn criterion_certificates(seed: u64, corrupt: bool, sink: &Sink) -> CliResult<CriterionOutcome> {
    let mut c = CriterionOutcome::new(3, "exact certificates");
    let polys = if corrupt {
        AppendixPolys::with_corrupted_p1()
    } else {
        AppendixPolys::printed()
    };
    let certs = certify_all(&polys, seed);
    let mut listed = Vec::new();
    for cert in &certs {
        let mut v = serde_json::to_value(cert)?;
        if let Value::Object(m) = &mut v {
            m.remove("wall_time_ms");
        }
        listed.push(v);
        c.check(cert.proved(), || {
            format!("{} failed: {}", cert.claim, cert.witness.as_deref().unwrap_or("no witness"))
        });
    }
    c.metric("certificates", certs.len());
    c.metric("proved", certs.iter().filter(|x| x.proved()).count());
    sink.json("certificates.json", &listed)?;
    Ok(c)
}

fn criterion_dichotomy(sink: &Sink) -> CriterionOutcome {
    let mut c = CriterionOutcome::new(4, "ratio dichotomy in exact arithmetic");
    let lambdas = [(0, 0), (1, 0), (2, 0), (4, 0), (1, 1), (0, 3)];
    let mut tracks = vec![];
    for (re, im) in lambdas {
        let key = format!("lambda_{re}_{im}");
        match track_delta_exact(&cq_int(re, im), 200) {
            Ok(t) => {
                let r = Complex64::new(t.r_last[0], t.r_last[1]);
                c.metric(&format!("{key}_max_delta"), t.max_delta_abs);
                c.metric(&format!("{key}_r200_distance"), (r - 1.0).norm());
                c.check(t.max_delta_abs <= 0.25, || format!("{key}: max |delta| = {}", t.max_delta_abs));
                c.check((r - 1.0).norm() < 0.05, || format!("{key}: r_200 = {r}"));
                tracks.push(t);
            }
            Err(e) => c.error(format!("{key}: {e}")),
        }
    }
    if let Err(e) = sink.json("delta_tracks.json", &tracks) {
        c.error(e);
    }
    c
}

fn criterion_localization(sink: &Sink, metrics: &mut Metrics) -> CliResult<CriterionOutcome> {
    let mut c = CriterionOutcome::new(5, "eigenvalue localization");
    let cfg = ScanConfig::default();
    let res = eigenvalue_scan(&real_grid(0.25, 6.0, 0.05), 1e-10, 1e-6, &cfg);
    let failed = res.points.iter().filter(|p| p.error.is_some()).count();
    c.check(failed == 0, || format!("{failed} scan points failed"));
    let roots: Vec<f64> = res.roots.iter().map(|r| r.lambda[0]).collect();
    c.metric("real_roots", &roots);
    c.check(
        roots.len() == 2 && (roots[0] - 1.0).abs() <= 1e-6 && (roots[1] - 4.0).abs() <= 1e-6,
        || format!("real roots {roots:?}"),
    );
    metrics.eigenvalues = roots;
    sink.csv(
        "scan_real.csv",
        &["lambda_re", "lambda_im", "mismatch"],
        res.points.iter().map(|p| {
            vec![
                fmt_f64(p.lambda[0]),
                fmt_f64(p.lambda[1]),
                p.mismatch.map(|m| fmt_f64(m[0])).unwrap_or_default(),
            ]
        }),
    )?;
    match strip_check([0.0, 6.0], [-3.0, 3.0], 0.25, &cfg) {
        Ok(rep) => {
            c.metric("winding_count", rep.winding_count);
            c.metric("strip_minima", &rep.minima);
            c.metric("contour_floor", rep.contour_floor);
            c.check(rep.winding_count == 2, || format!("winding count {}", rep.winding_count));
            let near = |m: &[f64; 2], z: f64| (Complex64::new(m[0], m[1]) - z).norm() <= 1e-6;
            c.check(
                rep.minima.len() == 2 && near(&rep.minima[0], 1.0) && near(&rep.minima[1], 4.0),
                || format!("strip minima {:?}", rep.minima),
            );
            sink.json("strip.json", &rep)?;
        }
        Err(e) => c.error(e),
    }
    Ok(c)
}

fn criterion_projection(sink: &Sink, metrics: &mut Metrics) -> CliResult<CriterionOutcome> {
    let mut c = CriterionOutcome::new(6, "projection positivity");
    let rep = match projection_report(T0) {
        Ok(r) => r,
        Err(e) => {
            c.error(e);
            return Ok(c);
        }
    };
    let f = |y: f64| function_f(y).unwrap_or(f64::NAN);
    let near_zero: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&y| f(y)).collect();
    c.metric("f_at_1e-2_1e-3_1e-4_1e-5", &near_zero);
    c.check(
        near_zero.windows(2).all(|w| w[0] > w[1]) && near_zero[3] > 0.0,
        || format!("F does not decrease to 0+: {near_zero:?}"),
    );
    let bad = (1..=1000)
        .map(|i| rep.delta0 * i as f64 / 1000.0)
        .find(|&y| !(f(y) > 0.0));
    c.check(bad.is_none(), || format!("F <= 0 at y = {}", bad.unwrap_or(f64::NAN)));
    c.metric("delta0", rep.delta0);
    c.metric("integral", rep.integral);
    c.metric("quadrature_error", rep.quadrature_error);
    c.check(rep.positive, || format!("integral {} not positive", rep.integral));
    c.check(rep.quadrature_error <= 1e-8 * rep.integral.abs(), || {
        format!("quadrature error {:e} vs integral {:e}", rep.quadrature_error, rep.integral)
    });
    metrics.projection_integral = Some(rep.integral);
    sink.json("projection.json", &rep)?;
    Ok(c)
}

fn criterion_gap(sink: &Sink, metrics: &mut Metrics) -> CliResult<(CriterionOutcome, Option<SpectrumReport>)> {
    let mut c = CriterionOutcome::new(7, "discrete spectral gap");
    let rep = match validate_spectrum(64, 96, 0.5) {
        Ok(r) => r,
        Err(e) => {
            c.error(e);
            return Ok((c, None));
        }
    };
    let worst = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let ev = worst(&rep.error_one).max(worst(&rep.error_four));
    let vec_err = worst(&rep.eigvec_error_one).max(worst(&rep.eigvec_error_four));
    c.metric("eigenvalue_error", ev);
    c.metric("eigenvector_error", vec_err);
    c.metric("omega_gap", rep.omega_gap);
    c.metric("leading_stable", rep.leading_stable);
    c.metric("stable_count", rep.stable_count);
    c.check(ev <= 1e-6, || format!("eigenvalue error {ev:e} > 1e-6"));
    c.check(vec_err <= 1e-5, || format!("eigenvector error {vec_err:e} > 1e-5"));
    c.check(rep.omega_gap > 0.0, || format!("omega_gap {} not positive", rep.omega_gap));
    metrics.omega_gap = Some(rep.omega_gap);
    sink.json("spectrum.json", &rep)?;
    if let Some(mut f) = sink.file("spectrum.csv")? {
        evolve_spectrum(64, 96, 0.5, false, &mut f)?;
        f.flush()?;
    }
    Ok((c, Some(rep)))
}

fn criterion_growth() -> CriterionOutcome {
    let mut c = CriterionOutcome::new(8, "semigroup growth on unstable modes");
    let op = match Operator::new(96, 0.5) {
        Ok(op) => op,
        Err(e) => {
            c.error(e);
            return c;
        }
    };
    for k in [Mode::One, Mode::Four] {
        let st = State::mode(&op.grid, k);
        match evolve_to(&op, &st, 0.5, 1e-3, true) {
            Ok(end) => {
                let rel = end.phi1.norm() / st.phi1.norm() / (0.5 * k.lambda()).exp() - 1.0;
                c.metric(&format!("relative_deviation_j{}", k.j()), rel);
                c.check(rel.abs() < 0.01, || format!("j = {}: growth off by {rel:e}", k.j()));
            }
            Err(e) => c.error(e),
        }
    }
    c
}

fn trajectory_rows(t: &Trajectory) -> impl Iterator<Item = Vec<String>> + '_ {
    t.amplitudes
        .samples
        .iter()
        .map(|x| vec![fmt_f64(x.s), fmt_f64(x.norm), fmt_f64(x.a1), fmt_f64(x.a4)])
}

fn criterion_stability(gap: Option<f64>, sink: &Sink, metrics: &mut Metrics) -> CliResult<CriterionOutcome> {
    let mut c = CriterionOutcome::new(9, "nonlinear conditional stability");
    let header = ["s", "norm", "a1", "a4"];
    let setup = Operator::new(64, 0.5).and_then(|op| FilterCoefficients::new(&op).map(|fc| (op, fc)));
    let (op, fc) = match setup {
        Ok(x) => x,
        Err(e) => {
            c.error(e);
            return Ok(c);
        }
    };
    let data = State::bump(&op.grid, 1e-3);
    let cfg = EvolutionConfig { filter: Filter::Shoot, s_max: 5.0, ..Default::default() };
    match evolve(&op, &fc, &data, &cfg) {
        Ok(t) => {
            let sh = t.shoot.expect("shooting result");
            c.metric("shoot_alpha", sh.alpha_star);
            c.metric("shoot_beta", sh.beta_star);
            c.metric("shoot_iterations", sh.iterations);
            c.metric("omega_fit", sh.omega_fit);
            metrics.omega_fit = sh.omega_fit;
            let after: Vec<_> = t.amplitudes.samples.iter().filter(|x| x.s >= 1.0).collect();
            let bad = after.windows(2).find(|w| w[1].norm > w[0].norm);
            c.check(bad.is_none(), || format!("norm increases at s = {}", bad.map_or(f64::NAN, |w| w[1].s)));
            match (sh.omega_fit, gap) {
                (Some(w), Some(g)) => c.check(w >= g / 2.0, || format!("omega_fit {w} < omega_gap/2 = {}", g / 2.0)),
                _ => c.error("omega_fit or omega_gap unavailable"),
            }
            sink.csv("evolve_shoot.csv", &header, trajectory_rows(&t))?;
        }
        Err(e) => c.error(format!("shooting: {e}")),
    }
    let cfg = EvolutionConfig { s_max: 2.0, ..Default::default() };
    match evolve(&op, &fc, &data, &cfg) {
        Ok(t) => {
            let pts: Vec<(f64, f64)> =
                t.amplitudes.samples.iter().filter(|x| x.s >= 1.0).map(|x| (x.s, x.a4.abs())).collect();
            match fit_log_slope(&pts) {
                Ok(slope) => {
                    c.metric("unshot_a4_slope", slope);
                    c.check((slope - 4.0).abs() <= 0.05, || format!("unshot a4 slope {slope}"));
                }
                Err(e) => c.error(e),
            }
            sink.csv("evolve_unshot.csv", &header, trajectory_rows(&t))?;
        }
        Err(e) => c.error(format!("unshot run: {e}")),
    }
    Ok(c)
}

/// Budgets in seconds; criteria without a stated budget get none.
fn budget(id: u32) -> Option<f64> {
    match id {
        1 => Some(5.0),
        2 => Some(1.0),
        3 => Some(60.0),
        4 => Some(120.0),
        5 => Some(300.0),
        6 => Some(10.0),
        _ => None,
    }
}

struct Suite {
    criteria: Vec<CriterionOutcome>,
    timings: Vec<Timing>,
    metrics: Metrics,
}

fn timed<T>(id: u32, timings: &mut Vec<Timing>, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let v = f();
    let seconds = start.elapsed().as_secs_f64();
    let budget_seconds = budget(id);
    timings.push(Timing {
        id,
        seconds,
        budget_seconds,
        within_budget: budget_seconds.map_or(true, |b| seconds < b),
    });
    v
}

/// Criteria 1 to 9.
fn run_suite(seed: u64, corrupt: bool, dir: Option<&Path>) -> CliResult<Suite> {
    let sink = Sink(dir);
    let mut t = vec![];
    let mut m = Metrics::default();
    let mut out = vec![
        timed(1, &mut t, || criterion_profiles(seed, &sink))?,
        timed(2, &mut t, || criterion_time_translation(seed)),
        timed(3, &mut t, || criterion_certificates(seed, corrupt, &sink))?,
        timed(4, &mut t, || criterion_dichotomy(&sink)),
        timed(5, &mut t, || criterion_localization(&sink, &mut m))?,
        timed(6, &mut t, || criterion_projection(&sink, &mut m))?,
    ];
    let (c7, spec) = timed(7, &mut t, || criterion_gap(&sink, &mut m))?;
    out.push(c7);
    out.push(timed(8, &mut t, criterion_growth));
    let gap = spec.map(|s| s.omega_gap);
    out.push(timed(9, &mut t, || criterion_stability(gap, &sink, &mut m))?);
    Ok(Suite {
        criteria: out,
        timings: t,
        metrics: m,
    })
}

fn bundle(seed: u64, corrupt: bool, suite: &Suite, extra: Option<CriterionOutcome>) -> ReportBundle {
    let mut criteria = suite.criteria.clone();
    criteria.extend(extra);
    ReportBundle {
        seed,
        corrupt_p1: corrupt,
        environment: Environment::current(),
        all_passed: criteria.iter().all(|c| c.passed),
        metrics: suite.metrics.clone(),
        criteria,
    }
}

#[derive(Debug)]
pub struct Reproduction {
    pub bundle: ReportBundle,
    pub timings: Vec<Timing>,
    pub summary_path: PathBuf,
}

/// Runs everything, writes artifacts, `summary.json` and `timings.json`
/// into `out`. Criterion 10 reruns criteria 1 to 9 without artifacts and
/// compares the serialized summaries byte for byte.
pub fn reproduce_all(out: &Path, seed: u64, corrupt: bool) -> CliResult<Reproduction> {
    fs::create_dir_all(out)?;
    let first = run_suite(seed, corrupt, Some(out))?;
    let mut timings = first.timings.clone();
    let start = Instant::now();
    let second = run_suite(seed, corrupt, None)?;
    let a = bundle(seed, corrupt, &first, None).to_json()?;
    let b = bundle(seed, corrupt, &second, None).to_json()?;
    let mut c10 = CriterionOutcome::new(10, "deterministic summary");
    c10.metric("summary_bytes", a.len());
    c10.check(a == b, || {
        let at = a.bytes().zip(b.bytes()).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()));
        format!("reruns differ from byte {at}")
    });
    timings.push(Timing {
        id: 10,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds: None,
        within_budget: true,
    });
    let bundle = bundle(seed, corrupt, &first, Some(c10));
    let summary_path = out.join("summary.json");
    fs::write(&summary_path, bundle.to_json()?)?;
    let mut f = BufWriter::new(File::create(out.join("timings.json"))?);
    write_json(&mut f, &json!({ "seed": seed, "timings": &timings }))?;
    f.flush()?;
    Ok(Reproduction {
        bundle,
        timings,
        summary_path,
    })
}

/// `reproduce-all` as a command: the per-criterion lines on `log`, failure
/// if any criterion fails.
pub fn reproduce_command(out: &Path, seed: u64, corrupt: bool, log: &mut dyn Write) -> CliResult<()> {
    let r = reproduce_all(out, seed, corrupt)?;
    for c in &r.bundle.criteria {
        writeln!(log, "{}", c.line())?;
    }
    writeln!(log, "summary: {}", r.summary_path.display())?;
    if r.bundle.all_passed {
        Ok(())
    } else {
        let n = r.bundle.criteria.iter().filter(|c| !c.passed).count();
        Err(CliError::Failed(format!("{n} criteria failed")))
    }
}
