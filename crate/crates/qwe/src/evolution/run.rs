//! Time stepping, filtered evolution, the correction functional and
//! two-parameter shooting onto the stable manifold.

use super::spectrum::FilterCoefficients;
use super::{sobolev_norm, Operator, State};
use crate::error::{Error, Result};
use crate::profiles::Mode;
use nalgebra::{DVector, Matrix2, Vector2};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    None,
    Riesz,
    Shoot,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub n: usize,
    pub r: f64,
    pub ds: f64,
    pub s_max: f64,
    pub filter: Filter,
    pub amp: f64,
    /// Extra multiples of f*_4 and f*_1 added to the base data.
    pub alpha: f64,
    pub beta: f64,
    pub linear: bool,
    pub seed: u64,
    /// Steps between recorded samples.
    pub output_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            n: 64,
            r: 0.5,
            ds: 1e-3,
            s_max: 5.0,
            filter: Filter::None,
            amp: 1e-3,
            alpha: 0.0,
            beta: 0.0,
            linear: false,
            seed: 1,
            output_every: 10,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self, op: &Operator) -> Result<()> {
        if !(self.ds > 0.0 && self.s_max > 0.0) {
            return Err(Error::Config("ds and s_max must be positive".into()));
        }
        let lim = op.grid.max_stable_ds();
        if self.ds > lim {
            return Err(Error::Config(format!("ds = {} exceeds the stability limit {lim:.3e}", self.ds)));
        }
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        Ok(())
    }
}

fn rate(op: &Operator, v: &DVector<f64>, linear: bool) -> DVector<f64> {
    let mut r = &op.matrix * v;
    if !linear {
        let n = op.n();
        for i in 0..n {
            r[n + i] += op.w[i] * v[i] * v[i];
        }
    }
    r
}

fn rk4(op: &Operator, v: &DVector<f64>, ds: f64, linear: bool) -> DVector<f64> {
    let k1 = rate(op, v, linear);
    let k2 = rate(op, &(v + &k1 * (0.5 * ds)), linear);
    let k3 = rate(op, &(v + &k2 * (0.5 * ds)), linear);
    let k4 = rate(op, &(v + &k3 * ds), linear);
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (ds / 6.0)
}

/// Above this sup norm the perturbation is no longer small against the
/// profile it perturbs and the run is reported as blown up.
const BLOWUP_LEVEL: f64 = 1e8;

fn check(v: &DVector<f64>, s: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite() && x.abs() < BLOWUP_LEVEL) {
        Ok(())
    } else {
        Err(Error::Blowup { s })
    }
}

/// One classical four-stage step.
pub fn step(op: &Operator, st: &State, ds: f64, linear: bool) -> Result<State> {
    let v = rk4(op, &st.to_vector(), ds, linear);
    check(&v, st.s)?;
    Ok(State::from_vector(&v, st.s + ds))
}

/// Evolve to exactly `s_target` with equal steps no larger than `ds_max`.
pub fn evolve_to(op: &Operator, st: &State, s_target: f64, ds_max: f64, linear: bool) -> Result<State> {
    let span = s_target - st.s;
    if span < 0.0 {
        return Err(Error::Domain(format!("cannot evolve backwards from {} to {s_target}", st.s)));
    }
    let steps = (span / ds_max).ceil() as usize;
    let mut v = st.to_vector();
    if steps == 0 {
        return Ok(st.clone());
    }
    let ds = span / steps as f64;
    for k in 0..steps {
        v = rk4(op, &v, ds, linear);
        check(&v, st.s + k as f64 * ds)?;
    }
    Ok(State::from_vector(&v, s_target))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub s: f64,
    pub norm: f64,
    pub a1: f64,
    pub a4: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ModeAmplitudes {
    pub samples: Vec<Sample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShootResult {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub iterations: usize,
    /// |a1| + |a4| at the horizon.
    pub residual: f64,
    /// None when the corrected solution is identically zero.
    pub omega_fit: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub initial: State,
    pub amplitudes: ModeAmplitudes,
    /// (s, P_1 N(Phi(s)), P_4 N(Phi(s))) at every step.
    pub nonlinear: Vec<[f64; 3]>,
    pub final_state: State,
    pub blowup_s: Option<f64>,
    pub shoot: Option<ShootResult>,
}

impl Trajectory {
    /// A fitted decay rate over [s_a, s_max]: minus the slope of log norm.
    pub fn omega_fit(&self, s_a: f64) -> Result<f64> {
        let s_b = self.amplitudes.samples.last().map_or(0.0, |x| x.s);
        Ok(-fit_rate(&self.amplitudes, [s_a, s_b])?)
    }
}

/// Evolve `data` up to `s_max` without filtering and record samples.
fn run(op: &Operator, fc: &FilterCoefficients, data: &State, cfg: &EvolutionConfig) -> Trajectory {
    let steps = (cfg.s_max / cfg.ds).round() as usize;
    let ds = cfg.s_max / steps as f64;
    let n = op.n();
    let mut v = data.to_vector();
    let mut samples = vec![];
    let mut nonlinear = vec![];
    let mut blowup_s = None;
    let record = |v: &DVector<f64>, s: f64, out: &mut Vec<Sample>| {
        let st = State::from_vector(v, s);
        out.push(Sample {
            s,
            norm: sobolev_norm(&op.grid, &st),
            a1: fc.one.amplitude(v),
            a4: fc.four.amplitude(v),
        });
    };
    let nl = |v: &DVector<f64>, s: f64| {
        let mut nv = DVector::zeros(2 * n);
        for i in 0..n {
            nv[n + i] = op.w[i] * v[i] * v[i];
        }
        [s, fc.one.amplitude(&nv), fc.four.amplitude(&nv)]
    };
    let mut s = data.s;
    record(&v, s, &mut samples);
    nonlinear.push(nl(&v, s));
    for k in 1..=steps {
        let next = rk4(op, &v, ds, cfg.linear);
        if check(&next, s).is_err() {
            blowup_s = Some(s);
            break;
        }
        v = next;
        s = data.s + k as f64 * ds;
        if !cfg.linear {
            nonlinear.push(nl(&v, s));
        }
        if k % cfg.output_every == 0 || k == steps {
            record(&v, s, &mut samples);
        }
    }
    if cfg.linear {
        nonlinear.clear();
    }
    Trajectory {
        initial: data.clone(),
        amplitudes: ModeAmplitudes { samples },
        nonlinear,
        final_state: State::from_vector(&v, s),
        blowup_s,
        shoot: None,
    }
}

fn mode_state(fc: &FilterCoefficients, k: Mode) -> State {
    match k {
        Mode::One => fc.one.right_state(),
        Mode::Four => fc.four.right_state(),
    }
}

/// Evolve `initial` (plus alpha f*_4 + beta f*_1) according to the filter:
/// NONE as given, RIESZ with the unstable components of the initial data
/// removed, SHOOT with them replaced by the shooting solution.
pub fn evolve(op: &Operator, fc: &FilterCoefficients, initial: &State, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate(op)?;
    let data = initial
        .axpy(cfg.alpha, &mode_state(fc, Mode::Four))
        .axpy(cfg.beta, &mode_state(fc, Mode::One));
    match cfg.filter {
        Filter::None => Ok(run(op, fc, &data, cfg)),
        Filter::Riesz => Ok(run(op, fc, &fc.filter(&data), cfg)),
        Filter::Shoot => {
            let sh = shoot(op, fc, &data, cfg)?;
            let shot = data
                .axpy(sh.alpha_star, &mode_state(fc, Mode::Four))
                .axpy(sh.beta_star, &mode_state(fc, Mode::One));
            let mut t = run(op, fc, &shot, cfg);
            t.shoot = Some(sh);
            Ok(t)
        }
    }
}

/// Least-squares slope of log(norm) against s over the window.
pub fn fit_rate(series: &ModeAmplitudes, window: [f64; 2]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .filter(|x| x.s >= window[0] - 1e-12 && x.s <= window[1] + 1e-12)
        .map(|x| (x.s, x.norm))
        .collect();
    fit_log_slope(&pts)
}

/// Least-squares slope of log|v| against s.
pub fn fit_log_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::Domain("need at least two samples in the window".into()));
    }
    if let Some(p) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Domain(format!("non-positive value {} at s = {}", p.1, p.0)));
    }
    let n = pts.len() as f64;
    let ms = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - ms) * (p.1.ln() - ml)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - ms).powi(2)).sum();
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Correction {
    pub j: u32,
    /// c with C_j = c f*_j.
    pub coefficient: f64,
    /// e^{-(j + 2 omega) s_max}.
    pub truncation_estimate: f64,
    pub warning: Option<String>,
}

/// C_j(Phi, f) = P_j(f + int_0^{s_max} e^{-j s} N(Phi(s)) ds) by the
/// trapezoid rule on the nonlinear history stored with the trajectory Phi.
pub fn correction_functional(traj: &Trajectory, f: &State, fc: &FilterCoefficients, k: Mode, omega: f64) -> Correction {
    let j = k.lambda();
    let col = if k == Mode::One { 1 } else { 2 };
    let (a1, a4) = fc.amplitudes(f);
    let mut c = if k == Mode::One { a1 } else { a4 };
    let h = &traj.nonlinear;
    for w in h.windows(2) {
        let (s0, s1) = (w[0][0], w[1][0]);
        c += 0.5 * (s1 - s0) * ((-j * s0).exp() * w[0][col] + (-j * s1).exp() * w[1][col]);
    }
    let s_max = h.last().map_or(0.0, |x| x[0]);
    let warning = if j * s_max < 5.0 * std::f64::consts::LN_10 {
        Some(format!("horizon {s_max} covers fewer than five decades of e^(-{j} s)"))
    } else {
        None
    };
    Correction {
        j: k.j(),
        coefficient: c,
        truncation_estimate: (-(j + 2.0 * omega) * s_max).exp(),
        warning,
    }
}

const SHOOT_TOL: f64 = 1e-9;
const SHOOT_MAX_ITER: usize = 25;

/// Find (alpha, beta) such that base + alpha f*_4 + beta f*_1 has vanishing
/// unstable amplitudes at the horizon, by Broyden iteration on
/// (alpha, beta) -> (a1 e^{-s}, a4 e^{-4s}).
pub fn shoot(op: &Operator, fc: &FilterCoefficients, base: &State, cfg: &EvolutionConfig) -> Result<ShootResult> {
    let sf = cfg.s_max;
    let f1 = mode_state(fc, Mode::One);
    let f4 = mode_state(fc, Mode::Four);
    let map = |x: &Vector2<f64>| -> Result<(Vector2<f64>, f64)> {
        let data = base.axpy(x[0], &f4).axpy(x[1], &f1);
        let end = evolve_to(op, &data, data.s + sf, cfg.ds, cfg.linear)?;
        let (a1, a4) = fc.amplitudes(&end);
        Ok((Vector2::new(a1 * (-sf).exp(), a4 * (-4.0 * sf).exp()), a1.abs() + a4.abs()))
    };
    let (a1, a4) = fc.amplitudes(base);
    let mut x = Vector2::new(-a4, -a1);
    // exact Jacobian of the linearized map
    let mut jac = Matrix2::new(0.0, 1.0, 1.0, 0.0);
    let (mut g, mut res) = map(&x)?;
    let mut history = vec![res];
    for it in 0..=SHOOT_MAX_ITER {
        if res <= SHOOT_TOL {
            let shot = base.axpy(x[0], &f4).axpy(x[1], &f1);
            let t = run(op, fc, &shot, &EvolutionConfig { linear: cfg.linear, ..*cfg });
            let omega_fit = if shot.to_vector().iter().all(|v| *v == 0.0) {
                None
            } else {
                Some(t.omega_fit(1.0f64.min(0.5 * sf))?)
            };
            return Ok(ShootResult {
                alpha_star: x[0],
                beta_star: x[1],
                iterations: it,
                residual: res,
                omega_fit,
            });
        }
        let dx = -jac
            .try_inverse()
            .ok_or_else(|| Error::NoConvergence("singular shooting Jacobian".into()))?
            * g;
        let xn = x + dx;
        let (gn, rn) = map(&xn)?;
        let dg = gn - g;
        jac += (dg - jac * dx) * dx.transpose() / dx.norm_squared();
        x = xn;
        g = gn;
        res = rn;
        history.push(res);
    }
    Err(Error::NoConvergence(format!(
        "shooting did not reach {SHOOT_TOL:e} in {SHOOT_MAX_ITER} iterations; residuals {history:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_rate_on_exact_exponential() {
        let samples = (0..=50)
            .map(|i| {
                let s = 0.1 * i as f64;
                Sample {
                    s,
                    norm: 3.0 * (-2.0 * s).exp(),
                    a1: 0.0,
                    a4: 0.0,
                }
            })
            .collect();
        let m = ModeAmplitudes { samples };
        assert!((fit_rate(&m, [0.0, 5.0]).unwrap() + 2.0).abs() < 1e-12);
        assert!(fit_log_slope(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let op = Operator::new(24, 0.5).unwrap();
        let mut st = State::zero(24);
        for _ in 0..1000 {
            st = step(&op, &st, 1e-3, false).unwrap();
        }
        assert_eq!(st.phi1.norm() + st.phi2.norm(), 0.0);
    }
}
