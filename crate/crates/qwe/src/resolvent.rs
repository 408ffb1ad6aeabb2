//! Fundamental systems of the lambda = 1, 4 mode equations, the cutoff data
//! near the light cone and the sign of the projection integral behind the
//! nonvanishing of P_4 on truncated eigenfunctions.

use crate::error::{Error, Result};
use crate::geometry::{coeffs, height};
use crate::jet::{Jet, Real};
use crate::profiles::{f_star, Mode};
use num_complex::Complex64;
use quadrature::double_exponential;
use serde::Serialize;

pub use crate::evolution::spectrum::{riesz_amplitudes, FilterCoefficients};

fn interior(y: f64) -> Result<()> {
    if y > 0.0 && y < 0.5 {
        Ok(())
    } else {
        Err(Error::Singular(format!("y must lie in (0, 1/2), got {y}")))
    }
}

/// W(y; lambda) for real lambda; equals exp(-I_j) at lambda = j.
pub fn w_real<T: Real>(y: T, lambda: f64) -> T {
    let y2 = y * y;
    let s = (y2 + 2.0).sqrt();
    let num = (y2 + 1.0)
        * (-(y2 * 4.0) + 1.0).powf(-lambda)
        * (s * 3.0 - y + 4.0).powf(lambda / 2.0)
        * (s * 3.0 + y + 4.0).powf(lambda / 2.0);
    num / (y2 * y2 * y2 * s * (y2 + s * 2.0 + 3.0).sqrt())
}

/// The separately displayed lambda = 4 form with integer powers.
pub fn w4_display<T: Real>(y: T) -> T {
    let y2 = y * y;
    let s = (y2 + 2.0).sqrt();
    let num = (y2 + 1.0) * (s * 3.0 - y + 4.0).sq() * (s * 3.0 + y + 4.0).sq();
    num / ((-(y2 * 4.0) + 1.0).powi(4) * y2 * y2 * y2 * s * (y2 + s * 2.0 + 3.0).sqrt())
}

pub fn wronskian_w(y: f64, lambda: Complex64) -> Result<Complex64> {
    interior(y)?;
    let y2 = y * y;
    let s = (y2 + 2.0).sqrt();
    let log_part = -lambda * (1.0 - 4.0 * y2).ln() + lambda / 2.0 * ((3.0 * s - y + 4.0) * (3.0 * s + y + 4.0)).ln();
    Ok(log_part.exp() * (y2 + 1.0) / (y2 * y2 * y2 * s * (y2 + 2.0 * s + 3.0).sqrt()))
}

/// Closed-form antiderivatives of p_j = (c11 + (j+2) c21)/c12.
pub fn antiderivative_i<T: Real>(k: Mode, y: T) -> T {
    let y2 = y * y;
    let s = (y2 + 2.0).sqrt();
    let common = y2 * y2 * y2 * s * (y2 + s * 2.0 + 3.0).sqrt() / (y2 + 1.0);
    let w = -(y2 * 4.0) + 1.0;
    match k {
        Mode::One => (common * w / ((s * 3.0 - y + 4.0).sqrt() * (s * 3.0 + y + 4.0).sqrt())).ln(),
        Mode::Four => (common * w.powi(4) / (y2 * 8.0 + s * 24.0 + 34.0).sq()).ln(),
    }
}

pub fn eval_antiderivative_i(k: Mode, y: f64) -> Result<f64> {
    interior(y)?;
    Ok(antiderivative_i(k, y))
}

/// p_j and q_j of the lambda = j mode equation.
pub fn mode_pq<T: Real>(k: Mode, y: T) -> (T, T) {
    crate::spectral::coefficients_real(crate::spectral::ModeForm::YForm, k.lambda(), y)
}

/// G_j = c21 f' + (c20 - 4 - 2j) f for f = f*_{j,1}.
pub fn g_j<T: Real>(k: Mode, y: T) -> T {
    let c = coeffs(y, 7);
    c.c21 * f_star_derivative(k, y) + (c.c20 - (4.0 + 2.0 * k.lambda())) * f_star(k, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
}

/// Zero of f*_{1,1} in (1/4, 1/2): 7 h^2 = 15 y^2 with h < 0.
pub fn f1_zero() -> f64 {
    let k2 = 15.0f64 / 7.0;
    let k = k2.sqrt();
    (4.0 * k - (16.0 * k2 - 8.0 * (k2 - 1.0)).sqrt()) / (2.0 * (k2 - 1.0))
}

const NEAR: f64 = 0.005;
const KN: usize = 14;

/// Laurent data of W/f^2 at the zero of f*_{1,1}: W/f^2 = sum_k h_k (t-z)^(k-2).
fn laurent_at_f1_zero() -> (f64, [f64; KN]) {
    let z = f1_zero();
    let f: Jet<{ KN + 1 }> = f_star(Mode::One, Jet::var(z));
    let mut u = [0.0; KN];
    u.copy_from_slice(&f.c[1..]);
    let u = Jet::<KN>::from_coeffs(u);
    let w = w_real(Jet::<KN>::var(z), 1.0);
    (z, (w / (u * u)).c)
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> QuadValue {
    if a == b {
        return QuadValue { value: 0.0, error: 0.0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    // absolute tolerance scaled to the integrand, which can be ~1e-16 near 0
    let scale = (1..64)
        .map(|i| f(lo + (hi - lo) * i as f64 / 64.0).abs())
        .fold(0.0, f64::max)
        * (hi - lo);
    let o = double_exponential::integrate(f, lo, hi, 1e-14 * scale.max(f64::MIN_POSITIVE));
    QuadValue {
        value: sign * o.integral,
        error: o.error_estimate,
    }
}

/// integral over [a, b] of W/f^2 for j = 4, or of its regular part
/// W/f^2 - h_0/(t - z)^2 for j = 1.
fn regular_integral(k: Mode, a: f64, b: f64) -> QuadValue {
    match k {
        Mode::Four => quad(|t| w_real(t, 4.0) / f_star(Mode::Four, t).sq(), a, b),
        Mode::One => {
            let (z, h) = laurent_at_f1_zero();
            let far = |t: f64| w_real(t, 1.0) / f_star(Mode::One, t).sq() - h[0] / (t - z).sq();
            let near_poly = |lo: f64, hi: f64| -> f64 {
                (2..KN)
                    .map(|k| h[k] * ((hi - z).powi(k as i32 - 1) - (lo - z).powi(k as i32 - 1)) / (k as f64 - 1.0))
                    .sum()
            };
            let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
            let cuts = [lo, (z - NEAR).clamp(lo, hi), (z + NEAR).clamp(lo, hi), hi];
            let mut v = 0.0;
            let mut e = 0.0;
            for (i, w) in cuts.windows(2).enumerate() {
                if w[0] == w[1] {
                    continue;
                }
                if i == 1 {
                    v += near_poly(w[0], w[1]);
                } else {
                    let q = quad(far, w[0], w[1]);
                    v += q.value;
                    e += q.error;
                }
            }
            QuadValue { value: sign * v, error: e }
        }
    }
}

/// psi_j(y) = f*_{j,1}(y) * integral_{1/4}^{y} exp(-I_j) / f*_{j,1}^2, taken
/// as a Hadamard finite part across the zero of f*_{1,1} (the residue of
/// the integrand there vanishes, so psi_1 stays smooth).
pub fn second_solution_psi(k: Mode, y: f64) -> Result<QuadValue> {
    interior(y)?;
    let f = f_star(k, y);
    let reg = regular_integral(k, 0.25, y);
    match k {
        Mode::Four => Ok(QuadValue {
            value: f * reg.value,
            error: f.abs() * reg.error,
        }),
        Mode::One => {
            let (z, h) = laurent_at_f1_zero();
            let value = if (y - z).abs() < 1e-12 {
                -h[0] * f_star(Mode::One, Jet::<2>::var(z)).c[1]
            } else {
                f * (reg.value + h[0] / (0.25 - z)) - h[0] * f / (y - z)
            };
            Ok(QuadValue {
                value,
                error: f.abs() * reg.error,
            })
        }
    }
}

/// Residue coefficient h_1 of W/f^2 at the zero of f*_{1,1}, relative to h_0.
pub fn f1_zero_residue() -> f64 {
    let (_, h) = laurent_at_f1_zero();
    h[1] / h[0]
}

/// The integrand f*_{4,1} G~_4 / (W(.;4) c12) and the bracketed function
/// c21 (f*_{4,1})^2 / (W(.;4) c12), generic so jets differentiate them.
fn f_terms<T: Real>(y: T) -> (T, T) {
    let c = coeffs(y, 7);
    let fj = f_star(Mode::Four, y);
    let fp = f_star_derivative(Mode::Four, y);
    let g = c.c21 * fp + (c.c20 - 12.0) * fj;
    let w = w_real(y, 4.0);
    (fj / w * g / c.c12, c.c21 * fj * fj / (w * c.c12))
}

/// d/dy f*_{j,1} for generic arguments (exact closed form).
pub fn f_star_derivative<T: Real>(k: Mode, y: T) -> T {
    let (h, h1, _) = height(y);
    let q = y * y * 5.0 + h * h * 3.0;
    let dq = y * 10.0 + h * h1 * 6.0;
    let q3 = q * q * q;
    let q4 = q3 * q;
    match k {
        Mode::One => {
            let num = (h * h * 7.0 - y * y * 15.0) * h;
            let dnum = (h * h1 * 14.0 - y * 30.0) * h + (h * h * 7.0 - y * y * 15.0) * h1;
            dnum / q3 - num * dq * 3.0 / q4
        }
        Mode::Four => -(dq * 3.0) / q4,
    }
}

/// The bracketed function c21 (f*_{4,1})^2 / (W(.;4) c12) whose derivative enters F.
pub fn f_bracket(y: f64) -> Result<f64> {
    interior(y)?;
    Ok(f_terms(y).1)
}

/// Both terms of F at y: (first term, bracketed derivative).
pub fn function_f_terms(y: f64) -> Result<(f64, f64)> {
    interior(y)?;
    let (t1, _) = f_terms(y);
    let (_, t2) = f_terms(Jet::<2>::var(y));
    Ok((t1, t2.c[1]))
}

/// F(y) = f*_{4,1} G~_4 / (W(.;4) c12) - [c21 (f*_{4,1})^2 / (W(.;4) c12)]'.
pub fn function_f(y: f64) -> Result<f64> {
    let (a, b) = function_f_terms(y)?;
    Ok(a - b)
}

/// First sign change of F on (0, 1/2), bracketed on a grid and bisected.
pub fn bracket_delta0() -> Result<(f64, [f64; 2])> {
    let n = 500;
    let mut prev = (0.001, function_f(0.001)?);
    if prev.1 <= 0.0 {
        return Err(Error::Internal("F is not positive near 0".into()));
    }
    for i in 2..n {
        let y = 0.5 * i as f64 / n as f64;
        let v = function_f(y)?;
        if v <= 0.0 {
            let (mut a, mut b) = (prev.0, y);
            while b - a > 1e-15 {
                let m = 0.5 * (a + b);
                if function_f(m)? > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok((0.5 * (a + b), [a, b]));
        }
        prev = (y, v);
    }
    Err(Error::Internal("F has no sign change on (0, 1/2)".into()))
}

pub const DELTA0_SAFETY: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffSpec {
    pub t0: f64,
    pub r0: f64,
    pub s0: f64,
    pub y0: f64,
    /// First zero of F.
    pub delta0_root: f64,
    /// The positivity radius used, DELTA0_SAFETY times the root.
    pub delta0: f64,
    /// chi = 1 on [0, plateau_end].
    pub plateau_end: f64,
    /// chi = 0 on [support_end, inf).
    pub support_end: f64,
}

pub fn s0_of(r0: f64) -> f64 {
    ((4.0 - 2.0 * std::f64::consts::SQRT_2) / (2.0 + r0)).ln()
}

pub fn y0_of(r0: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    s0_of(r0).exp() * ((4.0 + s2) * r0 * r0 + 4.0 * (2.0 + s2) * r0) / (8.0 * (r0 + 2.0 + s2))
}

/// Residual of r - r0 = 1 + e^{-s0} h(e^{s0} r) at r = y0 e^{-s0}.
pub fn y0_identity_residual(r0: f64) -> f64 {
    let s0 = s0_of(r0);
    let r = y0_of(r0) * (-s0).exp();
    let (h, _, _) = height(s0.exp() * r);
    (r - r0) - (1.0 + (-s0).exp() * h)
}

pub fn cutoff_constants(t0: f64) -> Result<CutoffSpec> {
    if !(t0 > 0.0 && t0 < 4.0 / 9.0) {
        return Err(Error::Config(format!("t0 must lie in (0, 4/9), got {t0}")));
    }
    let r0 = t0 / 4.0;
    let s0 = s0_of(r0);
    let y0 = y0_of(r0);
    let (root, _) = bracket_delta0()?;
    let delta0 = DELTA0_SAFETY * root;
    let m = y0.min(delta0);
    Ok(CutoffSpec {
        t0,
        r0,
        s0,
        y0,
        delta0_root: root,
        delta0,
        plateau_end: 0.5 * m,
        support_end: 0.75 * m,
    })
}

fn smooth_psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth non-increasing step: 1 up to `a`, 0 from `b`.
pub fn chi(a: f64, b: f64, y: f64) -> f64 {
    let s = (y - a) / (b - a);
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let p = smooth_psi(1.0 - s);
        p / (p + smooth_psi(s))
    }
}

impl CutoffSpec {
    pub fn chi(&self, y: f64) -> f64 {
        chi(self.plateau_end, self.support_end, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProjectionMethod {
    ClosedFormIntegrand,
    DiscreteLeftEigenvector,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectionCoefficient {
    pub j: u32,
    pub value: f64,
    pub quadrature_error: f64,
    pub method: ProjectionMethod,
}

/// integral_0^b chi F for the step from a to b, with an error estimate that
/// includes the change under splitting every piece in two.
pub fn chi_f_integral(a: f64, b: f64) -> Result<QuadValue> {
    let f = |y: f64| chi(a, b, y) * function_f(y).unwrap_or(f64::NAN);
    let coarse = quad(f, 0.0, a).value + quad(f, a, b).value;
    let mids = [0.0, 0.5 * a, a, 0.5 * (a + b), b];
    let mut fine = 0.0;
    let mut est = 0.0;
    for w in mids.windows(2) {
        let q = quad(f, w[0], w[1]);
        fine += q.value;
        est += q.error;
    }
    if !fine.is_finite() {
        return Err(Error::Internal("projection integrand not finite".into()));
    }
    Ok(QuadValue {
        value: fine,
        error: est.max((fine - coarse).abs()),
    })
}

pub fn projection_integral(spec: &CutoffSpec) -> Result<ProjectionCoefficient> {
    if spec.support_end > spec.delta0_root {
        return Err(Error::Config("cutoff support reaches past the first zero of F".into()));
    }
    let q = chi_f_integral(spec.plateau_end, spec.support_end)?;
    if q.value <= 0.0 {
        return Err(Error::Internal(format!(
            "projection integral {} is not positive, against the positivity of F near 0",
            q.value
        )));
    }
    Ok(ProjectionCoefficient {
        j: 4,
        value: q.value,
        quadrature_error: q.error,
        method: ProjectionMethod::ClosedFormIntegrand,
    })
}

/// integral_0^{1/2} phi_j G_j / (W(.;j) c12), the quantity a generalized
/// eigenvector would have to annihilate.
pub fn obstruction_integrand(k: Mode, y: f64) -> f64 {
    let c = coeffs(y, 7);
    f_star(k, y) * g_j(k, y) / (w_real(y, k.lambda()) * c.c12)
}

pub fn obstruction_integral(k: Mode) -> QuadValue {
    let f = |y: f64| obstruction_integrand(k, y);
    let a = quad(f, 0.0, 0.25);
    let b = quad(f, 0.25, 0.5);
    QuadValue {
        value: a.value + b.value,
        error: a.error + b.error,
    }
}

/// JSON payload of `resolvent projection`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub r0: f64,
    pub s0: f64,
    pub y0: f64,
    pub delta0: f64,
    pub integral: f64,
    pub positive: bool,
    pub quadrature_error: f64,
}

pub fn projection_report(t0: f64) -> Result<ProjectionReport> {
    let spec = cutoff_constants(t0)?;
    let p = projection_integral(&spec)?;
    Ok(ProjectionReport {
        r0: spec.r0,
        s0: spec.s0,
        y0: spec.y0,
        delta0: spec.delta0,
        integral: p.value,
        positive: p.value > 0.0,
        quadrature_error: p.quadrature_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_forms_agree() {
        for i in 1..=20 {
            let y = 0.49 * i as f64 / 21.0;
            let a = w_real(y, 4.0);
            let b = w4_display(y);
            assert!((a - b).abs() <= 1e-12 * b.abs(), "y = {y}");
            let c = wronskian_w(y, Complex64::new(4.0, 0.0)).unwrap();
            assert!((c.re - b).abs() <= 1e-12 * b.abs() && c.im.abs() <= 1e-12 * b.abs());
            let s = (y * y + 2.0).sqrt();
            let w0 = (y * y + 1.0) / (y.powi(6) * s * (y * y + 2.0 * s + 3.0).sqrt());
            assert!((w_real(y, 0.0) - w0).abs() <= 1e-13 * w0);
        }
        let r = w_real(1e-3, 2.0) / w_real(2e-3, 2.0);
        assert!((r / 64.0 - 1.0).abs() < 1e-2);
        assert!(wronskian_w(0.5, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn w_is_exp_minus_i() {
        for k in [Mode::One, Mode::Four] {
            for i in 1..10 {
                let y = 0.05 * i as f64;
                let a = (-antiderivative_i(k, y)).exp();
                let b = w_real(y, k.lambda());
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn antiderivative_matches_p() {
        for k in [Mode::One, Mode::Four] {
            for i in 1..=50 {
                let y = 0.01 + 0.47 * i as f64 / 51.0;
                let d = antiderivative_i(k, Jet::<2>::var(y)).c[1];
                let (p, _) = mode_pq(k, y);
                assert!((d - p).abs() <= 1e-8 * p.abs().max(1.0), "{k:?} y = {y}: {d} vs {p}");
            }
        }
        assert!(eval_antiderivative_i(Mode::One, 0.25).unwrap().is_finite());
    }

    #[test]
    fn derivative_of_f_star() {
        for k in [Mode::One, Mode::Four] {
            for i in 1..10 {
                let y = 0.05 * i as f64;
                let j = f_star(k, Jet::<2>::var(y)).c[1];
                assert!((f_star_derivative(k, y) - j).abs() <= 1e-12 * j.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn residue_vanishes_at_zero_of_f1() {
        assert!(f1_zero_residue().abs() < 1e-9, "{}", f1_zero_residue());
        assert!(f_star(Mode::One, f1_zero()).abs() < 1e-15);
    }
}
