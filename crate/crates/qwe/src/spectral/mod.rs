//! The mode equation in its several forms, the two supersymmetric
//! transforms, the Heun recurrence with exact certificates, and the
//! numerical eigenvalue scan.

pub mod certify;
pub mod chain;
pub mod recurrence;
pub mod scan;

use crate::error::{Error, Result};
use crate::geometry::coeffs;
use crate::jet::Real;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeForm {
    /// Hyperboloidal variable y on (0, 1/2) with the seven-dimensional
    /// coefficients; singular at y = 0 and where c12 vanishes (y = 1/2).
    YForm,
    RhoForm,
    /// After removing lambda = 4.
    Susy1,
    /// After removing lambda = 1 as well.
    Susy2,
    /// x = 8 rho^2 / (3 + 5 rho^2); singular at 0, 1, 8/5.
    Heun,
}

impl ModeForm {
    pub fn name(self) -> &'static str {
        match self {
            ModeForm::YForm => "Y_FORM",
            ModeForm::RhoForm => "RHO_FORM",
            ModeForm::Susy1 => "SUSY1",
            ModeForm::Susy2 => "SUSY2",
            ModeForm::Heun => "HEUN",
        }
    }
}

/// Potential of the rho-type forms: the equation reads
/// (1 - rho^2) f'' + (6/rho - 2(lambda+3) rho) f' - ((lambda+2)(lambda+3) - V) f = 0.
pub fn rho_potential<T: Real>(form: ModeForm, rho: T) -> T {
    let r2 = rho * rho;
    let q = r2 * 5.0 + 3.0;
    let q2 = q * q;
    match form {
        ModeForm::RhoForm => (-(r2 * 5.0) + 21.0) * 48.0 / q2,
        ModeForm::Susy1 => (r2 * r2 * 5.0 + r2 * 30.0 - 3.0) * 18.0 / (r2 * q2),
        ModeForm::Susy2 => (r2 * r2 * 35.0 + r2 * 18.0 - 21.0) * 6.0 / (r2 * q2),
        _ => unreachable!("not a rho-type form"),
    }
}

const SINGULAR_EPS: f64 = 1e-12;

fn check_point(form: ModeForm, x: f64) -> Result<()> {
    let near = |a: f64| (x - a).abs() <= SINGULAR_EPS;
    let singular = match form {
        ModeForm::YForm => x <= 0.0 || near(0.5),
        ModeForm::RhoForm | ModeForm::Susy1 | ModeForm::Susy2 => near(0.0) || near(1.0) || near(-1.0),
        ModeForm::Heun => near(0.0) || near(1.0) || near(1.6),
    };
    if singular || !x.is_finite() {
        return Err(Error::Singular(format!("{} has a singular point at {x}", form.name())));
    }
    Ok(())
}

/// Coefficients of f'' + p f' + q f = 0 for real lambda, generic in the
/// point so that jets give their Taylor expansions.
pub fn coefficients_real<T: Real>(form: ModeForm, lambda: f64, x: T) -> (T, T) {
    let l = lambda;
    match form {
        ModeForm::YForm => {
            let c = coeffs(x, 7);
            let p = (c.c11 + c.c21 * (l + 2.0)) / c.c12;
            let q = ((c.c20 - (l + 2.0)) * (l + 2.0) + c.v) / c.c12;
            (p, q)
        }
        ModeForm::RhoForm | ModeForm::Susy1 | ModeForm::Susy2 => {
            let w = -(x * x) + 1.0;
            let p = (x.recip() * 6.0 - x * (2.0 * (l + 3.0))) / w;
            let q = -(-rho_potential(form, x) + (l + 2.0) * (l + 3.0)) / w;
            (p, q)
        }
        ModeForm::Heun => {
            let p = x.recip() * 5.5 + (x - 1.0).recip() * l + (x - 1.6).recip() * 0.5;
            let num = x * (5.0 * (l + 2.0) * (l + 8.0)) - (l + 26.0) * (3.0 * l + 4.0);
            let q = num / (x * (x - 1.0) * (x - 1.6) * 20.0);
            (p, q)
        }
    }
}

/// Coefficients of f'' + p f' + q f = 0 at a real point for complex lambda.
pub fn mode_ode_coefficients(form: ModeForm, lambda: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
    check_point(form, x)?;
    // every form is affine in lambda in p and quadratic in q; recover the
    // complex values from three real evaluations
    let at = |l: f64| coefficients_real(form, l, x);
    let (p0, q0) = at(0.0);
    let (p1, q1) = at(1.0);
    let (_, qm) = at(-1.0);
    let pa = p1 - p0;
    let qa = (q1 - qm) / 2.0;
    let qb = (q1 + qm) / 2.0 - q0;
    Ok((p0 + lambda * pa, q0 + lambda * qa + lambda * lambda * qb))
}

/// Factorizer of the first transform.
pub fn b_first<T: Real>(rho: T) -> T {
    let r2 = rho * rho;
    (-(r2 * 36.0) - r2 * r2 * 5.0 + 9.0) / (rho * 3.0 + rho * r2 * 2.0 - rho * r2 * r2 * 5.0)
}

/// Factorizer of the second transform: the log-derivative of
/// rho^3 (1 - rho^2)^(1/2) f~(rho; 1).
pub fn b_second<T: Real>(rho: T) -> T {
    let r2 = rho * rho;
    (rho * (r2 * 5.0 + 3.0)).recip() * 12.0 - rho / (-r2 + 1.0)
}

/// f -> (1 - rho^2) [f' + (3/rho - lambda rho/(1 - rho^2) - b) f], which
/// is g -> g' - b g conjugated by g = rho^3 (1 - rho^2)^(lambda/2) f and
/// weighted by 1 - rho^2.
pub fn susy_step<T: Real>(lambda: f64, b: T, rho: T, f: T, fp: T) -> T {
    let w = -(rho * rho) + 1.0;
    w * (fp + (rho.recip() * 3.0 - rho * lambda / w - b) * f)
}

fn check_open_unit(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")))
    }
}

/// First transform of (f, f') at rho. Maps f(.; 4) to zero.
pub fn susy_transform_first(lambda: f64, rho: f64, f: f64, fp: f64) -> Result<f64> {
    check_open_unit(rho)?;
    Ok(susy_step(lambda, b_first(rho), rho, f, fp))
}

/// Second transform of (f~, f~') at rho. Maps f~(.; 1) to zero.
pub fn susy_transform_second(lambda: f64, rho: f64, f: f64, fp: f64) -> Result<f64> {
    check_open_unit(rho)?;
    Ok(susy_step(lambda, b_second(rho), rho, f, fp))
}

/// f~(rho; 1), the image of f(.; 1).
pub fn f_tilde_one<T: Real>(rho: T) -> T {
    let q = rho * rho * 5.0 + 3.0;
    -(rho * 3.0) / (q * q)
}
