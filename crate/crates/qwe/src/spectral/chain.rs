//! Consistency of the chain of forms on numerically integrated solutions:
//! rho-form -> SUSY1 -> SUSY2 -> Heun, and the y <-> rho change of
//! variables. Local Taylor jets of the numerical solution carry the
//! derivatives through each transform.

use super::scan::{integrate, seed_at_zero};
use super::{b_first, b_second, coefficients_real, susy_step, ModeForm};
use crate::error::{Error, Result};
use crate::geometry::height;
use crate::jet::{ode_jet, Jet, Real};
use nalgebra::Vector4;
use num_complex::Complex64;
use ode_solvers::System;

const K: usize = 7;
type J = Jet<K>;

struct RealRho {
    lambda: f64,
}

impl System<f64, Vector4<f64>> for RealRho {
    fn system(&self, x: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let (p, q) = coefficients_real(ModeForm::RhoForm, self.lambda, x);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -(p * y[2] + q * y[0]);
        dy[3] = -(p * y[3] + q * y[1]);
    }
}

/// Taylor jet about `rho` of the rho-form solution regular at rho = 0, for
/// real lambda.
pub fn rho_solution_jet(lambda: f64, rho: f64) -> Result<J> {
    if !(rho > 0.05 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0.05, 1), got {rho}")));
    }
    let (f0, f0p) = seed_at_zero(Complex64::new(lambda, 0.0), 0.05, 12);
    let y = integrate(RealRho { lambda }, 0.05, rho, Vector4::new(f0.re, 0.0, f0p.re, 0.0), 1e-12)?;
    let (p, q) = coefficients_real(ModeForm::RhoForm, lambda, J::var(rho));
    Ok(ode_jet(&p, &q, y[0], y[2]))
}

fn step_jet(lambda: f64, b: J, rho: J, f: J) -> J {
    // f.d() loses the top coefficient, so each step costs one order
    susy_step(lambda, b, rho, f, f.d())
}

/// Jets of (f, f~, f^) about `rho` for the numerical solution.
pub fn chain_jets(lambda: f64, rho: f64) -> Result<[J; 3]> {
    let f = rho_solution_jet(lambda, rho)?;
    let r = J::var(rho);
    let ft = step_jet(lambda, b_first(r), r, f);
    let fh = step_jet(lambda, b_second(r), r, ft);
    Ok([f, ft, fh])
}

fn relative(terms: &[f64]) -> f64 {
    let s: f64 = terms.iter().sum();
    let m: f64 = terms.iter().map(|x| x.abs()).sum();
    if m == 0.0 {
        0.0
    } else {
        s.abs() / m
    }
}

fn residual_in(form: ModeForm, lambda: f64, x: f64, g: &J) -> f64 {
    let (p, q) = coefficients_real(form, lambda, x);
    relative(&[g.deriv(2), p * g.deriv(1), q * g.c[0]])
}

/// Relative residuals of the images in SUSY1 and SUSY2 at `rho`.
pub fn susy_chain_residuals(lambda: f64, rho: f64) -> Result<(f64, f64)> {
    let [_, ft, fh] = chain_jets(lambda, rho)?;
    Ok((
        residual_in(ModeForm::Susy1, lambda, rho, &ft),
        residual_in(ModeForm::Susy2, lambda, rho, &fh),
    ))
}

/// Relative Heun residual at x of y = f^ / (x (8 - 5x)^((lambda+2)/2)),
/// with rho = sqrt(3x / (8 - 5x)).
pub fn heun_residual(lambda: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("x must lie in (0, 1), got {x}")));
    }
    let xj = J::var(x);
    let rho_j = (xj * 3.0 / (-(xj * 5.0) + 8.0)).sqrt();
    let rho0 = rho_j.c[0];
    let [_, _, fh] = chain_jets(lambda, rho0)?;
    let fh_x = fh.compose(&(rho_j - rho0));
    let y = fh_x / (xj * (-(xj * 5.0) + 8.0).powf((lambda + 2.0) / 2.0));
    Ok(residual_in(ModeForm::Heun, lambda, x, &y))
}

/// Relative Y-form residual at y of the rho-form solution carried back by
/// f_Y(y) = ((2 + sqrt(2(1 + rho^2)))/2)^(lambda+2) f(rho), rho = -y/h(y).
pub fn y_to_rho_residual(lambda: f64, y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 0.5) {
        return Err(Error::Domain(format!("y must lie in (0, 1/2), got {y}")));
    }
    let yj = J::var(y);
    let (h, _, _) = height(yj);
    let rho_j = -yj / h;
    let rho0 = rho_j.c[0];
    let f = rho_solution_jet(lambda, rho0)?;
    let f_y = f.compose(&(rho_j - rho0));
    let factor = ((rho_j * rho_j + 1.0) * 2.0).sqrt() * 0.5 + 1.0;
    let g = f_y * factor.powf(lambda + 2.0);
    Ok(residual_in(ModeForm::YForm, lambda, y, &g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_at_generic_lambda() {
        for i in 2..=18 {
            let rho = 0.05 * i as f64;
            let (r1, r2) = susy_chain_residuals(2.5, rho).unwrap();
            assert!(r1 <= 1e-8, "susy1 at {rho}: {r1}");
            assert!(r2 <= 1e-7, "susy2 at {rho}: {r2}");
        }
    }

    #[test]
    fn heun_form() {
        for i in 1..=9 {
            let x = 0.1 * i as f64;
            let r = heun_residual(2.5, x).unwrap();
            assert!(r <= 1e-7, "x = {x}: {r}");
        }
    }

    #[test]
    fn y_form_link() {
        for i in 1..=9 {
            let y = 0.05 * i as f64;
            let r = y_to_rho_residual(2.5, y).unwrap();
            assert!(r <= 1e-8, "y = {y}: {r}");
        }
    }
}
