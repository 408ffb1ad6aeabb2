//! Closed-form solutions: the self-similar profile, the blowup solution in
//! physical and hyperboloidal form, the two linearized solutions and the
//! eigenfunctions of the unstable modes, plus residual checks against the
//! equations they solve.

use crate::error::{Error, Result};
use crate::geometry::{coeffs, height, map_eta};
use crate::jet::{Jet, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileConstants {
    pub d: u32,
    pub d0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn profile_constants(d: u32) -> Result<ProfileConstants> {
    if d < 7 {
        return Err(Error::Domain(format!("profile defined for d >= 7, got {d}")));
    }
    let df = d as f64;
    let d0 = (6.0 * (df - 1.0) * (df - 6.0)).sqrt();
    Ok(ProfileConstants {
        d,
        d0,
        c1: 4.0 / 25.0 * ((3.0 * df - 8.0) * d0 + 8.0 * df * df - 56.0 * df + 48.0),
        c2: 4.0 * d0 / 5.0,
        c3: (3.0 * df - 18.0 + d0) / 15.0,
    })
}

impl ProfileConstants {
    /// U(rho) = (c1 - c2 rho^2)/(c3 + rho^2)^2.
    pub fn profile(&self, rho: f64) -> f64 {
        let q = self.c3 + rho * rho;
        (self.c1 - self.c2 * rho * rho) / (q * q)
    }
}

const C1: f64 = 504.0 / 25.0;
const C2: f64 = 24.0 / 5.0;
const C3: f64 = 3.0 / 5.0;

/// u*_T with `tau = T - t`.
pub fn u_star_tau<T: Real>(tau: T, r: T) -> T {
    let q = r * r + tau * tau * C3;
    (tau * tau * C1 - r * r * C2) / (q * q)
}

fn check_not_tip(t_blow: f64, t: f64, r: f64) -> Result<()> {
    if r < 0.0 {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    if r == 0.0 && t == t_blow {
        return Err(Error::Singular(format!("blowup point ({t_blow}, 0)")));
    }
    Ok(())
}

/// The d = 7 blowup solution u*_T(t, r).
pub fn u_star(t_blow: f64, t: f64, r: f64) -> Result<f64> {
    check_not_tip(t_blow, t, r)?;
    Ok(u_star_tau(t_blow - t, r))
}

/// The blowup solution in hyperboloidal coordinates; independent of T.
pub fn u_star_hyp<T: Real>(s: T, y: T) -> T {
    let (h, _, _) = height(y);
    let q = h * h * 3.0 + y * y * 5.0;
    (s * 2.0).exp() * (h * h * 21.0 - y * y * 5.0) * 24.0 / (q * q)
}

pub fn ode_blowup(t_blow: f64, t: f64) -> Result<f64> {
    if t == t_blow {
        return Err(Error::Singular("ODE blowup solution at t = T".into()));
    }
    Ok(6.0 / ((t_blow - t) * (t_blow - t)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    One,
    Four,
}

impl Mode {
    pub fn from_j(j: u32) -> Result<Mode> {
        match j {
            1 => Ok(Mode::One),
            4 => Ok(Mode::Four),
            _ => Err(Error::Domain(format!("mode index must be 1 or 4, got {j}"))),
        }
    }

    pub fn j(self) -> u32 {
        match self {
            Mode::One => 1,
            Mode::Four => 4,
        }
    }

    pub fn lambda(self) -> f64 {
        self.j() as f64
    }
}

/// Linearized solutions F*_1, F*_4 with `tau = T - t`.
pub fn f_mode_tau<T: Real>(k: Mode, tau: T, r: T) -> T {
    let q = r * r * 5.0 + tau * tau * 3.0;
    let q3 = q * q * q;
    match k {
        Mode::One => tau * (tau * tau * 7.0 - r * r * 15.0) / q3,
        Mode::Four => q3.recip(),
    }
}

#[allow(non_snake_case)]
pub fn F_mode(k: Mode, t_blow: f64, t: f64, r: f64) -> Result<f64> {
    check_not_tip(t_blow, t, r)?;
    Ok(f_mode_tau(k, t_blow - t, r))
}

/// First component of the eigenfunction f*_j in hyperboloidal coordinates.
pub fn f_star<T: Real>(k: Mode, y: T) -> T {
    let (h, _, _) = height(y);
    let q = y * y * 5.0 + h * h * 3.0;
    let q3 = q * q * q;
    match k {
        Mode::One => (h * h * 7.0 - y * y * 15.0) * h / q3,
        Mode::Four => q3.recip(),
    }
}

/// Eigenpair (j, f*_j) with f2 = (j + 2) f1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModePair {
    pub mode: Mode,
}

impl ModePair {
    pub fn j(&self) -> u32 {
        self.mode.j()
    }
    pub fn f1(&self, y: f64) -> f64 {
        f_star(self.mode, y)
    }
    pub fn f2(&self, y: f64) -> f64 {
        (self.mode.lambda() + 2.0) * f_star(self.mode, y)
    }
}

pub fn eigenpair(j: u32) -> Result<ModePair> {
    Ok(ModePair { mode: Mode::from_j(j)? })
}

/// Solutions of the rho-form mode equation at lambda = 1, 4.
pub fn rho_mode<T: Real>(k: Mode, rho: T) -> T {
    let q = rho * rho * 5.0 + 3.0;
    let q3 = q * q * q;
    match k {
        Mode::One => (-(rho * rho * 15.0) + 7.0) / q3,
        Mode::Four => q3.recip(),
    }
}

pub fn eval_rho_mode(k: Mode, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [0, 1], got {rho}")));
    }
    Ok(rho_mode(k, rho))
}

type J3 = Jet<3>;

/// |sum| / sum |terms|, the residual measure used by all checks below.
fn relative(terms: &[f64]) -> f64 {
    let s: f64 = terms.iter().sum();
    let m: f64 = terms.iter().map(|x| x.abs()).sum();
    if m == 0.0 {
        0.0
    } else {
        s.abs() / m
    }
}

/// Relative residual of u*_T in (d_t^2 - d_r^2 - 6/r d_r) u = u^2.
pub fn wave_residual(t_blow: f64, t: f64, r: f64) -> f64 {
    let tau = t_blow - t;
    let ut = u_star_tau(J3::var(tau), J3::constant(r));
    let ur = u_star_tau(J3::constant(tau), J3::var(r));
    let u = ur.c[0];
    relative(&[ut.deriv(2), -ur.deriv(2), -6.0 / r * ur.deriv(1), -u * u])
}

/// Relative residual of F*_k in (d_t^2 - d_r^2 - 6/r d_r - 2 u*_T) F = 0.
pub fn linearized_residual(k: Mode, t_blow: f64, t: f64, r: f64) -> f64 {
    let tau = t_blow - t;
    let ft = f_mode_tau(k, J3::var(tau), J3::constant(r));
    let fr = f_mode_tau(k, J3::constant(tau), J3::var(r));
    let u = u_star_tau(tau, r);
    relative(&[ft.deriv(2), -fr.deriv(2), -6.0 / r * fr.deriv(1), -2.0 * u * fr.c[0]])
}

/// Relative residual of f*_{j,1} in the undivided mode equation
/// c12 f'' + (c11 + (j+2) c21) f' + ((j+2)(c20 - j - 2) + V) f = 0.
pub fn mode_residual(k: Mode, y: f64) -> f64 {
    let f = f_star(k, J3::var(y));
    let c = coeffs(y, 7);
    let l2 = k.lambda() + 2.0;
    relative(&[
        c.c12 * f.deriv(2),
        (c.c11 + l2 * c.c21) * f.deriv(1),
        (l2 * (c.c20 - l2) + c.v) * f.c[0],
    ])
}

/// Relative residual of f(.; j) in the rho-form mode equation.
pub fn rho_residual(k: Mode, rho: f64) -> f64 {
    let f = rho_mode(k, J3::var(rho));
    let l = k.lambda();
    let q = 5.0 * rho * rho + 3.0;
    let v0 = 48.0 * (21.0 - 5.0 * rho * rho) / (q * q);
    relative(&[
        (1.0 - rho * rho) * f.deriv(2),
        (6.0 / rho - 2.0 * (l + 3.0) * rho) * f.deriv(1),
        -((l + 2.0) * (l + 3.0) - v0) * f.c[0],
    ])
}

/// Relative error of d_T u*_T = -432 F*_1, with d_T taken exactly.
pub fn time_translation_error(t_blow: f64, t: f64, r: f64) -> f64 {
    let tau = t_blow - t;
    let du = u_star_tau(J3::var(tau), J3::constant(r)).deriv(1);
    let rhs = -432.0 * f_mode_tau(Mode::One, tau, r);
    (du - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
}

/// Relative error of the scaling law mu^{-2} u*_T(t/mu, r/mu) = u*_{mu T}(t, r).
pub fn scaling_error(t_blow: f64, mu: f64, t: f64, r: f64) -> f64 {
    let lhs = u_star_tau(t_blow - t / mu, r / mu) / (mu * mu);
    let rhs = u_star_tau(mu * t_blow - t, r);
    (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
}

/// Relative error of e^{6s} f*_{4,1}(y) = F*_4(eta_1(s, y)).
pub fn hyperboloidal_link_error(s: f64, y: f64) -> f64 {
    let (t, r) = map_eta(1.0, s, y);
    let lhs = (6.0 * s).exp() * f_star(Mode::Four, y);
    let rhs = f_mode_tau(Mode::Four, 1.0 - t, r);
    (lhs - rhs).abs() / rhs.abs()
}

/// Relative error of u*_hyp(s, y) = u*_T(eta_T(s, y)).
pub fn u_star_hyp_error(t_blow: f64, s: f64, y: f64) -> f64 {
    let (t, r) = map_eta(t_blow, s, y);
    let lhs = u_star_hyp(s, y);
    let rhs = u_star_tau(t_blow - t, r);
    (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub samples: usize,
    pub max_relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub seed: u64,
    pub identities: Vec<IdentityReport>,
}

impl ResidualReport {
    pub fn max_residual(&self, identity: &str) -> Option<f64> {
        self.identities
            .iter()
            .find(|r| r.identity == identity)
            .map(|r| r.max_relative_residual)
    }
}

/// Random point of Omega_{1,2} with r in [0.01, 3], at distance >= 0.05
/// from the blowup point.
pub fn sample_omega(rng: &mut impl Rng) -> (f64, f64) {
    let slope = height(2.0f64).0 / 2.0;
    loop {
        let r: f64 = rng.gen_range(0.01..3.0);
        let t: f64 = rng.gen_range(0.0..(1.0 + slope * r));
        if ((t - 1.0).powi(2) + r * r).sqrt() >= 0.05 {
            return (t, r);
        }
    }
}

fn report(name: &str, vals: impl Iterator<Item = f64>) -> IdentityReport {
    let mut n = 0;
    let mut m = 0.0f64;
    for v in vals {
        n += 1;
        m = m.max(v);
    }
    IdentityReport {
        identity: name.to_string(),
        samples: n,
        max_relative_residual: m,
    }
}

/// Residual report over all closed-form identities.
pub fn verify(samples: usize, seed: u64) -> ResidualReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..samples).map(|_| sample_omega(&mut rng)).collect();
    let ys: Vec<f64> = (0..samples)
        .map(|i| {
            if i % 2 == 0 {
                rng.gen_range(0.01..0.49)
            } else {
                rng.gen_range(0.51..1.5)
            }
        })
        .collect();
    let rhos: Vec<f64> = (0..samples).map(|_| rng.gen_range(0.05..0.95)).collect();
    let sy: Vec<(f64, f64)> = (0..samples)
        .map(|_| (rng.gen_range(-1.0..2.0), rng.gen_range(0.0..2.0)))
        .collect();
    let mut out = vec![report(
        "wave_equation_u_star",
        pts.iter().map(|&(t, r)| wave_residual(1.0, t, r)),
    )];
    for k in [Mode::One, Mode::Four] {
        let j = k.j();
        out.push(report(
            &format!("linearized_F{j}"),
            pts.iter().map(|&(t, r)| linearized_residual(k, 1.0, t, r)),
        ));
    }
    for k in [Mode::One, Mode::Four] {
        let j = k.j();
        out.push(report(&format!("mode_ode_f{j}"), ys.iter().map(|&y| mode_residual(k, y))));
    }
    for k in [Mode::One, Mode::Four] {
        let j = k.j();
        out.push(report(&format!("rho_ode_f{j}"), rhos.iter().map(|&r| rho_residual(k, r))));
    }
    out.push(report(
        "time_translation_dT_u_star",
        pts.iter().map(|&(t, r)| time_translation_error(1.0, t, r)),
    ));
    out.push(report(
        "hyperboloidal_u_star",
        sy.iter().map(|&(s, y)| u_star_hyp_error(1.0, s, y)),
    ));
    out.push(report(
        "hyperboloidal_F4",
        sy.iter().map(|&(s, y)| hyperboloidal_link_error(s, y)),
    ));
    ResidualReport { seed, identities: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn constants_d7_and_d9() {
        let p = profile_constants(7).unwrap();
        assert!((p.d0 - 6.0).abs() < 1e-15);
        assert!((p.c1 - 504.0 / 25.0).abs() < 1e-13);
        assert!((p.c2 - 24.0 / 5.0).abs() < 1e-14);
        assert!((p.c3 - 3.0 / 5.0).abs() < 1e-15);
        assert!((p.profile(0.0) - 56.0).abs() < 1e-12);
        for &rho in &[0.1, 0.7, 2.0] {
            let q = 3.0 + 5.0 * rho * rho;
            let u = 24.0 * (21.0 - 5.0 * rho * rho) / (q * q);
            assert!((p.profile(rho) - u).abs() < 1e-12 * u.abs());
        }
        assert!((profile_constants(9).unwrap().d0 - 12.0).abs() < 1e-14);
        assert!(profile_constants(6).is_err());
    }

    #[test]
    fn u_star_examples() {
        assert!((u_star(1.0, 0.0, 0.0).unwrap() - 56.0).abs() < 1e-12);
        assert!((u_star(1.0, 1.0, 1.0).unwrap() + 24.0 / 5.0).abs() < 1e-14);
        assert!(u_star(1.0, 0.0, (21.0f64 / 5.0).sqrt()).unwrap().abs() < 1e-14);
        assert!(matches!(u_star(1.0, 1.0, 0.0), Err(Error::Singular(_))));
        // on the axis u*_hyp(s, 0) = 56 e^{2s} / h(0)^2
        let h0sq = (SQRT_2 - 2.0).powi(2);
        assert!((u_star_hyp(0.0, 0.0) - 56.0 / h0sq).abs() < 1e-12);
        let ratio = u_star_hyp(1.0, 0.0) / u_star_hyp(0.0, 0.0);
        assert!((ratio - 1f64.exp().powi(2)).abs() < 1e-12);
        let (t, _) = map_eta(1.0, 0.0, 0.0);
        assert!((u_star_hyp(0.0, 0.0) - u_star(1.0, t, 0.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ode_blowup_examples() {
        assert_eq!(ode_blowup(1.0, 0.0).unwrap(), 6.0);
        assert_eq!(ode_blowup(2.0, 1.0).unwrap(), 6.0);
        assert!(ode_blowup(1.0, 1.0).is_err());
        let tau: f64 = 0.37;
        assert!((36.0 / tau.powi(4) - (6.0 / (tau * tau)).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn mode_examples() {
        assert!((F_mode(Mode::One, 1.0, 0.0, 0.0).unwrap() - 7.0 / 27.0).abs() < 1e-15);
        assert!((F_mode(Mode::Four, 1.0, 0.0, 0.0).unwrap() - 1.0 / 27.0).abs() < 1e-15);
        let e4 = eigenpair(4).unwrap();
        assert!((e4.f1(0.0) - (18.0 - 12.0 * SQRT_2).powi(-3)).abs() < 1e-12);
        assert!((e4.f1(0.0) - 0.916643).abs() < 1e-6);
        let e1 = eigenpair(1).unwrap();
        for &y in &[0.0, 0.3, 0.9] {
            assert!((e1.f2(y) - 3.0 * e1.f1(y)).abs() < 1e-15);
        }
        assert!(eigenpair(2).is_err());
        assert!((rho_mode(Mode::One, 0.0) - 7.0 / 27.0).abs() < 1e-15);
        assert!((rho_mode(Mode::Four, 0.0) - 1.0 / 27.0).abs() < 1e-15);
        assert!(rho_mode(Mode::One, (7.0f64 / 15.0).sqrt()).abs() < 1e-16);
        assert!(eval_rho_mode(Mode::One, 1.2).is_err());
    }

    #[test]
    fn rho_mode_residual_grid() {
        for k in [Mode::One, Mode::Four] {
            for i in 1..10 {
                assert!(rho_residual(k, i as f64 / 10.0) < 1e-10);
            }
        }
    }

    #[test]
    fn wrong_lambda_is_not_a_solution() {
        // the residual measure must be able to fail
        let f = rho_mode(Mode::Four, J3::var(0.4));
        let (l, rho) = (3.0, 0.4);
        let q: f64 = 5.0 * rho * rho + 3.0;
        let v0 = 48.0 * (21.0 - 5.0 * rho * rho) / (q * q);
        let r = relative(&[
            (1.0 - rho * rho) * f.deriv(2),
            (6.0 / rho - 2.0 * (l + 3.0) * rho) * f.deriv(1),
            -((l + 2.0) * (l + 3.0) - v0) * f.c[0],
        ]);
        assert!(r > 1e-3);
    }

    #[test]
    fn scaling_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (t, r) = sample_omega(&mut rng);
            assert!(scaling_error(1.0, 1.7, t, r) < 1e-12);
        }
    }
}
