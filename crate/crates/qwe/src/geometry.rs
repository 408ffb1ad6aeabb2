//! Hyperboloidal similarity coordinates: the height function, the map
//! `eta_T`, the coefficients of the transformed wave operator and the
//! spacetime regions used throughout.

use crate::error::{Error, Result};
use crate::jet::Real;
use serde::Serialize;
use std::f64::consts::SQRT_2;

/// h(0) = sqrt(2) - 2.
pub const H0: f64 = SQRT_2 - 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeightEval {
    pub y: f64,
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
}

/// (h, h', h'') at `y`, for any scalar type.
pub fn height<T: Real>(y: T) -> (T, T, T) {
    let q = y * y + 2.0;
    let s = q.sqrt();
    (s - 2.0, y / s, (s * q).recip() * 2.0)
}

pub fn eval_height(y: f64) -> Result<HeightEval> {
    if !y.is_finite() || y < 0.0 {
        return Err(Error::Domain(format!("height needs finite y >= 0, got {y}")));
    }
    let (h, h1, h2) = height(y);
    Ok(HeightEval { y, h, h1, h2 })
}

/// Coefficients of the wave operator in hyperboloidal similarity coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Coeffs<T> {
    pub c11: T,
    pub c12: T,
    pub c20: T,
    pub c21: T,
    /// s-independent factor of g^00 (up to the sign and e^{2s}).
    pub g00: T,
    /// Potential from linearizing about the blowup profile (d = 7).
    pub v: T,
    /// Weight of the quadratic nonlinearity.
    pub w: T,
}

/// Coefficients at `y > 0` in dimension `d`. The potential `v` is the d = 7
/// expression regardless of `d`.
pub fn coeffs<T: Real>(y: T, d: u32) -> Coeffs<T> {
    let q = y * y + 2.0;
    let s = q.sqrt();
    let h = s - 2.0;
    let h1 = y / s;
    let h2 = (s * q).recip() * 2.0;
    // 1 - h'^2 and y h' - h in cancellation-free form
    let om = q.recip() * 2.0;
    let g = -(s.recip() * 2.0) + 2.0;
    let dm1 = (d - 1) as f64;
    let y2mh2 = (y - h) * (y + h);
    let c12 = -y2mh2 / om;
    let c21 = (h * h1 - y) * 2.0 / om;
    let c11 = -(g * h / (om * y)) * dm1 + y2mh2 / om * (y * h2 / g) + c21;
    let c20 = -(g * h1 / (om * y)) * dm1 + y2mh2 / om * (h2 / g) - 1.0;
    let p = y * y * 5.0 + h * h * 3.0;
    let w = g * g / om;
    let v = (h * h * 21.0 - y * y * 5.0) * 48.0 / (p * p) * w;
    Coeffs {
        c11,
        c12,
        c20,
        c21,
        g00: om / (g * g),
        v,
        w,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub y: f64,
    pub d: u32,
    pub c11: f64,
    pub c12: f64,
    pub c20: f64,
    pub c21: f64,
    pub g00_factor: f64,
    pub v: Option<f64>,
    pub w: f64,
}

pub fn eval_coefficients(y: f64, d: u32) -> Result<CoefficientSet> {
    if !y.is_finite() || y <= 0.0 {
        return Err(Error::Domain(format!(
            "coefficients need finite y > 0, got {y}; use the origin limits at y = 0"
        )));
    }
    if d < 3 {
        return Err(Error::Domain(format!("dimension must be >= 3, got {d}")));
    }
    let c = coeffs(y, d);
    Ok(CoefficientSet {
        y,
        d,
        c11: c.c11,
        c12: c.c12,
        c20: c.c20,
        c21: c.c21,
        g00_factor: c.g00,
        v: (d == 7).then_some(c.v),
        w: c.w,
    })
}

/// Limits of the coefficients as y -> 0+. `c11` has a simple pole there;
/// `c11_pole` is its residue and `c11_regular` its finite part (zero, since
/// c11 is odd in y).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OriginLimits {
    pub d: u32,
    pub c11_pole: f64,
    pub c11_regular: f64,
    pub c12: f64,
    pub c20: f64,
    pub c21: f64,
    pub g00_factor: f64,
    pub v: Option<f64>,
    pub w: f64,
}

pub fn eval_coefficients_origin(d: u32) -> Result<OriginLimits> {
    if d < 3 {
        return Err(Error::Domain(format!("dimension must be >= 3, got {d}")));
    }
    let dm1 = (d - 1) as f64;
    // g(0) = -h(0) = 2 - sqrt(2), h'(0) = 0, h''(0) = 1/sqrt(2)
    let g0 = -H0;
    Ok(OriginLimits {
        d,
        c11_pole: dm1 * g0 * g0,
        c11_regular: 0.0,
        c12: H0 * H0,
        c20: -1.0 - d as f64 * (SQRT_2 - 1.0),
        c21: 0.0,
        g00_factor: 1.0 / (g0 * g0),
        v: (d == 7).then_some(112.0),
        w: g0 * g0,
    })
}

/// eta_T(s, y) = (T + e^{-s} h(y), e^{-s} y).
pub fn map_eta(t_blow: f64, s: f64, y: f64) -> (f64, f64) {
    let e = (-s).exp();
    let (h, _, _) = height(y);
    (t_blow + e * h, e * y)
}

/// Inverse of `map_eta`: with k = (t - T)/r, y = 2/(sqrt(2 + 2k^2) - 2k)
/// and e^{-s} = r/y. Valid below the forward light cone of (T, 0).
pub fn map_eta_inverse(t_blow: f64, t: f64, r: f64) -> Result<(f64, f64)> {
    if r < 0.0 || !r.is_finite() || !t.is_finite() {
        return Err(Error::Domain(format!("inverse map needs r >= 0, got ({t}, {r})")));
    }
    if r == 0.0 {
        if t >= t_blow {
            return Err(Error::Domain("axis point at or after the blowup time".into()));
        }
        // e^{-s} h(0) = t - T
        return Ok((-((t - t_blow) / H0).ln(), 0.0));
    }
    let k = (t - t_blow) / r;
    let den = (2.0 + 2.0 * k * k).sqrt() - 2.0 * k;
    if den <= 0.0 {
        return Err(Error::Domain("point outside the foliated region".into()));
    }
    let y = 2.0 / den;
    Ok(((y / r).ln(), y))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RegionVariant {
    OmegaTR,
    LambdaT0,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionSpec {
    pub t_blow: f64,
    pub r_outer: f64,
    pub variant: RegionVariant,
    pub t0: f64,
}

impl RegionSpec {
    pub fn omega(t_blow: f64, r_outer: f64) -> Self {
        RegionSpec {
            t_blow,
            r_outer,
            variant: RegionVariant::OmegaTR,
            t0: 0.0,
        }
    }

    pub fn lambda(t0: f64) -> Self {
        RegionSpec {
            t_blow: 1.0,
            r_outer: 0.5,
            variant: RegionVariant::LambdaT0,
            t0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.variant {
            RegionVariant::OmegaTR => {
                if !(self.t_blow > 0.0) || !(self.r_outer >= 0.5) {
                    return Err(Error::Config(format!(
                        "Omega region needs T > 0 and R >= 1/2, got T = {}, R = {}",
                        self.t_blow, self.r_outer
                    )));
                }
            }
            RegionVariant::LambdaT0 => {
                if !(self.t0 > 0.0) || !self.t0.is_finite() {
                    return Err(Error::Config(format!("Lambda region needs t0 > 0, got {}", self.t0)));
                }
            }
        }
        Ok(())
    }
}

/// Membership of (t, r). Omega_{T,R} is open on its upper boundary; the
/// Lambda region is closed.
pub fn region_contains(spec: &RegionSpec, t: f64, r: f64) -> Result<bool> {
    spec.validate()?;
    if r < 0.0 {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    Ok(match spec.variant {
        RegionVariant::OmegaTR => {
            let (h, _, _) = height(spec.r_outer);
            0.0 <= t && t < spec.t_blow + h / spec.r_outer * r
        }
        RegionVariant::LambdaT0 => {
            let r0 = spec.t0 / 4.0;
            t.abs() <= spec.t0 || (-r + r0 <= t && t <= r - r0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn height_examples() {
        let e0 = eval_height(0.0).unwrap();
        assert!(rel(e0.h, SQRT_2 - 2.0) < 1e-15);
        assert!((e0.h + 0.585786).abs() < 1e-6);
        assert_eq!(eval_height(0.5).unwrap().h, -0.5);
        let e1 = eval_height(1.0).unwrap();
        assert!(rel(e1.h, 3f64.sqrt() - 2.0) < 1e-15);
        assert!(eval_height(-1.0).is_err());
        assert!(eval_height(f64::NAN).is_err());
    }

    #[test]
    fn coefficient_examples() {
        assert!(eval_coefficients(0.5, 7).unwrap().c12.abs() < 1e-16);
        let small = eval_coefficients(1e-6, 7).unwrap();
        assert!(rel(small.v.unwrap(), 112.0) < 1e-9);
        assert!(rel(small.w, 6.0 - 4.0 * SQRT_2) < 1e-9);
        assert!(eval_coefficients(0.0, 7).is_err());
        assert!(eval_coefficients(0.3, 2).is_err());
        assert!(eval_coefficients(0.3, 5).unwrap().v.is_none());
    }

    #[test]
    fn c12_closed_form() {
        for &y in &[0.01, 0.2, 0.49, 0.51, 1.0, 3.0] {
            let (h, _, _) = height(y);
            let c = eval_coefficients(y, 7).unwrap();
            assert!(rel(c.c12, (h * h - y * y) * (2.0 + y * y) / 2.0) < 1e-12);
        }
    }

    #[test]
    fn origin_limits_match_small_y() {
        for d in [3u32, 5, 7, 9] {
            let o = eval_coefficients_origin(d).unwrap();
            let y = 1e-5;
            let c = eval_coefficients(y, d).unwrap();
            assert!(rel(c.c11 * y, o.c11_pole) < 1e-8, "d={d}");
            assert!(rel(c.c12, o.c12) < 1e-8);
            assert!(rel(c.c20, o.c20) < 1e-8);
            assert!(c.c21.abs() < 1e-4);
            assert!(rel(c.w, o.w) < 1e-8);
            assert!(rel(c.g00_factor, o.g00_factor) < 1e-8);
        }
        let o7 = eval_coefficients_origin(7).unwrap();
        assert!((o7.c11_pole - 2.0589).abs() < 1e-4);
        assert!(rel(o7.c11_pole, 6.0 * (2.0 - SQRT_2).powi(2)) < 1e-15);
        assert_eq!(o7.v, Some(112.0));
    }

    #[test]
    fn map_examples() {
        let (t, r) = map_eta(1.0, 0.0, 0.0);
        assert!(rel(t, SQRT_2 - 1.0) < 1e-15 && r == 0.0);
        let (t, r) = map_eta(1.0, 0.0, 0.5);
        assert_eq!((t, r), (0.5, 0.5));
        let (t, r) = map_eta(1.0, 60.0, 0.3);
        assert!((t - 1.0).abs() < 1e-25 && r < 1e-25);
    }

    #[test]
    fn inverse_map_round_trip() {
        for &(s, y) in &[(0.0, 0.0), (0.3, 0.2), (-1.0, 0.5), (2.0, 1.7), (0.5, 4.0)] {
            let (t, r) = map_eta(1.0, s, y);
            let (s2, y2) = map_eta_inverse(1.0, t, r).unwrap();
            assert!((s2 - s).abs() < 1e-12 && (y2 - y).abs() < 1e-12 * (1.0 + y));
        }
    }

    #[test]
    fn region_examples() {
        let om = RegionSpec::omega(1.0, 0.5);
        assert!(region_contains(&om, 0.0, 0.0).unwrap());
        assert!(!region_contains(&om, 1.0, 0.0).unwrap());
        let la = RegionSpec::lambda(0.4);
        assert!(!region_contains(&la, 0.5, 0.0).unwrap());
        assert!(region_contains(&la, 0.4, 0.0).unwrap());
        assert!(region_contains(&la, 0.5, 0.7).unwrap());
        assert!(region_contains(&RegionSpec::omega(1.0, 0.25), 0.0, 0.0).is_err());
        assert!(region_contains(&RegionSpec::omega(0.0, 1.0), 0.0, 0.0).is_err());
    }
}
