//! The three-term recurrence of the Heun-form series, its ratio form and the
//! quasisolution comparison.

use crate::error::{Error, Result};
use crate::polyalg::{q, q_to_f64, Q};
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};
use serde::Serialize;
use std::ops::{Add, Div, Mul, Sub};

pub type CQ = Complex<Q>;

/// Scalars the recurrence can run in: exact complex rationals or binary64.
pub trait Field:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + PartialEq
{
    fn ratio(n: i64, d: i64) -> Self;
    fn to_c64(&self) -> Complex64;
    fn is_zero_value(&self) -> bool;
}

impl Field for CQ {
    fn ratio(n: i64, d: i64) -> Self {
        Complex::new(Q::new(n.into(), d.into()), Q::zero())
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(q_to_f64(&self.re), q_to_f64(&self.im))
    }
    fn is_zero_value(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl Field for Complex64 {
    fn ratio(n: i64, d: i64) -> Self {
        Complex64::new(n as f64 / d as f64, 0.0)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn is_zero_value(&self) -> bool {
        *self == Complex64::zero()
    }
}

pub fn cq(re: Q, im: Q) -> CQ {
    Complex::new(re, im)
}

pub fn cq_int(re: i64, im: i64) -> CQ {
    Complex::new(q(re), q(im))
}

/// Exact complex rational nearest to a binary64 complex (exact conversion).
pub fn cq_from_c64(z: Complex64) -> CQ {
    Complex::new(crate::polyalg::q_from_f64(z.re), crate::polyalg::q_from_f64(z.im))
}

fn int<T: Field>(n: i64) -> T {
    T::ratio(n, 1)
}

/// (A_n, B_n) with a_{n+2} = A_n a_{n+1} + B_n a_n.
pub fn heun_recurrence_coeffs<T: Field>(n: i64, lam: &T) -> (T, T) {
    assert!(n >= -1, "recurrence index starts at -1");
    let l = lam.clone();
    let nn = int::<T>(n);
    let den = int::<T>(16 * (n + 2) * (2 * n + 13));
    let a = l.clone() * l.clone() * int(3) + l.clone() * int(114) + int(52 * n * n) + l.clone() * int(32) * nn.clone()
        + int(348 * n + 400);
    let b = int::<T>(-5) * (l.clone() + int(2 * n + 2)) * (l + int(2 * n + 8));
    (a / den.clone(), b / den)
}

/// The explicit quasisolution, defined for n >= 1.
pub fn tilde_r<T: Field>(n: i64, lam: &T) -> T {
    assert!(n >= 1, "quasisolution defined for n >= 1");
    let l = lam.clone();
    let c2 = T::ratio(3, 16 * (n + 1) * (2 * n + 11)) + T::ratio(9, 4000 * n * n);
    let c1 = T::ratio(16 * n + 41, 8 * (n + 1) * (2 * n + 11)) - T::ratio(1, 13 * n);
    let c0 = T::ratio(4 * n + 19, 4 * n + 22);
    l.clone() * l.clone() * c2 + l * c1 + c0
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiTriple<T> {
    pub n: i64,
    pub r: T,
    pub tilde_r: Option<T>,
    pub delta: Option<T>,
    pub epsilon: Option<T>,
    pub c: Option<T>,
}

/// Ratios r_n = a_{n+1}/a_n for 0 <= n <= n_max with a_{-1} = 0, a_0 = 1,
/// together with the quasisolution data where defined.
pub fn run_recurrence<T: Field>(lam: &T, n_max: i64) -> Result<Vec<QuasiTriple<T>>> {
    if n_max < 1 {
        return Err(Error::Config(format!("n_max must be >= 1, got {n_max}")));
    }
    let mut rs: Vec<T> = Vec::with_capacity(n_max as usize + 1);
    // r_0 = A_{-1}
    rs.push(heun_recurrence_coeffs(-1, lam).0);
    for n in 0..n_max {
        let r = &rs[n as usize];
        if r.is_zero_value() {
            return Err(Error::Internal(format!("a_{} vanished at lambda = {:?}", n + 1, lam.to_c64())));
        }
        let (a, b) = heun_recurrence_coeffs(n, lam);
        rs.push(a + b / r.clone());
    }
    let mut out = Vec::with_capacity(rs.len());
    for (n, r) in rs.into_iter().enumerate() {
        let n = n as i64;
        let mut t = QuasiTriple {
            n,
            r,
            tilde_r: None,
            delta: None,
            epsilon: None,
            c: None,
        };
        if n >= 1 {
            let tr = tilde_r(n, lam);
            if !tr.is_zero_value() {
                let tr1 = tilde_r(n + 1, lam);
                let (a, b) = heun_recurrence_coeffs(n, lam);
                let den = tr.clone() * tr1;
                t.delta = Some(t.r.clone() / tr.clone() - int(1));
                if !den.is_zero_value() {
                    t.epsilon = Some((a * tr.clone() + b.clone()) / den.clone() - int(1));
                    t.c = Some(b / den);
                }
            }
            t.tilde_r = Some(tr);
        }
        out.push(t);
    }
    Ok(out)
}

/// Coefficients a_0..=a_n_max computed directly from the recurrence.
pub fn series_coefficients<T: Field>(lam: &T, n_max: i64) -> Vec<T> {
    let mut a = vec![int::<T>(1)];
    let mut prev = int::<T>(0);
    for n in -1..n_max - 1 {
        let (an, bn) = heun_recurrence_coeffs(n, lam);
        let next = an * a.last().unwrap().clone() + bn * prev;
        prev = a.last().unwrap().clone();
        a.push(next);
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaTrack {
    pub lambda: [f64; 2],
    pub n_max: i64,
    pub exact: bool,
    /// |delta_n| for 5 <= n <= n_max.
    pub delta_abs: Vec<f64>,
    pub max_delta_abs: f64,
    pub r_last: [f64; 2],
}

fn finish_track(lam: Complex64, n_max: i64, exact: bool, deltas: Vec<f64>, r_last: Complex64) -> DeltaTrack {
    let m = deltas.iter().cloned().fold(0.0, f64::max);
    DeltaTrack {
        lambda: [lam.re, lam.im],
        n_max,
        exact,
        delta_abs: deltas,
        max_delta_abs: m,
        r_last: [r_last.re, r_last.im],
    }
}

/// max |delta_n| over 5 <= n <= n_max, in exact arithmetic.
pub fn track_delta_exact(lam: &CQ, n_max: i64) -> Result<DeltaTrack> {
    let seq = run_recurrence(lam, n_max)?;
    let deltas: Vec<f64> = seq
        .iter()
        .filter(|t| t.n >= 5)
        .map(|t| cq_abs(t.delta.as_ref().expect("tilde_r nonzero")))
        .collect();
    Ok(finish_track(lam.to_c64(), n_max, true, deltas, seq.last().unwrap().r.to_c64()))
}

/// The binary64 variant; rational inputs are routed to the exact path by
/// `track_delta`.
pub fn track_delta_f64(lam: Complex64, n_max: i64) -> Result<DeltaTrack> {
    let seq = run_recurrence(&lam, n_max)?;
    let deltas: Vec<f64> = seq.iter().filter(|t| t.n >= 5).map(|t| t.delta.unwrap().norm()).collect();
    Ok(finish_track(lam, n_max, false, deltas, seq.last().unwrap().r))
}

/// Exact whenever both parts of lambda are binary64 values (always rational),
/// which covers every input from the command line.
pub fn track_delta(lam: Complex64, n_max: i64) -> Result<DeltaTrack> {
    if lam.re.is_finite() && lam.im.is_finite() {
        track_delta_exact(&cq_from_c64(lam), n_max)
    } else {
        Err(Error::Domain("lambda must be finite".into()))
    }
}

pub fn cq_abs(z: &CQ) -> f64 {
    let s = &z.re * &z.re + &z.im * &z.im;
    q_to_f64(&s).sqrt()
}

/// Ratio a_{n+1}/a_n of a_{n+2} = (13/8) a_{n+1} - (5/8) a_n after `steps`
/// forward steps from ratio `r0`.
pub fn constant_ratio_forward(r0: f64, steps: usize) -> f64 {
    let mut r = r0;
    for _ in 0..steps {
        r = 13.0 / 8.0 - 5.0 / (8.0 * r);
    }
    r
}

/// Ratio of the minimal solution of the constant-coefficient recurrence,
/// obtained by running it backwards from arbitrary data: since
/// a_n = (13/5) a_{n+1} - (8/5) a_{n+2}, the backward ratio settles on the
/// subdominant root.
pub fn constant_ratio_backward(steps: usize) -> f64 {
    let (mut hi, mut lo) = (1.0f64, 0.3f64);
    for _ in 0..steps {
        let next = 13.0 / 5.0 * lo - 8.0 / 5.0 * hi;
        hi = lo;
        lo = next;
        let s = lo.abs().max(hi.abs());
        hi /= s;
        lo /= s;
    }
    hi / lo
}

impl QuasiTriple<CQ> {
    pub fn to_c64(&self) -> QuasiTriple<Complex64> {
        QuasiTriple {
            n: self.n,
            r: self.r.to_c64(),
            tilde_r: self.tilde_r.as_ref().map(|x| x.to_c64()),
            delta: self.delta.as_ref().map(|x| x.to_c64()),
            epsilon: self.epsilon.as_ref().map(|x| x.to_c64()),
            c: self.c.as_ref().map(|x| x.to_c64()),
        }
    }
}

pub fn one_cq() -> CQ {
    Complex::new(Q::one(), Q::zero())
}
