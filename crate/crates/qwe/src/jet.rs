//! Truncated Taylor arithmetic.
//!
//! A `Jet<K>` holds the first `K` Taylor coefficients of a function about a
//! point, so `c[k] = f^(k)(x0) / k!`. Every closed form in this crate is
//! written against [`Real`], which lets the same code produce values (`f64`)
//! or exact derivatives (`Jet`).

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn sq(self) -> Self {
        self * self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::cst(1.0) / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::cst(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const K: usize> {
    pub c: [f64; K],
}

impl<const K: usize> Jet<K> {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; K];
        c[0] = x;
        Jet { c }
    }

    /// The identity function expanded about `x0`.
    pub fn var(x0: f64) -> Self {
        let mut c = [0.0; K];
        c[0] = x0;
        if K > 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn from_coeffs(c: [f64; K]) -> Self {
        Jet { c }
    }

    /// k-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    /// Formal derivative; the top coefficient is lost.
    pub fn d(&self) -> Self {
        let mut c = [0.0; K];
        for k in 1..K {
            c[k - 1] = k as f64 * self.c[k];
        }
        Jet { c }
    }

    /// `self` as a series in `delta`, where `inner` has zero constant term:
    /// evaluates sum_k c_k inner^k.
    pub fn compose(&self, inner: &Jet<K>) -> Jet<K> {
        debug_assert!(inner.c[0] == 0.0);
        let mut acc = Jet::constant(self.c[K - 1]);
        for k in (0..K - 1).rev() {
            acc = acc * *inner + self.c[k];
        }
        acc
    }
}

impl<const K: usize> Add for Jet<K> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for k in 0..K {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl<const K: usize> Sub for Jet<K> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for k in 0..K {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl<const K: usize> Neg for Jet<K> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for k in 0..K {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl<const K: usize> Mul for Jet<K> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; K];
        for i in 0..K {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..K - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl<const K: usize> Div for Jet<K> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [0.0; K];
        for k in 0..K {
            let mut s = self.c[k];
            for j in 0..k {
                s -= q[j] * o.c[k - j];
            }
            q[k] = s / o.c[0];
        }
        Jet { c: q }
    }
}

impl<const K: usize> Add<f64> for Jet<K> {
    type Output = Self;
    fn add(mut self, x: f64) -> Self {
        self.c[0] += x;
        self
    }
}

impl<const K: usize> Sub<f64> for Jet<K> {
    type Output = Self;
    fn sub(mut self, x: f64) -> Self {
        self.c[0] -= x;
        self
    }
}

impl<const K: usize> Mul<f64> for Jet<K> {
    type Output = Self;
    fn mul(mut self, x: f64) -> Self {
        for k in 0..K {
            self.c[k] *= x;
        }
        self
    }
}

impl<const K: usize> Div<f64> for Jet<K> {
    type Output = Self;
    fn div(mut self, x: f64) -> Self {
        for k in 0..K {
            self.c[k] /= x;
        }
        self
    }
}

impl<const K: usize> Real for Jet<K> {
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }

    fn value(&self) -> f64 {
        self.c[0]
    }

    fn sqrt(self) -> Self {
        let a = self.c;
        let mut s = [0.0; K];
        s[0] = a[0].sqrt();
        for k in 1..K {
            let mut acc = a[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (2.0 * s[0]);
        }
        Jet { c: s }
    }

    fn exp(self) -> Self {
        let a = self.c;
        let mut e = [0.0; K];
        e[0] = a[0].exp();
        for k in 1..K {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * a[j] * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e }
    }

    fn ln(self) -> Self {
        let a = self.c;
        let mut l = [0.0; K];
        l[0] = a[0].ln();
        for k in 1..K {
            let mut acc = k as f64 * a[k];
            for j in 1..k {
                acc -= j as f64 * l[j] * a[k - j];
            }
            l[k] = acc / (k as f64 * a[0]);
        }
        Jet { c: l }
    }

    fn powf(self, p: f64) -> Self {
        let a = self.c;
        let mut b = [0.0; K];
        b[0] = a[0].powf(p);
        for k in 1..K {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (p * j as f64 - (k - j) as f64) * a[j] * b[k - j];
            }
            b[k] = acc / (k as f64 * a[0]);
        }
        Jet { c: b }
    }
}

/// Taylor coefficients of the solution of `f'' + p f' + q f = 0` about the
/// point where `p`, `q` are expanded, given `f` and `f'` there.
pub fn ode_jet<const K: usize>(p: &Jet<K>, q: &Jet<K>, f0: f64, f1: f64) -> Jet<K> {
    let mut c = [0.0; K];
    c[0] = f0;
    if K > 1 {
        c[1] = f1;
    }
    for k in 0..K.saturating_sub(2) {
        let f = Jet { c };
        let rhs = -(*p * f.d() + *q * f);
        c[k + 2] = rhs.c[k] / ((k + 2) * (k + 1)) as f64;
    }
    Jet { c }
}
