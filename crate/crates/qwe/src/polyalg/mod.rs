//! Exact polynomial arithmetic over the rationals.
//!
//! Univariate and bivariate dense polynomials with `BigRational`
//! coefficients, the imaginary-axis modulus square, variable shifts, and two
//! sign certificates (monomial signs, Sturm sequences on a half line).

mod cert;
mod parse;
mod sturm;

pub use cert::{monomial_sign_certificate, Method, Sense, SignCertificate, Status};
pub use sturm::{square_free_decomposition, sturm_nonnegative_on_halfline, sturm_root_count};

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a finite binary64 value.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

// ---- dense coefficient-vector helpers (ascending degree) ----

pub(crate) fn trim(v: &mut Vec<Q>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

pub(crate) fn vadd(a: &[Q], b: &[Q]) -> Vec<Q> {
    let n = a.len().max(b.len());
    let mut out: Vec<Q> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Q::zero);
            match b.get(i) {
                Some(y) => x + y,
                None => x,
            }
        })
        .collect();
    trim(&mut out);
    out
}

pub(crate) fn vneg(a: &[Q]) -> Vec<Q> {
    a.iter().map(|c| -c).collect()
}

pub(crate) fn vsub(a: &[Q], b: &[Q]) -> Vec<Q> {
    vadd(a, &vneg(b))
}

pub(crate) fn vmul(a: &[Q], b: &[Q]) -> Vec<Q> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Q::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

pub(crate) fn vscale(a: &[Q], s: &Q) -> Vec<Q> {
    let mut out: Vec<Q> = a.iter().map(|c| c * s).collect();
    trim(&mut out);
    out
}

pub(crate) fn veval(a: &[Q], x: &Q) -> Q {
    let mut acc = Q::zero();
    for c in a.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// p(x + offset) by repeated synthetic division (Taylor shift).
pub(crate) fn vshift(a: &[Q], offset: &Q) -> Vec<Q> {
    let mut c = a.to_vec();
    let n = c.len();
    for i in 0..n {
        for k in (i..n - 1).rev() {
            let t = &c[k + 1] * offset;
            c[k] += t;
        }
    }
    trim(&mut c);
    c
}

pub(crate) fn vderiv(a: &[Q]) -> Vec<Q> {
    let mut out: Vec<Q> = a.iter().enumerate().skip(1).map(|(k, c)| c * q(k as i64)).collect();
    trim(&mut out);
    out
}

// ---- univariate ----

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    pub var: String,
    /// Ascending degree, no trailing zeros.
    pub coeffs: Vec<Q>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl UniPoly {
    pub fn new(var: &str, mut coeffs: Vec<Q>) -> Self {
        trim(&mut coeffs);
        UniPoly { var: var.to_string(), coeffs }
    }

    pub fn from_ints(var: &str, c: &[i64]) -> Self {
        UniPoly::new(var, c.iter().map(|&x| q(x)).collect())
    }

    pub fn parse(expr: &str, var: &str) -> Result<Self> {
        let b = BiPoly::parse(expr, var, "\u{0}")?;
        if b.coeffs.iter().any(|row| row.len() > 1) {
            return Err(Error::VariableMismatch(format!("expression uses a variable other than {var}")));
        }
        Ok(UniPoly::new(var, b.coeffs.iter().map(|row| row.first().cloned().unwrap_or_else(Q::zero)).collect()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Q {
        self.coeffs.last().cloned().unwrap_or_else(Q::zero)
    }

    fn same_var(&self, o: &UniPoly) -> Result<()> {
        if self.var != o.var && !self.is_constant() && !o.is_constant() {
            return Err(Error::VariableMismatch(format!("{} vs {}", self.var, o.var)));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn arith(&self, o: &UniPoly, op: ArithOp) -> Result<UniPoly> {
        self.same_var(o)?;
        let var = if self.is_constant() { &o.var } else { &self.var };
        let c = match op {
            ArithOp::Add => vadd(&self.coeffs, &o.coeffs),
            ArithOp::Sub => vsub(&self.coeffs, &o.coeffs),
            ArithOp::Mul => vmul(&self.coeffs, &o.coeffs),
        };
        Ok(UniPoly::new(var, c))
    }

    pub fn add(&self, o: &UniPoly) -> Result<UniPoly> {
        self.arith(o, ArithOp::Add)
    }
    pub fn sub(&self, o: &UniPoly) -> Result<UniPoly> {
        self.arith(o, ArithOp::Sub)
    }
    pub fn mul(&self, o: &UniPoly) -> Result<UniPoly> {
        self.arith(o, ArithOp::Mul)
    }

    pub fn scale(&self, s: &Q) -> UniPoly {
        UniPoly::new(&self.var, vscale(&self.coeffs, s))
    }

    pub fn eval(&self, x: &Q) -> Q {
        veval(&self.coeffs, x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + q_to_f64(c);
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(&self.var, vderiv(&self.coeffs))
    }

    pub fn shift(&self, offset: &Q) -> UniPoly {
        UniPoly::new(&self.var, vshift(&self.coeffs, offset))
    }

    /// |p(i t)|^2 as a polynomial in u = t^2, named `u_var`.
    pub fn modulus_square_on_imaginary_axis(&self, u_var: &str) -> UniPoly {
        let (e, o) = even_odd_parts(&self.coeffs, |c| -c);
        let mut r = vadd(&vmul(&e, &e), &{
            let mut uo2 = vec![Q::zero()];
            uo2.extend(vmul(&o, &o));
            trim(&mut uo2);
            uo2
        });
        trim(&mut r);
        UniPoly::new(u_var, r)
    }
}

/// Splits p(i t) = E(u) + i t O(u) with u = t^2.
fn even_odd_parts<T: Clone>(c: &[T], neg: impl Fn(&T) -> T) -> (Vec<T>, Vec<T>) {
    let mut e = Vec::new();
    let mut o = Vec::new();
    for (k, x) in c.iter().enumerate() {
        let sgn = (k / 2) % 2 == 1;
        let v = if sgn { neg(x) } else { x.clone() };
        if k % 2 == 0 {
            e.push(v);
        } else {
            o.push(v);
        }
    }
    (e, o)
}

// ---- bivariate ----

/// Dense bivariate polynomial; `coeffs[i][j]` multiplies x^i y^j where
/// `vars = [x, y]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiPoly {
    pub vars: [String; 2],
    pub coeffs: Vec<Vec<Q>>,
}

impl BiPoly {
    pub fn new(x: &str, y: &str, coeffs: Vec<Vec<Q>>) -> Self {
        let mut p = BiPoly {
            vars: [x.to_string(), y.to_string()],
            coeffs,
        };
        p.normalize();
        p
    }

    pub fn zero(x: &str, y: &str) -> Self {
        BiPoly::new(x, y, Vec::new())
    }

    pub fn constant(x: &str, y: &str, c: Q) -> Self {
        BiPoly::new(x, y, vec![vec![c]])
    }

    pub fn var(x: &str, y: &str, which: usize) -> Self {
        let c = if which == 0 {
            vec![vec![], vec![Q::one()]]
        } else {
            vec![vec![Q::zero(), Q::one()]]
        };
        BiPoly::new(x, y, c)
    }

    pub fn parse(expr: &str, x: &str, y: &str) -> Result<Self> {
        parse::parse(expr, x, y)
    }

    fn normalize(&mut self) {
        for row in self.coeffs.iter_mut() {
            trim(row);
        }
        while self.coeffs.last().is_some_and(|r| r.is_empty()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check(&self, o: &BiPoly) -> Result<()> {
        if self.vars != o.vars {
            return Err(Error::VariableMismatch(format!("{:?} vs {:?}", self.vars, o.vars)));
        }
        Ok(())
    }

    pub fn arith(&self, o: &BiPoly, op: ArithOp) -> Result<BiPoly> {
        self.check(o)?;
        let c = match op {
            ArithOp::Add | ArithOp::Sub => {
                let n = self.coeffs.len().max(o.coeffs.len());
                (0..n)
                    .map(|i| {
                        let a = self.coeffs.get(i).map(|v| v.as_slice()).unwrap_or(&[]);
                        let b = o.coeffs.get(i).map(|v| v.as_slice()).unwrap_or(&[]);
                        if op == ArithOp::Add {
                            vadd(a, b)
                        } else {
                            vsub(a, b)
                        }
                    })
                    .collect()
            }
            ArithOp::Mul => {
                if self.is_zero() || o.is_zero() {
                    Vec::new()
                } else {
                    let mut out = vec![Vec::new(); self.coeffs.len() + o.coeffs.len() - 1];
                    for (i, a) in self.coeffs.iter().enumerate() {
                        for (j, b) in o.coeffs.iter().enumerate() {
                            let prod = vmul(a, b);
                            out[i + j] = vadd(&out[i + j], &prod);
                        }
                    }
                    out
                }
            }
        };
        Ok(BiPoly::new(&self.vars[0], &self.vars[1], c))
    }

    pub fn add(&self, o: &BiPoly) -> Result<BiPoly> {
        self.arith(o, ArithOp::Add)
    }
    pub fn sub(&self, o: &BiPoly) -> Result<BiPoly> {
        self.arith(o, ArithOp::Sub)
    }
    pub fn mul(&self, o: &BiPoly) -> Result<BiPoly> {
        self.arith(o, ArithOp::Mul)
    }

    pub fn scale(&self, s: &Q) -> BiPoly {
        BiPoly::new(&self.vars[0], &self.vars[1], self.coeffs.iter().map(|r| vscale(r, s)).collect())
    }

    pub fn pow(&self, e: u32) -> BiPoly {
        let mut acc = BiPoly::constant(&self.vars[0], &self.vars[1], Q::one());
        for _ in 0..e {
            acc = acc.mul(self).expect("same variables");
        }
        acc
    }

    pub fn var_index(&self, var: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::VariableMismatch(format!("{var} not in {:?}", self.vars)))
    }

    /// Degrees (max over x, max over y).
    pub fn degrees(&self) -> (usize, usize) {
        let dx = self.coeffs.len().saturating_sub(1);
        let dy = self.coeffs.iter().map(|r| r.len().saturating_sub(1)).max().unwrap_or(0);
        (dx, dy)
    }

    /// Coefficient of x^i y^j.
    pub fn coeff(&self, i: usize, j: usize) -> Q {
        self.coeffs.get(i).and_then(|r| r.get(j)).cloned().unwrap_or_else(Q::zero)
    }

    /// Nonzero monomials as (i, j, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.coeffs
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(j, c)| (i, j, c)))
    }

    pub fn eval(&self, x: &Q, y: &Q) -> Q {
        let rows: Vec<Q> = self.coeffs.iter().map(|r| veval(r, y)).collect();
        veval(&rows, x)
    }

    pub fn eval_f64(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for r in self.coeffs.iter().rev() {
            let mut inner = 0.0;
            for c in r.iter().rev() {
                inner = inner * y + q_to_f64(c);
            }
            acc = acc * x + inner;
        }
        acc
    }

    /// Swap the roles of the two variables.
    pub fn transpose(&self) -> BiPoly {
        let (dx, dy) = self.degrees();
        let mut c = vec![vec![Q::zero(); dx + 1]; if self.is_zero() { 0 } else { dy + 1 }];
        for (i, j, v) in self.terms() {
            c[j][i] = v.clone();
        }
        BiPoly::new(&self.vars[1], &self.vars[0], c)
    }

    /// Exact substitution var -> var + offset.
    pub fn shift_variable(&self, var: &str, offset: &Q) -> Result<BiPoly> {
        match self.var_index(var)? {
            0 => Ok(self.transpose().shift_inner(offset).transpose()),
            _ => Ok(self.shift_inner(offset)),
        }
    }

    fn shift_inner(&self, offset: &Q) -> BiPoly {
        BiPoly::new(&self.vars[0], &self.vars[1], self.coeffs.iter().map(|r| vshift(r, offset)).collect())
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<BiPoly> {
        let i = self.var_index(from)?;
        let mut p = self.clone();
        p.vars[i] = to.to_string();
        Ok(p)
    }

    /// Coefficients with respect to `var`, as univariate polynomials in the
    /// other variable: p = sum_k c_k(other) var^k.
    pub fn coefficients_in(&self, var: &str) -> Result<Vec<UniPoly>> {
        let i = self.var_index(var)?;
        let t = if i == 1 { self.transpose() } else { self.clone() };
        let other = t.vars[1].clone();
        Ok(t.coeffs.iter().map(|r| UniPoly::new(&other, r.clone())).collect())
    }

    /// |p(i t)|^2 in `var`, with `var` replaced by `u_var` holding t^2. The
    /// other variable stays free and real.
    pub fn modulus_square_on_imaginary_axis(&self, var: &str, u_var: &str) -> Result<BiPoly> {
        let i = self.var_index(var)?;
        // work in layout [var, other] and return in the caller's layout
        let t = if i == 0 { self.clone() } else { self.transpose() };
        let rows: Vec<Vec<Q>> = t.coeffs.clone();
        let (e, o) = even_odd_parts(&rows, |r| vneg(r));
        let other = t.vars[1].clone();
        let as_bi = |v: Vec<Vec<Q>>| BiPoly::new(u_var, &other, v);
        let e = as_bi(e);
        let o = as_bi(o);
        let u = BiPoly::var(u_var, &other, 0);
        let r = e.mul(&e)?.add(&u.mul(&o.mul(&o)?)?)?;
        Ok(if i == 0 { r } else { r.transpose() })
    }
}

fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_monomial(vars: &[&str], exps: &[usize]) -> String {
    let parts: Vec<String> = vars
        .iter()
        .zip(exps)
        .filter(|(_, &e)| e > 0)
        .map(|(v, &e)| if e == 1 { v.to_string() } else { format!("{v}^{e}") })
        .collect();
    parts.join("*")
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            write_term(f, c, &fmt_monomial(&[&self.var], &[k]), first)?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, j, c) in self.terms() {
            let m = fmt_monomial(&[&self.vars[0], &self.vars[1]], &[i, j]);
            write_term(f, c, &m, first)?;
            first = false;
        }
        Ok(())
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, c: &Q, m: &str, first: bool) -> fmt::Result {
    let neg = c.is_negative();
    let a = c.abs();
    let sign = match (first, neg) {
        (true, true) => "-",
        (true, false) => "",
        (false, true) => " - ",
        (false, false) => " + ",
    };
    if m.is_empty() {
        write!(f, "{sign}{}", fmt_q(&a))
    } else if a.is_one() {
        write!(f, "{sign}{m}")
    } else {
        write!(f, "{sign}{}*{m}", fmt_q(&a))
    }
}

pub fn format_q(c: &Q) -> String {
    fmt_q(c)
}

pub fn format_monomial(vars: &[&str], exps: &[usize]) -> String {
    fmt_monomial(vars, exps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_binomials() {
        let a = UniPoly::from_ints("l", &[1, 1]);
        let b = UniPoly::from_ints("l", &[-1, 1]);
        assert_eq!(a.mul(&b).unwrap(), UniPoly::from_ints("l", &[-1, 0, 1]));
        let z = UniPoly::new("l", vec![]);
        assert!(a.mul(&z).unwrap().is_zero());
        let other = UniPoly::from_ints("n", &[0, 1]);
        assert!(matches!(a.add(&other), Err(Error::VariableMismatch(_))));
    }

    #[test]
    fn modulus_square_examples() {
        let p = UniPoly::from_ints("l", &[1, 1]);
        assert_eq!(p.modulus_square_on_imaginary_axis("u"), UniPoly::from_ints("u", &[1, 1]));
        let p = UniPoly::from_ints("l", &[0, 0, 1]);
        assert_eq!(p.modulus_square_on_imaginary_axis("u"), UniPoly::from_ints("u", &[0, 0, 1]));
        let p = UniPoly::from_ints("l", &[104, 82, 3]);
        assert_eq!(p.modulus_square_on_imaginary_axis("u"), UniPoly::from_ints("u", &[10816, 6100, 9]));
    }

    #[test]
    fn bivariate_modulus_square_matches_univariate() {
        let p = BiPoly::parse("3*l^2 + n*l - 2*n^2 + 5", "n", "l").unwrap();
        let m = p.modulus_square_on_imaginary_axis("l", "u").unwrap();
        assert_eq!(m.vars, ["n".to_string(), "u".to_string()]);
        for n in 0..4 {
            let nq = q(n);
            let uni = UniPoly::new("l", p.coefficients_in("l").unwrap().iter().map(|c| c.eval(&nq)).collect());
            let expect = uni.modulus_square_on_imaginary_axis("u");
            for u in 0..4 {
                assert_eq!(m.eval(&nq, &q(u)), expect.eval(&q(u)));
            }
        }
    }

    #[test]
    fn shift_examples() {
        let p = UniPoly::from_ints("n", &[0, 0, 1]);
        assert_eq!(p.shift(&q(5)), UniPoly::from_ints("n", &[25, 10, 1]));
        let b = BiPoly::parse("n^2*l + l^3", "n", "l").unwrap();
        let s = b.shift_variable("n", &q(5)).unwrap();
        assert_eq!(s.eval(&q(0), &q(3)), b.eval(&q(5), &q(3)));
        let s = b.shift_variable("l", &qr(1, 2)).unwrap();
        assert_eq!(s.eval(&q(2), &q(1)), b.eval(&q(2), &qr(3, 2)));
    }

    #[test]
    fn display_round_trip() {
        let b = BiPoly::parse("-3*n^2*l + l/2 - 7", "n", "l").unwrap();
        let again = BiPoly::parse(&b.to_string(), "n", "l").unwrap();
        assert_eq!(b, again);
    }

    #[test]
    fn large_float_conversion() {
        let big = q(10).pow(400) / q(3).pow(10);
        let f = q_to_f64(&(big.clone() / q(10).pow(398)));
        assert!((f - 100.0 / 59049.0).abs() < 1e-15);
        let r = q_to_f64(&(q(10).pow(320) * qr(1, 1) / q(10).pow(319)));
        assert!((r - 10.0).abs() < 1e-12);
    }
}
