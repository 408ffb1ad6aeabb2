//! Recursive-descent reader for integer-coefficient polynomial expressions
//! such as `-5*(l+2*n+2)*(l+2*n+8)` or `3*x^2/7`.

use super::{q, BiPoly, Q};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::One;

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    x: &'a str,
    y: &'a str,
}

pub(super) fn parse(expr: &str, x: &str, y: &str) -> Result<BiPoly> {
    let mut p = Parser { s: expr.as_bytes(), pos: 0, x, y };
    let out = p.expr()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(out)
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Domain(format!("polynomial parse error at byte {}: {what}", self.pos))
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<BiPoly> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<BiPoly> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?)?;
                }
                b'/' => {
                    self.pos += 1;
                    let d = self.integer()?;
                    acc = acc.scale(&(Q::one() / d));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<BiPoly> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.scale(&q(-1)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<BiPoly> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.integer()?;
            let e: u32 = e
                .numer()
                .try_into()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<Q> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        let n: BigInt = txt.parse().map_err(|_| self.err("bad integer"))?;
        Ok(Q::from_integer(n))
    }

    fn primary(&mut self) -> Result<BiPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(BiPoly::constant(self.x, self.y, n))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                if name == self.x {
                    Ok(BiPoly::var(self.x, self.y, 0))
                } else if name == self.y {
                    Ok(BiPoly::var(self.x, self.y, 1))
                } else {
                    Err(Error::VariableMismatch(format!("unknown variable {name}")))
                }
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}
