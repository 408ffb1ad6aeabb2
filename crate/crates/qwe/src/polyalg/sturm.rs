use super::cert::{Method, Sense, SignCertificate};
use super::{format_q, q, trim, vderiv, veval, vmul, vscale, vsub, UniPoly, Q};
use num_traits::{One, Signed, Zero};
use std::time::Instant;

fn divrem(a: &[Q], b: &[Q]) -> (Vec<Q>, Vec<Q>) {
    assert!(!b.is_empty(), "division by the zero polynomial");
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut quo = vec![Q::zero(); r.len() - db];
    let lb = b.last().unwrap().clone();
    while r.len() > db && !r.is_empty() {
        let k = r.len() - 1 - db;
        let c = r.last().unwrap() / &lb;
        for (i, bi) in b.iter().enumerate() {
            let t = &c * bi;
            r[k + i] -= t;
        }
        quo[k] = c;
        r.pop();
        trim(&mut r);
    }
    trim(&mut quo);
    (quo, r)
}

fn monic(a: &[Q]) -> Vec<Q> {
    match a.last() {
        Some(l) => vscale(a, &(Q::one() / l)),
        None => Vec::new(),
    }
}

fn gcd(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let (_, r) = divrem(&x, &y);
        x = y;
        y = monic(&r);
    }
    monic(&x)
}

fn exact_div(a: &[Q], b: &[Q]) -> Vec<Q> {
    let (quo, r) = divrem(a, b);
    debug_assert!(r.is_empty());
    quo
}

/// Yun's algorithm: p = lc * prod f_i^i with f_i monic, square-free and
/// pairwise coprime. Returns lc and the nonconstant (f_i, i).
pub fn square_free_decomposition(p: &UniPoly) -> (Q, Vec<(UniPoly, usize)>) {
    let lc = p.leading();
    if p.coeffs.len() <= 1 {
        return (lc, Vec::new());
    }
    let f = monic(&p.coeffs);
    let df = vderiv(&f);
    let a0 = gcd(&f, &df);
    let mut b = exact_div(&f, &a0);
    let mut c = exact_div(&df, &a0);
    let mut d = vsub(&c, &vderiv(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while b.len() > 1 {
        let a = gcd(&b, &d);
        b = exact_div(&b, &a);
        c = exact_div(&d, &a);
        d = vsub(&c, &vderiv(&b));
        if a.len() > 1 {
            out.push((UniPoly::new(&p.var, a), i));
        }
        i += 1;
    }
    (lc, out)
}

fn sturm_sequence(p: &[Q]) -> Vec<Vec<Q>> {
    let mut seq = vec![p.to_vec(), vderiv(p)];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let (_, r) = divrem(&seq[n - 2], &seq[n - 1]);
        if r.is_empty() {
            break;
        }
        seq.push(r.iter().map(|c| -c).collect());
    }
    seq
}

fn variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut v = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            v += 1;
        }
        last = s;
    }
    v
}

fn sgn(x: &Q) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

fn var_at(seq: &[Vec<Q>], x: &Q) -> usize {
    variations(seq.iter().map(|s| sgn(&veval(s, x))))
}

fn var_at_inf(seq: &[Vec<Q>]) -> usize {
    variations(seq.iter().map(|s| sgn(s.last().unwrap())))
}

/// Number of distinct real roots in (lo, hi] (hi = None means +infinity)
/// of a square-free polynomial.
pub fn sturm_root_count(p: &UniPoly, lo: &Q, hi: Option<&Q>) -> usize {
    if p.coeffs.len() <= 1 {
        return 0;
    }
    let seq = sturm_sequence(&p.coeffs);
    let a = var_at(&seq, lo);
    let b = match hi {
        Some(h) => var_at(&seq, h),
        None => var_at_inf(&seq),
    };
    a.saturating_sub(b)
}

fn cauchy_bound(p: &[Q]) -> Q {
    let l = p.last().unwrap().abs();
    let m = p[..p.len() - 1].iter().map(|c| c.abs() / &l).fold(Q::zero(), |a, b| if b > a { b } else { a });
    m + Q::one()
}

/// Decides exactly whether `p` has the required sign on [0, inf).
///
/// The sign of p off its roots is the sign of lc * prod (odd-multiplicity
/// factors); that product is square-free, so it keeps one sign on (0, inf)
/// exactly when Sturm finds no root there.
pub fn sturm_nonnegative_on_halfline(claim: &str, p: &UniPoly, sense: Sense) -> SignCertificate {
    let start = Instant::now();
    if p.is_zero() {
        return SignCertificate::timed(claim, Method::Sturm, start, None);
    }
    let (lc, facs) = square_free_decomposition(p);
    let mut odd = vec![lc];
    for (f, m) in &facs {
        if m % 2 == 1 {
            odd = vmul(&odd, &f.coeffs);
        }
    }
    while odd.len() > 1 && odd[0].is_zero() {
        odd.remove(0);
    }
    let sample_witness = |p: &UniPoly| {
        let mut u = q(1);
        loop {
            let v = p.eval(&u);
            if !v.is_zero() {
                return format!("value {} at {} = {}", format_q(&v), p.var, format_q(&u));
            }
            u += q(1);
        }
    };
    let witness = if odd.len() == 1 {
        (!sense.admits_sign(odd[0].is_positive())).then(|| sample_witness(p))
    } else {
        let oq = UniPoly::new(&p.var, odd.clone());
        let n = sturm_root_count(&oq, &Q::zero(), None);
        if n > 0 {
            // isolate one sign change by bisection on root counts
            let mut lo = Q::zero();
            let mut hi = cauchy_bound(&odd);
            let seq = sturm_sequence(&odd);
            while var_at(&seq, &lo) - var_at(&seq, &hi) > 1 {
                let mid = (&lo + &hi) / q(2);
                if var_at(&seq, &lo) > var_at(&seq, &mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(format!(
                "{n} sign change(s) on (0, inf); one in ({}, {}]",
                format_q(&lo),
                format_q(&hi)
            ))
        } else if !sense.admits_sign(odd.last().unwrap().is_positive()) {
            Some(sample_witness(p))
        } else {
            None
        }
    };
    SignCertificate::timed(claim, Method::Sturm, start, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::Status;

    #[test]
    fn examples() {
        let p = UniPoly::from_ints("u", &[1, 0, 1]);
        assert!(sturm_nonnegative_on_halfline("a", &p, Sense::NonNegative).proved());
        let p = UniPoly::from_ints("u", &[-1, 2, -1]);
        assert!(sturm_nonnegative_on_halfline("b", &p, Sense::NonPositive).proved());
        let p = UniPoly::from_ints("u", &[-1, 1]);
        let c = sturm_nonnegative_on_halfline("c", &p, Sense::NonNegative);
        assert_eq!(c.status, Status::Failed);
        assert!(c.witness.unwrap().contains("sign change"));
        let z = UniPoly::new("u", vec![]);
        assert!(sturm_nonnegative_on_halfline("z", &z, Sense::NonPositive).proved());
        assert!(sturm_nonnegative_on_halfline("z", &z, Sense::NonNegative).proved());
    }

    #[test]
    fn root_at_origin_and_wrong_constant_sign() {
        // u (u + 1) >= 0 on [0, inf)
        let p = UniPoly::from_ints("u", &[0, 1, 1]);
        assert!(sturm_nonnegative_on_halfline("a", &p, Sense::NonNegative).proved());
        assert!(!sturm_nonnegative_on_halfline("b", &p, Sense::NonPositive).proved());
        let p = UniPoly::from_ints("u", &[-3]);
        let c = sturm_nonnegative_on_halfline("c", &p, Sense::NonNegative);
        assert_eq!(c.witness.as_deref(), Some("value -3 at u = 1"));
        // roots only at negative u
        let p = UniPoly::from_ints("u", &[6, 5, 1]);
        assert!(sturm_nonnegative_on_halfline("d", &p, Sense::NonNegative).proved());
    }

    #[test]
    fn yun_multiplicities() {
        // (u-1)^3 (u+2)^2 (u^2+1)
        let a = UniPoly::from_ints("u", &[-1, 1]);
        let b = UniPoly::from_ints("u", &[2, 1]);
        let c = UniPoly::from_ints("u", &[1, 0, 1]);
        let p = a.mul(&a).unwrap().mul(&a).unwrap().mul(&b).unwrap().mul(&b).unwrap().mul(&c).unwrap().scale(&q(-7));
        let (lc, f) = square_free_decomposition(&p);
        assert_eq!(lc, q(-7));
        assert_eq!(f.len(), 3);
        assert_eq!(f[0], (c, 1));
        assert_eq!(f[1], (b, 2));
        assert_eq!(f[2], (a, 3));
    }

    #[test]
    fn root_counts() {
        // (u - 1)(u - 2)(u + 3)
        let p = UniPoly::from_ints("u", &[6, -7, 0, 1]);
        assert_eq!(sturm_root_count(&p, &q(0), None), 2);
        assert_eq!(sturm_root_count(&p, &q(-10), None), 3);
        assert_eq!(sturm_root_count(&p, &q(0), Some(&q(1))), 1);
    }
}
