//! Exact certificates for the quasisolution estimates: the closed forms of
//! C_n, eps_n and delta_5, the sign conditions behind |C_n| and |eps_n|
//! bounds, the induction closure and the location of the zeros of P2.

use super::recurrence::{cq, run_recurrence, CQ};
use crate::error::Result;
use crate::polyalg::{
    format_q, monomial_sign_certificate, q, qr, sturm_nonnegative_on_halfline, BiPoly, Method, Sense,
    SignCertificate, UniPoly, Q,
};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const P1: &str = "-845000000*n^2*(n+1)^3*(2*n+11)*(l+2*n+2)*(l+2*n+8)";

const P2_F1: &str = "1287*l^2+52*(192*l^2+4125*l+9500)*n^2+2000*(48*l+299)*n^3+104000*n^4+l*(1521*l-44000)*n";

const P2_F2: &str = "52*(246*l^2+5125*l+23000)+4*(2496*l^2+125625*l+728000)*n^2+6000*(16*l+169)*n^3+104000*n^4\
    +(21489*l^2+673000*l+3198000)*n";

const P3: &str = "-33462*l^2*(117*l^2-4000*l-4000)-4000*(74344*l^2+1012375*l+14196000)*n^6\
    +1000*(57408*l^3-1058203*l^2-34820500*l-237276000)*n^5\
    -8*(292032*l^4-66226875*l^3-854777500*l^2+11226312500*l+52728000000)*n^4\
    -10*(2021409*l^4-113476350*l^3-1831007400*l^2+9749350000*l+33360600000)*n^3\
    -5*(6739551*l^4-166553400*l^3-1369066800*l^2+8543600000*l+19468800000)*n^2\
    +78000000*(4*l-65)*n^7-325*l*(22113*l^3-1579680*l^2+11482600*l+14080000)*n";

const R1: &str = "-597051*l^12-43222410*l^11+5068245600*l^10+633420595440*l^9\
    +23910688879632*l^8+308544639036000*l^7-3181221429731200*l^6\
    -155692128689456640*l^5-2167560072357216256*l^4-15251720333529661440*l^3\
    -55976373542617907200*l^2-95372978774016000000*l-51994908426240000000";

const R2: &str = "2*(64623*l^2+4285625*l+38025000)*(81*l^10+19710*l^9+1886400*l^8+92781360*l^7\
    +2577603408*l^6+41940364000*l^5+401332867200*l^4+2206815715840*l^3\
    +6537890727936*l^2+8994221424640*l+3845731123200)";

/// The closed-form polynomials, in (n, l) with l standing for lambda.
#[derive(Clone, Debug, PartialEq)]
pub struct AppendixPolys {
    pub p1: BiPoly,
    pub p2_factors: [BiPoly; 2],
    pub p2: BiPoly,
    pub p3: BiPoly,
    pub r1: UniPoly,
    pub r2: UniPoly,
}

impl AppendixPolys {
    pub fn printed() -> Self {
        let bi = |s: &str| BiPoly::parse(s, "n", "l").expect("appendix polynomial parses");
        let uni = |s: &str| UniPoly::parse(s, "l").expect("appendix polynomial parses");
        let f1 = bi(P2_F1);
        let f2 = bi(P2_F2);
        let p2 = f1.mul(&f2).expect("same variables");
        AppendixPolys {
            p1: bi(P1),
            p2_factors: [f1, f2],
            p2,
            p3: bi(P3),
            r1: uni(R1),
            r2: uni(R2),
        }
    }

    /// The printed set with the leading constant of P1 multiplied by 100.
    pub fn with_corrupted_p1() -> Self {
        let mut a = Self::printed();
        a.p1 = a.p1.scale(&q(100));
        a
    }
}

fn real(x: &Q) -> CQ {
    cq(x.clone(), Q::zero())
}

/// Random rational point with n > 0 and lambda of either sign. Small
/// denominators keep the exact recurrence cheap.
fn random_point(rng: &mut ChaCha8Rng) -> (Q, Q) {
    let n = qr(rng.gen_range(1..400), rng.gen_range(1..8));
    let l = qr(rng.gen_range(-300..300), rng.gen_range(1..10));
    (n, l)
}

/// C_n and eps_n from their definitions, for rational n (only the
/// recurrence coefficients and the quasisolution enter).
fn c_and_eps_definition(n: &Q, l: &Q) -> Option<(Q, Q)> {
    let tr = |m: &Q| -> Q {
        let c2 = qr(3, 16) / ((m + q(1)) * (q(2) * m + q(11))) + qr(9, 4000) / (m * m);
        let c1 = (q(16) * m + q(41)) / (q(8) * (m + q(1)) * (q(2) * m + q(11))) - q(1) / (q(13) * m);
        let c0 = (q(4) * m + q(19)) / (q(4) * m + q(22));
        l * l * c2 + l * c1 + c0
    };
    let den0 = q(16) * (n + q(2)) * (q(2) * n + q(13));
    let a = (q(3) * l * l + q(114) * l + q(52) * n * n + q(32) * l * n + q(348) * n + q(400)) / &den0;
    let b = q(-5) * (l + q(2) * n + q(2)) * (l + q(2) * n + q(8)) / den0;
    let t0 = tr(n);
    let t1 = tr(&(n + q(1)));
    let d = &t0 * &t1;
    if d.is_zero() {
        return None;
    }
    let c = &b / &d;
    let eps = (a * t0 + b) / d - q(1);
    Some((c, eps))
}

fn delta5_definition(l: &Q) -> Option<Q> {
    let seq = run_recurrence(&real(l), 5).ok()?;
    let d = seq[5].delta.clone()?;
    Some(d.re)
}

fn identity_cert(claim: &str, start: Instant, failure: Option<String>) -> SignCertificate {
    let mut c = SignCertificate {
        claim: claim.to_string(),
        method: Method::ExactIdentity,
        status: crate::polyalg::Status::Proved,
        witness: None,
        wall_time_ms: 0.0,
    };
    if let Some(w) = failure {
        c.status = crate::polyalg::Status::Failed;
        c.witness = Some(w);
    }
    c.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    c
}

/// C_n = P1/P2, eps_n = P3/P2 and delta_5 = R1/R2 at `points` random
/// rational points each.
pub fn certify_appendix_identities(polys: &AppendixPolys, points: usize, seed: u64) -> Vec<SignCertificate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut pts = Vec::new();
    while pts.len() < points {
        let (n, l) = random_point(&mut rng);
        if polys.p2.eval(&n, &l).is_zero() {
            continue;
        }
        if let Some(v) = c_and_eps_definition(&n, &l) {
            pts.push((n, l, v));
        }
    }
    for (claim, which) in [("appendix_identity_C", 0), ("appendix_identity_eps", 1)] {
        let start = Instant::now();
        let num = if which == 0 { &polys.p1 } else { &polys.p3 };
        let fail = pts.iter().find_map(|(n, l, (c, e))| {
            let lhs = if which == 0 { c } else { e };
            let rhs = num.eval(n, l) / polys.p2.eval(n, l);
            (*lhs != rhs).then(|| format!("mismatch at (n, lambda) = ({}, {})", format_q(n), format_q(l)))
        });
        out.push(identity_cert(claim, start, fail));
    }

    let start = Instant::now();
    let mut fail = None;
    let mut done = 0;
    while done < points {
        let l = qr(rng.gen_range(-300..300), rng.gen_range(1..10));
        let r2 = polys.r2.eval(&l);
        let Some(d) = (!r2.is_zero()).then(|| delta5_definition(&l)).flatten() else {
            continue;
        };
        if d != polys.r1.eval(&l) / r2 {
            fail = Some(format!("mismatch at lambda = {}", format_q(&l)));
            break;
        }
        done += 1;
    }
    out.push(identity_cert("appendix_identity_delta5", start, fail));
    out
}

/// (k (4+n))^2 |num(n, it)|^2 - (a + b n)^2 |P2(n, it)|^2 in (m, u), m = n - 5.
fn bound_polynomial(num: &BiPoly, p2: &BiPoly, k: i64, a: i64, b: i64) -> Result<BiPoly> {
    let w1 = BiPoly::parse(&format!("({k}*(4+n))^2"), "n", "u")?;
    let w2 = BiPoly::parse(&format!("({a}+{b}*n)^2"), "n", "u")?;
    let m1 = num.modulus_square_on_imaginary_axis("l", "u")?;
    let m2 = p2.modulus_square_on_imaginary_axis("l", "u")?;
    let p = w1.mul(&m1)?.sub(&w2.mul(&m2)?)?;
    p.shift_variable("n", &q(5))?.rename("n", "m")
}

pub fn c_bound_polynomial(polys: &AppendixPolys) -> BiPoly {
    bound_polynomial(&polys.p1, &polys.p2, 40, 56, 25).expect("consistent variables")
}

pub fn eps_bound_polynomial(polys: &AppendixPolys) -> BiPoly {
    bound_polynomial(&polys.p3, &polys.p2, 120, 64, 5).expect("consistent variables")
}

pub fn delta5_bound_polynomial(polys: &AppendixPolys) -> UniPoly {
    let a = polys.r1.modulus_square_on_imaginary_axis("u").scale(&q(16));
    let b = polys.r2.modulus_square_on_imaginary_axis("u");
    a.sub(&b).expect("same variable")
}

/// The four estimates used for n >= 5 on the imaginary axis.
pub fn certify_bounds(polys: &AppendixPolys) -> Vec<SignCertificate> {
    let mut out = Vec::new();
    let start = Instant::now();
    let p = c_bound_polynomial(polys);
    let mut c = monomial_sign_certificate("C_bound", &p, Sense::NonPositive);
    c.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    out.push(c);

    let start = Instant::now();
    let p = eps_bound_polynomial(polys);
    let mut c = monomial_sign_certificate("eps_bound", &p, Sense::NonPositive);
    c.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    out.push(c);

    let start = Instant::now();
    let p = delta5_bound_polynomial(polys);
    let mut c = sturm_nonnegative_on_halfline("delta5_bound", &p, Sense::NonPositive);
    c.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    out.push(c);

    out.push(certify_induction_closure());
    out
}

/// (64+5n)/(120(4+n)) + (1/3)(56+25n)/(40(4+n)) = 1/4 identically in n.
pub fn certify_induction_closure() -> SignCertificate {
    let start = Instant::now();
    // both fractions share the denominator 120(4+n)
    let num = UniPoly::parse("(64+5*n)+(56+25*n)", "n").expect("parses");
    let den = UniPoly::parse("120*(4+n)", "n").expect("parses");
    let diff = num.scale(&q(4)).sub(&den).expect("same variable");
    let fail = (!diff.is_zero()).then(|| format!("residual numerator {diff}"));
    identity_cert("induction_closure", start, fail)
}

pub fn induction_closure_value(n: &Q) -> Q {
    (q(64) + q(5) * n) / (q(120) * (q(4) + n)) + qr(1, 3) * (q(56) + q(25) * n) / (q(40) * (q(4) + n))
}

/// Zeros of P2(n, .) lie in the open left half-plane for every n >= 5:
/// P2 is the product of the two printed quadratics and each has positive
/// coefficients there (Routh-Hurwitz for degree two).
pub fn certify_halfplane_analyticity(polys: &AppendixPolys) -> SignCertificate {
    let start = Instant::now();
    let claim = "halfplane_analyticity_P2";
    let [f1, f2] = &polys.p2_factors;
    let prod = f1.mul(f2).expect("same variables");
    if prod != polys.p2 {
        return identity_cert(claim, start, Some("P2 differs from the product of its factors".into()));
    }
    for (fi, f) in [f1, f2].into_iter().enumerate() {
        let cs = f.coefficients_in("l").expect("l is a variable");
        if cs.len() != 3 {
            let w = format!("factor {} has degree {} in lambda", fi + 1, cs.len().saturating_sub(1));
            return identity_cert(claim, start, Some(w));
        }
        for (k, c) in cs.iter().enumerate() {
            let shifted = c.shift(&q(5));
            let as_bi = BiPoly::new("m", "_", shifted.coeffs.iter().map(|x| vec![x.clone()]).collect());
            let cert = monomial_sign_certificate(claim, &as_bi, Sense::NonNegative);
            let w = if !cert.proved() {
                cert.witness
            } else if shifted.eval(&q(0)) <= q(0) {
                Some("vanishes at n = 5".into())
            } else {
                None
            };
            if let Some(w) = w {
                let w = format!("factor {}, lambda^{k} coefficient: {w}", fi + 1);
                return identity_cert(claim, start, Some(w));
            }
        }
    }
    let mut c = identity_cert(claim, start, None);
    c.method = Method::MonomialSign;
    c
}

/// Every certificate, in a fixed order.
pub fn certify_all(polys: &AppendixPolys, seed: u64) -> Vec<SignCertificate> {
    let mut v = certify_appendix_identities(polys, 24, seed);
    v.extend(certify_bounds(polys));
    v.push(certify_halfplane_analyticity(polys));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_fixed_points() {
        let p = AppendixPolys::printed();
        let (c, _) = c_and_eps_definition(&q(7), &q(3)).unwrap();
        assert_eq!(c, p.p1.eval(&q(7), &q(3)) / p.p2.eval(&q(7), &q(3)));
        let (_, e) = c_and_eps_definition(&q(5), &q(0)).unwrap();
        assert_eq!(e, p.p3.eval(&q(5), &q(0)) / p.p2.eval(&q(5), &q(0)));
        let d = delta5_definition(&qr(1, 2)).unwrap();
        assert_eq!(d, p.r1.eval(&qr(1, 2)) / p.r2.eval(&qr(1, 2)));
    }

    #[test]
    fn printed_constants() {
        let p = AppendixPolys::printed();
        let r2_0 = Q::from_integer(2u64.into()) * Q::from_integer(38025000u64.into())
            * Q::from_integer(3845731123200u64.into());
        assert_eq!(p.r2.eval(&q(0)), r2_0);
        // n = 1: n^2 (n+1)^3 (2n+11) (2n+2) (2n+8) = 8 * 13 * 4 * 10
        assert_eq!(p.p1.eval(&q(1), &q(0)), q(-845000000 * 8 * 13 * 40));
        let [f1, f2] = &p.p2_factors;
        assert_eq!(p.p2.eval(&q(1), &q(1)), f1.eval(&q(1), &q(1)) * f2.eval(&q(1), &q(1)));
        let c1 = &f1.coefficients_in("l").unwrap()[1];
        assert_eq!(*c1, UniPoly::parse("96000*n^3+214500*n^2-44000*n", "n").unwrap());
        assert!(c1.eval(&q(5)) > q(0));
    }

    #[test]
    fn induction_closure_at_five() {
        assert_eq!(induction_closure_value(&q(5)), qr(1, 4));
        assert_eq!(qr(89, 1080) + qr(181, 1080), qr(1, 4));
        assert!(certify_induction_closure().proved());
    }

    #[test]
    fn delta5_spot_check() {
        let p = AppendixPolys::printed();
        let l = num_complex::Complex64::new(0.0, 2.0);
        let ev = |u: &UniPoly| {
            u.coeffs
                .iter()
                .rev()
                .fold(num_complex::Complex64::new(0.0, 0.0), |a, c| a * l + crate::polyalg::q_to_f64(c))
        };
        assert!((ev(&p.r1) / ev(&p.r2)).norm() <= 0.25);
    }

    #[test]
    fn all_certificates_prove() {
        let p = AppendixPolys::printed();
        let certs = certify_all(&p, 7);
        assert_eq!(certs.len(), 8);
        for c in &certs {
            assert!(c.proved(), "{}: {:?}", c.claim, c.witness);
        }
    }

    #[test]
    fn corrupted_p1_is_caught() {
        let p = AppendixPolys::with_corrupted_p1();
        let ids = certify_appendix_identities(&p, 20, 1);
        assert!(!ids[0].proved());
        assert!(ids[0].witness.as_ref().unwrap().contains("mismatch"));
        let b = &certify_bounds(&p)[0];
        assert!(!b.proved());
        assert!(b.witness.as_ref().unwrap().starts_with("coefficient of"));
    }
}
