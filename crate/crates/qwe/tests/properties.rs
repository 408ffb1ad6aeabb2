use num_complex::Complex64;
use proptest::prelude::*;
use qwe::geometry::{coeffs, height, map_eta, map_eta_inverse};
use qwe::polyalg::{q, q_to_f64, qr, sturm_nonnegative_on_halfline, BiPoly, Sense, UniPoly, Q};
use qwe::profiles::scaling_error;

fn uni() -> impl Strategy<Value = UniPoly> {
    prop::collection::vec((-50i64..50, 1i64..12), 0..7)
        .prop_map(|c| UniPoly::new("x", c.into_iter().map(|(n, d)| qr(n, d)).collect()))
}

fn bi() -> impl Strategy<Value = BiPoly> {
    prop::collection::vec(prop::collection::vec((-20i64..20, 1i64..6), 0..4), 0..4).prop_map(|rows| {
        BiPoly::new("n", "l", rows.into_iter().map(|r| r.into_iter().map(|(a, b)| qr(a, b)).collect()).collect())
    })
}

fn rational() -> impl Strategy<Value = Q> {
    (-200i64..200, 1i64..30).prop_map(|(n, d)| qr(n, d))
}

/// Product of linear factors (u - a) and positive quadratics
/// (u - c)^2 + e, times a nonzero leading coefficient; degree 3 or 4.
fn root_structured() -> impl Strategy<Value = UniPoly> {
    let factor = prop_oneof![
        (-20i64..90).prop_map(|a| vec![q(-a), q(1)]),
        ((-20i64..90), (1i64..20)).prop_map(|(c, e)| vec![q(c * c + e), q(-2 * c), q(1)]),
    ];
    (prop::collection::vec(factor, 2..5), prop_oneof![Just(-3i64), Just(-1), Just(1), Just(2)])
        .prop_filter_map("degree 3 or 4", |(fs, lc)| {
            let mut p = UniPoly::new("u", vec![q(lc)]);
            for f in fs {
                p = p.mul(&UniPoly::new("u", f)).unwrap();
            }
            matches!(p.degree(), Some(3) | Some(4)).then_some(p)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn univariate_distributivity(a in uni(), b in uni(), c in uni()) {
        let lhs = a.add(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bivariate_ring_axioms(a in bi(), b in bi(), c in bi()) {
        let lhs = a.add(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn evaluation_is_a_ring_map(a in uni(), b in uni(), x in rational()) {
        prop_assert_eq!(a.mul(&b).unwrap().eval(&x), a.eval(&x) * b.eval(&x));
        prop_assert_eq!(a.add(&b).unwrap().eval(&x), a.eval(&x) + b.eval(&x));
    }

    #[test]
    fn shift_then_evaluate(p in uni(), o in rational(), x in rational()) {
        prop_assert_eq!(p.shift(&o).eval(&x), p.eval(&(x.clone() + o)));
    }

    #[test]
    fn bivariate_shift_then_evaluate(p in bi(), o in rational(), x in rational(), y in rational()) {
        let s = p.shift_variable("n", &o).unwrap();
        prop_assert_eq!(s.eval(&x, &y), p.eval(&(x.clone() + o), &y));
    }

    #[test]
    fn sturm_agrees_with_sampling(p in root_structured()) {
        let cert = sturm_nonnegative_on_halfline("p", &p, Sense::NonNegative);
        let sampled = (0..=10_000).all(|i| p.eval(&qr(i, 100)) >= q(0));
        prop_assert_eq!(cert.proved(), sampled, "{}", p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn modulus_square_matches_binary64(p in uni(), t in -3.0f64..3.0) {
        let m = p.modulus_square_on_imaginary_axis("u");
        let it = Complex64::new(0.0, t);
        let mut z = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for c in p.coeffs.iter().rev() {
            z = z * it + q_to_f64(c);
            scale = scale * t.abs() + q_to_f64(c).abs();
        }
        let got = m.eval_f64(t * t);
        prop_assert!((got - z.norm_sqr()).abs() <= 1e-10 * scale * scale + f64::MIN_POSITIVE, "{got} vs {}", z.norm_sqr());
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn height_identities(y in 1e-6f64..=10.0) {
        let (h, h1, _) = height(y);
        prop_assert!(rel(1.0 - h1 * h1, 2.0 / (2.0 + y * y)) <= 1e-13);
        prop_assert!(rel(y * h1 - h, 2.0 - 2.0 / (2.0 + y * y).sqrt()) <= 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn hyperboloidal_map_round_trips(s in -3.0f64..3.0, y in 0.0f64..0.5) {
        let (t, r) = map_eta(1.0, s, y);
        let (s2, y2) = map_eta_inverse(1.0, t, r).unwrap();
        prop_assert!((s2 - s).abs() <= 1e-12 && (y2 - y).abs() <= 1e-12 * y.max(1.0), "{s2} {y2}");
    }

    #[test]
    fn scaling_symmetry(mu in 0.5f64..2.0, tf in 0.0f64..0.9, r in 0.01f64..2.0) {
        // a point strictly before both blowup times 1 and mu
        let t = tf * mu.min(1.0) * 0.9;
        prop_assert!(scaling_error(1.0, mu, t, r) <= 1e-12);
    }
}

#[test]
fn c12_changes_sign_once_at_one_half() {
    let c12 = |y: f64| coeffs(y, 7).c12;
    let ys: Vec<f64> = (1..=10_000).map(|i| 2.0 * i as f64 / 10_000.0).collect();
    let changes: Vec<usize> = (1..ys.len()).filter(|&i| c12(ys[i - 1]).signum() != c12(ys[i]).signum()).collect();
    assert_eq!(changes.len(), 1, "{changes:?}");
    let (mut a, mut b) = (ys[changes[0] - 1], ys[changes[0]]);
    let sa = c12(a).signum();
    while b - a > 1e-15 {
        let m = 0.5 * (a + b);
        if c12(m).signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    assert!((a - 0.5).abs() <= 1e-12, "{a}");
}
