use qwe::jet::Jet;
use qwe::profiles::{f_star, Mode};
use qwe::resolvent::*;

// Reference values from an independent 40-digit evaluation of F.
const F_REF: [(f64, f64); 8] = [
    (1e-4, 7.0624496761701190367e-27),
    (1e-3, 7.0619660515221002451e-21),
    (0.01, 7.0137299560130995873e-15),
    (0.05, 9.2467730275242178823e-11),
    (0.1, 3.2720458145265079396e-9),
    (0.2, -4.6983500127806380297e-8),
    (0.3, -5.6620484505391268556e-7),
    (0.4, -5.7716387634897189839e-7),
];
const F_ROOT: f64 = 0.16928829951409969802;

#[test]
fn f_matches_high_precision_reference() {
    for (y, v) in F_REF {
        let f = function_f(y).unwrap();
        // both terms are O(y^6) and cancel partially, so allow a few ulps of each
        let (a, b) = function_f_terms(y).unwrap();
        let tol = 1e-9 * v.abs() + 1e-13 * (a.abs() + b.abs());
        assert!((f - v).abs() <= tol, "y = {y}: {f} vs {v}");
    }
    assert!(function_f(1e-3).unwrap() > function_f(1e-4).unwrap());
    assert!(function_f(1e-4).unwrap() > 0.0);
}

#[test]
fn delta0_brackets_first_zero() {
    let (root, [a, b]) = bracket_delta0().unwrap();
    assert!((root - F_ROOT).abs() < 1e-12, "{root}");
    assert!(function_f(a).unwrap() > 0.0 && function_f(b).unwrap() <= 0.0);
    for i in 1..1000 {
        let y = 0.9 * root * i as f64 / 1000.0;
        assert!(function_f(y).unwrap() > 0.0, "y = {y}");
    }
}

#[test]
fn cutoff_constants_reference() {
    let c = cutoff_constants(0.4).unwrap();
    assert!((c.r0 - 0.1).abs() < 1e-15);
    assert!((c.s0 - -0.58359016090900237359).abs() < 1e-14);
    assert!((c.y0 - 0.028175230524573615194).abs() < 1e-15);
    assert!((c.delta0 - 0.9 * F_ROOT).abs() < 1e-12);
    for t0 in [0.05, 0.2, 0.4, 0.44] {
        assert!(y0_identity_residual(t0 / 4.0).abs() < 1e-10);
    }
    assert!(cutoff_constants(0.0).is_err() && cutoff_constants(4.0 / 9.0).is_err());
}

#[test]
fn chi_is_a_smooth_step() {
    let c = cutoff_constants(0.4).unwrap();
    assert_eq!(c.chi(0.0), 1.0);
    assert_eq!(c.chi(c.plateau_end), 1.0);
    assert_eq!(c.chi(c.support_end), 0.0);
    let mut prev = 1.0;
    for i in 0..=400 {
        let y = c.support_end * i as f64 / 400.0;
        let v = c.chi(y);
        assert!((0.0..=1.0).contains(&v) && v <= prev);
        prev = v;
    }
}

#[test]
fn projection_integral_positive_and_stable() {
    let c = cutoff_constants(0.4).unwrap();
    let p = projection_integral(&c).unwrap();
    assert!(p.value > 0.0);
    assert!(p.quadrature_error <= 1e-8 * p.value, "{p:?}");
    let half = chi_f_integral(0.5 * c.plateau_end, 0.5 * c.support_end).unwrap();
    assert!(half.value > 0.0);
    let r = projection_report(0.4).unwrap();
    assert!(r.positive);
    let js = serde_json::to_value(r).unwrap();
    for k in ["r0", "s0", "y0", "delta0", "integral", "positive", "quadrature_error"] {
        assert!(js.get(k).is_some(), "{k}");
    }
}

#[test]
fn obstruction_integrands() {
    // one sign on (0, 1/2): negative with this orientation of c12
    for i in 1..1000 {
        let y = 0.5 * i as f64 / 1000.0;
        assert!(obstruction_integrand(Mode::Four, y) < 0.0, "y = {y}");
    }
    // independent 40-digit quadrature
    let a = obstruction_integral(Mode::One);
    assert!((a.value / -1.726334915006219542e-4 - 1.0).abs() < 1e-8, "{a:?}");
    assert!(a.error <= 1e-8 * a.value.abs());
    let b = obstruction_integral(Mode::Four);
    assert!((b.value / -1.190635377654235571e-7 - 1.0).abs() < 1e-8, "{b:?}");
}

#[test]
fn antiderivative_slope_near_origin() {
    for k in [Mode::One, Mode::Four] {
        let s = (antiderivative_i(k, 2e-4) - antiderivative_i(k, 1e-4)) / std::f64::consts::LN_2;
        assert!((s - 6.0).abs() < 1e-3, "{k:?}: {s}");
    }
}

fn psi_residual(k: Mode, y: f64) -> f64 {
    let h = 2e-3 * y.min(0.5 - y);
    let v: Vec<f64> = (-2..=2).map(|i| second_solution_psi(k, y + h * i as f64).unwrap().value).collect();
    let d1 = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h);
    let d2 = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h);
    let (p, q) = mode_pq(k, y);
    (d2 + p * d1 + q * v[2]).abs() / (d2.abs() + (p * d1).abs() + (q * v[2]).abs())
}

#[test]
fn second_solution_solves_mode_equation() {
    for k in [Mode::One, Mode::Four] {
        assert_eq!(second_solution_psi(k, 0.25).unwrap().value, 0.0);
        for i in 0..=40 {
            let y = 0.05 + 0.4 * i as f64 / 40.0;
            let r = psi_residual(k, y);
            assert!(r <= 1e-7, "{k:?} y = {y}: {r}");
        }
    }
    // continuous through the zero of f*_{1,1}: the value there matches
    // fourth-order interpolation from both sides
    let z = f1_zero();
    let p = |t: f64| second_solution_psi(Mode::One, t).unwrap().value;
    let h = 1e-4;
    let interp = (-p(z - 2.0 * h) + 4.0 * p(z - h) + 4.0 * p(z + h) - p(z + 2.0 * h)) / 6.0;
    assert!((interp - p(z)).abs() < 1e-9 * p(z).abs(), "{interp} vs {}", p(z));
}

#[test]
fn second_solution_wronskian() {
    // f psi' - f' psi = W, so the pair is a fundamental system
    for k in [Mode::One, Mode::Four] {
        for y in [0.1, 0.2, 0.3, 0.45] {
            let h = 1e-3 * y;
            let p = |t: f64| second_solution_psi(k, t).unwrap().value;
            let dp = (p(y - 2.0 * h) - 8.0 * p(y - h) + 8.0 * p(y + h) - p(y + 2.0 * h)) / (12.0 * h);
            let fj = f_star(k, Jet::<2>::var(y));
            let w = fj.c[0] * dp - fj.c[1] * p(y);
            let wr = w_real(y, k.lambda());
            assert!((w / wr - 1.0).abs() < 1e-6, "{k:?} y = {y}: {w} vs {wr}");
        }
    }
}

#[test]
fn second_solution_growth_at_origin() {
    // psi_j blows up like y^-5 at the origin
    for k in [Mode::One, Mode::Four] {
        let a = second_solution_psi(k, 1e-3).unwrap().value;
        let b = second_solution_psi(k, 2e-3).unwrap().value;
        let s = (a / b).abs().ln() / std::f64::consts::LN_2;
        assert!((s - 5.0).abs() < 0.02, "{k:?}: {s}");
    }
}

#[test]
fn f_derivative_by_differences() {
    // Richardson-extrapolated central differences of the bracket against the jet derivative
    let (root, _) = bracket_delta0().unwrap();
    for y in [0.25 * root, 0.5 * root, 0.3, 0.45] {
        let d = |h: f64| (f_bracket(y + h).unwrap() - f_bracket(y - h).unwrap()) / (2.0 * h);
        let h = 1e-3 * y.min(0.5 - y);
        let rich = (4.0 * d(h / 2.0) - d(h)) / 3.0;
        let (a, b) = function_f_terms(y).unwrap();
        assert!((rich - b).abs() <= 1e-8 * b.abs(), "y = {y}: {rich} vs {b}");
        let f = a - rich;
        assert!((f / function_f(y).unwrap() - 1.0).abs() < 1e-6);
    }
    let f = function_f(0.5 * root).unwrap();
    assert!(f > 0.0);
}

#[test]
fn f_terms_near_origin() {
    // both terms are of the same order as F itself at y = 1e-4
    let (a, b) = function_f_terms(1e-4).unwrap();
    assert!((a / -2.8795887e-26 - 1.0).abs() < 1e-6, "{a}");
    assert!((b / -3.5858337e-26 - 1.0).abs() < 1e-6, "{b}");
    let r: Vec<f64> = [1e-4, 1e-3, 1e-2].iter().map(|&y| function_f(y).unwrap() / y.powi(6)).collect();
    assert!(r.iter().all(|v| (v / 7.06e-3 - 1.0).abs() < 0.01), "{r:?}");
}

#[test]
fn second_solution_growth_at_half() {
    // psi_1 ~ log(1/2 - y) and psi_4 ~ (1/2 - y)^-3 as y -> 1/2
    let e = [1e-4, 1e-5, 1e-6];
    let p1: Vec<f64> = e.iter().map(|&e| second_solution_psi(Mode::One, 0.5 - e).unwrap().value).collect();
    let step = (p1[1] - p1[0]) / std::f64::consts::LN_10;
    let step2 = (p1[2] - p1[1]) / std::f64::consts::LN_10;
    assert!((step / step2 - 1.0).abs() < 1e-2, "{p1:?}");
    let p4: Vec<f64> = e.iter().map(|&e| second_solution_psi(Mode::Four, 0.5 - e).unwrap().value).collect();
    let s = (p4[1] / p4[0]).abs().log10();
    assert!((s - 3.0).abs() < 1e-2, "{p4:?}");
}
