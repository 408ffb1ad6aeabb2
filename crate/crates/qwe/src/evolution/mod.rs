//! Method-of-lines evolution of the perturbation system about the blowup
//! profile in hyperboloidal similarity coordinates, on y in (0, R].
//!
//! Space is discretized by even-parity Chebyshev collocation: 2N
//! Gauss-Lobatto points on [-R, R], of which the N positive ones are kept;
//! derivatives act on the even (or odd) extension. No point sits at y = 0
//! and the row at y = R is left alone, since the operator is outflow there.

pub mod run;
pub mod spectrum;

use crate::error::{Error, Result};
use crate::geometry::coeffs;
use crate::profiles::{f_star, Mode};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

pub use run::{
    correction_functional, evolve, evolve_to, fit_rate, shoot, step, Correction, EvolutionConfig, Filter, ModeAmplitudes,
    Sample, ShootResult, Trajectory,
};
pub use spectrum::{
    compare_resolutions, discrete_spectrum, riesz_amplitudes, validate_spectrum, DiscreteEigenvalue, DiscreteSpectrum,
    FilterCoefficients, ModeProjector, SpectrumReport, STABLE_SHIFT,
};

/// Stability constant of the explicit stepper:
/// ds <= CFL * (smallest node spacing) / (largest characteristic speed).
/// Classical RK4 on this operator goes unstable near 33 at R = 1/2 and R = 1.
pub const CFL: f64 = 25.0;

/// Chebyshev-Lobatto differentiation matrix on `m` points of [-1, 1],
/// x_j = cos(pi j / (m - 1)).
fn cheb(m: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = m - 1;
    let x: Vec<f64> = (0..m).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c: Vec<f64> = (0..m)
        .map(|j| {
            let e = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j % 2 == 0 {
                e
            } else {
                -e
            }
        })
        .collect();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            if i != k {
                d[(i, k)] = c[i] / c[k] / (x[i] - x[k]);
            }
        }
    }
    for i in 0..m {
        let s: f64 = (0..m).filter(|&k| k != i).map(|k| d[(i, k)]).sum();
        d[(i, i)] = -s;
    }
    (d, x)
}

/// Clenshaw-Curtis weights on the same points.
fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let n = m - 1;
    (0..m)
        .map(|j| {
            let cj = if j == 0 || j == n { 1.0 } else { 2.0 };
            let s: f64 = (1..=n / 2)
                .map(|k| {
                    let b = if 2 * k == n { 1.0 } else { 2.0 };
                    b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * PI * (j * k) as f64 / n as f64).cos()
                })
                .sum();
            cj / n as f64 * (1.0 - s)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub r: f64,
    pub n: usize,
    /// Nodes in decreasing order, nodes[0] = R.
    pub nodes: Vec<f64>,
    /// Derivative of the even extension (result is odd).
    pub d_even: DMatrix<f64>,
    /// Derivative of the odd extension (result is even).
    pub d_odd: DMatrix<f64>,
    /// Second derivative of the even extension.
    pub d2_even: DMatrix<f64>,
    /// Quadrature weights on [0, R].
    pub weights: Vec<f64>,
    bary: Vec<f64>,
    /// cos(pi i / (2N - 1)) for i < 2(2N - 1).
    cos_table: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, r: f64) -> Result<Grid> {
        if !(16..=512).contains(&n) {
            return Err(Error::Config(format!("grid size must lie in [16, 512], got {n}")));
        }
        if !(r >= 0.5 && r.is_finite()) {
            return Err(Error::Config(format!("R must be at least 1/2, got {r}")));
        }
        let m = 2 * n;
        let (d, x) = cheb(m);
        let mut d_even = DMatrix::zeros(n, n);
        let mut d_odd = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                d_even[(i, k)] = (d[(i, k)] + d[(i, m - 1 - k)]) / r;
                d_odd[(i, k)] = (d[(i, k)] - d[(i, m - 1 - k)]) / r;
            }
        }
        let d2_even = &d_odd * &d_even;
        let w = clenshaw_curtis(m);
        let bary = (0..m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        Ok(Grid {
            r,
            n,
            nodes: x[..n].iter().map(|v| v * r).collect(),
            d_even,
            d_odd,
            d2_even,
            weights: w[..n].iter().map(|v| v * r).collect(),
            bary,
            cos_table: (0..2 * (m - 1)).map(|i| (PI * i as f64 / (m - 1) as f64).cos()).collect(),
        })
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    /// Largest |v| over the nodes, v^2 + c21 v - c12 = 0 being the
    /// characteristic speeds dy/ds of the principal part.
    pub fn max_speed(&self) -> f64 {
        self.nodes
            .iter()
            .map(|&y| {
                let c = coeffs(y, 7);
                let disc = (c.c21 * c.c21 + 4.0 * c.c12).max(0.0).sqrt();
                0.5 * (c.c21.abs() + disc)
            })
            .fold(0.0, f64::max)
    }

    pub fn max_stable_ds(&self) -> f64 {
        CFL * self.min_spacing() / self.max_speed()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.n, self.nodes.iter().map(|&y| f(y)))
    }

    /// Barycentric interpolation of even grid data at |y| <= R.
    pub fn interpolate(&self, v: &DVector<f64>, y: f64) -> f64 {
        let m = 2 * self.n;
        let x = y / self.r;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..m {
            let xj = if j < self.n { self.nodes[j] / self.r } else { -self.nodes[m - 1 - j] / self.r };
            let vj = if j < self.n { v[j] } else { v[m - 1 - j] };
            let dx = x - xj;
            if dx == 0.0 {
                return vj;
            }
            let t = self.bary[j] / dx;
            num += t * vj;
            den += t;
        }
        num / den
    }

    /// Quadrature-weighted L^2 inner product on [0, R].
    pub fn dot(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (0..self.n).map(|i| self.weights[i] * a[i] * b[i]).sum()
    }

    pub fn l2(&self, a: &DVector<f64>) -> f64 {
        self.dot(a, a).sqrt()
    }

    /// Chebyshev coefficients of the even extension in x = y / R, chopped
    /// after the last coefficient above CHOP times the largest one.
    fn chebyshev_coefficients(&self, v: &DVector<f64>) -> Vec<f64> {
        let m = 2 * self.n;
        let nn = (m - 1) as f64;
        let val = |j: usize| if j < self.n { v[j] } else { v[m - 1 - j] };
        let mut a: Vec<f64> = (0..m)
            .map(|k| {
                let s: f64 = (0..m)
                    .map(|j| {
                        let e = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                        e * val(j) * self.cos_table[(j * k) % (2 * (m - 1))]
                    })
                    .sum();
                let e = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
                2.0 * e * s / nn
            })
            .collect();
        let top = a.iter().fold(0.0f64, |t, x| t.max(x.abs()));
        let keep = a.iter().rposition(|x| x.abs() > CHOP * top).map_or(0, |i| i + 1);
        a.truncate(keep);
        a
    }

    /// sum_{k <= kmax} ||d^k v / dy^k||^2 for even v. Derivatives are taken
    /// on the chopped Chebyshev series, since repeated collocation
    /// differentiation amplifies rounding by roughly N^(2k).
    fn sobolev_sq(&self, v: &DVector<f64>, kmax: usize) -> f64 {
        let mut c = self.chebyshev_coefficients(v);
        let mut total = self.dot(v, v);
        for _ in 0..kmax {
            c = chebyshev_derivative(&c, self.r);
            let d = DVector::from_iterator(
                self.n,
                self.nodes.iter().map(|&y| chebyshev_eval(&c, y / self.r)),
            );
            total += self.dot(&d, &d);
        }
        total
    }
}

/// Relative size below which trailing Chebyshev coefficients count as noise.
pub const CHOP: f64 = 1e-13;

/// Coefficients of d/dy of sum c_k T_k(y / r).
fn chebyshev_derivative(c: &[f64], r: f64) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d.iter().map(|x| x / r).collect()
}

fn chebyshev_eval(c: &[f64], x: f64) -> f64 {
    // Clenshaw
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let t = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = t;
    }
    x * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

/// A state (phi1, phi2) at similarity time s.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub phi1: DVector<f64>,
    pub phi2: DVector<f64>,
    pub s: f64,
}

impl State {
    pub fn zero(n: usize) -> State {
        State {
            phi1: DVector::zeros(n),
            phi2: DVector::zeros(n),
            s: 0.0,
        }
    }

    pub fn from_vector(v: &DVector<f64>, s: f64) -> State {
        let n = v.len() / 2;
        State {
            phi1: v.rows(0, n).into_owned(),
            phi2: v.rows(n, n).into_owned(),
            s,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.phi1.len();
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&self.phi1);
        v.rows_mut(n, n).copy_from(&self.phi2);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.phi1.iter().chain(self.phi2.iter()).all(|x| x.is_finite())
    }

    /// Sampled eigenfunction f*_j = (f, (j + 2) f).
    pub fn mode(grid: &Grid, k: Mode) -> State {
        let f = grid.sample(|y| f_star(k, y));
        State {
            phi2: &f * (k.lambda() + 2.0),
            phi1: f,
            s: 0.0,
        }
    }

    /// Smooth even data: a sum of three Gaussians with random centers in
    /// [0, R/2], widths in [0.05, 0.2] and unit-scale amplitudes.
    pub fn random_even(grid: &Grid, amp: f64, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut comp = || {
            let terms: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.5 * grid.r), rng.gen_range(0.05..0.2)))
                .collect();
            grid.sample(|y| {
                terms
                    .iter()
                    .map(|&(a, c, w)| a * ((-((y - c) / w).powi(2)).exp() + (-((y + c) / w).powi(2)).exp()))
                    .sum::<f64>()
                    * amp
            })
        };
        let phi1 = comp();
        let phi2 = comp();
        State { phi1, phi2, s: 0.0 }
    }

    /// amp * exp(-y^2 / 0.05) in both components.
    pub fn bump(grid: &Grid, amp: f64) -> State {
        let f = grid.sample(|y| amp * (-y * y / 0.05).exp());
        State {
            phi1: f.clone(),
            phi2: f,
            s: 0.0,
        }
    }

    pub fn axpy(&self, a: f64, other: &State) -> State {
        State {
            phi1: &self.phi1 + &other.phi1 * a,
            phi2: &self.phi2 + &other.phi2 * a,
            s: self.s,
        }
    }
}

/// The state-space H^6 x H^5 norm on the grid.
pub fn sobolev_norm(grid: &Grid, st: &State) -> f64 {
    (grid.sobolev_sq(&st.phi1, 6) + grid.sobolev_sq(&st.phi2, 5)).sqrt()
}

/// The linear operator and the nonlinearity weight sampled on a grid.
#[derive(Clone, Debug)]
pub struct Operator {
    pub grid: Grid,
    /// 2N x 2N matrix of the linear part acting on (phi1, phi2).
    pub matrix: DMatrix<f64>,
    pub w: DVector<f64>,
}

impl Operator {
    pub fn assemble(grid: &Grid) -> Operator {
        let n = grid.n;
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        let mut w = DVector::zeros(n);
        for i in 0..n {
            let c = coeffs(grid.nodes[i], 7);
            w[i] = c.w;
            a[(i, i)] = -2.0;
            a[(i, n + i)] = 1.0;
            for k in 0..n {
                a[(n + i, k)] = c.c11 * grid.d_even[(i, k)] + c.c12 * grid.d2_even[(i, k)];
                a[(n + i, n + k)] = c.c21 * grid.d_even[(i, k)];
            }
            a[(n + i, i)] += c.v;
            a[(n + i, n + i)] += c.c20 - 2.0;
        }
        Operator {
            grid: grid.clone(),
            matrix: a,
            w,
        }
    }

    pub fn new(n: usize, r: f64) -> Result<Operator> {
        Ok(Operator::assemble(&Grid::new(n, r)?))
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }
}

/// Linear rate (phi2 - 2 phi1, c11 phi1' + c12 phi1'' + (c20 - 2) phi2 + c21 phi2' + V phi1).
pub fn apply_linear(op: &Operator, st: &State) -> State {
    State::from_vector(&(&op.matrix * st.to_vector()), st.s)
}

/// Nonlinear rate (0, w phi1^2).
pub fn apply_nonlinear(op: &Operator, st: &State) -> State {
    State {
        phi1: DVector::zeros(op.n()),
        phi2: op.w.component_mul(&st.phi1.component_mul(&st.phi1)),
        s: st.s,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzFit {
    pub pairs: usize,
    /// Largest observed ||N(f) - N(g)|| / ((||f|| + ||g||) ||f - g||).
    pub constant: f64,
}

/// Empirical Lipschitz constant of the nonlinearity in the discrete norm.
pub fn lipschitz_surrogate(op: &Operator, pairs: usize, seed: u64) -> LipschitzFit {
    let g = &op.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: f64 = 0.0;
    for _ in 0..pairs {
        let a = State::random_even(g, rng.gen_range(1e-3..1.0), rng.gen());
        let b = State::random_even(g, rng.gen_range(1e-3..1.0), rng.gen());
        let na = apply_nonlinear(op, &a);
        let nb = apply_nonlinear(op, &b);
        let num = sobolev_norm(g, &na.axpy(-1.0, &nb));
        let den = (sobolev_norm(g, &a) + sobolev_norm(g, &b)) * sobolev_norm(g, &a.axpy(-1.0, &b));
        c = c.max(num / den);
    }
    LipschitzFit { pairs, constant: c }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiation_exact_on_even_polynomials() {
        let g = Grid::new(32, 0.5).unwrap();
        let p = g.sample(|y| 1.0 + 3.0 * y * y - 2.0 * y.powi(8) + y.powi(16));
        let dp = &g.d_even * &p;
        let d2p = &g.d2_even * &p;
        for (i, &y) in g.nodes.iter().enumerate() {
            let e1 = 6.0 * y - 16.0 * y.powi(7) + 16.0 * y.powi(15);
            let e2 = 6.0 - 112.0 * y.powi(6) + 240.0 * y.powi(14);
            assert!((dp[i] - e1).abs() < 1e-10, "{y}");
            // second differences amplify rounding by ~N^4 at the endpoint
            assert!((d2p[i] - e2).abs() < 1e-7, "{y}");
        }
        let q = g.sample(|y| y.powi(3) - y);
        let dq = &g.d_odd * &q;
        for (i, &y) in g.nodes.iter().enumerate() {
            assert!((dq[i] - (3.0 * y * y - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_and_interpolation() {
        let g = Grid::new(24, 1.0).unwrap();
        let s: f64 = g.weights.iter().zip(&g.nodes).map(|(w, y)| w * y.powi(4)).sum();
        assert!((s - 0.2).abs() < 1e-13);
        let v = g.sample(|y| (y * y).cos());
        for y in [0.0, 0.123, 0.77] {
            assert!((g.interpolate(&v, y) - (y * y).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn step_limit_tracks_characteristic_speed() {
        let a = Grid::new(96, 0.5).unwrap();
        let b = Grid::new(96, 1.0).unwrap();
        assert!((a.max_speed() - 1.5).abs() < 1e-6, "{}", a.max_speed());
        assert!(a.max_stable_ds() > 1e-3);
        assert!(b.max_stable_ds() < 0.5 * a.max_stable_ds() * 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(Grid::new(8, 0.5).is_err());
        assert!(Grid::new(32, 0.4).is_err());
        assert!(Grid::new(600, 1.0).is_err());
    }

    #[test]
    fn nonlinearity_is_quadratic() {
        let op = Operator::new(24, 0.5).unwrap();
        let a = State::random_even(&op.grid, 1.0, 3);
        let n1 = apply_nonlinear(&op, &a);
        let n2 = apply_nonlinear(&op, &a.axpy(1.0, &a));
        assert!((&n2.phi2 - &n1.phi2 * 4.0).norm() <= 1e-14 * n1.phi2.norm() * 4.0);
        assert_eq!(apply_nonlinear(&op, &State::zero(24)).phi2.norm(), 0.0);
    }
}
