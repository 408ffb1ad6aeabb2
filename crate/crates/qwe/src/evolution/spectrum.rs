//! Discrete spectrum of the assembled operator, its validation across two
//! resolutions, and mode amplitudes from left eigenvectors.

use super::{Operator, State};
use crate::error::{Error, Result};
use crate::profiles::Mode;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

pub fn discrete_spectrum(op: &Operator) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = op.matrix.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    ev
}

fn nearest(ev: &[Complex64], target: f64) -> Complex64 {
    *ev.iter()
        .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
        .expect("nonempty spectrum")
}

/// Inverse iteration for the eigenvector of `a` at the real eigenvalue `mu`.
fn inverse_iteration(a: &DMatrix<f64>, mu: f64) -> Result<DVector<f64>> {
    let m = a.nrows();
    // a small offset keeps the factorization regular
    let shift = mu + 1e-9 * mu.abs().max(1.0);
    let lu = (a - DMatrix::identity(m, m) * shift).lu();
    let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    for _ in 0..4 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Internal("singular shifted operator".into()))?;
        v /= v.norm();
    }
    Ok(v)
}

/// Right eigenvector normalized against sampled f*_j, left eigenvector and
/// the pairing between them.
#[derive(Clone, Debug)]
pub struct ModeProjector {
    pub mode: Mode,
    pub eigenvalue: Complex64,
    pub right: DVector<f64>,
    pub left: DVector<f64>,
    pairing: f64,
    /// Relative weighted L^2 distance between `right` and sampled f*_j.
    pub eigvec_error: f64,
}

impl ModeProjector {
    pub fn new(op: &Operator, spectrum: &[Complex64], k: Mode) -> Result<ModeProjector> {
        let j = k.lambda();
        let ev = nearest(spectrum, j);
        if (ev - j).norm() > 1e-3 {
            return Err(Error::SpectralMismatch(format!("nearest discrete eigenvalue to {j} is {ev}")));
        }
        let mut right = inverse_iteration(&op.matrix, ev.re)?;
        let left = inverse_iteration(&op.matrix.transpose(), ev.re)?;
        let target = State::mode(&op.grid, k);
        let rs = State::from_vector(&right, 0.0);
        let g = &op.grid;
        let c = (g.dot(&rs.phi1, &target.phi1) + g.dot(&rs.phi2, &target.phi2))
            / (g.dot(&rs.phi1, &rs.phi1) + g.dot(&rs.phi2, &rs.phi2));
        right *= c;
        let rs = State::from_vector(&right, 0.0);
        let diff = rs.axpy(-1.0, &target);
        let eigvec_error = ((g.dot(&diff.phi1, &diff.phi1) + g.dot(&diff.phi2, &diff.phi2))
            / (g.dot(&target.phi1, &target.phi1) + g.dot(&target.phi2, &target.phi2)))
        .sqrt();
        let pairing = left.dot(&right);
        Ok(ModeProjector {
            mode: k,
            eigenvalue: ev,
            right,
            left,
            pairing,
            eigvec_error,
        })
    }

    /// a with P_j(state) = a * right.
    pub fn amplitude(&self, v: &DVector<f64>) -> f64 {
        self.left.dot(v) / self.pairing
    }

    pub fn right_state(&self) -> State {
        State::from_vector(&self.right, 0.0)
    }
}

/// Projectors onto the lambda = 1 and lambda = 4 modes of one operator.
#[derive(Clone, Debug)]
pub struct FilterCoefficients {
    pub one: ModeProjector,
    pub four: ModeProjector,
}

impl FilterCoefficients {
    pub fn new(op: &Operator) -> Result<FilterCoefficients> {
        let ev = discrete_spectrum(op);
        Ok(FilterCoefficients {
            one: ModeProjector::new(op, &ev, Mode::One)?,
            four: ModeProjector::new(op, &ev, Mode::Four)?,
        })
    }

    /// (a1, a4).
    pub fn amplitudes(&self, st: &State) -> (f64, f64) {
        let v = st.to_vector();
        (self.one.amplitude(&v), self.four.amplitude(&v))
    }

    /// The state with both unstable components removed.
    pub fn filter(&self, st: &State) -> State {
        let (a1, a4) = self.amplitudes(st);
        st.axpy(-a1, &self.one.right_state()).axpy(-a4, &self.four.right_state())
    }
}

/// Riesz amplitudes (a1, a4) of a state for the discretized operator.
pub fn riesz_amplitudes(st: &State, op: &Operator) -> Result<(f64, f64)> {
    Ok(FilterCoefficients::new(op)?.amplitudes(st))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscreteEigenvalue {
    pub re: f64,
    pub im: f64,
    /// Distance to the nearest eigenvalue at the companion resolution.
    pub resolution_shift: f64,
}

#[derive(Clone, Debug)]
pub struct DiscreteSpectrum {
    pub n: usize,
    pub companion_n: usize,
    pub eigenvalues: Vec<DiscreteEigenvalue>,
}

/// Eigenvalues at N with their shift against resolution `companion_n`.
pub fn compare_resolutions(n: usize, companion_n: usize, r: f64) -> Result<DiscreteSpectrum> {
    let a = discrete_spectrum(&Operator::new(n, r)?);
    let b = discrete_spectrum(&Operator::new(companion_n, r)?);
    let eigenvalues = a
        .iter()
        .map(|z| DiscreteEigenvalue {
            re: z.re,
            im: z.im,
            resolution_shift: b.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min),
        })
        .collect();
    Ok(DiscreteSpectrum {
        n,
        companion_n,
        eigenvalues,
    })
}

pub const STABLE_SHIFT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub r: f64,
    pub resolutions: Vec<usize>,
    /// Distance of the discrete eigenvalue nearest 1 (resp. 4), per resolution.
    pub error_one: Vec<f64>,
    pub error_four: Vec<f64>,
    pub eigvec_error_one: Vec<f64>,
    pub eigvec_error_four: Vec<f64>,
    /// Largest real part among resolution-stable eigenvalues other than 1, 4.
    pub leading_stable: [f64; 2],
    pub omega_gap: f64,
    pub stable_count: usize,
}

/// Validated spectrum at two resolutions: the unstable pair, eigenvector
/// errors and the gap over the resolution-stable remainder.
pub fn validate_spectrum(na: usize, nb: usize, r: f64) -> Result<SpectrumReport> {
    let mut error_one = vec![];
    let mut error_four = vec![];
    let mut ev1 = vec![];
    let mut ev4 = vec![];
    let mut spectra = vec![];
    for n in [na, nb] {
        let op = Operator::new(n, r)?;
        let ev = discrete_spectrum(&op);
        let one = ModeProjector::new(&op, &ev, Mode::One)?;
        let four = ModeProjector::new(&op, &ev, Mode::Four)?;
        error_one.push((one.eigenvalue - 1.0).norm());
        error_four.push((four.eigenvalue - 4.0).norm());
        ev1.push(one.eigvec_error);
        ev4.push(four.eigvec_error);
        spectra.push(ev);
    }
    let mut lead = Complex64::new(f64::NEG_INFINITY, 0.0);
    let mut count = 0;
    for z in &spectra[1] {
        if (z - 1.0).norm() < STABLE_SHIFT || (z - 4.0).norm() < STABLE_SHIFT {
            continue;
        }
        let shift = spectra[0].iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
        if shift < STABLE_SHIFT {
            count += 1;
            if z.re > lead.re {
                lead = *z;
            }
        }
    }
    Ok(SpectrumReport {
        r,
        resolutions: vec![na, nb],
        error_one,
        error_four,
        eigvec_error_one: ev1,
        eigvec_error_four: ev4,
        leading_stable: [lead.re, lead.im],
        omega_gap: -lead.re,
        stable_count: count,
    })
}
