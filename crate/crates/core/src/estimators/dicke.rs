//! Exact collective-spin dynamics in the symmetric Dicke sector `J = N/2`.
//!
//! Under collective Gaussian dephasing the reduced density matrix evolves
//! element-wise:
//!
//! ```text
//! ρ_{M₁M₂}(t) = ρ_{M₁M₂}(0) exp[-iφ(M₁-M₂) - iΨ(M₁²-M₂²) - χ(M₁-M₂)²/2]
//! ```
//!
//! The factor ½ on `χ` matches `χ = (1/2π)∫F⁺S⁺`: a single coherence
//! (`|M₁-M₂| = 1`) decays as `e^{-χ/2}`, as in the coherent-state moments.
//!
//! Amplitudes and matrix rows are indexed by `k = M + J`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::wigner::rotate_x;
use super::{BackendKind, MomentSet, PhaseProfile};
use crate::error::{Error, Result};
use crate::special::{ln_binomial, ln_factorials};

pub const DEFAULT_MAX_QUBITS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Css,
    /// `e^{-iβJx} e^{-iθJz²/2}|+⟩^{⊗N}`
    Oats { theta: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n_qubits: usize,
    pub initial_state: InitialState,
}

impl EnsembleSpec {
    pub fn css(n_qubits: usize) -> Self {
        EnsembleSpec {
            n_qubits,
            initial_state: InitialState::Css,
        }
    }

    pub fn oats(n_qubits: usize, theta: f64, beta: f64) -> Self {
        EnsembleSpec {
            n_qubits,
            initial_state: InitialState::Oats { theta, beta },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::invalid("n_qubits", "need at least one qubit"));
        }
        if let InitialState::Oats { theta, beta } = self.initial_state {
            if !(theta.is_finite() && beta.is_finite()) {
                return Err(Error::invalid("initial_state", "twisting angles must be finite"));
            }
            if self.n_qubits < 2 {
                return Err(Error::invalid("n_qubits", "twisting needs at least two qubits"));
            }
        }
        Ok(())
    }
}

/// `⟨J,M|+⟩^{⊗N} = 2^{-N/2} √C(N, k)`.
pub fn css_amplitudes(n: usize) -> Vec<f64> {
    let table = ln_factorials(n);
    let half_ln2 = 0.5 * n as f64 * 2f64.ln();
    let raw: Vec<f64> = (0..=n)
        .map(|k| (0.5 * ln_binomial(&table, n, k) - half_ln2).exp())
        .collect();
    // Remove the rounding accumulated in the log-factorial table.
    let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
    raw.into_iter().map(|a| a / norm).collect()
}

/// State vector of the prepared ensemble.
pub fn initial_amplitudes(spec: &EnsembleSpec, max_qubits: usize) -> Result<Vec<Complex64>> {
    spec.validate()?;
    if spec.n_qubits > max_qubits {
        return Err(Error::SizeLimit {
            n: spec.n_qubits,
            max: max_qubits,
        });
    }
    let n = spec.n_qubits;
    let j = 0.5 * n as f64;
    let css = css_amplitudes(n);
    match spec.initial_state {
        InitialState::Css => Ok(css.into_iter().map(|a| Complex64::new(a, 0.0)).collect()),
        InitialState::Oats { theta, beta } => {
            let twisted: Vec<Complex64> = css
                .iter()
                .enumerate()
                .map(|(k, &a)| {
                    let m = k as f64 - j;
                    a * Complex64::from_polar(1.0, -0.5 * theta * m * m)
                })
                .collect();
            Ok(rotate_x(&twisted, beta))
        }
    }
}

/// `√((N-k)(k+1))`: matrix element of `J₊` from `k` to `k+1`.
fn raising(n: usize, k: usize) -> f64 {
    (((n - k) * (k + 1)) as f64).sqrt()
}

/// Density matrix in the Dicke basis; Hermitian, unit trace and positive
/// semidefinite at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    n: usize,
    rho: DMatrix<Complex64>,
}

impl DickeState {
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self> {
        let dim = rho.nrows();
        if dim == 0 || rho.ncols() != dim {
            return Err(Error::invalid("rho", "density matrix must be square and nonempty"));
        }
        let trace: Complex64 = rho.diagonal().iter().sum();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::invalid("rho", format!("trace {trace} differs from 1")));
        }
        let asym = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| (rho[(i, j)] - rho[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if asym > 1e-10 {
            return Err(Error::invalid("rho", format!("not Hermitian (defect {asym:e})")));
        }
        let lowest = nalgebra::linalg::SymmetricEigen::new(rho.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if lowest < -1e-10 * trace.re {
            return Err(Error::NotPositive { trace: trace.re });
        }
        Ok(DickeState { n: dim - 1, rho })
    }

    pub fn from_amplitudes(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("amplitudes", format!("norm {norm} differs from 1")));
        }
        let dim = amplitudes.len();
        let rho = DMatrix::from_fn(dim, dim, |i, j| amplitudes[i] * amplitudes[j].conj());
        Ok(DickeState { n: dim - 1, rho })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> f64 {
        0.5 * self.n as f64
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.diagonal().iter().sum()
    }

    /// Collective moments of this state (no further precession).
    pub fn profile(&self) -> PhaseProfile {
        let n = self.n;
        let j = self.j();
        let mut jp = Complex64::new(0.0, 0.0);
        let mut jp2 = Complex64::new(0.0, 0.0);
        let mut jz2 = 0.0;
        for k in 0..=n {
            let m = k as f64 - j;
            jz2 += m * m * self.rho[(k, k)].re;
            if k < n {
                jp += raising(n, k) * self.rho[(k, k + 1)];
            }
            if k + 1 < n {
                jp2 += raising(n, k) * raising(n, k + 1) * self.rho[(k, k + 2)];
            }
        }
        profile_from_sums(j, jp, jp2, jz2)
    }
}

fn profile_from_sums(j: f64, jp: Complex64, jp2: Complex64, jz2: f64) -> PhaseProfile {
    let transverse = 2.0 * (j * (j + 1.0) - jz2);
    PhaseProfile {
        jx: jp.re,
        jy: jp.im,
        jx2: 0.25 * (transverse + 2.0 * jp2.re),
        jy2: 0.25 * (transverse - 2.0 * jp2.re),
        jxy: jp2.im,
        backend: BackendKind::DickeExact,
    }
}

pub fn dicke_prepare(spec: &EnsembleSpec, max_qubits: usize) -> Result<DickeState> {
    let amplitudes = initial_amplitudes(spec, max_qubits)?;
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let scale = 1.0 / norm.sqrt();
    let amplitudes: Vec<Complex64> = amplitudes.iter().map(|a| a * scale).collect();
    DickeState::new(DickeState::from_amplitudes(&amplitudes)?.rho)
}

fn evolution_factor(m1: f64, m2: f64, phi: f64, chi: f64, psi: f64) -> Complex64 {
    let d = m1 - m2;
    Complex64::from_polar((-0.5 * chi * d * d).exp(), -phi * d - psi * (m1 * m1 - m2 * m2))
}

pub fn dicke_evolve(state: &DickeState, phi: f64, chi: f64, psi: f64) -> DickeState {
    let j = state.j();
    let dim = state.n + 1;
    let rho = DMatrix::from_fn(dim, dim, |a, b| {
        if a == b {
            state.rho[(a, b)]
        } else {
            state.rho[(a, b)] * evolution_factor(a as f64 - j, b as f64 - j, phi, chi, psi)
        }
    });
    DickeState { n: state.n, rho }
}

/// `⟨Jy⟩`, `⟨Jy²⟩` of the state; `djy_db` is `Tr[Jy ∂ρ/∂φ]` per unit `∫y₀`.
pub fn dicke_moments(state: &DickeState) -> MomentSet {
    let p = state.profile();
    MomentSet {
        jy: p.jy,
        jy2: p.jy2,
        djy_db: p.jx,
        backend: BackendKind::DickeExact,
    }
}

/// `∂⟨Jy⟩/∂b = (∫y₀) Tr[Jy ∂ρ/∂φ]` with `∂ρ_{M₁M₂}/∂φ = -i(M₁-M₂) ρ_{M₁M₂}(t)`.
pub fn dicke_djy_db(state0: &DickeState, phi: f64, chi: f64, psi: f64, y0_integral: f64) -> f64 {
    let n = state0.n;
    let j = state0.j();
    // Only the first superdiagonal of ∂ρ/∂φ contributes to Tr[Jy ·].
    let trace: Complex64 = (0..n)
        .map(|k| {
            let (m1, m2) = (k as f64 - j, k as f64 + 1.0 - j);
            let rho_t = state0.rho[(k, k + 1)] * evolution_factor(m1, m2, phi, chi, psi);
            let d_rho = Complex64::new(0.0, -(m1 - m2)) * rho_t;
            raising(n, k) * d_rho
        })
        .sum();
    // Tr[Jy X] for a Hermitian X = Im Tr[J₊ X].
    y0_integral * trace.im
}

/// Pure initial state kept as amplitudes; moments after evolution only need
/// the three central bands of `ρ`, so each evaluation is `O(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeBands {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl DickeBands {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", "empty state"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("amplitudes", format!("norm {norm} differs from 1")));
        }
        Ok(DickeBands {
            n: amplitudes.len() - 1,
            amplitudes,
        })
    }

    pub fn prepare(spec: &EnsembleSpec, max_qubits: usize) -> Result<Self> {
        Self::new(initial_amplitudes(spec, max_qubits)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Moments of the evolved state with `φ = 0`.
    pub fn profile(&self, chi: f64, psi: f64) -> PhaseProfile {
        let n = self.n;
        let j = 0.5 * n as f64;
        let a = &self.amplitudes;
        let mut jp = Complex64::new(0.0, 0.0);
        let mut jp2 = Complex64::new(0.0, 0.0);
        let mut jz2 = 0.0;
        let (damp1, damp2) = ((-0.5 * chi).exp(), (-2.0 * chi).exp());
        for k in 0..=n {
            let m = k as f64 - j;
            jz2 += m * m * a[k].norm_sqr();
            if k < n {
                let phase = Complex64::from_polar(damp1, psi * (2.0 * m + 1.0));
                jp += raising(n, k) * a[k] * a[k + 1].conj() * phase;
            }
            if k + 1 < n {
                let phase = Complex64::from_polar(damp2, psi * (4.0 * m + 4.0));
                jp2 += raising(n, k) * raising(n, k + 1) * a[k] * a[k + 2].conj() * phase;
            }
        }
        profile_from_sums(j, jp, jp2, jz2)
    }

    pub fn moments(&self, phi: f64, chi: f64, psi: f64) -> MomentSet {
        self.profile(chi, psi).at(phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::css_moments;

    #[test]
    fn css_amplitudes_are_binomial() {
        let a = css_amplitudes(4);
        let expected = [1.0, 2.0, 6f64.sqrt(), 2.0, 1.0].map(|x| x / 4.0);
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        let total: f64 = css_amplitudes(1500).iter().map(|x| x * x).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn twisting_without_rotation_keeps_populations() {
        let a = initial_amplitudes(&EnsembleSpec::oats(9, 0.7, 0.0), 100).unwrap();
        for (x, y) in a.iter().zip(css_amplitudes(9)) {
            assert!((x.norm() - y).abs() < 1e-15);
        }
    }

    #[test]
    fn evolution_identity_and_diagonal() {
        let s = dicke_prepare(&EnsembleSpec::oats(6, 0.3, 0.4), 100).unwrap();
        assert_eq!(dicke_evolve(&s, 0.0, 0.0, 0.0), s);
        let e = dicke_evolve(&s, 0.7, 0.2, 0.9);
        for k in 0..=6 {
            assert_eq!(e.rho()[(k, k)], s.rho()[(k, k)]);
        }
        assert!((e.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn coherent_state_moments() {
        let s = dicke_prepare(&EnsembleSpec::css(2), 10).unwrap();
        let m = dicke_moments(&dicke_evolve(&s, std::f64::consts::FRAC_PI_2, 0.0, 0.0));
        assert!((m.jy - 1.0).abs() < 1e-14);
        let s = dicke_prepare(&EnsembleSpec::css(7), 10).unwrap();
        let (phi, chi, psi) = (0.4, 0.3, 0.2);
        let m = dicke_moments(&dicke_evolve(&s, phi, chi, psi));
        let c = css_moments(7, phi, chi, psi);
        assert!((m.jy - c.jy).abs() < 1e-13);
        assert!((m.jy2 - c.jy2).abs() < 1e-13);
    }

    #[test]
    fn bands_match_full_matrix() {
        let spec = EnsembleSpec::oats(11, 0.4, 1.1);
        let full = dicke_prepare(&spec, 100).unwrap();
        let bands = DickeBands::prepare(&spec, 100).unwrap();
        let (phi, chi, psi) = (0.3, 0.15, -0.07);
        let a = dicke_moments(&dicke_evolve(&full, phi, chi, psi));
        let b = bands.moments(phi, chi, psi);
        assert!((a.jy - b.jy).abs() < 1e-13);
        assert!((a.jy2 - b.jy2).abs() < 1e-13);
        assert!((a.djy_db - b.djy_db).abs() < 1e-13);
        let d = dicke_djy_db(&full, phi, chi, psi, 2.0);
        assert!((d - 2.0 * b.djy_db).abs() < 1e-13);
    }

    #[test]
    fn rejects_invalid_states() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(DickeState::new(m), Err(Error::NotPositive { .. })));
        assert!(matches!(
            dicke_prepare(&EnsembleSpec::css(3000), DEFAULT_MAX_QUBITS),
            Err(Error::SizeLimit { .. })
        ));
    }
}
