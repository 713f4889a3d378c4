//! Husimi Q-function `Q(ϑ,γ) = ⟨ϑ,γ|ρ|ϑ,γ⟩` on the Bloch sphere.
//!
//! `|ϑ,γ⟩ = exp[-iϑ(Jx sin γ - Jy cos γ)]|J,-J⟩` has Dicke amplitudes
//! `√C(N,k) sin^k(ϑ/2) cos^{N-k}(ϑ/2) e^{-ikγ}`; `ϑ = 0` is the south pole and
//! `(π/2, 0)` points along `+x`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::dicke::DickeState;
use crate::special::{ln_binomial, ln_factorials};

/// Magnitudes of the coherent-state amplitudes at polar angle `ϑ`.
fn coherent_magnitudes(n: usize, table: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = (0.5 * theta).sin_cos();
    let (ls, lc) = (s.abs().ln(), c.abs().ln());
    (0..=n)
        .map(|k| {
            let sin_part = if k == 0 { 0.0 } else { k as f64 * ls };
            let cos_part = if k == n { 0.0 } else { (n - k) as f64 * lc };
            let sign = if k % 2 == 1 && s < 0.0 { -1.0 } else { 1.0 }
                * if (n - k) % 2 == 1 && c < 0.0 { -1.0 } else { 1.0 };
            sign * (0.5 * ln_binomial(table, n, k) + sin_part + cos_part).exp()
        })
        .collect()
}

/// `Q` on the grid, one row per `ϑ`. Rows are computed in parallel.
pub fn q_function(state: &DickeState, theta_grid: &[f64], gamma_grid: &[f64]) -> Vec<Vec<f64>> {
    let n = state.n_qubits();
    let rho = state.rho();
    let table = ln_factorials(n);
    theta_grid
        .par_iter()
        .map(|&theta| {
            let r = coherent_magnitudes(n, &table, theta);
            // c_d = Σ_{k₁-k₂=d} r_{k₁} r_{k₂} ρ_{k₁k₂}, for d ≥ 0; negative d are conjugates.
            let diagonals: Vec<Complex64> = (0..=n)
                .map(|d| (0..=n - d).map(|k| r[k + d] * r[k] * rho[(k + d, k)]).sum())
                .collect();
            gamma_grid
                .iter()
                .map(|&gamma| {
                    let mut q = diagonals[0].re;
                    for (d, c) in diagonals.iter().enumerate().skip(1) {
                        q += 2.0 * (c * Complex64::from_polar(1.0, d as f64 * gamma)).re;
                    }
                    q
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::dicke::{dicke_evolve, dicke_prepare, EnsembleSpec};
    use std::f64::consts::PI;

    #[test]
    fn coherent_state_self_overlap_and_antipode() {
        let s = dicke_prepare(&EnsembleSpec::css(30), 100).unwrap();
        let q = q_function(&s, &[PI / 2.0], &[0.0, PI]);
        assert!((q[0][0] - 1.0).abs() < 1e-12);
        assert!(q[0][1].abs() < 1e-12);
        // Precession by φ moves the peak to γ = φ.
        let e = dicke_evolve(&s, 0.8, 0.0, 0.0);
        let q = q_function(&e, &[PI / 2.0], &[0.8]);
        assert!((q[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_on_grid() {
        let s = dicke_evolve(&dicke_prepare(&EnsembleSpec::oats(20, 0.2, 1.2), 100).unwrap(), 0.3, 0.1, 0.05);
        let (nt, ng) = (200, 200);
        let thetas: Vec<f64> = (0..nt).map(|i| (i as f64 + 0.5) * PI / nt as f64).collect();
        let gammas: Vec<f64> = (0..ng).map(|i| i as f64 * 2.0 * PI / ng as f64).collect();
        let q = q_function(&s, &thetas, &gammas);
        let cell = (PI / nt as f64) * (2.0 * PI / ng as f64);
        let total: f64 = q
            .iter()
            .zip(&thetas)
            .map(|(row, th)| row.iter().sum::<f64>() * th.sin() * cell)
            .sum();
        assert!((total * 21.0 / (4.0 * PI) - 1.0).abs() < 1e-3);
        assert!(q.iter().flatten().all(|v| *v >= -1e-12 && *v <= 1.0 + 1e-12));
    }
}
