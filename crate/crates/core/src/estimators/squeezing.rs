//! Initial one-axis twisted state with minimal `ΔJy²`.
//!
//! For a twisting strength `θ`, the variance of `Jy` after `e^{-iβJx}` is
//! `cos²β Y + sin²β Z - 2 sinβ cosβ C` with `Y = ⟨Jy²⟩`, `Z = ⟨Jz²⟩ = N/4` and
//! `C = ⟨{Jy,Jz}⟩/2` in the twisted state, so `β` is optimal in closed form and
//! only `θ` is searched numerically.

use num_complex::Complex64;

use super::dicke::css_amplitudes;
use super::golden_section;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingAngles {
    pub theta: f64,
    pub beta: f64,
    /// `ΔJy²` of the prepared state.
    pub variance: f64,
}

/// Minimal rotated variance and the rotation angle achieving it, for twist `θ`.
pub fn min_variance_for_twist(n: usize, theta: f64) -> (f64, f64) {
    let j = 0.5 * n as f64;
    let psi: Vec<Complex64> = css_amplitudes(n)
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            let m = k as f64 - j;
            a * Complex64::from_polar(1.0, -0.5 * theta * m * m)
        })
        .collect();
    let raising = |k: usize| (((n - k) * (k + 1)) as f64).sqrt();
    // Jy|ψ⟩ = (J₊ - J₋)|ψ⟩ / 2i
    let jy_psi: Vec<Complex64> = (0..=n)
        .map(|k| {
            let up = if k > 0 { raising(k - 1) * psi[k - 1] } else { Complex64::new(0.0, 0.0) };
            let down = if k < n { raising(k) * psi[k + 1] } else { Complex64::new(0.0, 0.0) };
            (up - down) / Complex64::new(0.0, 2.0)
        })
        .collect();
    let y: f64 = jy_psi.iter().map(|v| v.norm_sqr()).sum();
    let c: f64 = jy_psi
        .iter()
        .zip(&psi)
        .enumerate()
        .map(|(k, (v, p))| (v.conj() * p).re * (k as f64 - j))
        .sum();
    let z = 0.25 * n as f64;
    let half_gap = 0.5 * (y - z);
    let variance = 0.5 * (y + z) - (half_gap * half_gap + c * c).sqrt();
    let beta = 0.5 * c.atan2(-half_gap);
    (variance, beta)
}

/// Twist and rotation angles minimizing the initial `ΔJy²` (`N ≥ 2`).
///
/// The variance is invariant under `θ → 2π - θ`, so `θ` is searched on
/// `(0, π]`: a logarithmic plus linear scan, then golden-section refinement.
pub fn optimal_squeezing_angles(n: usize) -> SqueezingAngles {
    assert!(n >= 2, "squeezing needs at least two qubits");
    let mut grid: Vec<f64> = (0..=400).map(|i| 10f64.powf(-5.0 + 5.0 * i as f64 / 400.0) * std::f64::consts::PI).collect();
    grid.extend((1..200).map(|i| i as f64 * std::f64::consts::PI / 200.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&t| min_variance_for_twist(n, t).0).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (theta, _) = golden_section(&|t| min_variance_for_twist(n, t).0, lo, hi, 1e-13 * hi.max(1e-3));
    let (variance, beta) = min_variance_for_twist(n, theta);
    SqueezingAngles { theta, beta, variance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untwisted_state_has_coherent_variance() {
        let (v, _) = min_variance_for_twist(10, 0.0);
        assert!((v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn squeezing_beats_coherent_state() {
        for n in [3usize, 10, 40] {
            let a = optimal_squeezing_angles(n);
            assert!(a.variance < 0.25 * n as f64, "n = {n}");
        }
    }
}
