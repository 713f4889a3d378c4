//! One-axis twisted states under second-order cumulant truncation.
//!
//! The initial state is `e^{-iβJx} e^{-iθJz²/2}|+⟩^{⊗N}`. Expectation values
//! over the spectator qubits are expanded to second order in cumulants, which
//! is accurate for small `θ` and `Ψ` (the regime around the optimal detection
//! time) and degrades as `NΨ²` grows.

use super::{BackendKind, MomentSet, PhaseProfile};
use crate::error::{Error, Result};

/// Moments for an initial twisted state (`djy_db` per unit `∫y₀`). Needs `N ≥ 3`.
pub fn oats_moments_cumulant(
    n: usize,
    theta: f64,
    beta: f64,
    phi: f64,
    chi: f64,
    psi: f64,
) -> Result<MomentSet> {
    Ok(oats_profile(n, theta, beta, chi, psi)?.at(phi))
}

pub(crate) fn oats_profile(n: usize, theta: f64, beta: f64, chi: f64, psi: f64) -> Result<PhaseProfile> {
    if n < 3 {
        return Err(Error::IncompatibleBackend {
            backend: BackendKind::OatsCumulant.as_str(),
            reason: format!("{n} qubits (needs at least 3)"),
        });
    }
    let nf = n as f64;
    let ni = n as i32;
    let (sb, cb) = beta.sin_cos();
    let (sh, ch) = (0.5 * theta).sin_cos();
    let cos_half = |k: i32| ch.powi(k);
    let cq2 = (0.5 * beta).cos().powi(2);
    let sq2 = (0.5 * beta).sin().powi(2);
    let sin_2b = (2.0 * beta).sin();
    let th2 = theta * theta;

    // Spectator moments with one qubit singled out.
    let psi_var_1 = (nf - 1.0)
        * psi
        * psi
        * (1.0
            + (nf - 2.0)
                * (0.5 * sb * sb * (1.0 - theta.cos().powi(ni - 3)) + sin_2b * sh * cos_half(ni - 3)));
    let re_1 = 0.5 * (nf - 1.0) * psi * (cb + (nf - 2.0) * sb * sh * cos_half(ni - 3));
    let contrast = (-th2 * (nf - 1.0) / 8.0).exp() * (cq2 * (-theta * re_1).exp() + sq2 * (theta * re_1).exp())
        + sb * (0.5 * (nf - 1.0) * theta * sb * cos_half(ni - 2) * psi).sin();
    let jx = 0.5 * nf * (-0.5 * chi).exp() * (-0.5 * psi_var_1).exp() * contrast;

    // Spectator moments with two qubits singled out.
    let zeta1 = 0.5 * (nf - 2.0) * psi * (cb + (nf - 3.0) * sb * sh * cos_half(ni - 4));
    let zeta2 = -0.5 * (nf - 2.0) * psi * sb * cos_half(ni - 3);
    let psi_var_2 = (nf - 2.0)
        * psi
        * psi
        * (1.0
            + (nf - 3.0)
                * (0.5 * sb * sb * (1.0 - theta.cos().powi(ni - 4)) + sin_2b * sh * cos_half(ni - 4)));
    let g8 = (-(nf - 2.0) * th2 / 8.0).exp();
    let g2 = (-(nf - 2.0) * th2 / 2.0).exp();
    let upsilon1 = (1.0 + cb * cb) / 8.0 - 0.25 * g8 * sin_2b * sh + 0.125 * g2 * sb * sb;
    let upsilon2 = (0.25 * sb * sb
        + 0.25 * (cq2 * cq2 * (-4.0 * theta * zeta1).exp() + sq2 * sq2 * (4.0 * theta * zeta1).exp()) * g2
        - 0.5 * cq2 * sq2 * (4.0 * theta * zeta2).cos()
        + 0.5
            * sb
            * (cq2 * (0.5 * theta * (1.0 - 4.0 * zeta2)).sin() * (-2.0 * theta * zeta1).exp()
                - sq2 * (0.5 * theta * (1.0 + 4.0 * zeta2)).sin() * (2.0 * theta * zeta1).exp())
            * g8)
        * (-2.0 * psi_var_2).exp();

    let pairs = 0.5 * nf * (nf - 1.0);
    let damped = (-2.0 * chi).exp() * upsilon2;
    Ok(PhaseProfile {
        jx,
        jy: 0.0,
        jx2: 0.25 * nf + pairs * (upsilon1 + damped),
        jy2: 0.25 * nf + pairs * (upsilon1 - damped),
        jxy: 0.0,
        backend: BackendKind::OatsCumulant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::css_moments;

    #[test]
    fn untwisted_noiseless_state_is_coherent() {
        for n in [3usize, 8, 50] {
            for phi in [0.0, 0.3, 1.2] {
                for chi in [0.0, 0.4] {
                    let o = oats_moments_cumulant(n, 0.0, 0.0, phi, chi, 0.0).unwrap();
                    let c = css_moments(n, phi, chi, 0.0);
                    assert!((o.jy - c.jy).abs() < 1e-12 * n as f64);
                    assert!((o.jy2 - c.jy2).abs() < 1e-12 * (n * n) as f64);
                    assert!((o.djy_db - c.djy_db).abs() < 1e-12 * n as f64);
                }
            }
        }
    }

    #[test]
    fn untwisted_state_with_twisting_noise_is_gaussian_approximation() {
        // With Ψ ≠ 0 the truncation replaces cos^{N-1}Ψ by exp[-(N-1)Ψ²/2].
        let (n, psi) = (40usize, 0.01);
        let o = oats_moments_cumulant(n, 0.0, 0.0, 0.5, 0.0, psi).unwrap();
        let c = css_moments(n, 0.5, 0.0, psi);
        let expected = c.jy * (-(n as f64 - 1.0) * psi * psi / 2.0).exp() / psi.cos().powi(n as i32 - 1);
        assert!((o.jy - expected).abs() < 1e-12);
        assert!((o.jy / c.jy - 1.0).abs() < 1e-5);
    }

    #[test]
    fn requires_three_qubits() {
        assert!(oats_moments_cumulant(2, 0.1, 0.1, 0.0, 0.0, 0.0).is_err());
    }
}
