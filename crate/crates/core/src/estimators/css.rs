//! Coherent-spin-state closed forms.

use super::{BackendKind, MomentSet, PhaseProfile, Uncertainty, UncertaintyFlag};
use crate::error::{Error, Result};
use crate::special::ln_abs_cos;

/// Smallest representable contrast factor `cos^{2N-2}Ψ` before the
/// uncertainty is reported as effectively infinite.
const CONTRAST_FLOOR: f64 = 1e-300;

/// `cos^k(x)` for integer `k ≥ 0`, through logarithms so that large `k` underflows cleanly.
pub(crate) fn cos_pow(x: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (l, s) = ln_abs_cos(x);
    let sign = if k % 2 == 0 { 1.0 } else { s };
    sign * (k as f64 * l).exp()
}

/// Moments of an initially coherent spin state (`djy_db` per unit `∫y₀`).
pub fn css_moments(n: usize, phi: f64, chi: f64, psi: f64) -> MomentSet {
    css_profile(n, chi, psi).at(phi)
}

pub(crate) fn css_profile(n: usize, chi: f64, psi: f64) -> PhaseProfile {
    let nf = n as f64;
    let jx = 0.5 * nf * (-0.5 * chi).exp() * cos_pow(psi, n - 1);
    let contrast = if n >= 2 {
        (nf - 1.0) * (-2.0 * chi).exp() * cos_pow(2.0 * psi, n - 2)
    } else {
        0.0
    };
    PhaseProfile {
        jx,
        jy: 0.0,
        jx2: nf / 8.0 * (nf + 1.0 + contrast),
        jy2: nf / 8.0 * (nf + 1.0 - contrast),
        jxy: 0.0,
        backend: BackendKind::CssClosedForm,
    }
}

/// Optimal-phase uncertainty of an initial coherent spin state:
///
/// ```text
/// Δb² = [(N+1)e^χ - (N-1)e^{-χ} cos^{N-2}2Ψ] / [2Nν (∫y₀)² cos^{2N-2}Ψ]
/// ```
///
/// evaluated in log form; `t` is only used to label errors.
pub fn css_uncertainty(
    n: usize,
    t: f64,
    chi: f64,
    psi: f64,
    y0_integral: f64,
    nu: f64,
) -> Result<Uncertainty> {
    if n == 0 {
        return Err(Error::invalid("n_qubits", "need at least one qubit"));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid("nu", format!("repetitions must be positive, got {nu}")));
    }
    if y0_integral == 0.0 {
        return Err(Error::DegenerateProtocol { t });
    }
    if !(chi.is_finite() && psi.is_finite()) {
        return Ok(Uncertainty::flagged(UncertaintyFlag::NonPhysicalMoments));
    }
    let nf = n as f64;
    let ln_numerator = if n == 1 {
        2f64.ln() + chi
    } else {
        let (l2, s2) = ln_abs_cos(2.0 * psi);
        let exponent = -chi + (nf - 2.0) * l2;
        let positive = n % 2 == 0 || s2 >= 0.0;
        if positive {
            (2.0 + (nf + 1.0) * chi.exp_m1() - (nf - 1.0) * exponent.exp_m1()).ln()
        } else {
            ((nf + 1.0) * chi.exp() + (nf - 1.0) * exponent.exp()).ln()
        }
    };
    let ln_contrast = if n == 1 { 0.0 } else { (2.0 * nf - 2.0) * ln_abs_cos(psi).0 };
    let ln_db = 0.5 * (ln_numerator - (2.0 * nf * nu).ln() - ln_contrast) - y0_integral.abs().ln();
    if ln_contrast < CONTRAST_FLOOR.ln() {
        return Ok(Uncertainty {
            value: f64::INFINITY,
            ln_value: ln_db,
            flag: Some(UncertaintyFlag::EffectivelyInfinite),
        });
    }
    Ok(Uncertainty::from_ln(ln_db))
}
