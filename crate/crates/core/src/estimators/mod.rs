//! Collective-spin moments `⟨Jy⟩`, `⟨Jy²⟩`, `∂⟨Jy⟩/∂b` and the frequency
//! uncertainty
//!
//! ```text
//! Δb = ν^{-1/2} ΔJy / |∂⟨Jy⟩/∂b|
//! ```
//!
//! from three backends: the closed form for a coherent spin state, a
//! second-order cumulant closed form for one-axis twisted states, and exact
//! propagation in the Dicke basis.

pub mod css;
pub mod dicke;
pub mod oats;
pub mod qfunction;
pub mod squeezing;
pub mod wigner;

pub use css::{css_moments, css_uncertainty};
pub use dicke::{
    dicke_djy_db, dicke_evolve, dicke_moments, dicke_prepare, initial_amplitudes, DickeBands,
    DickeState, EnsembleSpec, InitialState, DEFAULT_MAX_QUBITS,
};
pub use oats::oats_moments_cumulant;
pub use qfunction::q_function;
pub use squeezing::{optimal_squeezing_angles, SqueezingAngles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    CssClosedForm,
    OatsCumulant,
    DickeExact,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::CssClosedForm => "css_closed_form",
            BackendKind::OatsCumulant => "oats_cumulant",
            BackendKind::DickeExact => "dicke_exact",
        }
    }
}

/// Moments at a given `φ`. `djy_db` is the derivative with respect to `b`;
/// backends that do not know `∫y₀` report it per unit `∫y₀` (i.e. `∂⟨Jy⟩/∂φ`),
/// see [`MomentSet::with_y0_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub jy: f64,
    pub jy2: f64,
    pub djy_db: f64,
    pub backend: BackendKind,
}

impl MomentSet {
    pub fn variance(&self) -> f64 {
        self.jy2 - self.jy * self.jy
    }

    /// Apply the chain rule `∂φ/∂b = ∫₀ᵗ y₀`.
    pub fn with_y0_integral(mut self, y0_integral: f64) -> Self {
        self.djy_db *= y0_integral;
        self
    }
}

/// Second moments of the state with the free-precession phase removed
/// (`φ = 0`). Precession by `φ` rotates them about `z`:
/// `⟨Jy⟩_φ = cos φ ⟨Jy⟩ + sin φ ⟨Jx⟩` and
/// `⟨Jy²⟩_φ = cos²φ ⟨Jy²⟩ + sin²φ ⟨Jx²⟩ + cos φ sin φ ⟨{Jx,Jy}⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProfile {
    pub jx: f64,
    pub jy: f64,
    pub jx2: f64,
    pub jy2: f64,
    pub jxy: f64,
    pub backend: BackendKind,
}

impl PhaseProfile {
    /// Moments at precession phase `φ`; `djy_db` is per unit `∫y₀`.
    pub fn at(&self, phi: f64) -> MomentSet {
        let (s, c) = phi.sin_cos();
        MomentSet {
            jy: c * self.jy + s * self.jx,
            jy2: c * c * self.jy2 + s * s * self.jx2 + c * s * self.jxy,
            djy_db: c * self.jx - s * self.jy,
            backend: self.backend,
        }
    }

    /// `φ` in `[-π/2, π/2]` minimizing `ΔJy²/(∂⟨Jy⟩/∂φ)²`, with the ratio.
    pub fn optimal_phase(&self) -> (f64, f64) {
        optimize_phase(|phi| {
            let m = self.at(phi);
            let d = m.djy_db;
            if d == 0.0 {
                f64::INFINITY
            } else {
                m.variance() / (d * d)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyFlag {
    /// Signal contrast underflowed; the uncertainty is beyond representable range.
    EffectivelyInfinite,
    /// The backend returned a negative variance or non-finite moments.
    NonPhysicalMoments,
}

impl UncertaintyFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            UncertaintyFlag::EffectivelyInfinite => "effectively_infinite",
            UncertaintyFlag::NonPhysicalMoments => "non_physical_moments",
        }
    }
}

/// `Δb` with its logarithm kept finite when the value itself overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uncertainty {
    pub value: f64,
    pub ln_value: f64,
    pub flag: Option<UncertaintyFlag>,
}

impl Uncertainty {
    pub fn from_ln(ln_value: f64) -> Self {
        let value = ln_value.exp();
        let flag = if !value.is_finite() {
            Some(UncertaintyFlag::EffectivelyInfinite)
        } else {
            None
        };
        Uncertainty {
            value: if flag.is_some() { f64::INFINITY } else { value },
            ln_value,
            flag,
        }
    }

    pub fn flagged(flag: UncertaintyFlag) -> Self {
        Uncertainty {
            value: f64::INFINITY,
            ln_value: f64::INFINITY,
            flag: Some(flag),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flag.is_none()
    }

    pub fn scaled(self, factor: f64) -> Self {
        if self.flag.is_some() {
            return Uncertainty {
                ln_value: self.ln_value + factor.ln(),
                ..self
            };
        }
        Uncertainty {
            value: self.value * factor,
            ln_value: self.ln_value + factor.ln(),
            flag: None,
        }
    }
}

/// `Δb` from moments whose `djy_db` is already per unit `b`, with `ν` repetitions.
pub fn uncertainty_from_moments(m: &MomentSet, nu: f64, n_qubits: usize) -> Uncertainty {
    let var = m.variance();
    let n2 = (n_qubits * n_qubits) as f64;
    if !(var.is_finite() && m.djy_db.is_finite()) || var < -1e-12 * n2 {
        return Uncertainty::flagged(UncertaintyFlag::NonPhysicalMoments);
    }
    if m.djy_db == 0.0 {
        return Uncertainty::flagged(UncertaintyFlag::EffectivelyInfinite);
    }
    let var = var.max(0.0);
    Uncertainty::from_ln(0.5 * var.ln() - m.djy_db.abs().ln() - 0.5 * nu.ln())
}

/// Minimize `f` over one period `[-π/2, π/2]`: 181-point sweep, then golden
/// section between the neighbours of the best sample.
pub fn optimize_phase<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    use std::f64::consts::FRAC_PI_2;
    const POINTS: usize = 181;
    let step = 2.0 * FRAC_PI_2 / (POINTS - 1) as f64;
    let grid = |i: usize| -FRAC_PI_2 + i as f64 * step;
    let (best, value) = (0..POINTS)
        .map(|i| (i, f(grid(i))))
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((POINTS / 2, f64::INFINITY));
    if !value.is_finite() {
        return (grid(best), value);
    }
    let lo = grid(best) - step;
    let hi = grid(best) + step;
    let (x, v) = golden_section(&f, lo, hi, 1e-10);
    if v <= value { (x, v) } else { (grid(best), value) }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]` to
/// absolute width `tol`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}
