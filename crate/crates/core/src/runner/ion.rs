//! Trapped-ion crystal: spin-dependent force on the centre-of-mass mode.

use super::{Budget, Scenario};
use crate::control_filters::{ControlProtocol, FilterMode};
use crate::error::{Error, Result};
use crate::estimators::{BackendKind, EnsembleSpec, InitialState};
use crate::noise_models::{thermal_to_spectrum, ThermalModeSpectrum};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Largest accepted `|D|/ω_z`; the secular treatment assumes `|D| ≪ ω_z`.
const MAX_RELATIVE_DETUNING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParams {
    /// Centre-of-mass mode frequency (rad/s).
    pub omega_z: f64,
    /// Force gradient `Uδk` (N).
    pub u_dk: f64,
    /// Ion mass (kg).
    pub m_ion: f64,
    pub nbar: f64,
    /// Detuning `D = ω_z - μ` (rad/s).
    pub d: f64,
    pub n_qubits: usize,
    pub nu: f64,
    pub initial_state: InitialState,
}

impl IonParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("omega_z", self.omega_z), ("u_dk", self.u_dk), ("m_ion", self.m_ion), ("nu", self.nu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::invalid("nbar", format!("must be nonnegative, got {}", self.nbar)));
        }
        if self.n_qubits == 0 {
            return Err(Error::invalid("n_qubits", "need at least one ion"));
        }
        if !self.d.is_finite() || self.d == 0.0 {
            return Err(Error::invalid("D", "detuning must be finite and nonzero"));
        }
        if self.d.abs() > MAX_RELATIVE_DETUNING * self.omega_z {
            return Err(Error::invalid(
                "D",
                format!("|D| = {:e} exceeds {MAX_RELATIVE_DETUNING}·ω_z", self.d.abs()),
            ));
        }
        Ok(())
    }

    /// Spin-phonon coupling `g = Uδk/√(2ħMNω_z)` (rad/s).
    pub fn coupling(&self) -> f64 {
        self.u_dk / (2.0 * HBAR * self.m_ion * self.n_qubits as f64 * self.omega_z).sqrt()
    }

    /// Drive frequency `μ = ω_z - D`.
    pub fn mu(&self) -> f64 {
        self.omega_z - self.d
    }

    /// Displacement uncertainty per unit `Δb`: `ΔZ_c = ħΔb/(Uδk)`.
    pub fn dz_per_db(&self) -> f64 {
        HBAR / self.u_dk
    }

    /// Linear growth rate of `|Ψ|`, `2g²ω_z/|μ² - ω_z²|`.
    pub fn psi_rate(&self) -> f64 {
        let g = self.coupling();
        let mu = self.mu();
        2.0 * g * g * self.omega_z / (mu * mu - self.omega_z * self.omega_z).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonScenario {
    pub params: IonParams,
    pub scenario: Scenario,
    pub g: f64,
    pub mu: f64,
    /// `ΔZ_c = dz_per_db · Δb` (m per rad/s).
    pub dz_per_db: f64,
    /// Default detection-time window. Its upper end keeps `|Ψ| ≤ π/4`, before
    /// the twisting phase wraps and produces spurious revivals.
    pub window: (f64, f64),
}

impl IonScenario {
    pub fn dz_c(&self, delta_b: f64) -> f64 {
        self.dz_per_db * delta_b
    }
}

/// Thermal centre-of-mass mode, drive `y = cos μt` with `y₀ = 1 - cos Dt`,
/// fixed number of shots. Off-resonant terms near `2ω_z` are dropped
/// (secular filter mode); the backend follows the initial state.
pub fn ion_scenario(params: IonParams) -> Result<IonScenario> {
    params.validate()?;
    let g = params.coupling();
    let mu = params.mu();
    let spectrum = thermal_to_spectrum(ThermalModeSpectrum::new(g, params.omega_z, params.nbar)?);
    let protocol = ControlProtocol::ion_drive(mu, params.d)?.with_mode(FilterMode::RotatingWave {
        cutoff: 0.5 * params.omega_z,
    });
    let ensemble = EnsembleSpec {
        n_qubits: params.n_qubits,
        initial_state: params.initial_state,
    };
    let backend = match params.initial_state {
        InitialState::Css => BackendKind::CssClosedForm,
        InitialState::Oats { .. } => BackendKind::OatsCumulant,
    };
    let scenario = Scenario::new(ensemble, spectrum, protocol, Budget::FixedShots { nu: params.nu }, backend)?;
    let t_hi = std::f64::consts::FRAC_PI_4 / params.psi_rate();
    let t_lo = (1e-3 / params.d.abs()).min(1e-3 * t_hi);
    Ok(IonScenario {
        params,
        scenario,
        g,
        mu,
        dz_per_db: params.dz_per_db(),
        window: (t_lo, t_hi),
    })
}

/// `ΔZ_c ≃ Uδk / (2√ν M ω_z |D| √N)`.
pub fn ion_analytic_dzc(params: &IonParams) -> f64 {
    params.u_dk
        / (2.0 * params.nu.sqrt() * params.m_ion * params.omega_z * params.d.abs() * (params.n_qubits as f64).sqrt())
}
