//! Accumulated phase `φ(t)`, decay parameter `χ(t)` and bath-induced twisting
//! phase `Ψ(t)` of a collectively coupled ensemble:
//!
//! ```text
//! χ(t) = (1/2π) ∫₀^∞ dω F⁺(ω,t) S⁺(ω)
//! Ψ(t) = (1/2π) ∫₀^∞ dω Im F⁻(ω,t) S⁻(ω)
//! ```
//!
//! Spectral lines are summed analytically; the continuous part is integrated
//! adaptively. An independent time-domain evaluation through `C(τ)` serves as
//! an oracle for the frequency-domain path.

use rayon::prelude::*;

use crate::control_filters::ControlProtocol;
use crate::error::{Error, Result};
use crate::noise_models::{NoiseSpectrum, OhmicFamilySpectrum};
use crate::quadrature::{gauss_legendre, integrate_pair, QuadSettings};
use crate::special::{ln_gamma, one_minus_sinc};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChiPsi {
    pub chi: f64,
    pub psi: f64,
}

/// `χ(t)` and `Ψ(t)` from the spectrum. `χ` is resolved to relative tolerance
/// `tol`; `Ψ` to `tol · max(|Ψ|, |χ|)`, since both enter the moments as phases
/// and a nearly symmetric spectrum leaves `Ψ` at rounding level.
pub fn chi_psi(
    spectrum: &NoiseSpectrum,
    protocol: &ControlProtocol,
    t: f64,
    tol: f64,
) -> Result<ChiPsi> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(ChiPsi::default());
    }
    let mut out = ChiPsi::default();
    for line in spectrum.folded_lines() {
        if line.plus != 0.0 {
            out.chi += line.plus * protocol.f_plus(line.omega, t)?;
        }
        if line.minus != 0.0 {
            out.psi += line.minus * protocol.f_minus(line.omega, t)?.im;
        }
    }
    if spectrum.continuous().is_some() {
        let breakpoints = panel_breakpoints(spectrum, protocol, t);
        let two_pi = 2.0 * std::f64::consts::PI;
        let failure = std::cell::OnceCell::new();
        let r = integrate_pair(
            |w| {
                let (sp, sm) = spectrum.folded_density(w);
                if sp == 0.0 && sm == 0.0 {
                    return [0.0, 0.0];
                }
                match protocol.filters(w, t) {
                    Ok((fp, im_fm)) => {
                        let psi = if sm == 0.0 { 0.0 } else { im_fm * sm / two_pi };
                        [fp * sp / two_pi, psi]
                    }
                    Err(e) => {
                        let _ = failure.set(e);
                        [0.0, 0.0]
                    }
                }
            },
            &breakpoints,
            QuadSettings {
                cross_weight: 1.0,
                ..QuadSettings::with_rel_tol(tol)
            },
            "chi_psi",
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let r = r?;
        out.chi += r.value[0];
        out.psi += r.value[1];
    }
    Ok(out)
}

/// Panels that resolve both the filter oscillation (period `2π/t` in ω) and
/// the structure of the density.
fn panel_breakpoints(spectrum: &NoiseSpectrum, protocol: &ControlProtocol, t: f64) -> Vec<f64> {
    let top = spectrum.support_limit();
    let (knots, scale) = spectrum.density_breakpoints();
    let mut h = (std::f64::consts::PI / t).min(scale);
    if top / h > MAX_PANELS as f64 {
        h = top / MAX_PANELS as f64;
    }
    let count = (top / h).ceil() as usize;
    let mut points: Vec<f64> = (0..count).map(|k| k as f64 * h).collect();
    points.push(top);
    points.extend(knots.into_iter().filter(|&k| k > 0.0 && k < top));
    points.extend(protocol.y_frequencies().into_iter().filter(|&k| k > 0.0 && k < top));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Time-domain evaluation from the correlation function:
///
/// ```text
/// χ(t) = 2 ∫₀ᵗ ds ∫₀ˢ du y(s) y(u) Re C(s-u)
/// Ψ(t) =   ∫₀ᵗ ds ∫₀ˢ du y(s) y(u) Im C(s-u)
/// ```
///
/// computed with composite Gauss–Legendre rules whose panel count is doubled
/// until both channels settle to `1e-10` relative.
pub fn chi_psi_time_domain_oracle(
    spectrum: &NoiseSpectrum,
    protocol: &ControlProtocol,
    t: f64,
) -> Result<ChiPsi> {
    if t == 0.0 {
        return Ok(ChiPsi::default());
    }
    let fastest = spectrum
        .lines()
        .iter()
        .map(|l| l.omega.abs())
        .chain(protocol.y_frequencies())
        .chain(spectrum.continuous().map(|_| {
            let (_, scale) = spectrum.density_breakpoints();
            if scale.is_finite() { scale } else { spectrum.support_limit() }
        }))
        .fold(0.0, f64::max);
    let mut panels = ((fastest * t / 2.0).ceil() as usize).max(1);
    let (x, w) = gauss_legendre(16);
    let mut previous = ordered_double_integral(spectrum, protocol, t, panels, &x, &w);
    for _ in 0..8 {
        panels *= 2;
        let current = ordered_double_integral(spectrum, protocol, t, panels, &x, &w);
        let settled = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-10 * scale.max(1e-300);
        let scale = current.chi.abs().max(current.psi.abs());
        if settled(current.chi, previous.chi, current.chi.abs().max(1e-6 * scale))
            && settled(current.psi, previous.psi, current.psi.abs().max(1e-6 * scale))
        {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::NonConvergence {
        operation: "chi_psi_time_domain_oracle",
        error: (previous.chi.abs() + previous.psi.abs()) * 1e-10,
        tolerance: 0.0,
    })
}

fn ordered_double_integral(
    spectrum: &NoiseSpectrum,
    protocol: &ControlProtocol,
    t: f64,
    panels: usize,
    x: &[f64],
    w: &[f64],
) -> ChiPsi {
    let h = t / panels as f64;
    let rule = |a: f64, b: f64| {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(w).map(move |(xi, wi)| (c + r * xi, r * wi))
    };
    let mut re = 0.0;
    let mut im = 0.0;
    for p in 0..panels {
        for (s, ws) in rule(p as f64 * h, (p + 1) as f64 * h) {
            let ys = protocol.y.eval(s);
            let mut inner = num_complex::Complex64::new(0.0, 0.0);
            let full = (s / h).floor() as usize;
            for q in 0..=full {
                let a = q as f64 * h;
                let b = (a + h).min(s);
                if b <= a {
                    continue;
                }
                for (u, wu) in rule(a, b) {
                    inner += wu * protocol.y.eval(u) * spectrum.correlation_function(s - u);
                }
            }
            re += ws * ys * inner.re;
            im += ws * ys * inner.im;
        }
    }
    ChiPsi {
        chi: 2.0 * re,
        psi: im,
    }
}

/// Secular closed forms for a thermal mode driven by `y = cos μt` with
/// `D = ω_z - μ`:
/// `χ = 8(g/D)²(n̄+½) sin²(Dt/2)`, `Ψ = 2g²ω_z t (1 - sinc Dt)/(μ² - ω_z²)`.
pub fn ion_closed_form(g: f64, omega_z: f64, nbar: f64, mu: f64, d: f64, t: f64) -> ChiPsi {
    let s = (0.5 * d * t).sin();
    ChiPsi {
        chi: 8.0 * (g / d).powi(2) * (nbar + 0.5) * s * s,
        psi: 2.0 * g * g * omega_z * t * one_minus_sinc(d * t) / (mu * mu - omega_z * omega_z),
    }
}

/// `(χ₀, Ψ₀)` with `χ ≈ (χ₀t)²` and `Ψ ≈ (Ψ₀t)³` at short times for a vacuum
/// ohmic-family bath under free evolution.
pub fn short_time_anchors(spec: &OhmicFamilySpectrum) -> (f64, f64) {
    if spec.alpha() == 0.0 {
        return (0.0, 0.0);
    }
    let ln_alpha = spec.alpha().ln();
    let chi0 = spec.omega_c() * (0.5 * (ln_alpha + ln_gamma(spec.s() + 1.0))).exp();
    let psi0 = -spec.omega_c() * ((ln_alpha + ln_gamma(spec.s() + 2.0) - 6f64.ln()) / 3.0).exp();
    (chi0, psi0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    FrequencyDomain,
    TimeDomain,
    ClosedForm,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::FrequencyDomain => "frequency_domain",
            Provenance::TimeDomain => "time_domain",
            Provenance::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DephasingTrajectory {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub chi: Vec<f64>,
    pub psi: Vec<f64>,
    pub provenance: Provenance,
}

/// Sample `φ = b∫y₀`, `χ`, `Ψ` on the caller's grid (evaluated in parallel).
pub fn trajectory(
    spectrum: &NoiseSpectrum,
    protocol: &ControlProtocol,
    b: f64,
    times: &[f64],
    tol: f64,
) -> Result<DephasingTrajectory> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("times", "sample times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "sample times must be strictly increasing"));
    }
    let values = times
        .par_iter()
        .map(|&t| chi_psi(spectrum, protocol, t, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(DephasingTrajectory {
        times: times.to_vec(),
        phi: times.iter().map(|&t| b * protocol.y0_integral(t)).collect(),
        chi: values.iter().map(|v| v.chi).collect(),
        psi: values.iter().map(|v| v.psi).collect(),
        provenance: Provenance::FrequencyDomain,
    })
}
