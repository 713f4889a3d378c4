//! Noise environments described by their spectrum `S(ω) = ∫dt e^{-iωt} C(t)`.
//!
//! A [`NoiseSpectrum`] holds an optional continuous density plus discrete
//! lines. A line `(ω_j, w_j)` contributes `w_j e^{iω_j τ}` to the correlation
//! function and `2π w_j δ(ω - ω_j)` to `S(ω)`. Downstream code works with the
//! even and odd combinations `S±(ω) = S(ω) ± S(-ω)` on `ω ≥ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{require_finite, Error, Result};
use crate::special::gamma;

/// Ohmic-family density `I(Ω) = α ω_c^{1-s} Ω^s e^{-Ω/ω_c}` of a bosonic bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicFamilySpectrum {
    alpha: f64,
    s: f64,
    omega_c: f64,
}

impl OhmicFamilySpectrum {
    pub fn new(alpha: f64, s: f64, omega_c: f64) -> Result<Self> {
        require_finite("alpha", alpha)?;
        require_finite("s", s)?;
        require_finite("omega_c", omega_c)?;
        if alpha < 0.0 {
            return Err(Error::invalid("alpha", "coupling must be nonnegative"));
        }
        if s < 0.0 {
            return Err(Error::invalid("s", "spectral exponent must be nonnegative"));
        }
        if omega_c <= 0.0 {
            return Err(Error::invalid("omega_c", "cutoff must be positive"));
        }
        Ok(OhmicFamilySpectrum { alpha, s, omega_c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// `I(Ω)` for `Ω ≥ 0`, zero for negative arguments.
    pub fn density(&self, omega: f64) -> f64 {
        if omega < 0.0 || self.alpha == 0.0 {
            return 0.0;
        }
        let x = omega / self.omega_c;
        let power = if self.s == 0.0 { 1.0 } else { x.powf(self.s) };
        self.alpha * self.omega_c * power * (-x).exp()
    }

    /// `∫₀^∞ I(Ω) dΩ = α ω_c² Γ(s+1)`.
    pub fn total_weight(&self) -> f64 {
        self.alpha * self.omega_c * self.omega_c * gamma(self.s + 1.0)
    }

    /// Frequency beyond which the density is negligible (below `e^{-50}` of its scale).
    pub fn effective_cutoff(&self) -> f64 {
        self.omega_c * (self.s + 50.0 + 10.0 * (self.s + 1.0).sqrt())
    }
}

/// A single bosonic mode of frequency `ω_z` in a thermal state with mean
/// occupation `n̄`, coupled through `B(t) = 2g(a† e^{iω_z t} + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalModeSpectrum {
    g: f64,
    omega_mode: f64,
    nbar: f64,
}

impl ThermalModeSpectrum {
    pub fn new(g: f64, omega_mode: f64, nbar: f64) -> Result<Self> {
        require_finite("g", g)?;
        require_finite("omega_mode", omega_mode)?;
        require_finite("nbar", nbar)?;
        if omega_mode <= 0.0 {
            return Err(Error::invalid("omega_mode", "mode frequency must be positive"));
        }
        if nbar < 0.0 {
            return Err(Error::invalid("nbar", "occupation must be nonnegative"));
        }
        Ok(ThermalModeSpectrum { g, omega_mode, nbar })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn omega_mode(&self) -> f64 {
        self.omega_mode
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// `C(τ) = 4g²[(n̄+1) e^{-iω_z τ} + n̄ e^{iω_z τ}]`.
    pub fn correlation(&self, tau: f64) -> Complex64 {
        let g2 = 4.0 * self.g * self.g;
        let phase = Complex64::from_polar(1.0, self.omega_mode * tau);
        g2 * ((self.nbar + 1.0) * phase.conj() + self.nbar * phase)
    }
}

/// User-supplied spectrum sampled at increasing frequencies, linearly
/// interpolated in between and zero outside the sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpectrum {
    omega: Vec<f64>,
    value: Vec<f64>,
}

impl TabulatedSpectrum {
    pub fn new(omega: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if omega.len() != value.len() {
            return Err(Error::invalid("tabulated", "frequency and value columns differ in length"));
        }
        if omega.len() < 2 {
            return Err(Error::invalid("tabulated", "need at least two samples"));
        }
        if omega.iter().chain(&value).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tabulated", "samples must be finite"));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tabulated", "frequencies must be strictly increasing"));
        }
        if let Some(v) = value.iter().find(|v| **v < 0.0) {
            return Err(Error::invalid("tabulated", format!("spectral weight {v} is negative")));
        }
        Ok(TabulatedSpectrum { omega, value })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn eval(&self, w: f64) -> f64 {
        interpolate(&self.omega, &self.value, w)
    }
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let (first, last) = (x[0], x[x.len() - 1]);
    if at < first || at > last {
        return 0.0;
    }
    let i = x.partition_point(|&v| v <= at).clamp(1, x.len() - 1);
    let (x0, x1) = (x[i - 1], x[i]);
    // Symmetric form: mirrored tables interpolate to bitwise-identical values.
    (y[i - 1] * (x1 - at) + y[i] * (at - x0)) / (x1 - x0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub omega: f64,
    pub weight: f64,
}

/// Line contributions folded onto `ω ≥ 0`: `plus` enters `S⁺`, `minus` enters `S⁻`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldedLine {
    pub omega: f64,
    pub plus: f64,
    pub minus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousPart {
    /// Vacuum bath with ohmic-family density: `S(ω) = 2π I(-ω)`, so that
    /// `S⁺ = 2πI` and `S⁻ = -2πI` on `ω > 0`.
    OhmicVacuum(OhmicFamilySpectrum),
    Tabulated(TabulatedSpectrum),
}

/// Union of the absolute sample frequencies of a table: `S±` are linear
/// between consecutive knots (with a possible jump at a table end).
fn folded_knots(table: &TabulatedSpectrum) -> Vec<f64> {
    let mut knots: Vec<f64> = table.omega.iter().map(|w| w.abs()).collect();
    knots.push(0.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    continuous: Option<ContinuousPart>,
    knots: Vec<f64>,
    lines: Vec<SpectralLine>,
    label: String,
}

impl NoiseSpectrum {
    pub fn new(
        continuous: Option<ContinuousPart>,
        lines: Vec<SpectralLine>,
        label: impl Into<String>,
    ) -> Result<Self> {
        for line in &lines {
            require_finite("line.omega", line.omega)?;
            require_finite("line.weight", line.weight)?;
            if line.weight < 0.0 {
                return Err(Error::invalid("line.weight", "spectral weight must be nonnegative"));
            }
        }
        let knots = match &continuous {
            Some(ContinuousPart::Tabulated(t)) => folded_knots(t),
            _ => Vec::new(),
        };
        Ok(NoiseSpectrum {
            continuous,
            knots,
            lines,
            label: label.into(),
        })
    }

    pub fn zero() -> Self {
        NoiseSpectrum {
            continuous: None,
            knots: Vec::new(),
            lines: Vec::new(),
            label: "zero".into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn continuous(&self) -> Option<&ContinuousPart> {
        self.continuous.as_ref()
    }

    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    /// Density part of `S(ω)` (lines excluded).
    pub fn density(&self, omega: f64) -> f64 {
        match &self.continuous {
            None => 0.0,
            Some(ContinuousPart::OhmicVacuum(o)) => 2.0 * PI * o.density(-omega),
            Some(ContinuousPart::Tabulated(t)) => t.eval(omega),
        }
    }

    /// `S⁺(ω)` density part for `ω ≥ 0`.
    pub fn s_plus(&self, omega: f64) -> f64 {
        self.folded_density(omega).0
    }

    /// `S⁻(ω)` density part for `ω ≥ 0`.
    pub fn s_minus(&self, omega: f64) -> f64 {
        self.folded_density(omega).1
    }

    /// `(S⁺(ω), S⁻(ω))` of the continuous part, `ω ≥ 0`.
    pub fn folded_density(&self, omega: f64) -> (f64, f64) {
        match &self.continuous {
            None => (0.0, 0.0),
            Some(ContinuousPart::OhmicVacuum(o)) => {
                let v = 2.0 * PI * o.density(omega);
                (v, -v)
            }
            Some(ContinuousPart::Tabulated(t)) => {
                let (a, b) = (t.eval(omega), t.eval(-omega));
                (a + b, a - b)
            }
        }
    }

    /// Lines folded onto `ω ≥ 0`, merging `±ω` pairs.
    pub fn folded_lines(&self) -> Vec<FoldedLine> {
        let mut out: Vec<FoldedLine> = Vec::new();
        for line in &self.lines {
            let w = line.omega.abs();
            let sign = if line.omega > 0.0 {
                1.0
            } else if line.omega < 0.0 {
                -1.0
            } else {
                0.0
            };
            match out.iter_mut().find(|f| f.omega == w) {
                Some(f) => {
                    f.plus += line.weight;
                    f.minus += sign * line.weight;
                }
                None => out.push(FoldedLine {
                    omega: w,
                    plus: line.weight,
                    minus: sign * line.weight,
                }),
            }
        }
        out
    }

    /// Upper end of the support of the continuous part on `ω ≥ 0`.
    pub fn support_limit(&self) -> f64 {
        match &self.continuous {
            None => 0.0,
            Some(ContinuousPart::OhmicVacuum(o)) => o.effective_cutoff(),
            Some(ContinuousPart::Tabulated(_)) => self.knots.last().copied().unwrap_or(0.0),
        }
    }

    /// Frequencies at which the continuous part has kinks, plus its natural
    /// scale, used to seed quadrature panels.
    pub(crate) fn density_breakpoints(&self) -> (Vec<f64>, f64) {
        match &self.continuous {
            None => (Vec::new(), f64::INFINITY),
            Some(ContinuousPart::OhmicVacuum(o)) => (Vec::new(), o.omega_c()),
            Some(ContinuousPart::Tabulated(_)) => (self.knots.clone(), f64::INFINITY),
        }
    }

    /// `C(τ) = (1/2π)∫dω e^{iωτ} S(ω) + Σ_j w_j e^{iω_j τ}`, evaluated in
    /// closed form for every supported continuous part.
    pub fn correlation_function(&self, tau: f64) -> Complex64 {
        let lines: Complex64 = self
            .lines
            .iter()
            .map(|l| l.weight * Complex64::from_polar(1.0, l.omega * tau))
            .sum();
        let density = match &self.continuous {
            None => Complex64::new(0.0, 0.0),
            Some(ContinuousPart::OhmicVacuum(o)) => {
                if o.alpha() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let base = Complex64::new(1.0, o.omega_c() * tau);
                    o.total_weight() * base.powf(-(o.s() + 1.0))
                }
            }
            Some(ContinuousPart::Tabulated(t)) => {
                let sum: Complex64 = t
                    .omega
                    .windows(2)
                    .zip(t.value.windows(2))
                    .map(|(w, v)| linear_segment_transform(w[0], w[1], v[0], v[1], tau))
                    .sum();
                sum / (2.0 * PI)
            }
        };
        lines + density
    }
}

/// `∫_a^b (linear from fa to fb) e^{iωτ} dω`, exact.
fn linear_segment_transform(a: f64, b: f64, fa: f64, fb: f64, tau: f64) -> Complex64 {
    let h = b - a;
    let x = tau * h;
    let (e0, e1) = phase_moments(x);
    Complex64::from_polar(h, tau * a) * (fa * e0 + (fb - fa) * e1)
}

/// `(∫₀¹ e^{ixu} du, ∫₀¹ u e^{ixu} du)`.
fn phase_moments(x: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    if x.abs() < 0.5 {
        let mut e0 = Complex64::new(0.0, 0.0);
        let mut e1 = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..30 {
            let nf = n as f64;
            e0 += term / (nf + 1.0);
            e1 += term / (nf + 2.0);
            term *= i * x / (nf + 1.0);
        }
        (e0, e1)
    } else {
        let ex = Complex64::from_polar(1.0, x);
        let e0 = (ex - 1.0) / (i * x);
        let e1 = ex / (i * x) - (ex - 1.0) / ((i * x) * (i * x));
        (e0, e1)
    }
}

/// Vacuum ohmic bath: `S⁺ = 2πI`, `S⁻ = -2πI` on `ω > 0`.
pub fn ohmic_to_spectrum(spec: OhmicFamilySpectrum) -> NoiseSpectrum {
    NoiseSpectrum {
        label: format!("ohmic(alpha={}, s={}, omega_c={})", spec.alpha, spec.s, spec.omega_c),
        continuous: Some(ContinuousPart::OhmicVacuum(spec)),
        knots: Vec::new(),
        lines: Vec::new(),
    }
}

/// Thermal mode as two lines: `4g²(n̄+1)` at `-ω_z` (emission) and `4g²n̄` at `+ω_z`.
pub fn thermal_to_spectrum(spec: ThermalModeSpectrum) -> NoiseSpectrum {
    let g2 = 4.0 * spec.g * spec.g;
    NoiseSpectrum {
        label: format!(
            "thermal_mode(g={}, omega_z={}, nbar={})",
            spec.g, spec.omega_mode, spec.nbar
        ),
        continuous: None,
        knots: Vec::new(),
        lines: vec![
            SpectralLine {
                omega: -spec.omega_mode,
                weight: g2 * (spec.nbar + 1.0),
            },
            SpectralLine {
                omega: spec.omega_mode,
                weight: g2 * spec.nbar,
            },
        ],
    }
}

pub fn tabulated_to_spectrum(table: TabulatedSpectrum, label: impl Into<String>) -> NoiseSpectrum {
    NoiseSpectrum {
        knots: folded_knots(&table),
        continuous: Some(ContinuousPart::Tabulated(table)),
        lines: Vec::new(),
        label: label.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_pair, QuadSettings};

    fn ohmic(alpha: f64, s: f64, wc: f64) -> NoiseSpectrum {
        ohmic_to_spectrum(OhmicFamilySpectrum::new(alpha, s, wc).unwrap())
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(OhmicFamilySpectrum::new(-1.0, 3.0, 1.0).is_err());
        assert!(OhmicFamilySpectrum::new(1.0, -0.5, 1.0).is_err());
        assert!(OhmicFamilySpectrum::new(1.0, 3.0, 0.0).is_err());
        assert!(ThermalModeSpectrum::new(1.0, 1.0, -0.1).is_err());
        assert!(TabulatedSpectrum::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedSpectrum::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn zero_coupling_gives_zero_spectra() {
        let s = ohmic(0.0, 3.0, 1.0);
        for w in [0.0, 0.5, 3.0] {
            assert_eq!(s.folded_density(w), (0.0, 0.0));
        }
        assert_eq!(s.correlation_function(0.7), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ohmic_value_at_cutoff() {
        let wc = 2.5;
        let s = ohmic(1.0, 3.0, wc);
        let expected = 2.0 * PI * wc * (-1.0f64).exp();
        assert!((s.s_plus(wc) - expected).abs() < 1e-14 * expected);
        assert_eq!(s.s_minus(wc), -s.s_plus(wc));
    }

    #[test]
    fn ohmic_total_weight_matches_quadrature() {
        let o = OhmicFamilySpectrum::new(0.7, 2.3, 1.8).unwrap();
        let s = ohmic_to_spectrum(o);
        let r = integrate_pair(
            |w| [s.s_plus(w) / (2.0 * PI), 0.0],
            &[0.0, 1.8, 5.0, 10.0, o.effective_cutoff()],
            QuadSettings::with_rel_tol(1e-12),
            "test",
        )
        .unwrap();
        assert!((r.value[0] - o.total_weight()).abs() < 1e-10 * o.total_weight());
        // Γ(3.3) = 2.683437381...
        assert!((o.total_weight() - 0.7 * 1.8 * 1.8 * 2.683_437_381_955_768).abs() < 1e-9);
    }

    #[test]
    fn ohmic_correlation_matches_transform() {
        let o = OhmicFamilySpectrum::new(1.0, 3.0, 1.0).unwrap();
        let s = ohmic_to_spectrum(o);
        for tau in [-1.3, 0.0, 0.4, 2.0] {
            let r = integrate_pair(
                |w| {
                    let v = o.density(w);
                    [v * (w * tau).cos(), -v * (w * tau).sin()]
                },
                &[0.0, 2.0, 5.0, 20.0, o.effective_cutoff()],
                QuadSettings::with_rel_tol(1e-12),
                "test",
            )
            .unwrap();
            let c = s.correlation_function(tau);
            assert!((c.re - r.value[0]).abs() < 1e-10, "tau = {tau}");
            assert!((c.im - r.value[1]).abs() < 1e-10, "tau = {tau}");
        }
        let c0 = s.correlation_function(0.0);
        assert!((c0.re - 6.0).abs() < 1e-12 && c0.im == 0.0);
    }

    #[test]
    fn thermal_lines_and_correlation() {
        let t = ThermalModeSpectrum::new(0.3, 5.0, 2.0).unwrap();
        let s = thermal_to_spectrum(t);
        for tau in [0.0, 0.37, -1.1] {
            let direct = 4.0 * 0.09
                * (3.0 * Complex64::from_polar(1.0, -5.0 * tau) + 2.0 * Complex64::from_polar(1.0, 5.0 * tau));
            let c = s.correlation_function(tau);
            assert!((c - direct).norm() < 1e-12 * direct.norm().max(1.0));
            assert!((c - t.correlation(tau)).norm() < 1e-12);
        }
        let folded = s.folded_lines();
        assert_eq!(folded.len(), 1);
        assert!((folded[0].plus - 0.36 * 5.0).abs() < 1e-14);
        assert!((folded[0].minus + 0.36).abs() < 1e-14);
    }

    #[test]
    fn thermal_vacuum_and_uncoupled_limits() {
        let s = thermal_to_spectrum(ThermalModeSpectrum::new(0.0, 5.0, 3.0).unwrap());
        assert!(s.lines().iter().all(|l| l.weight == 0.0));
        let s = thermal_to_spectrum(ThermalModeSpectrum::new(1.0, 5.0, 0.0).unwrap());
        let f = s.folded_lines()[0];
        assert_eq!(f.plus, 4.0);
        assert_eq!(f.minus, -4.0);
    }

    #[test]
    fn tabulated_folding_combines_both_signs() {
        let table = TabulatedSpectrum::new(vec![-2.0, -0.5, 1.0, 3.0], vec![1.0, 4.0, 2.0, 0.5]).unwrap();
        let s = tabulated_to_spectrum(table.clone(), "t");
        for w in [0.0, 0.25, 0.5, 0.8, 1.0, 1.7, 2.0, 2.5, 3.0, 3.5] {
            let (p, m) = s.folded_density(w);
            assert!((p - (table.eval(w) + table.eval(-w))).abs() < 1e-14, "w = {w}");
            assert!((m - (table.eval(w) - table.eval(-w))).abs() < 1e-14, "w = {w}");
        }
        assert_eq!(s.support_limit(), 3.0);
    }

    #[test]
    fn tabulated_correlation_matches_quadrature() {
        let table = TabulatedSpectrum::new(vec![-2.0, -0.5, 1.0, 3.0], vec![1.0, 4.0, 2.0, 0.5]).unwrap();
        let s = tabulated_to_spectrum(table.clone(), "t");
        for tau in [0.0, 0.01, 0.3, 4.0, -7.5] {
            let r = integrate_pair(
                |w| {
                    let v = table.eval(w) / (2.0 * PI);
                    [v * (w * tau).cos(), v * (w * tau).sin()]
                },
                &[-2.0, -0.5, 1.0, 3.0],
                QuadSettings::with_rel_tol(1e-13),
                "test",
            )
            .unwrap();
            let c = s.correlation_function(tau);
            assert!((c.re - r.value[0]).abs() < 1e-12, "tau = {tau}");
            assert!((c.im - r.value[1]).abs() < 1e-12, "tau = {tau}");
        }
    }

    #[test]
    fn classical_table_has_no_odd_part() {
        let table = TabulatedSpectrum::new(vec![-2.0, -1.0, 1.0, 2.0], vec![0.5, 3.0, 3.0, 0.5]).unwrap();
        let s = tabulated_to_spectrum(table, "even");
        for w in [0.0, 0.3, 1.0, 1.9] {
            assert_eq!(s.s_minus(w), 0.0);
        }
        let c = s.correlation_function(0.0);
        assert!(c.re > 0.0 && c.im.abs() < 1e-15);
    }
}
