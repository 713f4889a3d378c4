//! Scenario assembly, detection-time sweeps and optimization.
//!
//! A [`Scenario`] fixes the ensemble, bath, control and read-out budget. The
//! [`Evaluator`] turns it into `Δb(t)`; [`uncertainty_curve`] samples a grid and
//! [`optimize_detection_time`] scans logarithmically before refining the
//! minimum by golden section in `ln t`.

mod fit;
mod ion;

pub use fit::{linear_fit, scaling_fit, ScalingFit};
pub use ion::{ion_analytic_dzc, ion_scenario, IonParams, IonScenario, HBAR};

use rayon::prelude::*;

use crate::control_filters::ControlProtocol;
use crate::dephasing::{chi_psi, ChiPsi, Provenance};
use crate::error::{Error, Result};
use crate::estimators::css::css_profile;
use crate::estimators::oats::oats_profile;
use crate::estimators::{
    css_uncertainty, golden_section, uncertainty_from_moments, BackendKind, DickeBands, EnsembleSpec,
    InitialState, PhaseProfile, Uncertainty, UncertaintyFlag, DEFAULT_MAX_QUBITS,
};
use crate::noise_models::NoiseSpectrum;

/// Relative tolerance of `χ`, `Ψ` inside sweeps. Golden-section refinement to
/// `1e-6` in `t` needs the objective smooth well below `1e-12`.
pub const SWEEP_TOLERANCE: f64 = 1e-11;
pub const DEFAULT_POINTS_PER_DECADE: usize = 400;
/// Relative width of the refined `t_opt` bracket.
pub const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// `ν = T/t` repetitions; reported values are `Δb√T`.
    FixedTotalTime { total_time: f64 },
    FixedShots { nu: f64 },
}

impl Budget {
    pub fn repetitions(&self, t: f64) -> f64 {
        match *self {
            Budget::FixedTotalTime { total_time } => total_time / t,
            Budget::FixedShots { nu } => nu,
        }
    }

    /// Factor applied to `Δb` before reporting.
    pub fn report_scale(&self) -> f64 {
        match *self {
            Budget::FixedTotalTime { total_time } => total_time.sqrt(),
            Budget::FixedShots { .. } => 1.0,
        }
    }

    pub fn reported_quantity(&self) -> &'static str {
        match self {
            Budget::FixedTotalTime { .. } => "delta_b_sqrt_T",
            Budget::FixedShots { .. } => "delta_b",
        }
    }

    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Budget::FixedTotalTime { total_time } => ("total_time", total_time),
            Budget::FixedShots { nu } => ("nu", nu),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(name, format!("budget must be positive, got {v}")))
        }
    }
}

/// Whether the bath-induced twisting phase is kept or dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiTreatment {
    #[default]
    Full,
    Zero,
}

impl PsiTreatment {
    pub fn as_str(self) -> &'static str {
        match self {
            PsiTreatment::Full => "full",
            PsiTreatment::Zero => "zero",
        }
    }
}

/// How the precession phase at read-out is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseMode {
    /// `φ` is tuned to the value minimizing `Δb` at each `t` (independent of `b`).
    #[default]
    Optimal,
    /// `φ = b∫y₀` with the scenario's `b`.
    FromSignal,
}

impl PhaseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseMode::Optimal => "optimal",
            PhaseMode::FromSignal => "from_signal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ensemble: EnsembleSpec,
    pub spectrum: NoiseSpectrum,
    pub protocol: ControlProtocol,
    /// True parameter value (rad/s); only used with [`PhaseMode::FromSignal`].
    pub b: f64,
    pub budget: Budget,
    pub backend: BackendKind,
    pub psi: PsiTreatment,
    pub phase: PhaseMode,
    pub tolerance: f64,
    pub max_qubits: usize,
}

impl Scenario {
    /// Scenario with optimal phase, full `Ψ` and default tolerances.
    pub fn new(
        ensemble: EnsembleSpec,
        spectrum: NoiseSpectrum,
        protocol: ControlProtocol,
        budget: Budget,
        backend: BackendKind,
    ) -> Result<Self> {
        let s = Scenario {
            ensemble,
            spectrum,
            protocol,
            b: 0.0,
            budget,
            backend,
            psi: PsiTreatment::Full,
            phase: PhaseMode::Optimal,
            tolerance: SWEEP_TOLERANCE,
            max_qubits: DEFAULT_MAX_QUBITS,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_psi(mut self, psi: PsiTreatment) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_backend(mut self, backend: BackendKind) -> Self {
        self.backend = backend;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        self.budget.validate()?;
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::invalid("tolerance", format!("must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.phase == PhaseMode::FromSignal && !self.b.is_finite() {
            return Err(Error::invalid("b", "signal must be finite"));
        }
        let n = self.ensemble.n_qubits;
        match (self.backend, self.ensemble.initial_state) {
            (BackendKind::CssClosedForm, InitialState::Css) => Ok(()),
            (BackendKind::CssClosedForm, _) => Err(Error::IncompatibleBackend {
                backend: self.backend.as_str(),
                reason: "a twisted initial state".into(),
            }),
            (BackendKind::OatsCumulant, InitialState::Oats { .. }) if n >= 3 => Ok(()),
            (BackendKind::OatsCumulant, InitialState::Oats { .. }) => Err(Error::IncompatibleBackend {
                backend: self.backend.as_str(),
                reason: format!("{n} qubits (needs at least 3)"),
            }),
            (BackendKind::OatsCumulant, InitialState::Css) => Err(Error::IncompatibleBackend {
                backend: self.backend.as_str(),
                reason: "a coherent initial state".into(),
            }),
            (BackendKind::DickeExact, _) if n > self.max_qubits => Err(Error::SizeLimit {
                n,
                max: self.max_qubits,
            }),
            (BackendKind::DickeExact, _) => Ok(()),
        }
    }

    pub fn angles(&self) -> Option<(f64, f64)> {
        match self.ensemble.initial_state {
            InitialState::Oats { theta, beta } => Some((theta, beta)),
            InitialState::Css => None,
        }
    }
}

/// One evaluated detection time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub chi_psi: ChiPsi,
    /// Read-out phase used (optimal or `b∫y₀`).
    pub phi: f64,
    /// Reported uncertainty (`Δb√T` for a fixed total time, `Δb` otherwise).
    pub delta_b: Uncertainty,
}

/// Evaluates `Δb(t)` for a scenario; prepares the Dicke state once.
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    bands: Option<DickeBands>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let bands = match scenario.backend {
            BackendKind::DickeExact => Some(DickeBands::prepare(&scenario.ensemble, scenario.max_qubits)?),
            _ => None,
        };
        Ok(Evaluator { scenario, bands })
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn chi_psi(&self, t: f64) -> Result<ChiPsi> {
        let s = self.scenario;
        let mut v = chi_psi(&s.spectrum, &s.protocol, t, s.tolerance)?;
        if s.psi == PsiTreatment::Zero {
            v.psi = 0.0;
        }
        Ok(v)
    }

    pub fn evaluate(&self, t: f64) -> Result<CurvePoint> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("detection time must be positive, got {t}")));
        }
        let cp = self.chi_psi(t)?;
        let (phi, delta_b) = self.uncertainty_at(t, cp)?;
        Ok(CurvePoint {
            t,
            chi_psi: cp,
            phi,
            delta_b: delta_b.scaled(self.scenario.budget.report_scale()),
        })
    }

    /// Raw `Δb` (not budget-normalized) given `χ`, `Ψ` at `t`.
    pub fn uncertainty_at(&self, t: f64, cp: ChiPsi) -> Result<(f64, Uncertainty)> {
        let s = self.scenario;
        let n = s.ensemble.n_qubits;
        let nu = s.budget.repetitions(t);
        let y0 = s.protocol.y0_integral(t);
        if y0 == 0.0 {
            return Err(Error::DegenerateProtocol { t });
        }
        if s.backend == BackendKind::CssClosedForm && s.phase == PhaseMode::Optimal {
            return Ok((0.0, css_uncertainty(n, t, cp.chi, cp.psi, y0, nu)?));
        }
        let profile = self.profile(cp)?;
        let phi = match s.phase {
            PhaseMode::Optimal => profile.optimal_phase().0,
            PhaseMode::FromSignal => s.b * y0,
        };
        let m = profile.at(phi).with_y0_integral(y0);
        Ok((phi, uncertainty_from_moments(&m, nu, n)))
    }

    fn profile(&self, cp: ChiPsi) -> Result<PhaseProfile> {
        let s = self.scenario;
        let n = s.ensemble.n_qubits;
        if !(cp.chi.is_finite() && cp.psi.is_finite()) {
            return Err(Error::invalid("chi_psi", "dephasing parameters must be finite"));
        }
        match (s.backend, s.ensemble.initial_state) {
            (BackendKind::CssClosedForm, _) => Ok(css_profile(n, cp.chi, cp.psi)),
            (BackendKind::OatsCumulant, InitialState::Oats { theta, beta }) => {
                oats_profile(n, theta, beta, cp.chi, cp.psi)
            }
            (BackendKind::DickeExact, _) => Ok(self
                .bands
                .as_ref()
                .expect("bands prepared for the exact backend")
                .profile(cp.chi, cp.psi)),
            (backend, _) => Err(Error::IncompatibleBackend {
                backend: backend.as_str(),
                reason: "the configured initial state".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMetadata {
    pub backend: BackendKind,
    pub provenance: Provenance,
    pub psi: PsiTreatment,
    pub phase: PhaseMode,
    pub budget: Budget,
    /// Twisting and rotation angles `(θ, β)` of a squeezed initial state.
    pub angles: Option<(f64, f64)>,
    pub n_qubits: usize,
}

/// `Δb` at a fixed offset past the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetPoint {
    pub t_res: f64,
    pub point: CurvePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<CurvePoint>,
    pub t_opt: f64,
    pub delta_b_opt: Uncertainty,
    /// The minimum sits on the first or last sample of the scanned range.
    pub at_boundary: bool,
    pub offset: Option<OffsetPoint>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn delta_b(&self) -> Vec<Uncertainty> {
        self.points.iter().map(|p| p.delta_b).collect()
    }

    /// Samples carrying a flag (effectively infinite or non-physical).
    pub fn flagged_count(&self) -> usize {
        self.points.iter().filter(|p| !p.delta_b.is_finite()).count()
    }
}

fn metadata(s: &Scenario) -> SweepMetadata {
    SweepMetadata {
        backend: s.backend,
        provenance: Provenance::FrequencyDomain,
        psi: s.psi,
        phase: s.phase,
        budget: s.budget,
        angles: s.angles(),
        n_qubits: s.ensemble.n_qubits,
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("time_grid", "empty grid"));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::invalid("time_grid", "times must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time_grid", "times must be strictly increasing"));
    }
    Ok(())
}

fn evaluate_grid(ev: &Evaluator, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    grid.par_iter().map(|&t| ev.evaluate(t)).collect()
}

fn argmin(points: &[CurvePoint]) -> usize {
    points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.delta_b.ln_value.total_cmp(&b.1.delta_b.ln_value))
        .map(|(i, _)| i)
        .expect("nonempty grid")
}

/// `Δb` on every grid time, with the best sample as `t_opt`.
pub fn uncertainty_curve(scenario: &Scenario, time_grid: &[f64]) -> Result<SweepResult> {
    check_grid(time_grid)?;
    let ev = Evaluator::new(scenario)?;
    let points = evaluate_grid(&ev, time_grid)?;
    let best = argmin(&points);
    Ok(SweepResult {
        t_opt: points[best].t,
        delta_b_opt: points[best].delta_b,
        at_boundary: best == 0 || best + 1 == points.len(),
        offset: None,
        points,
        metadata: metadata(scenario),
    })
}

/// `points_per_decade` logarithmically spaced times covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("bracket", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if points_per_decade == 0 {
        return Err(Error::invalid("points_per_decade", "must be positive"));
    }
    let decades = (hi / lo).log10();
    let intervals = ((decades * points_per_decade as f64).ceil() as usize).max(2);
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..=intervals)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == intervals {
                hi
            } else {
                (a + (b - a) * i as f64 / intervals as f64).exp()
            }
        })
        .collect())
}

/// Result of minimizing a positive objective over a logarithmic range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMinimum {
    pub x: f64,
    pub value: f64,
    pub at_boundary: bool,
}

/// Minimize `f` over `[lo, hi]`: coarse logarithmic scan, then golden section
/// in `ln x` between the neighbours of the best sample to relative width
/// [`TIME_TOLERANCE`]. A scan without interior turning point is an error.
pub fn minimize_on_log_scan<F>(f: F, lo: f64, hi: f64, points_per_decade: usize) -> Result<ScanMinimum>
where
    F: Fn(f64) -> f64 + Sync,
{
    let grid = log_grid(lo, hi, points_per_decade)?;
    let values: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect();
    refine(&f, &grid, &values)
}

fn refine<F: Fn(f64) -> f64>(f: &F, grid: &[f64], values: &[f64]) -> Result<ScanMinimum> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    let non_increasing = values.windows(2).all(|w| w[1] <= w[0]);
    let non_decreasing = values.windows(2).all(|w| w[1] >= w[0]);
    if non_increasing || non_decreasing {
        return Err(Error::NoBracket { lo, hi });
    }
    if best == 0 || best + 1 == grid.len() {
        return Ok(ScanMinimum {
            x: grid[best],
            value: values[best],
            at_boundary: true,
        });
    }
    let (a, b) = (grid[best - 1].ln(), grid[best + 1].ln());
    let g = |u: f64| f(u.exp());
    let (u, v) = golden_section(&g, a, b, TIME_TOLERANCE);
    let (x, value) = if v <= values[best] { (u.exp(), v) } else { (grid[best], values[best]) };
    Ok(ScanMinimum {
        x,
        value,
        at_boundary: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub points_per_decade: usize,
    /// Also report `Δb(t_opt + t_res)`.
    pub t_res: Option<f64>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
            t_res: None,
        }
    }
}

/// Scan `bracket` logarithmically and refine the minimum of `Δb(t)`.
///
/// The objective is `ln Δb`, which stays finite where the contrast underflows.
/// Errors with [`Error::NoBracket`] when the scan is monotone.
pub fn optimize_detection_time(
    scenario: &Scenario,
    bracket: (f64, f64),
    options: OptimizeOptions,
) -> Result<SweepResult> {
    let ev = Evaluator::new(scenario)?;
    let grid = log_grid(bracket.0, bracket.1, options.points_per_decade)?;
    let points = evaluate_grid(&ev, &grid)?;
    let values: Vec<f64> = points.iter().map(|p| p.delta_b.ln_value).collect();
    let failure = std::sync::Mutex::new(None);
    let objective = |t: f64| match ev.evaluate(t) {
        Ok(p) => p.delta_b.ln_value,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            f64::INFINITY
        }
    };
    let found = refine(&objective, &grid, &values)?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let best = ev.evaluate(found.x)?;
    let offset = match options.t_res {
        Some(t_res) if t_res >= 0.0 && t_res.is_finite() => Some(OffsetPoint {
            t_res,
            point: ev.evaluate(found.x + t_res)?,
        }),
        Some(t_res) => return Err(Error::invalid("t_res", format!("offset must be nonnegative, got {t_res}"))),
        None => None,
    };
    Ok(SweepResult {
        points,
        t_opt: best.t,
        delta_b_opt: best.delta_b,
        at_boundary: found.at_boundary,
        offset,
        metadata: metadata(scenario),
    })
}

/// `Δb` of an ideal coherent spin state with no bath: `1/(t√(Nν))`.
pub fn noiseless_css_uncertainty(n: usize, t: f64, nu: f64) -> f64 {
    1.0 / (t * (n as f64 * nu).sqrt())
}

/// Flag of the reported optimum, if any.
pub fn optimum_flag(result: &SweepResult) -> Option<UncertaintyFlag> {
    result.delta_b_opt.flag
}
