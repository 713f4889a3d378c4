//! Turns a resolved configuration into in-memory artifacts.

use std::f64::consts::PI;
use std::path::Path;

use ramsey_core::control_filters::{ControlProtocol, FilterMode};
use ramsey_core::dephasing::{short_time_anchors, trajectory};
use ramsey_core::estimators::{
    dicke_evolve, dicke_prepare, optimal_squeezing_angles, q_function, BackendKind, EnsembleSpec, InitialState,
    DEFAULT_MAX_QUBITS,
};
use ramsey_core::noise_models::{
    ohmic_to_spectrum, tabulated_to_spectrum, thermal_to_spectrum, NoiseSpectrum, OhmicFamilySpectrum,
    TabulatedSpectrum, ThermalModeSpectrum,
};
use ramsey_core::runner::{
    ion_analytic_dzc, ion_scenario, log_grid, optimize_detection_time, scaling_fit, uncertainty_curve, Budget,
    IonParams, OptimizeOptions, PhaseMode, PsiTreatment, Scenario, SweepResult, DEFAULT_POINTS_PER_DECADE,
    SWEEP_TOLERANCE,
};
use ramsey_core::Error as CoreError;

use crate::config::{
    BackendConfig, BudgetConfig, ControlConfig, InitialStateConfig, ModelConfig, PhaseConfig, PsiConfig, RunConfig,
    SeriesConfig, TaskKind,
};
use crate::error::{CliError, ConfigError};
use crate::output::{Artifact, Csv, Metadata};

const DEFAULT_CURVE_POINTS_PER_DECADE: usize = 50;
const DEFAULT_Q_THETA: usize = 60;
const DEFAULT_Q_GAMMA: usize = 120;

fn bad(key: impl AsRef<str>, message: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::key(key.as_ref(), message))
}

fn unused<T>(value: &Option<T>, key: &str, task: TaskKind) -> Result<(), CliError> {
    match value {
        Some(_) => Err(bad(key, format!("not used by task kind `{}`", task.as_str()))),
        None => Ok(()),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("must be positive and finite, got {v}")))
    }
}

enum Model {
    Spectrum {
        spectrum: NoiseSpectrum,
        protocol: ControlProtocol,
        budget: Budget,
        /// `(χ₀, Ψ₀)` of an ohmic-family bath.
        anchors: Option<(f64, f64)>,
    },
    Ion {
        omega_z: f64,
        u_dk: f64,
        m_ion: f64,
        nbar: f64,
        d: Option<f64>,
        nu: f64,
    },
}

/// One `(N, D)` at which every series is evaluated.
#[derive(Debug, Clone, Copy)]
struct Point {
    n: usize,
    d: Option<f64>,
}

struct Prepared {
    scenario: Scenario,
    ion: Option<IonInfo>,
}

#[derive(Debug, Clone, Copy)]
struct IonInfo {
    params: IonParams,
    g: f64,
    mu: f64,
    dz_per_db: f64,
    window: (f64, f64),
}

pub struct Job<'a> {
    cfg: &'a RunConfig,
    model: Model,
    points: Vec<Point>,
    ppd: usize,
    tolerance: f64,
    max_qubits: usize,
    phase: PhaseMode,
    b: f64,
}

impl<'a> Job<'a> {
    /// Validate everything that does not need numerics.
    pub fn new(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let task = &cfg.task;
        let model = build_model(cfg)?;
        if cfg.series.is_empty() {
            return Err(bad("series", "at least one [[series]] entry is required"));
        }
        for (i, s) in cfg.series.iter().enumerate() {
            validate_series(i, s)?;
            if cfg.series[..i].iter().any(|o| o.label == s.label) {
                return Err(bad(format!("series.{i}.label"), format!("duplicate label `{}`", s.label)));
            }
        }
        let ion_d = match &model {
            Model::Ion { d, .. } => Some(*d),
            Model::Spectrum { .. } => None,
        };
        let ensemble_n = cfg.ensemble.as_ref().map(|e| e.n_qubits);
        let points = match task.kind {
            TaskKind::Curve | TaskKind::Optimize => {
                unused(&task.n_values, "task.n_values", task.kind)?;
                unused(&task.d_values_rad_per_s, "task.d_values_rad_per_s", task.kind)?;
                let n = ensemble_n.ok_or_else(|| bad("ensemble.n_qubits", "required for this task"))?;
                let d = match ion_d {
                    Some(None) => return Err(bad("model.d_rad_per_s", "required for this task")),
                    Some(d) => d,
                    None => None,
                };
                vec![Point { n, d }]
            }
            TaskKind::ScanN => {
                unused(&task.d_values_rad_per_s, "task.d_values_rad_per_s", task.kind)?;
                unused(&ensemble_n, "ensemble", task.kind)?;
                let ns = task.n_values.as_ref().ok_or_else(|| bad("task.n_values", "required for scan_n"))?;
                if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(bad("task.n_values", "must be nonempty and strictly increasing"));
                }
                let d = match ion_d {
                    Some(None) => return Err(bad("model.d_rad_per_s", "required for scan_n")),
                    Some(d) => d,
                    None => None,
                };
                ns.iter().map(|&n| Point { n, d }).collect()
            }
            TaskKind::ScanD => {
                unused(&task.n_values, "task.n_values", task.kind)?;
                match ion_d {
                    None => return Err(bad("task.kind", "scan_d needs model kind `trapped_ion`")),
                    Some(Some(_)) => return Err(bad("model.d_rad_per_s", "set by task.d_values_rad_per_s in scan_d")),
                    Some(None) => {}
                }
                let n = ensemble_n.ok_or_else(|| bad("ensemble.n_qubits", "required for scan_d"))?;
                let ds = task
                    .d_values_rad_per_s
                    .as_ref()
                    .ok_or_else(|| bad("task.d_values_rad_per_s", "required for scan_d"))?;
                if ds.is_empty() || ds.iter().any(|d| !d.is_finite() || *d == 0.0) {
                    return Err(bad("task.d_values_rad_per_s", "must be nonempty, finite and nonzero"));
                }
                ds.iter().map(|&d| Point { n, d: Some(d) }).collect()
            }
        };
        if points.iter().any(|p| p.n == 0) {
            return Err(bad("ensemble.n_qubits", "need at least one qubit"));
        }
        if task.kind == TaskKind::Curve {
            unused(&task.t_res_s, "task.t_res_s", task.kind)?;
        }
        if let Some(t) = task.t_res_s {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(bad("task.t_res_s", format!("must be nonnegative, got {t}")));
            }
        }
        match (task.t_min_s, task.t_max_s) {
            (Some(lo), Some(hi)) => {
                positive("task.t_min_s", lo)?;
                positive("task.t_max_s", hi)?;
                if hi <= lo {
                    return Err(bad("task.t_max_s", "must exceed task.t_min_s"));
                }
            }
            (None, None) => {
                let has_default = matches!(
                    model,
                    Model::Ion { .. } | Model::Spectrum { anchors: Some(_), .. }
                );
                if !has_default {
                    return Err(bad("task.t_min_s", "t_min_s and t_max_s are required for this model kind"));
                }
            }
            (Some(_), None) => return Err(bad("task.t_max_s", "must be given together with t_min_s")),
            (None, Some(_)) => return Err(bad("task.t_min_s", "must be given together with t_max_s")),
        }
        let ppd = task.points_per_decade.unwrap_or(match task.kind {
            TaskKind::Curve => DEFAULT_CURVE_POINTS_PER_DECADE,
            _ => DEFAULT_POINTS_PER_DECADE,
        });
        if ppd == 0 {
            return Err(bad("task.points_per_decade", "must be positive"));
        }
        let ev = &cfg.evaluation;
        let tolerance = ev.tolerance.unwrap_or(SWEEP_TOLERANCE);
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(bad("evaluation.tolerance", format!("must lie in (0, 1), got {tolerance}")));
        }
        let phase = match ev.phase.unwrap_or_default() {
            PhaseConfig::Optimal => {
                unused(&ev.b_rad_per_s, "evaluation.b_rad_per_s", task.kind)
                    .map_err(|_| bad("evaluation.b_rad_per_s", "only used with phase = \"from_signal\""))?;
                PhaseMode::Optimal
            }
            PhaseConfig::FromSignal => PhaseMode::FromSignal,
        };
        let b = match phase {
            PhaseMode::FromSignal => {
                let b = ev
                    .b_rad_per_s
                    .ok_or_else(|| bad("evaluation.b_rad_per_s", "required with phase = \"from_signal\""))?;
                if !b.is_finite() {
                    return Err(bad("evaluation.b_rad_per_s", "must be finite"));
                }
                b
            }
            PhaseMode::Optimal => 0.0,
        };
        if let Some(q) = &cfg.q_function {
            if !matches!(task.kind, TaskKind::Curve | TaskKind::Optimize) {
                return Err(bad("q_function", "only available for curve and optimize tasks"));
            }
            if q.times_s.is_empty() {
                return Err(bad("q_function.times_s", "must list at least one time"));
            }
            for t in &q.times_s {
                positive("q_function.times_s", *t)?;
            }
            if let Some(label) = &q.series {
                if !cfg.series.iter().any(|s| &s.label == label) {
                    return Err(bad("q_function.series", format!("no series labelled `{label}`")));
                }
            }
            if q.n_theta == Some(0) || q.n_gamma == Some(0) {
                return Err(bad("q_function", "grid sizes must be positive"));
            }
        }
        Ok(Job {
            cfg,
            model,
            points,
            ppd,
            tolerance,
            max_qubits: ev.max_qubits.unwrap_or(DEFAULT_MAX_QUBITS),
            phase,
            b,
        })
    }

    /// The configuration with every defaulted knob written out; re-running it
    /// reproduces this job. Derived quantities (angles, windows) stay implicit.
    pub fn effective_config(&self) -> RunConfig {
        let mut cfg = self.cfg.clone();
        cfg.output_dir = None;
        cfg.evaluation.phase = Some(match self.phase {
            PhaseMode::Optimal => PhaseConfig::Optimal,
            PhaseMode::FromSignal => PhaseConfig::FromSignal,
        });
        cfg.evaluation.tolerance = Some(self.tolerance);
        cfg.evaluation.max_qubits = Some(self.max_qubits);
        cfg.task.points_per_decade = Some(self.ppd);
        for s in &mut cfg.series {
            s.psi = Some(s.psi.unwrap_or_default());
        }
        if let Some(q) = &mut cfg.q_function {
            q.n_theta = Some(q.n_theta.unwrap_or(DEFAULT_Q_THETA));
            q.n_gamma = Some(q.n_gamma.unwrap_or(DEFAULT_Q_GAMMA));
            q.series = Some(q.series.clone().unwrap_or_else(|| cfg.series[0].label.clone()));
        }
        cfg
    }

    pub fn execute(&self, meta: &mut Metadata) -> Result<Vec<Artifact>, CliError> {
        let task = &self.cfg.task;
        meta.push("task", task.kind.as_str());
        meta.push("points_per_decade", self.ppd);
        meta.push("tolerance", self.tolerance);
        meta.push("phase", self.phase.as_str());
        meta.push("b_rad_per_s", self.b);
        meta.push("max_qubits", self.max_qubits);
        match &self.model {
            Model::Spectrum { spectrum, budget, anchors, .. } => {
                meta.push("spectrum", spectrum.label());
                meta.push("protocol", protocol_label(self.cfg));
                meta.push("budget", budget_label(budget));
                meta.push("reported_quantity", budget.reported_quantity());
                if let Some((chi0, psi0)) = anchors {
                    meta.push("chi0_rad_per_s", chi0);
                    meta.push("psi0_rad_per_s", psi0);
                }
            }
            Model::Ion { omega_z, u_dk, m_ion, nbar, nu, .. } => {
                meta.push("ion.omega_z_rad_per_s", omega_z);
                meta.push("ion.u_dk_n", u_dk);
                meta.push("ion.m_ion_kg", m_ion);
                meta.push("ion.nbar", nbar);
                meta.push("ion.nu", nu);
                meta.push("budget", format!("fixed_shots(nu={nu:?})"));
                meta.push("reported_quantity", "delta_b");
            }
        }
        let prepared = self.prepare_all(meta)?;
        let mut out = match task.kind {
            TaskKind::Curve => self.curve(&prepared[0], meta)?,
            TaskKind::Optimize => self.optimize(&prepared[0], meta)?,
            TaskKind::ScanN | TaskKind::ScanD => self.scan(&prepared, meta)?,
        };
        if self.cfg.q_function.is_some() {
            out.extend(self.q_functions(&prepared[0], meta)?);
        }
        Ok(out)
    }

    fn prepare_all(&self, meta: &mut Metadata) -> Result<Vec<Vec<Prepared>>, CliError> {
        let mut all = Vec::with_capacity(self.points.len());
        for (k, p) in self.points.iter().enumerate() {
            meta.push(format!("point.{k}.n_qubits"), p.n);
            if let Some(d) = p.d {
                meta.push(format!("point.{k}.d_rad_per_s"), d);
            }
            let mut row = Vec::with_capacity(self.cfg.series.len());
            for (i, s) in self.cfg.series.iter().enumerate() {
                let prepared = self.prepare(i, s, *p)?;
                let label = &s.label;
                if let Some((theta, beta)) = prepared.scenario.angles() {
                    meta.push(format!("point.{k}.{label}.theta_rad"), theta);
                    meta.push(format!("point.{k}.{label}.beta_rad"), beta);
                }
                if i == 0 {
                    if let Some(ion) = prepared.ion {
                        meta.push(format!("point.{k}.g_rad_per_s"), ion.g);
                        meta.push(format!("point.{k}.mu_rad_per_s"), ion.mu);
                        meta.push(format!("point.{k}.dz_per_db_m_s_per_rad"), ion.dz_per_db);
                        meta.push(format!("point.{k}.dz_c_analytic_m"), ion_analytic_dzc(&ion.params));
                    }
                    let (lo, hi) = self.bracket(&prepared, p.n);
                    meta.push(format!("point.{k}.t_range_s"), format!("{lo:?}, {hi:?}"));
                }
                row.push(prepared);
            }
            all.push(row);
        }
        Ok(all)
    }

    fn prepare(&self, i: usize, s: &SeriesConfig, p: Point) -> Result<Prepared, CliError> {
        let initial_state = match s.initial_state {
            InitialStateConfig::Css => InitialState::Css,
            InitialStateConfig::Oats => match (s.theta_rad, s.beta_rad) {
                (Some(theta), Some(beta)) => InitialState::Oats { theta, beta },
                _ => {
                    let a = optimal_squeezing_angles(p.n);
                    InitialState::Oats {
                        theta: a.theta,
                        beta: a.beta,
                    }
                }
            },
        };
        let key = format!("series.{i}");
        let as_config = |e: CoreError| bad(&key, e.to_string());
        let backend = backend_kind(s.backend);
        let (scenario, ion) = match &self.model {
            Model::Spectrum { spectrum, protocol, budget, .. } => {
                let ensemble = EnsembleSpec {
                    n_qubits: p.n,
                    initial_state,
                };
                let scenario = Scenario::new(ensemble, spectrum.clone(), protocol.clone(), *budget, backend)
                    .map_err(as_config)?;
                (scenario, None)
            }
            Model::Ion {
                omega_z,
                u_dk,
                m_ion,
                nbar,
                nu,
                ..
            } => {
                let params = IonParams {
                    omega_z: *omega_z,
                    u_dk: *u_dk,
                    m_ion: *m_ion,
                    nbar: *nbar,
                    d: p.d.expect("ion points carry a detuning"),
                    n_qubits: p.n,
                    nu: *nu,
                    initial_state,
                };
                let ion = ion_scenario(params).map_err(as_config)?;
                let info = IonInfo {
                    params,
                    g: ion.g,
                    mu: ion.mu,
                    dz_per_db: ion.dz_per_db,
                    window: ion.window,
                };
                (ion.scenario.with_backend(backend), Some(info))
            }
        };
        let mut scenario = scenario.with_psi(match s.psi.unwrap_or_default() {
            PsiConfig::Full => PsiTreatment::Full,
            PsiConfig::Zero => PsiTreatment::Zero,
        });
        scenario.phase = self.phase;
        scenario.b = self.b;
        scenario.tolerance = self.tolerance;
        scenario.max_qubits = self.max_qubits;
        scenario.validate().map_err(as_config)?;
        Ok(Prepared { scenario, ion })
    }

    /// Configured time range, or the model's natural one: the ion window, or
    /// `[10⁻², 30]·(χ₀√N)⁻¹` around the short-time optimum of an ohmic bath.
    fn bracket(&self, p: &Prepared, n: usize) -> (f64, f64) {
        if let (Some(lo), Some(hi)) = (self.cfg.task.t_min_s, self.cfg.task.t_max_s) {
            return (lo, hi);
        }
        if let Some(ion) = p.ion {
            return ion.window;
        }
        match self.model {
            Model::Spectrum { anchors: Some((chi0, _)), .. } => {
                let scale = 1.0 / (chi0 * (n as f64).sqrt());
                (1e-2 * scale, 30.0 * scale)
            }
            _ => unreachable!("time range checked in Job::new"),
        }
    }

    fn curve(&self, row: &[Prepared], meta: &mut Metadata) -> Result<Vec<Artifact>, CliError> {
        let (lo, hi) = self.bracket(&row[0], self.points[0].n);
        let grid = log_grid(lo, hi, self.ppd).map_err(CliError::numerical("log_grid"))?;
        let mut results = Vec::with_capacity(row.len());
        for (s, p) in self.cfg.series.iter().zip(row) {
            let r = uncertainty_curve(&p.scenario, &grid)
                .map_err(CliError::numerical(format!("uncertainty_curve (series {})", s.label)))?;
            meta.push(format!("series.{}.flagged_points", s.label), r.flagged_count());
            meta.push(format!("series.{}.grid_minimum_t_s", s.label), r.t_opt);
            results.push(r);
        }
        let mut csv = Csv::new("curve", &quantity_note(&row[0]));
        csv.unit("t", "s");
        let mut columns = vec!["t".to_string()];
        for s in &self.cfg.series {
            columns.push(format!("delta_b_{}", s.label));
            columns.push(format!("ln_delta_b_{}", s.label));
            columns.push(format!("flag_{}", s.label));
            if row[0].ion.is_some() {
                columns.push(format!("dz_c_{}", s.label));
                columns.push(format!("dz_c_sqrt_nu_{}", s.label));
            }
        }
        csv.columns(&columns);
        for (k, &t) in grid.iter().enumerate() {
            let mut cells = vec![Csv::float(t)];
            for (r, p) in results.iter().zip(row) {
                let db = r.points[k].delta_b;
                cells.push(Csv::float(db.value));
                cells.push(Csv::float(db.ln_value));
                cells.push(db.flag.map(|f| f.as_str()).unwrap_or("ok").to_string());
                if let Some(ion) = p.ion {
                    cells.push(Csv::float(ion.dz_per_db * db.value));
                    cells.push(Csv::float(ion.dz_per_db * db.value * ion.params.nu.sqrt()));
                }
            }
            csv.row(cells);
        }
        let first = &row[0].scenario;
        let traj = trajectory(&first.spectrum, &first.protocol, self.b, &grid, self.tolerance)
            .map_err(CliError::numerical("trajectory"))?;
        let mut tcsv = Csv::new("trajectory", "dephasing trajectory; phi = b * integral of y0");
        tcsv.unit("t", "s");
        tcsv.unit("phi", "rad");
        tcsv.unit("chi", "dimensionless");
        tcsv.unit("psi", "rad");
        tcsv.columns(&["t", "phi", "chi", "psi"]);
        for k in 0..grid.len() {
            tcsv.row(vec![
                Csv::float(traj.times[k]),
                Csv::float(traj.phi[k]),
                Csv::float(traj.chi[k]),
                Csv::float(traj.psi[k]),
            ]);
        }
        meta.push("trajectory.provenance", traj.provenance.as_str());
        Ok(vec![csv.into_artifact("curve.csv"), tcsv.into_artifact("trajectory.csv")])
    }

    fn optimize_one(&self, p: &Prepared, n: usize, label: &str) -> Result<SweepResult, CliError> {
        let bracket = self.bracket(p, n);
        let options = OptimizeOptions {
            points_per_decade: self.ppd,
            t_res: self.cfg.task.t_res_s,
        };
        let operation = format!("optimize_detection_time (series {label}, N={n})");
        match optimize_detection_time(&p.scenario, bracket, options) {
            Ok(r) => Ok(r),
            // Monotone over the range: report the edge sample, flagged as a boundary optimum.
            Err(CoreError::NoBracket { .. }) => {
                let grid = log_grid(bracket.0, bracket.1, self.ppd).map_err(CliError::numerical("log_grid"))?;
                let mut r = uncertainty_curve(&p.scenario, &grid).map_err(CliError::numerical(operation))?;
                r.at_boundary = true;
                Ok(r)
            }
            Err(e) => Err(CliError::Numerical { operation, source: e }),
        }
    }

    fn optimize(&self, row: &[Prepared], meta: &mut Metadata) -> Result<Vec<Artifact>, CliError> {
        let n = self.points[0].n;
        let mut csv = Csv::new("optimum", &quantity_note(&row[0]));
        csv.unit("t_opt", "s");
        let mut columns = vec!["series", "t_opt", "delta_b_opt", "ln_delta_b_opt", "flag", "at_boundary"];
        if self.cfg.task.t_res_s.is_some() {
            csv.unit("t_res", "s");
            columns.extend(["t_res", "delta_b_res", "ln_delta_b_res"]);
        }
        if row[0].ion.is_some() {
            csv.unit("dz_c", "m");
            columns.extend(["dz_c", "dz_c_sqrt_nu", "dz_c_analytic"]);
        }
        csv.columns(&columns);
        for (s, p) in self.cfg.series.iter().zip(row) {
            let r = self.optimize_one(p, n, &s.label)?;
            let db = r.delta_b_opt;
            let mut cells = vec![
                s.label.clone(),
                Csv::float(r.t_opt),
                Csv::float(db.value),
                Csv::float(db.ln_value),
                db.flag.map(|f| f.as_str()).unwrap_or("ok").to_string(),
                u8::from(r.at_boundary).to_string(),
            ];
            if let Some(t_res) = self.cfg.task.t_res_s {
                let off = r.offset.map(|o| o.point.delta_b);
                cells.push(Csv::float(t_res));
                cells.push(Csv::float(off.map_or(f64::NAN, |u| u.value)));
                cells.push(Csv::float(off.map_or(f64::NAN, |u| u.ln_value)));
            }
            if let Some(ion) = p.ion {
                cells.push(Csv::float(ion.dz_per_db * db.value));
                cells.push(Csv::float(ion.dz_per_db * db.value * ion.params.nu.sqrt()));
                cells.push(Csv::float(ion_analytic_dzc(&ion.params)));
            }
            meta.push(format!("series.{}.at_boundary", s.label), r.at_boundary);
            csv.row(cells);
        }
        Ok(vec![csv.into_artifact("optimum.csv")])
    }

    fn scan(&self, prepared: &[Vec<Prepared>], meta: &mut Metadata) -> Result<Vec<Artifact>, CliError> {
        let by_n = self.cfg.task.kind == TaskKind::ScanN;
        let ion = prepared[0][0].ion.is_some();
        let mut csv = Csv::new("scaling", &quantity_note(&prepared[0][0]));
        let mut columns = vec![if by_n { "N".to_string() } else { "D".to_string() }];
        if by_n {
            csv.unit("N", "qubits");
        } else {
            csv.unit("D", "rad/s");
        }
        csv.unit("t_opt_*", "s");
        if ion {
            csv.unit("dz_c_*", "m");
            columns.push("dz_c_analytic".into());
            columns.push("dz_c_analytic_sqrt_nu".into());
        }
        for s in &self.cfg.series {
            let l = &s.label;
            columns.extend([format!("t_opt_{l}"), format!("delta_b_opt_{l}"), format!("at_boundary_{l}")]);
            if self.cfg.task.t_res_s.is_some() {
                columns.push(format!("delta_b_res_{l}"));
            }
            if ion {
                columns.push(format!("dz_c_{l}"));
                columns.push(format!("dz_c_sqrt_nu_{l}"));
            }
        }
        csv.columns(&columns);
        let mut fits: Vec<Vec<(f64, f64)>> = vec![Vec::new(); self.cfg.series.len()];
        for (point, row) in self.points.iter().zip(prepared) {
            let mut cells = vec![if by_n {
                point.n.to_string()
            } else {
                Csv::float(point.d.expect("scan_d points carry D"))
            }];
            if let Some(info) = row[0].ion {
                let a = ion_analytic_dzc(&info.params);
                cells.push(Csv::float(a));
                cells.push(Csv::float(a * info.params.nu.sqrt()));
            }
            for (i, (s, p)) in self.cfg.series.iter().zip(row).enumerate() {
                let r = self.optimize_one(p, point.n, &s.label)?;
                let db = r.delta_b_opt;
                cells.push(Csv::float(r.t_opt));
                cells.push(Csv::float(db.value));
                cells.push(u8::from(r.at_boundary).to_string());
                if self.cfg.task.t_res_s.is_some() {
                    cells.push(Csv::float(r.offset.map_or(f64::NAN, |o| o.point.delta_b.value)));
                }
                if let Some(info) = p.ion {
                    cells.push(Csv::float(info.dz_per_db * db.value));
                    cells.push(Csv::float(info.dz_per_db * db.value * info.params.nu.sqrt()));
                }
                let x = if by_n { point.n as f64 } else { point.d.unwrap_or(f64::NAN).abs() };
                if db.is_finite() && !r.at_boundary {
                    fits[i].push((x, db.value));
                }
            }
            csv.row(cells);
        }
        for (s, pts) in self.cfg.series.iter().zip(&fits) {
            let var = if by_n { "N" } else { "D" };
            if let Ok(f) = scaling_fit(pts) {
                meta.push(format!("fit.{}.exponent_vs_{var}", s.label), f.exponent);
                meta.push(format!("fit.{}.r_squared", s.label), f.r_squared);
                meta.push(format!("fit.{}.points", s.label), pts.len());
            }
        }
        Ok(vec![csv.into_artifact("scaling.csv")])
    }

    fn q_functions(&self, row: &[Prepared], meta: &mut Metadata) -> Result<Vec<Artifact>, CliError> {
        let q = self.cfg.q_function.as_ref().expect("checked by caller");
        let idx = match &q.series {
            Some(l) => self.cfg.series.iter().position(|s| &s.label == l).expect("validated"),
            None => 0,
        };
        let label = &self.cfg.series[idx].label;
        let scenario = &row[idx].scenario;
        let n_theta = q.n_theta.unwrap_or(DEFAULT_Q_THETA);
        let n_gamma = q.n_gamma.unwrap_or(DEFAULT_Q_GAMMA);
        let thetas: Vec<f64> = (0..n_theta).map(|i| (i as f64 + 0.5) * PI / n_theta as f64).collect();
        let gammas: Vec<f64> = (0..n_gamma).map(|i| i as f64 * 2.0 * PI / n_gamma as f64).collect();
        let initial = dicke_prepare(&scenario.ensemble, self.max_qubits)
            .map_err(CliError::numerical(format!("dicke_prepare (series {label})")))?;
        let ev = ramsey_core::runner::Evaluator::new(scenario)
            .map_err(CliError::numerical(format!("evaluator (series {label})")))?;
        meta.push("q_function.series", label);
        let mut out = Vec::new();
        for (k, &t) in q.times_s.iter().enumerate() {
            let point = ev
                .evaluate(t)
                .map_err(CliError::numerical(format!("evaluate at t={t:e} (series {label})")))?;
            let state = dicke_evolve(&initial, point.phi, point.chi_psi.chi, point.chi_psi.psi);
            let grid = q_function(&state, &thetas, &gammas);
            let name = format!("q_{}.csv", k + 1);
            meta.push(format!("q_function.{}.file", k + 1), &name);
            meta.push(format!("q_function.{}.t_s", k + 1), t);
            meta.push(format!("q_function.{}.phi_rad", k + 1), point.phi);
            meta.push(format!("q_function.{}.chi", k + 1), point.chi_psi.chi);
            meta.push(format!("q_function.{}.psi_rad", k + 1), point.chi_psi.psi);
            let mut csv = Csv::new("q_function", &format!("Husimi Q at t = {t:e} s, series {label}"));
            csv.unit("theta (first column)", "rad");
            csv.unit("gamma (header row)", "rad");
            let mut header = vec!["theta\\gamma".to_string()];
            header.extend(gammas.iter().map(|g| Csv::float(*g)));
            csv.columns(&header);
            for (th, values) in thetas.iter().zip(&grid) {
                let mut cells = vec![Csv::float(*th)];
                cells.extend(values.iter().map(|v| Csv::float(*v)));
                csv.row(cells);
            }
            out.push(csv.into_artifact(&name));
        }
        Ok(out)
    }
}

fn quantity_note(p: &Prepared) -> String {
    match p.scenario.budget {
        Budget::FixedTotalTime { total_time } => {
            format!("delta_b columns hold delta_b * sqrt(T) in rad s^-1/2 (T = {total_time:?} s)")
        }
        Budget::FixedShots { nu } => format!("delta_b columns hold delta_b in rad/s for nu = {nu:?} shots"),
    }
}

fn backend_kind(b: BackendConfig) -> BackendKind {
    match b {
        BackendConfig::CssClosedForm => BackendKind::CssClosedForm,
        BackendConfig::OatsCumulant => BackendKind::OatsCumulant,
        BackendConfig::DickeExact => BackendKind::DickeExact,
    }
}

fn budget_label(b: &Budget) -> String {
    match b {
        Budget::FixedTotalTime { total_time } => format!("fixed_total_time(T={total_time:?} s)"),
        Budget::FixedShots { nu } => format!("fixed_shots(nu={nu:?})"),
    }
}

fn protocol_label(cfg: &RunConfig) -> String {
    match &cfg.control {
        None | Some(ControlConfig::FreeEvolution) => "free_evolution".into(),
        Some(ControlConfig::IonDrive { mu_rad_per_s, d_rad_per_s, .. }) => {
            format!("ion_drive(mu={mu_rad_per_s:?} rad/s, D={d_rad_per_s:?} rad/s)")
        }
    }
}

fn validate_series(i: usize, s: &SeriesConfig) -> Result<(), CliError> {
    if s.label.is_empty() || !s.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(bad(format!("series.{i}.label"), "labels use only ASCII letters, digits and `_`"));
    }
    match (s.initial_state, s.theta_rad, s.beta_rad) {
        (InitialStateConfig::Css, None, None) => Ok(()),
        (InitialStateConfig::Css, _, _) => Err(bad(format!("series.{i}.theta_rad"), "angles apply to oats states only")),
        (InitialStateConfig::Oats, Some(t), Some(b)) if t.is_finite() && b.is_finite() => Ok(()),
        (InitialStateConfig::Oats, None, None) => Ok(()),
        (InitialStateConfig::Oats, _, _) => Err(bad(
            format!("series.{i}.theta_rad"),
            "give both theta_rad and beta_rad (finite), or neither for the optimal pair",
        )),
    }
}

fn build_model(cfg: &RunConfig) -> Result<Model, CliError> {
    let core = |key: &'static str| move |e: CoreError| bad(key, e.to_string());
    if let ModelConfig::TrappedIon {
        omega_z_rad_per_s,
        u_dk_n,
        m_ion_kg,
        nbar,
        d_rad_per_s,
    } = &cfg.model
    {
        if cfg.control.is_some() {
            return Err(bad("control", "the trapped-ion model fixes its own drive; remove [control]"));
        }
        let nu = match &cfg.budget {
            None => 1.0,
            Some(BudgetConfig::FixedShots { nu }) => positive("budget.nu", *nu)?,
            Some(BudgetConfig::FixedTotalTime { .. }) => {
                return Err(bad("budget.kind", "the trapped-ion model uses fixed_shots"))
            }
        };
        return Ok(Model::Ion {
            omega_z: positive("model.omega_z_rad_per_s", *omega_z_rad_per_s)?,
            u_dk: positive("model.u_dk_n", *u_dk_n)?,
            m_ion: positive("model.m_ion_kg", *m_ion_kg)?,
            nbar: *nbar,
            d: *d_rad_per_s,
            nu,
        });
    }
    let mut anchors = None;
    let spectrum = match &cfg.model {
        ModelConfig::SpinBoson {
            alpha,
            s,
            omega_c_rad_per_s,
        } => {
            let o = OhmicFamilySpectrum::new(*alpha, *s, *omega_c_rad_per_s).map_err(core("model"))?;
            anchors = Some(short_time_anchors(&o));
            ohmic_to_spectrum(o)
        }
        ModelConfig::ThermalMode {
            g_rad_per_s,
            omega_z_rad_per_s,
            nbar,
        } => thermal_to_spectrum(
            ThermalModeSpectrum::new(*g_rad_per_s, *omega_z_rad_per_s, *nbar).map_err(core("model"))?,
        ),
        ModelConfig::Tabulated { path, label } => {
            let table = read_table(path)?;
            let label = label.clone().unwrap_or_else(|| path.display().to_string());
            tabulated_to_spectrum(table, label)
        }
        ModelConfig::Noiseless => NoiseSpectrum::zero(),
        ModelConfig::TrappedIon { .. } => unreachable!(),
    };
    let protocol = match &cfg.control {
        None | Some(ControlConfig::FreeEvolution) => ControlProtocol::free_evolution(),
        Some(ControlConfig::IonDrive {
            mu_rad_per_s,
            d_rad_per_s,
            rotating_wave_cutoff_rad_per_s,
        }) => {
            let p = ControlProtocol::ion_drive(*mu_rad_per_s, *d_rad_per_s).map_err(core("control"))?;
            match rotating_wave_cutoff_rad_per_s {
                Some(c) => p.with_mode(FilterMode::RotatingWave {
                    cutoff: positive("control.rotating_wave_cutoff_rad_per_s", *c)?,
                }),
                None => p,
            }
        }
    };
    let budget = match &cfg.budget {
        None => return Err(bad("budget", "a [budget] section is required for this model kind")),
        Some(BudgetConfig::FixedShots { nu }) => Budget::FixedShots {
            nu: positive("budget.nu", *nu)?,
        },
        Some(BudgetConfig::FixedTotalTime { total_time_s }) => Budget::FixedTotalTime {
            total_time: positive("budget.total_time_s", *total_time_s)?,
        },
    };
    Ok(Model::Spectrum {
        spectrum,
        protocol,
        budget,
        anchors,
    })
}

/// Two numeric columns `omega, S`; `#` lines and one leading header row are skipped.
fn read_table(path: &Path) -> Result<TabulatedSpectrum, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut omega = Vec::new();
    let mut value = Vec::new();
    let mut seen_row = false;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                omega.push(v[0]);
                value.push(v[1]);
                seen_row = true;
            }
            None if !seen_row && omega.is_empty() => seen_row = true,
            _ => {
                return Err(bad(
                    "model.path",
                    format!("{}:{}: expected two numeric columns", path.display(), i + 1),
                ))
            }
        }
    }
    TabulatedSpectrum::new(omega, value).map_err(|e| bad("model.path", format!("{}: {e}", path.display())))
}
