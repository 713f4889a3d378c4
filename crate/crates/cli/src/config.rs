//! Run configuration: a strict TOML document whose keys carry their units.
//!
//! A preset (if any) supplies a base table; the config file is deep-merged
//! over it and `--set` overrides are applied last. Arrays are replaced, not
//! merged.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub model: ModelConfig,
    pub control: Option<ControlConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub budget: Option<BudgetConfig>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    pub series: Vec<SeriesConfig>,
    pub task: TaskConfig,
    pub q_function: Option<QFunctionConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    SpinBoson {
        alpha: f64,
        s: f64,
        omega_c_rad_per_s: f64,
    },
    ThermalMode {
        g_rad_per_s: f64,
        omega_z_rad_per_s: f64,
        nbar: f64,
    },
    /// Two-column CSV `omega (rad/s), S (rad/s)`; relative paths resolve
    /// against the config file's directory.
    Tabulated { path: PathBuf, label: Option<String> },
    TrappedIon {
        omega_z_rad_per_s: f64,
        u_dk_n: f64,
        m_ion_kg: f64,
        nbar: f64,
        d_rad_per_s: Option<f64>,
    },
    Noiseless,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlConfig {
    FreeEvolution,
    IonDrive {
        mu_rad_per_s: f64,
        d_rad_per_s: f64,
        rotating_wave_cutoff_rad_per_s: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_qubits: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BudgetConfig {
    FixedTotalTime { total_time_s: f64 },
    FixedShots { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConfig {
    #[default]
    Optimal,
    FromSignal,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub phase: Option<PhaseConfig>,
    pub b_rad_per_s: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_qubits: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendConfig {
    CssClosedForm,
    OatsCumulant,
    DickeExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsiConfig {
    #[default]
    Full,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateConfig {
    Css,
    Oats,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub label: String,
    pub backend: BackendConfig,
    pub psi: Option<PsiConfig>,
    pub initial_state: InitialStateConfig,
    /// Twisting strength; the minimizer of the initial `ΔJy²` when omitted.
    pub theta_rad: Option<f64>,
    pub beta_rad: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Curve,
    Optimize,
    ScanN,
    ScanD,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Curve => "curve",
            TaskKind::Optimize => "optimize",
            TaskKind::ScanN => "scan_n",
            TaskKind::ScanD => "scan_d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub kind: TaskKind,
    pub t_min_s: Option<f64>,
    pub t_max_s: Option<f64>,
    pub points_per_decade: Option<usize>,
    pub t_res_s: Option<f64>,
    pub n_values: Option<Vec<usize>>,
    pub d_values_rad_per_s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QFunctionConfig {
    pub times_s: Vec<f64>,
    /// Label of the series whose state is sampled; the first series by default.
    pub series: Option<String>,
    pub n_theta: Option<usize>,
    pub n_gamma: Option<usize>,
}

/// Configuration text and the name used in diagnostics.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub text: String,
}

/// Parse a TOML document, reporting syntax errors with their line.
pub fn parse_table(src: &Source) -> Result<Table, ConfigError> {
    toml::from_str::<Table>(&src.text).map_err(|e| {
        let line = e.span().map(|s| line_of(&src.text, s.start));
        ConfigError::syntax(&src.name, line, e.message())
    })
}

/// Recursively merge `over` into `base`; non-table values replace.
pub fn deep_merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => deep_merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Apply `dotted.key=value`; numeric components index arrays. The value is
/// read as a TOML value, or as a bare string when it does not parse.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::key(assignment, "override must have the form key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if key.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::key(key, "empty key component"));
    }
    let value = raw
        .parse::<Value>()
        .unwrap_or_else(|_| Value::String(raw.to_string()));
    let (last, path) = parts.split_last().expect("nonempty key");
    let mut root = Value::Table(std::mem::take(table));
    let result = (|| {
        let mut slot = &mut root;
        for part in path {
            slot = step(slot, part, key)?;
        }
        assign(slot, last, value, key)
    })();
    if let Value::Table(t) = root {
        *table = t;
    }
    result
}

fn step<'a>(slot: &'a mut Value, part: &str, key: &str) -> Result<&'a mut Value, ConfigError> {
    match slot {
        Value::Table(t) => Ok(t
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()))),
        Value::Array(a) => {
            let i: usize = part
                .parse()
                .map_err(|_| ConfigError::key(key, format!("`{part}` is not an array index")))?;
            let len = a.len();
            a.get_mut(i)
                .ok_or_else(|| ConfigError::key(key, format!("index {i} out of range (length {len})")))
        }
        _ => Err(ConfigError::key(key, format!("`{part}` descends into a scalar"))),
    }
}

fn assign(slot: &mut Value, last: &str, value: Value, key: &str) -> Result<(), ConfigError> {
    match slot {
        Value::Table(t) => {
            t.insert(last.to_string(), value);
            Ok(())
        }
        Value::Array(_) => {
            let target = step(slot, last, key)?;
            *target = value;
            Ok(())
        }
        _ => Err(ConfigError::key(key, format!("`{last}` descends into a scalar"))),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `dotted` (e.g. `series.1.psi`) in a TOML document, when it is
/// written there as `key = value` under the matching header.
pub fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let parts: Vec<&str> = dotted.split('.').collect();
    let (leaf, path) = parts.split_last()?;
    let path: Vec<&str> = path.iter().copied().filter(|p| p.parse::<usize>().is_err()).collect();
    let index = parts.iter().find_map(|p| p.parse::<usize>().ok());
    let mut section: Vec<String> = Vec::new();
    let mut counts: std::collections::HashMap<String, usize> = Default::default();
    let mut current_index = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(h) = l.strip_prefix("[[").and_then(|r| r.split("]]").next()) {
            let h = h.trim().to_string();
            let c = counts.entry(h.clone()).or_insert(0);
            current_index = Some(*c);
            *c += 1;
            section = h.split('.').map(|s| s.trim().to_string()).collect();
            continue;
        }
        if let Some(h) = l.strip_prefix('[').and_then(|r| r.split(']').next()) {
            current_index = None;
            section = h.split('.').map(|s| s.trim().to_string()).collect();
            continue;
        }
        let Some((k, _)) = l.split_once('=') else { continue };
        let k = k.trim().trim_matches('"');
        let full: Vec<&str> = section.iter().map(String::as_str).chain(k.split('.').map(str::trim)).collect();
        let mut expected: Vec<&str> = path.clone();
        expected.push(leaf);
        if full == expected && (index.is_none() || index == current_index) {
            return Some(i + 1);
        }
    }
    None
}

/// Resolve the merged table to a typed configuration. Schema errors name the
/// offending key and, when possible, its line in `user`.
pub fn resolve(table: &Table, user: Option<&Source>) -> Result<RunConfig, ConfigError> {
    let text = toml::to_string(table).map_err(|e| ConfigError::key("<root>", e.to_string()))?;
    toml::from_str::<RunConfig>(&text).map_err(|e| {
        let mut key = e.span().and_then(|s| key_at(&text, s.start));
        // Unknown fields are reported against their table; name the field itself.
        if let Some(field) = e
            .message()
            .strip_prefix("unknown field `")
            .and_then(|r| r.split('`').next())
        {
            key = Some(match key {
                Some(k) if !k.ends_with(field) => format!("{k}.{field}"),
                Some(k) => k,
                None => field.to_string(),
            });
        }
        let line = match (&key, user) {
            (Some(k), Some(u)) => locate_key(&u.text, k).map(|l| (u.name.clone(), l)),
            _ => None,
        };
        ConfigError::Schema {
            key: key.unwrap_or_else(|| "<root>".to_string()),
            location: line,
            message: e.message().to_string(),
        }
    })
}

/// Dotted key (with array indices) of the `key = value` line containing `offset`.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let target = line_of(text, offset);
    let mut section = String::new();
    let mut counts: std::collections::HashMap<String, usize> = Default::default();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(h) = l.strip_prefix("[[").and_then(|r| r.split("]]").next()) {
            let c = counts.entry(h.to_string()).or_insert(0);
            section = format!("{h}.{c}");
            *c += 1;
        } else if let Some(h) = l.strip_prefix('[').and_then(|r| r.split(']').next()) {
            section = h.to_string();
        }
        if i + 1 == target {
            return match l.split_once('=') {
                Some((k, _)) if !l.starts_with('[') => {
                    let k = k.trim().trim_matches('"');
                    Some(if section.is_empty() { k.to_string() } else { format!("{section}.{k}") })
                }
                _ => Some(section.clone()),
            };
        }
    }
    None
}

/// Resolve relative paths inside the model section against `base` and make
/// them absolute, so a resolved config runs from any directory.
pub fn absolutize_paths(cfg: &mut RunConfig, base: &Path) {
    if let ModelConfig::Tabulated { path, .. } = &mut cfg.model {
        let joined = base.join(&*path);
        *path = std::path::absolute(&joined).unwrap_or(joined);
    }
}

/// Attach the line of the offending key in `user`, when it can be found there.
pub fn with_location(err: ConfigError, user: Option<&Source>) -> ConfigError {
    match (err, user) {
        (
            ConfigError::Schema {
                key,
                location: None,
                message,
            },
            Some(u),
        ) => {
            let location = locate_key(&u.text, &key).map(|l| (u.name.clone(), l));
            ConfigError::Schema { key, location, message }
        }
        (err, _) => err,
    }
}
