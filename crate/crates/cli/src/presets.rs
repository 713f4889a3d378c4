//! Built-in configurations reproducing the published figures.

use std::f64::consts::PI;

use toml::Table;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    body: fn() -> String,
}

impl Preset {
    pub fn table(&self) -> Table {
        toml::from_str(&(self.body)()).expect("preset tables are valid TOML")
    }
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        name: "fig1a",
        description: "spin-boson CSS, N=100: Δb√T over short times with and without Ψ",
        body: fig1a,
    },
    Preset {
        name: "fig1b",
        description: "spin-boson CSS, N=100: the fig1a curves over long times",
        body: fig1b,
    },
    Preset {
        name: "fig1c",
        description: "spin-boson OATS, N=1000: cumulant, exact and exact Ψ=0 curves plus Q-functions",
        body: fig1c,
    },
    Preset {
        name: "fig2a",
        description: "trapped ions, N=100: optimal ΔZ_c versus drive detuning D",
        body: fig2a,
    },
    Preset {
        name: "fig2b",
        description: "trapped ions, D/2π=2 kHz: optimal ΔZ_c versus ion number N",
        body: fig2b,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

const SPIN_BOSON: &str = r#"
[model]
kind = "spin_boson"
alpha = 1.0
s = 3.0
omega_c_rad_per_s = 1.0

[control]
kind = "free_evolution"

[budget]
kind = "fixed_total_time"
total_time_s = 1.0
"#;

const CSS_PAIR: &str = r#"
[ensemble]
n_qubits = 100

[[series]]
label = "psi_full"
backend = "css_closed_form"
psi = "full"
initial_state = "css"

[[series]]
label = "psi_zero"
backend = "css_closed_form"
psi = "zero"
initial_state = "css"
"#;

fn fig1a() -> String {
    format!(
        "{SPIN_BOSON}{CSS_PAIR}
[task]
kind = \"curve\"
t_min_s = 1.0e-3
t_max_s = 1.0
points_per_decade = 100
"
    )
}

fn fig1b() -> String {
    format!(
        "{SPIN_BOSON}{CSS_PAIR}
[task]
kind = \"curve\"
t_min_s = 1.0e-3
t_max_s = 100.0
points_per_decade = 200
"
    )
}

fn fig1c() -> String {
    format!(
        r#"{SPIN_BOSON}
[ensemble]
n_qubits = 1000

[[series]]
label = "cumulant"
backend = "oats_cumulant"
psi = "full"
initial_state = "oats"

[[series]]
label = "exact"
backend = "dicke_exact"
psi = "full"
initial_state = "oats"

[[series]]
label = "exact_psi_zero"
backend = "dicke_exact"
psi = "zero"
initial_state = "oats"

[task]
kind = "curve"
t_min_s = 1.0e-4
t_max_s = 10.0
points_per_decade = 100

[q_function]
times_s = [1.3e-3, 0.1, 1.0]
series = "exact"
n_theta = 90
n_gamma = 180
"#
    )
}

const ION: &str = r#"
[model]
kind = "trapped_ion"
omega_z_rad_per_s = {OMEGA_Z}
u_dk_n = 40.0e-24
m_ion_kg = 1.50e-26
nbar = 12.8
{D_LINE}
[budget]
kind = "fixed_shots"
nu = 1.0

[[series]]
label = "css"
backend = "css_closed_form"
psi = "full"
initial_state = "css"
"#;

const ION_OATS: &str = r#"
[[series]]
label = "oats"
backend = "oats_cumulant"
psi = "full"
initial_state = "oats"

[[series]]
label = "oats_psi_zero"
backend = "oats_cumulant"
psi = "zero"
initial_state = "oats"
"#;

fn two_pi(x: f64) -> String {
    format!("{:?}", 2.0 * PI * x)
}

fn ion(d_line: &str) -> String {
    ION.replace("{OMEGA_Z}", &two_pi(1.57e6)).replace("{D_LINE}", d_line)
}

fn fig2a() -> String {
    let d: Vec<String> = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0]
        .iter()
        .map(|khz| two_pi(khz * 1e3))
        .collect();
    format!(
        r#"{}
[[series]]
label = "css_psi_zero"
backend = "css_closed_form"
psi = "zero"
initial_state = "css"
{ION_OATS}
[ensemble]
n_qubits = 100

[task]
kind = "scan_d"
d_values_rad_per_s = [{}]
"#,
        ion(""),
        d.join(", ")
    )
}

fn fig2b() -> String {
    format!(
        r#"{}{ION_OATS}
[task]
kind = "scan_n"
n_values = [20, 50, 100, 200, 300, 500, 1000]
"#,
        ion(&format!("d_rad_per_s = {}", two_pi(2e3)))
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for p in &PRESETS {
            crate::config::resolve(&p.table(), None).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn fig1b_shares_fig1a_parameters() {
        let mut a = find("fig1a").unwrap().table();
        let mut b = find("fig1b").unwrap().table();
        b.remove("task");
        a.remove("task");
        assert_eq!(a, b);
    }
}
