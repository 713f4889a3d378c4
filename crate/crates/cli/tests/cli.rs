use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ramsey(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramsey"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header row and data rows of a CSV artifact, skipping `#` lines.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

const NOISELESS: &str = r#"
[model]
kind = "noiseless"

[ensemble]
n_qubits = 64

[budget]
kind = "fixed_total_time"
total_time_s = 2.0

[[series]]
label = "css"
backend = "css_closed_form"
initial_state = "css"

[task]
kind = "curve"
t_min_s = 0.01
t_max_s = 1.0
points_per_decade = 10
"#;

#[test]
fn lists_five_presets_in_order() {
    let dir = TempDir::new().unwrap();
    let o = ramsey(&["list-presets"], dir.path());
    assert!(o.status.success());
    let names: Vec<String> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect();
    assert_eq!(names, ["fig1a", "fig1b", "fig1c", "fig2a", "fig2b"]);
}

#[test]
fn unknown_preset_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let o = ramsey(&["run", "--preset", "fig9z"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fig9z"));
}

#[test]
fn run_without_config_or_preset_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(ramsey(&["run"], dir.path()).status.code(), Some(2));
}

#[test]
fn syntax_error_reports_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), "[model]\nkind = \"noiseless\"\nalpha = = 1\n").unwrap();
    let o = ramsey(&["run", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:3"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_named_with_its_line() {
    let dir = TempDir::new().unwrap();
    let text = NOISELESS.replace("total_time_s = 2.0", "total_time_s = 2.0\ntotal_time_ms = 5.0");
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let o = ramsey(&["run", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("total_time_ms"), "{err}");
    assert!(err.contains("c.toml:11"), "{err}");
}

#[test]
fn semantic_error_names_the_key() {
    let dir = TempDir::new().unwrap();
    let text = NOISELESS.replace("t_min_s = 0.01\nt_max_s = 1.0\n", "");
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let o = ramsey(&["run", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("task.t_min_s"), "{}", stderr(&o));
}

#[test]
fn noiseless_curve_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.toml"), NOISELESS).unwrap();
    let o = ramsey(&["run", "c.toml", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&dir.path().join("out/curve.csv"));
    let t = column(&h, &rows, "t");
    let db = column(&h, &rows, "delta_b_css");
    assert_eq!(t.len(), 21);
    // Δb√T = √T / (t √(N T/t)) = 1/√(N t).
    for (t, v) in t.iter().zip(&db) {
        let expected = 1.0 / (64.0 * t).sqrt();
        assert!((v / expected - 1.0).abs() < 1e-12, "t={t}: {v} vs {expected}");
    }
    let (h, rows) = read_csv(&dir.path().join("out/trajectory.csv"));
    assert_eq!(h, ["t", "phi", "chi", "psi"]);
    assert!(column(&h, &rows, "chi").iter().all(|c| *c == 0.0));
}

#[test]
fn fig1a_preset_is_deterministic_and_twisting_only_hurts() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = ramsey(&["run", "--preset", "fig1a", "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["curve.csv", "trajectory.csv", "resolved_config.toml"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    let (h, rows) = read_csv(&dir.path().join("a/curve.csv"));
    let full = column(&h, &rows, "delta_b_psi_full");
    let zero = column(&h, &rows, "delta_b_psi_zero");
    assert!(full.iter().zip(&zero).all(|(f, z)| f >= &(z * (1.0 - 1e-12))));
    let meta = fs::read_to_string(dir.path().join("a/metadata.txt")).unwrap();
    let chi0: f64 = meta
        .lines()
        .find_map(|l| l.strip_prefix("chi0_rad_per_s = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((chi0 - 6f64.sqrt()).abs() < 1e-14);
    assert!(meta.lines().any(|l| l.starts_with("psi0_rad_per_s = ")));
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let o = ramsey(
        &["run", "--preset", "fig1a", "--out", "first", "--set", "ensemble.n_qubits=40", "--set", "task.points_per_decade=20"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ramsey(&["run", "first/resolved_config.toml", "--out", "second"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.path().join("first/curve.csv")).unwrap(),
        fs::read(dir.path().join("second/curve.csv")).unwrap()
    );
    let meta = fs::read_to_string(dir.path().join("first/metadata.txt")).unwrap();
    assert!(meta.contains("point.0.n_qubits = 40"));
}

#[test]
fn config_file_merges_over_preset() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.toml"), "[ensemble]\nn_qubits = 30\n\n[task]\npoints_per_decade = 10\n").unwrap();
    let o = ramsey(&["run", "c.toml", "--preset", "fig1a", "--out", "o", "--set", "series.1.psi=full"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&dir.path().join("o/curve.csv"));
    assert_eq!(rows.len(), 31);
    // Both series now keep Ψ, so the columns coincide.
    assert_eq!(column(&h, &rows, "delta_b_psi_full"), column(&h, &rows, "delta_b_psi_zero"));
    let resolved = fs::read_to_string(dir.path().join("o/resolved_config.toml")).unwrap();
    assert!(resolved.contains("kind = \"spin_boson\""));
}

#[test]
fn override_with_bad_index_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = ramsey(&["run", "--preset", "fig1a", "--set", "series.7.psi=zero"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("series.7.psi"));
}

#[test]
fn numerical_failure_exits_3_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    // ∫y₀ = t(1 - sinc Dt) underflows to zero: a degenerate protocol.
    let text = NOISELESS.replace(
        "[ensemble]",
        "[control]\nkind = \"ion_drive\"\nmu_rad_per_s = 1.0\nd_rad_per_s = 1e-200\n\n[ensemble]",
    );
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let o = ramsey(&["run", "c.toml", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("uncertainty_curve"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.toml"), NOISELESS).unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = ramsey(&["run", "c.toml", "--out", "blocker/out"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn tabulated_spectrum_runs_and_path_is_resolved() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    let mut table = String::from("# omega (rad/s), S\nomega,S\n");
    for i in 0..200 {
        let w = -10.0 + 0.1 * i as f64;
        table.push_str(&format!("{w},{}\n", (-w * w).exp()));
    }
    fs::write(dir.path().join("cfg/spectrum.csv"), table).unwrap();
    let text = NOISELESS.replace(
        "kind = \"noiseless\"",
        "kind = \"tabulated\"\npath = \"spectrum.csv\"\nlabel = \"gaussian\"",
    );
    fs::write(dir.path().join("cfg/c.toml"), text).unwrap();
    let o = ramsey(&["run", "cfg/c.toml", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&dir.path().join("out/trajectory.csv"));
    let chi = column(&h, &rows, "chi");
    assert!(chi.windows(2).all(|w| w[1] > w[0]));
    let resolved = fs::read_to_string(dir.path().join("out/resolved_config.toml")).unwrap();
    assert!(resolved.contains(&dir.path().join("cfg").display().to_string()));
}

#[test]
fn ion_scan_reports_analytic_and_numeric_columns() {
    let dir = TempDir::new().unwrap();
    let o = ramsey(
        &[
            "run",
            "--preset",
            "fig2b",
            "--out",
            "o",
            "--set",
            "task.n_values=[100, 200, 400]",
            "--set",
            "task.points_per_decade=200",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&dir.path().join("o/scaling.csv"));
    assert_eq!(column(&h, &rows, "N"), [100.0, 200.0, 400.0]);
    let analytic = column(&h, &rows, "dz_c_analytic");
    let css = column(&h, &rows, "dz_c_css");
    assert!((analytic[0] - 1.0756e-9).abs() < 1e-12);
    for (a, c) in analytic.iter().zip(&css) {
        assert!((a / c - 1.0).abs() < 0.15);
    }
    for s in ["css", "oats", "oats_psi_zero"] {
        assert!(h.contains(&format!("t_opt_{s}")));
    }
    let meta = fs::read_to_string(dir.path().join("o/metadata.txt")).unwrap();
    for key in ["point.0.g_rad_per_s", "point.0.oats.theta_rad", "ion.omega_z_rad_per_s", "fit.css.exponent_vs_N"] {
        assert!(meta.contains(key), "metadata lacks {key}");
    }
}
