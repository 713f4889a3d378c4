//! `ramsey`: run a dephasing scenario or a built-in preset and write CSV artifacts.

mod config;
mod error;
mod output;
mod presets;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toml::Table;

use config::Source;
use error::{CliError, ConfigError};
use output::Metadata;

const DEFAULT_OUTPUT_DIR: &str = "ramsey_out";

#[derive(Parser)]
#[command(name = "ramsey", version, about = "Frequency-estimation uncertainty under collective dephasing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file, a preset, or a config merged over a preset.
    Run {
        /// TOML configuration file.
        config: Option<PathBuf>,
        /// Start from a built-in preset (see `list-presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a value by dotted key, e.g. `--set ensemble.n_qubits=200`
        /// or `--set series.1.psi=zero`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the built-in presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            for p in &presets::PRESETS {
                println!("{:<6}  {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            preset,
            out,
            overrides,
        } => match run(config.as_deref(), preset.as_deref(), out, &overrides) {
            Ok(summary) => {
                println!("{summary}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("ramsey: {e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}

fn run(
    config_path: Option<&Path>,
    preset: Option<&str>,
    out: Option<PathBuf>,
    overrides: &[String],
) -> Result<String, CliError> {
    let mut table = match preset {
        Some(name) => presets::find(name)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?
            .table(),
        None => Table::new(),
    };
    let user = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Some(Source {
                name: path.display().to_string(),
                text,
            })
        }
        None if preset.is_none() => return Err(ConfigError::Missing.into()),
        None => None,
    };
    if let Some(u) = &user {
        config::deep_merge(&mut table, config::parse_table(u)?);
    }
    for o in overrides {
        config::apply_override(&mut table, o)?;
    }
    let mut cfg = config::resolve(&table, user.as_ref())?;
    let base = config_path
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    config::absolutize_paths(&mut cfg, &base);
    let out_dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    let located = |e: CliError| match e {
        CliError::Config(c) => CliError::Config(config::with_location(c, user.as_ref())),
        e => e,
    };
    let job = run::Job::new(&cfg).map_err(located)?;
    let mut meta = Metadata::default();
    meta.push("version", env!("CARGO_PKG_VERSION"));
    meta.push("preset", preset.unwrap_or("none"));
    meta.push(
        "config",
        config_path.map(|p| p.display().to_string()).unwrap_or_else(|| "none".into()),
    );
    for (i, o) in overrides.iter().enumerate() {
        meta.push(format!("override.{i}"), o.as_str());
    }
    meta.push("resolved_config", "resolved_config.toml");
    meta.push("output_dir", out_dir.display().to_string());
    meta.push("rerun", "ramsey run resolved_config.toml --out <dir>");
    let mut artifacts = job.execute(&mut meta).map_err(located)?;
    let resolved = toml::to_string(&job.effective_config()).map_err(|e| ConfigError::key("<root>", e.to_string()))?;
    artifacts.push(output::Artifact {
        name: "resolved_config.toml".into(),
        contents: format!("# resolved by ramsey {}\n{resolved}", env!("CARGO_PKG_VERSION")),
    });
    artifacts.push(meta.into_artifact());
    output::write_artifacts(&out_dir, &artifacts)?;
    let names: Vec<&str> = artifacts.iter().map(|a| a.name.as_str()).collect();
    Ok(format!("wrote {} to {}", names.join(", "), out_dir.display()))
}
