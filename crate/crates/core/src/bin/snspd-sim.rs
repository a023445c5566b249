use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use snspd_sim::config::{parse_config, schema::ENTRIES, Scenario};
use snspd_sim::presets;
use snspd_sim::scenario::{run_with_threads, ScenarioError};

/// Runs one simulation scenario and writes its data files and summary.json.
#[derive(Debug, Parser)]
#[command(name = "snspd-sim", version)]
struct Cli {
    /// TOML config file (`[section]` headers, `key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset the config is applied on.
    #[arg(long)]
    preset: Option<String>,
    /// One of: loadline, powersweep, vpisweep, trace, histogram, budget, fit-vpi, fit-fp.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Override a key with a TOML value, e.g. `--set bias.optical_power_uW=6` or
    /// `--set 'fit.input="sweep.csv"'`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Print every configuration key and exit.
    #[arg(long)]
    list_keys: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn fail(err: ScenarioError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_keys {
        for e in ENTRIES {
            println!("{}", e.key());
        }
        return ExitCode::SUCCESS;
    }
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(source) => {
                return fail(ScenarioError::Io {
                    path: path.clone(),
                    source,
                })
            }
        },
        None => String::new(),
    };
    let mut sets = cli.sets.clone();
    if let Some(s) = &cli.scenario {
        sets.push(format!("run.scenario={}", toml::Value::String(s.clone())));
    }
    if let Some(s) = cli.seed {
        sets.push(format!("run.seed={s}"));
    }
    if let Some(t) = cli.threads {
        sets.push(format!("run.threads={t}"));
    }
    let mut config = match parse_config(&text, cli.preset.as_deref(), &sets) {
        Ok(c) => c,
        Err(e) => return fail(ScenarioError::Config(e)),
    };
    if let Some(out) = cli.out {
        config.output = out;
    }
    if cli.dump_config {
        print!("{}", snspd_sim::config::render(&config.params));
        return ExitCode::SUCCESS;
    }
    if config.scenario.is_none() {
        let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
        eprintln!(
            "{}",
            json!({
                "error": "config",
                "message": format!("no scenario selected; choose one of {}", names.join(", ")),
                "presets": presets::names().collect::<Vec<_>>(),
                "exit_code": 2,
            })
        );
        return ExitCode::from(2);
    }
    match run_with_threads(&config) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report.summary).expect("summary serialises")
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
