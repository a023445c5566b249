use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snspd-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| {
        panic!(
            "stderr is not JSON: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn budget_scenario_reports_exact_sum_beside_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--scenario",
        "budget",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(dir.path());
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["scenario"], "budget");
    assert_eq!(s["preset"], "paper-1K");
    let m = &s["metrics"];
    assert!((m["total_budget_W"].as_f64().unwrap() - 74e-6).abs() < 1e-15);
    assert!((m["reference_total_W"].as_f64().unwrap() - 75e-6).abs() < 1e-15);
    let csv = fs::read_to_string(dir.path().join("budget.csv")).unwrap();
    assert!(csv.starts_with("item,kind,power_W,present_all_optical\n"));
    assert_eq!(s["files"], serde_json::json!(["budget.csv"]));
}

#[test]
fn trace_summary_rise_time_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--scenario",
        "trace",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let m = &summary(dir.path())["metrics"];
    let rise = m["rise_time_90_s"].as_f64().unwrap();
    assert!((8.8e-6..=13.2e-6).contains(&rise), "{rise}");
    let header = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(header.starts_with("time_s,v_node_V,r_wire_ohm,p_out_W,v_readout_mV,click\n"));
}

#[test]
fn vpisweep_output_feeds_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_dir = dir.path().join("sweep");
    let out = run(&[
        "--scenario",
        "vpisweep",
        "--out",
        sweep_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = sweep_dir.join("vpisweep.csv");
    let fit_dir = dir.path().join("fit");
    let cfg = dir.path().join("fit.toml");
    fs::write(&cfg, format!("[fit]\ninput = \"{}\"\n", csv.display())).unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--scenario",
        "fit-vpi",
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let vpi = summary(&fit_dir)["metrics"]["vpi_V"].as_f64().unwrap();
    assert!((vpi / 6.6 - 1.0).abs() < 1e-3, "{vpi}");
}

#[test]
fn missing_scenario_is_a_config_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 2);
}

#[test]
fn bad_overrides_exit_two() {
    for set in [
        "nope.key=1",
        "bias.optical_power_uW=-1",
        "bias.optical_power_V=6",
        "bias.optical_power_uW",
    ] {
        let out = run(&["--scenario", "budget", "--set", set]);
        assert_eq!(out.status.code(), Some(2), "{set}");
        assert_eq!(stderr_json(&out)["error"], "config");
    }
    let out = run(&["--scenario", "no-such-scenario"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[bias]\noptical_power_uW = 6\nperiod_us = -3\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--scenario", "budget"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr_json(&out)["message"].as_str().unwrap().to_string();
    assert!(
        msg.contains("line 3") && msg.contains("bias.period_us"),
        "{msg}"
    );
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run(&[
        "--scenario",
        "budget",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "io");
    let out = run(&[
        "--config",
        dir.path().join("absent.toml").to_str().unwrap(),
        "--scenario",
        "budget",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unfittable_data_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flat.csv");
    fs::write(
        &data,
        (0..20).map(|i| format!("{i},0.5\n")).collect::<String>(),
    )
    .unwrap();
    let out = run(&[
        "--scenario",
        "fit-vpi",
        "--set",
        &format!("fit.input=\"{}\"", data.display()),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stderr_json(&out)["error"], "numerical");
}

#[test]
fn dumped_config_reloads_to_the_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&[
        "--dump-config",
        "--set",
        "bias.optical_power_uW=7.5",
        "--seed",
        "42",
    ]);
    assert_eq!(first.status.code(), Some(0));
    let cfg = dir.path().join("dump.toml");
    fs::write(&cfg, &first.stdout).unwrap();
    let second = run(&["--config", cfg.to_str().unwrap(), "--dump-config"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let keys = String::from_utf8(run(&["--list-keys"]).stdout).unwrap();
    let dumped = String::from_utf8(first.stdout).unwrap();
    for key in keys.lines() {
        let (section, name) = key.split_once('.').unwrap();
        assert!(dumped.contains(&format!("[{section}]")), "{key}");
        assert!(
            dumped.lines().any(|l| l.trim_start().starts_with(name)),
            "{key}"
        );
    }
}

#[test]
fn same_seed_same_bytes_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let d = dir.path().join(i.to_string());
        let out = run(&[
            "--scenario",
            "histogram",
            "--seed",
            "77",
            "--threads",
            threads,
            "--set",
            "counting.n_periods=3000",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        outputs.push(
            [
                "histogram_signal.csv",
                "histogram_background.csv",
                "histogram_subtracted.csv",
                "histogram.json",
            ]
            .map(|f| fs::read(d.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}
