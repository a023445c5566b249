//! Named scenarios: each writes its data files and a `summary.json` with the
//! headline metrics into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::circuit::{edge_metrics, readout_chain, run_trace, settle_latched};
use crate::config::{ConfigError, Scenario, ScenarioConfig};
use crate::error::SimError;
use crate::fitkit::{self, FitError, SweepData};
use crate::modulator::{transmission_with_vpi, vpi_at_temperature};
use crate::params::ParamBundle;
use crate::photodiode::{
    load_sweep, log_grid, max_power_point, open_circuit_voltage, photocurrent,
};
use crate::snspd::{equilibrium_point, EquilibriumOutcome};
use crate::stats::{
    build_histogram, peak_stats, post_peak_counts, run_counting_experiment,
    single_photon_click_delay, subtract_background, CountHistogram, PhotonSource,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Master-seed offset of the background-only counting run.
pub const BACKGROUND_SEED_XOR: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no scenario selected")]
    NoScenario,
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    /// 2 configuration, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) | ScenarioError::NoScenario => 2,
            ScenarioError::Simulation(e) => sim_exit_code(e),
            ScenarioError::Fit(FitError::Io(_)) => 4,
            ScenarioError::Fit(FitError::Domain(_)) => 2,
            ScenarioError::Fit(_) => 3,
            ScenarioError::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "numerical",
            _ => "io",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

fn sim_exit_code(e: &SimError) -> i32 {
    match e {
        SimError::AtIndex { source, .. } => sim_exit_code(source),
        SimError::Domain(_) => 2,
        SimError::Numerical(_) | SimError::Contract(_) => 3,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Files written by a scenario and its summary document.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), ScenarioError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.push(path);
        Ok(())
    }
}

/// CSV document with every number in shortest round-trip scientific form.
struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        let _ = writeln!(self.0, "{}", line.join(","));
    }
}

enum Cell<'a> {
    F(f64),
    I(i64),
    S(&'a str),
}

impl Cell<'_> {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:e}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.to_string(),
        }
    }
}

/// Runs the scenario on a dedicated pool of `config.threads` workers
/// (0 = one per core).
pub fn run_with_threads(config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| ScenarioError::Simulation(SimError::numerical(format!("thread pool: {e}"))))?;
    pool.install(|| run_scenario(config))
}

/// Runs the selected scenario on the current rayon pool.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let scenario = config.scenario.ok_or(ScenarioError::NoScenario)?;
    fs::create_dir_all(&config.output).map_err(io_err(&config.output))?;
    let mut out = Out {
        dir: &config.output,
        files: Vec::new(),
    };
    let p = &config.params;
    let metrics = match scenario {
        Scenario::Loadline => loadline(p, &mut out)?,
        Scenario::Powersweep => powersweep(p, &mut out)?,
        Scenario::Vpisweep => vpisweep(p, config.seed, &mut out)?,
        Scenario::Trace => trace(p, config.seed, &mut out)?,
        Scenario::Histogram => histogram(config, &mut out)?,
        Scenario::Budget => budget(p, &mut out)?,
        Scenario::FitVpi => fit_vpi(p, config.seed, &mut out)?,
        Scenario::FitFp => fit_fp(p, &mut out)?,
    };
    let generated = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let names: Vec<String> = out
        .files
        .iter()
        .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario.name(),
        "preset": config.preset_name,
        "seed": config.seed,
        "generated_unix_s": generated,
        "files": names,
        "metrics": metrics,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises");
    let path = config.output.join("summary.json");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(ScenarioReport {
        scenario,
        files: out.files,
        summary,
    })
}

fn loadline(p: &ParamBundle, out: &mut Out) -> Result<Value, ScenarioError> {
    let s = &p.loadline;
    let loads = log_grid(s.r_min, s.r_max, s.points as usize);
    let mut csv = Csv::new(&[
        "optical_power_W",
        "load_ohm",
        "voltage_V",
        "current_A",
        "power_W",
    ]);
    for power in [s.optical_power, s.compare_power] {
        for (r, op) in loads.iter().zip(load_sweep(power, &loads, &p.photodiode)?) {
            csv.row(&[
                Cell::F(power),
                Cell::F(*r),
                Cell::F(op.voltage),
                Cell::F(op.current),
                Cell::F(op.electrical_power),
            ]);
        }
    }
    out.write("loadline.csv", &csv.0)?;
    let mpp = max_power_point(s.optical_power, &p.photodiode, (s.mpp_min, s.mpp_max))?;
    let mpp_cmp = max_power_point(s.compare_power, &p.photodiode, (s.mpp_min, s.mpp_max))?;
    Ok(json!({
        "optical_power_W": s.optical_power,
        "v_oc_V": open_circuit_voltage(s.optical_power, &p.photodiode)?,
        "r_mpp_ohm": mpp.resistance,
        "p_mpp_W": mpp.power,
        "v_mpp_V": mpp.point.voltage,
        "compare_power_W": s.compare_power,
        "r_mpp_compare_ohm": mpp_cmp.resistance,
    }))
}

fn powersweep(p: &ParamBundle, out: &mut Out) -> Result<Value, ScenarioError> {
    let s = &p.powersweep;
    let dev = p.device();
    let mut csv = Csv::new(&[
        "optical_power_W",
        "photocurrent_A",
        "latched",
        "voltage_V",
        "wire_current_A",
        "wire_resistance_ohm",
        "leak_current_A",
    ]);
    for (index, power) in log_grid(s.p_min, s.p_max, s.points as usize)
        .into_iter()
        .enumerate()
    {
        let eq = equilibrium_point(power, &p.photodiode, &p.nanowire).map_err(|e| {
            SimError::AtIndex {
                index,
                source: Box::new(e),
            }
        })?;
        let iph = photocurrent(power, &p.photodiode)?;
        match eq {
            EquilibriumOutcome::Latched(e) => csv.row(&[
                Cell::F(power),
                Cell::F(iph),
                Cell::I(1),
                Cell::F(e.voltage),
                Cell::F(e.wire_current),
                Cell::F(e.hotspot.resistance),
                Cell::F(e.leak_current),
            ]),
            EquilibriumOutcome::NoLatch => csv.row(&[
                Cell::F(power),
                Cell::F(iph),
                Cell::I(0),
                Cell::F(0.0),
                Cell::F(iph),
                Cell::F(0.0),
                Cell::F(0.0),
            ]),
        }
    }
    out.write("powersweep.csv", &csv.0)?;

    let bias = p.bias.optical_power;
    let mut metrics = json!({ "bias_power_W": bias });
    if let EquilibriumOutcome::Latched(eq) = equilibrium_point(bias, &p.photodiode, &p.nanowire)? {
        let settled = settle_latched(bias, &dev, p.sim.settle_time, p.sim.step)?;
        metrics["equilibrium_voltage_V"] = json!(eq.voltage);
        metrics["equilibrium_resistance_ohm"] = json!(eq.hotspot.resistance);
        metrics["equilibrium_wire_current_A"] = json!(eq.wire_current);
        metrics["settled_voltage_V"] = json!(settled.node_voltage);
        metrics["settled_relative_error"] = json!((settled.node_voltage / eq.voltage - 1.0).abs());
    } else {
        metrics["equilibrium"] = json!("no-latch");
    }
    if let EquilibriumOutcome::Latched(eq) = equilibrium_point(s.p_max, &p.photodiode, &p.nanowire)?
    {
        metrics["max_power_W"] = json!(s.p_max);
        metrics["max_power_voltage_V"] = json!(eq.voltage);
    }
    Ok(metrics)
}

/// Modulator output versus voltage at the configured temperature, with
/// optional seeded additive noise.
pub fn vpi_sweep_data(p: &ParamBundle, seed: u64) -> Result<(SweepData, Vec<f64>), ScenarioError> {
    let s = &p.vpisweep;
    let vpi = vpi_at_temperature(p.modulator.temperature, &p.modulator)?;
    let n = s.points.max(2) as usize;
    let x: Vec<f64> = (0..n)
        .map(|i| s.v_min + (s.v_max - s.v_min) * i as f64 / (n - 1) as f64)
        .collect();
    let clean: Vec<f64> = x
        .iter()
        .map(|&v| transmission_with_vpi(v, vpi, &p.modulator))
        .collect();
    let mut y = clean.clone();
    if s.noise_rms > 0.0 {
        let peak = clean.iter().cloned().fold(0.0, f64::max);
        let noise =
            Normal::new(0.0, s.noise_rms * peak).map_err(|e| SimError::domain(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut y {
            *v += noise.sample(&mut rng);
        }
    }
    let data = SweepData::new(x, y)?.normalized()?;
    Ok((data, clean))
}

fn vpisweep(p: &ParamBundle, seed: u64, out: &mut Out) -> Result<Value, ScenarioError> {
    let (data, clean) = vpi_sweep_data(p, seed)?;
    let mut csv = Csv::new(&["voltage_V", "normalized_intensity", "transmission"]);
    for ((&x, &y), &t) in data.x.iter().zip(&data.y).zip(&clean) {
        csv.row(&[Cell::F(x), Cell::F(y), Cell::F(t)]);
    }
    out.write("vpisweep.csv", &csv.0)?;
    let vpi = vpi_at_temperature(p.modulator.temperature, &p.modulator)?;
    let fit = fitkit::fit_sine_vpi(&data, hint(p))?;
    Ok(json!({
        "temperature_K": p.modulator.temperature,
        "vpi_model_V": vpi,
        "vpi_fit_V": fit.vpi,
        "fit": fit,
    }))
}

fn hint(p: &ParamBundle) -> Option<f64> {
    (p.fit.vpi_hint > 0.0).then_some(p.fit.vpi_hint)
}

fn trace(p: &ParamBundle, seed: u64, out: &mut Out) -> Result<Value, ScenarioError> {
    let drive = p.trace_drive();
    let duration = drive.period * p.sim.trace_periods.max(1) as f64;
    let raw = run_trace(&drive, &p.device(), duration, p.integration(), seed)?;
    let result = readout_chain(&raw, &p.readout)?;
    let mut buf = Vec::new();
    result
        .trace
        .write_csv(&mut buf)
        .map_err(io_err(Path::new("trace.csv")))?;
    out.write("trace.csv", &String::from_utf8(buf).expect("ascii csv"))?;
    let mut metrics = json!({
        "period_s": drive.period,
        "clicks": result.clicks.len(),
        "click_times_s": result.clicks.iter().map(|c| c.time).collect::<Vec<_>>(),
    });
    if let Some(c) = result.clicks.first() {
        metrics["click_optical_amplitude_W"] = json!(c.optical_amplitude);
        metrics["click_sub_sensitivity"] = json!(c.sub_sensitivity);
    }
    match edge_metrics(&result.trace, "p_out_W")?.pulse() {
        Some(m) => {
            metrics["rise_time_90_s"] = json!(m.rise_time_90);
            metrics["fall_time_90_s"] = json!(m.fall_time_90);
            metrics["repetition_rate_Hz"] = json!(m.repetition_rate);
            metrics["pulses"] = json!(m.pulses);
        }
        None => metrics["pulses"] = json!(0),
    }
    Ok(metrics)
}

/// Signal, background and background-subtracted histograms of one counting
/// run, plus the deterministic single-photon delay.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRun {
    pub signal: CountHistogram,
    pub background: CountHistogram,
    pub subtracted: CountHistogram,
    pub signal_click_fraction: f64,
    pub background_click_fraction: f64,
    /// s, `None` when a certain photon at the pulse time produces no click.
    pub expected_delay: Option<f64>,
}

/// Runs the signal and background-only experiments over `n_periods` each.
/// The background run uses `seed ^ BACKGROUND_SEED_XOR`.
pub fn histogram_experiment(
    p: &ParamBundle,
    n_periods: u64,
    seed: u64,
) -> Result<HistogramRun, SimError> {
    let drive = p.counting_drive();
    let dev = p.device();
    let setup = p.counting_setup();
    let edges = p.bin_edges();
    let source = p.photon_source();
    let background = PhotonSource {
        mean_photons_per_pulse: 0.0,
        ..source
    };
    let sig = run_counting_experiment(&drive, &source, &dev, &setup, n_periods, seed)?;
    let bkg = run_counting_experiment(
        &drive,
        &background,
        &dev,
        &setup,
        n_periods,
        seed ^ BACKGROUND_SEED_XOR,
    )?;
    let signal = build_histogram(&sig.delays, &edges, n_periods)?;
    let background = build_histogram(&bkg.delays, &edges, n_periods)?;
    let subtracted = subtract_background(&signal, &background)?;
    Ok(HistogramRun {
        signal,
        background,
        subtracted,
        signal_click_fraction: sig.click_fraction(),
        background_click_fraction: bkg.click_fraction(),
        expected_delay: single_photon_click_delay(
            &drive,
            source.pulse_time_in_period,
            &dev,
            &setup,
        )?,
    })
}

fn histogram(config: &ScenarioConfig, out: &mut Out) -> Result<Value, ScenarioError> {
    let p = &config.params;
    let n = p.counting.n_periods;
    let run = histogram_experiment(p, n, config.seed)?;
    let (h_sig, h_bkg, h_sub) = (&run.signal, &run.background, &run.subtracted);
    for (name, h) in [
        ("histogram_signal.csv", h_sig),
        ("histogram_background.csv", h_bkg),
        ("histogram_subtracted.csv", h_sub),
    ] {
        let mut csv = Csv::new(&["bin_lo_s", "bin_hi_s", "counts", "error"]);
        for i in 0..h.n_bins() {
            csv.row(&[
                Cell::F(h.bin_edges[i]),
                Cell::F(h.bin_edges[i + 1]),
                Cell::I(h.counts[i]),
                Cell::F(h.errors[i]),
            ]);
        }
        out.write(name, &csv.0)?;
    }
    let export = json!({
        "seed": config.seed,
        "background_seed": config.seed ^ BACKGROUND_SEED_XOR,
        "n_periods": n,
        "preset": config.preset_name,
        "signal": h_sig,
        "background": h_bkg,
        "subtracted": h_sub,
    });
    out.write(
        "histogram.json",
        &(serde_json::to_string_pretty(&export).expect("histogram serialises") + "\n"),
    )?;

    let mut metrics = json!({
        "n_periods": n,
        "signal_click_fraction": run.signal_click_fraction,
        "background_click_fraction": run.background_click_fraction,
        "expected_delay_s": run.expected_delay,
    });
    if let Some(peak) = peak_stats(h_sub).peak() {
        let after = post_peak_counts(h_sub, &peak, 3);
        metrics["peak_delay_s"] = json!(peak.peak_time);
        metrics["fwhm_s"] = json!(peak.fwhm);
        metrics["peak_counts"] = json!(peak.peak_counts);
        metrics["post_peak_counts"] = json!(after);
    } else {
        metrics["peak"] = json!("no-peak");
    }
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    /// Optical power dissipated on the cold stage.
    ActiveOptical,
    /// Heat conducted down a wire or cable.
    Passive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerItem {
    pub name: String,
    /// W
    pub power: f64,
    pub kind: ItemKind,
}

impl PowerItem {
    pub fn new(name: &str, power: f64, kind: ItemKind) -> Self {
        PowerItem {
            name: name.to_string(),
            power,
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub items: Vec<PowerItem>,
    /// W, sum of all items.
    pub total: f64,
    /// W, sum of the active-optical items.
    pub active_optical: f64,
    /// Names of passive items, absent when bias and readout are all optical.
    pub not_in_all_optical: Vec<String>,
}

pub fn power_budget(items: Vec<PowerItem>) -> Result<PowerBudget, SimError> {
    if let Some(bad) = items
        .iter()
        .find(|i| !(i.power >= 0.0 && i.power.is_finite()))
    {
        return Err(SimError::domain(format!(
            "budget item `{}` has power {}",
            bad.name, bad.power
        )));
    }
    let total = items.iter().map(|i| i.power).sum();
    let active_optical = items
        .iter()
        .filter(|i| i.kind == ItemKind::ActiveOptical)
        .map(|i| i.power)
        .sum();
    let not_in_all_optical = items
        .iter()
        .filter(|i| i.kind == ItemKind::Passive)
        .map(|i| i.name.clone())
        .collect();
    Ok(PowerBudget {
        items,
        total,
        active_optical,
        not_in_all_optical,
    })
}

fn budget(p: &ParamBundle, out: &mut Out) -> Result<Value, ScenarioError> {
    let mut items = vec![
        PowerItem::new(
            "photodiode_bias",
            p.bias.optical_power,
            ItemKind::ActiveOptical,
        ),
        PowerItem::new(
            "modulator_probe",
            p.counting.probe_power,
            ItemKind::ActiveOptical,
        ),
    ];
    if p.budget.coax_heatload > 0.0 {
        items.push(PowerItem::new(
            "coax_readout",
            p.budget.coax_heatload,
            ItemKind::Passive,
        ));
    }
    let b = power_budget(items)?;
    let mut csv = Csv::new(&["item", "kind", "power_W", "present_all_optical"]);
    for i in &b.items {
        let kind = match i.kind {
            ItemKind::ActiveOptical => "active-optical",
            ItemKind::Passive => "passive",
        };
        csv.row(&[
            Cell::S(&i.name),
            Cell::S(kind),
            Cell::F(i.power),
            Cell::I((i.kind == ItemKind::ActiveOptical) as i64),
        ]);
    }
    csv.row(&[Cell::S("total"), Cell::S(""), Cell::F(b.total), Cell::S("")]);
    out.write("budget.csv", &csv.0)?;
    Ok(json!({
        "total_budget_W": b.total,
        "active_optical_W": b.active_optical,
        "reference_total_W": p.budget.reference_total,
        "difference_to_reference_W": p.budget.reference_total - b.total,
        "not_in_all_optical": b.not_in_all_optical,
        "items": b.items,
    }))
}

fn fit_vpi(p: &ParamBundle, seed: u64, out: &mut Out) -> Result<Value, ScenarioError> {
    let data = if p.fit.input.is_empty() {
        vpi_sweep_data(p, seed)?.0
    } else {
        fitkit::read_sweep_csv(Path::new(&p.fit.input))?
    };
    let fit = fitkit::fit_sine_vpi(&data, hint(p))?;
    let doc = json!({ "samples": data.len(), "fit": fit });
    out.write(
        "fit_vpi.json",
        &(serde_json::to_string_pretty(&doc).expect("fit serialises") + "\n"),
    )?;
    Ok(json!({ "vpi_V": fit.vpi, "residual_rms": fit.residual_rms, "fit": fit }))
}

fn fit_fp(p: &ParamBundle, out: &mut Out) -> Result<Value, ScenarioError> {
    let s = &p.fabry_perot;
    let contrast = if s.input.is_empty() {
        s.contrast
    } else {
        let data = fitkit::read_sweep_csv(Path::new(&s.input))?;
        data.validate(2)?;
        fitkit::fringe_contrast(&data.y)?
    };
    let loss = fitkit::fabry_perot_loss(contrast, s.facet_reflectivity, s.length)?;
    let doc = json!({
        "contrast": contrast,
        "facet_reflectivity": s.facet_reflectivity,
        "length_cm": s.length,
        "loss_dB_per_cm": loss,
    });
    out.write(
        "fit_fp.json",
        &(serde_json::to_string_pretty(&doc).expect("fit serialises") + "\n"),
    )?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_sums_items() {
        let b = power_budget(vec![
            PowerItem::new("a", 6e-6, ItemKind::ActiveOptical),
            PowerItem::new("b", 68e-6, ItemKind::ActiveOptical),
        ])
        .unwrap();
        assert!((b.total - 74e-6).abs() < 1e-18);
        assert!(b.not_in_all_optical.is_empty());
    }

    #[test]
    fn empty_budget_is_zero() {
        assert_eq!(power_budget(Vec::new()).unwrap().total, 0.0);
    }

    #[test]
    fn probe_variant_budget() {
        let b = power_budget(vec![
            PowerItem::new("a", 6e-6, ItemKind::ActiveOptical),
            PowerItem::new("b", 68e-6, ItemKind::ActiveOptical),
            PowerItem::new("probe", 3.5e-3, ItemKind::ActiveOptical),
        ])
        .unwrap();
        assert!((b.total - 3.574e-3).abs() < 1e-15);
    }

    #[test]
    fn passive_items_are_flagged() {
        let b = power_budget(vec![PowerItem::new("coax", 1e-3, ItemKind::Passive)]).unwrap();
        assert_eq!(b.not_in_all_optical, vec!["coax".to_string()]);
    }

    #[test]
    fn negative_item_is_rejected() {
        assert!(power_budget(vec![PowerItem::new("x", -1.0, ItemKind::Passive)]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ScenarioError::NoScenario.exit_code(), 2);
        assert_eq!(ScenarioError::from(SimError::numerical("x")).exit_code(), 3);
        let io = ScenarioError::Io {
            path: "x".into(),
            source: std::io::Error::other("y"),
        };
        assert_eq!(io.exit_code(), 4);
        assert_eq!(io.to_json()["error"], "io");
    }
}
