use proptest::prelude::*;

use snspd_sim::circuit::{
    edge_metrics, readout_chain, run_trace, settle_latched, step, CircuitState,
    IntegrationSettings, OpticalDrive, TimeTrace,
};
use snspd_sim::modulator::transmission;
use snspd_sim::params::ParamBundle;
use snspd_sim::presets::calibrated_1k;
use snspd_sim::snspd::equilibrium_point;

fn preset_trace(p: &ParamBundle, settings: IntegrationSettings, periods: u64) -> TimeTrace {
    let drive = p.trace_drive();
    run_trace(
        &drive,
        &p.device(),
        drive.period * periods as f64,
        settings,
        p.run.seed,
    )
    .unwrap()
}

#[test]
fn dark_trace_is_flat_at_quiescent_transmission() {
    let p = calibrated_1k();
    let drive = OpticalDrive {
        signal_photon_times: Vec::new(),
        ..p.trace_drive()
    };
    let tr = run_trace(&drive, &p.device(), drive.period * 2.0, p.integration(), 1).unwrap();
    let level =
        drive.probe_power * transmission(0.0, p.modulator.temperature, &p.modulator).unwrap();
    assert!(tr.channel("p_out_W").unwrap().iter().all(|&x| x == level));
    assert!(tr.channel("v_node_V").unwrap().iter().all(|&v| v == 0.0));
    assert_eq!(edge_metrics(&tr, "p_out_W").unwrap().pulse(), None);
    assert!(readout_chain(&tr, &p.readout).unwrap().clicks.is_empty());
}

#[test]
fn one_click_per_detecting_period() {
    let p = calibrated_1k();
    let tr = preset_trace(&p, p.integration(), 4);
    let out = readout_chain(&tr, &p.readout).unwrap();
    let period = p.bias.period;
    let mut per_period = vec![0; 4];
    for c in &out.clicks {
        per_period[(c.time / period) as usize] += 1;
    }
    let t = tr.times();
    let r = tr.channel("r_wire_ohm").unwrap();
    let mut latched = vec![0; 4];
    for (i, &ti) in t.iter().enumerate() {
        let k = (ti / period) as usize;
        if k < 4 && r[i] > 0.0 {
            latched[k] = 1;
        }
    }
    assert!(latched.contains(&1));
    assert_eq!(per_period, latched);
    let flags = out.trace.channel("click").unwrap();
    assert_eq!(
        flags.iter().filter(|&&f| f == 1.0).count(),
        out.clicks.len()
    );
}

#[test]
fn halving_the_step_changes_the_last_period_little() {
    let p = calibrated_1k();
    let coarse = preset_trace(&p, p.integration(), 3);
    let fine = preset_trace(
        &p,
        IntegrationSettings {
            step: p.sim.step / 2.0,
            sample_period: p.sim.sample_period,
        },
        3,
    );
    let a = coarse.channel("v_node_V").unwrap();
    let b = fine.channel("v_node_V").unwrap();
    assert_eq!(a.len(), b.len());
    let per = (p.bias.period / p.sim.sample_period).round() as usize;
    let tail = a.len() - per..a.len();
    let diff: f64 = tail.clone().map(|i| (a[i] - b[i]).powi(2)).sum::<f64>();
    let norm: f64 = tail.map(|i| b[i].powi(2)).sum::<f64>();
    let rel = (diff / norm).sqrt();
    assert!(rel < 5e-3, "relative RMS change {rel:.2e}");
}

#[test]
fn long_constant_drive_reaches_root_found_equilibrium() {
    let p = calibrated_1k();
    for power in [3e-6, 6e-6, 60e-6] {
        let eq = equilibrium_point(power, &p.photodiode, &p.nanowire)
            .unwrap()
            .latched()
            .unwrap();
        let s = settle_latched(power, &p.device(), p.sim.settle_time, p.sim.step).unwrap();
        assert!(
            (s.node_voltage / eq.voltage - 1.0).abs() < 1e-3,
            "P = {power:e}"
        );
    }
}

#[test]
fn superconducting_wire_carries_the_source_current() {
    let p = calibrated_1k().device();
    let dt = 10e-9;
    let mut s = CircuitState::initial();
    let (mut q_src, mut q_wire) = (0.0, 0.0);
    for k in 0..2000 {
        let power = if k < 1000 { 6e-6 } else { 60e-6 };
        q_src += p.photodiode.responsivity * power * dt;
        q_wire += s.wire_current(power, &p) * dt;
        s = step(&s, dt, power, &p).unwrap();
        assert_eq!(s.node_voltage, 0.0);
    }
    assert!((q_src - q_wire).abs() <= 1e-12 * q_src);
}

#[test]
fn bias_off_returns_node_to_zero() {
    let p = calibrated_1k();
    let tr = preset_trace(&p, p.integration(), 1);
    let t = tr.times();
    let v = tr.channel("v_node_V").unwrap();
    let last = t.len() - 1;
    assert!(v.iter().cloned().fold(0.0, f64::max) > 0.02);
    assert_eq!(v[last], 0.0);
    assert_eq!(tr.channel("r_wire_ohm").unwrap()[last], 0.0);
}

#[test]
fn traces_are_reproducible() {
    let p = calibrated_1k();
    let a = preset_trace(&p, p.integration(), 2);
    let b = preset_trace(&p, p.integration(), 2);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn at_most_one_click_per_bias_window(
        photons in proptest::collection::vec(0.0f64..35e-6, 0..6),
        power in 2e-6f64..40e-6,
        seed in 0u64..1000,
    ) {
        let p = calibrated_1k();
        let drive = OpticalDrive { bias_power: power, signal_photon_times: photons, ..p.trace_drive() };
        let tr = run_trace(&drive, &p.device(), drive.period * 2.0, p.integration(), seed).unwrap();
        let out = readout_chain(&tr, &p.readout).unwrap();
        let mut seen = [0; 2];
        for c in &out.clicks {
            seen[((c.time / drive.period) as usize).min(1)] += 1;
        }
        prop_assert!(seen.iter().all(|&n| n <= 1), "{:?}", seen);
        let len = tr.len();
        for name in tr.channel_names().collect::<Vec<_>>() {
            prop_assert_eq!(tr.channel(name).unwrap().len(), len);
        }
        prop_assert!(tr.channel("v_node_V").unwrap().iter().all(|&v| v >= 0.0));
    }
}
