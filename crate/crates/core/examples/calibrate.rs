//! Scans modulator capacitance and hotspot heat capacity and reports the
//! optical-output edge times of the trace experiment.
//!
//! cargo run --release --example calibrate -- <C_pF...> -- <tau_th_us...>

use snspd_sim::circuit::{edge_metrics, readout_chain, run_trace};
use snspd_sim::presets::calibrated_1k;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let split = args.iter().position(|a| a == "--").unwrap_or(args.len());
    let caps: Vec<f64> = args[..split].iter().map(|a| a.parse().unwrap()).collect();
    let taus: Vec<f64> = args
        .get(split + 1..)
        .unwrap_or(&[])
        .iter()
        .map(|a| a.parse().unwrap())
        .collect();
    let base = calibrated_1k();
    println!("C_pF,tau_th_us,rise_us,fall_us,pulses,clicks");
    for &c in &caps {
        for &tau in &taus {
            let mut p = base.clone();
            p.modulator.capacitance = c * 1e-12;
            p.nanowire.heat_capacity_per_length =
                tau * 1e-6 * p.nanowire.thermal_conductance_per_length;
            let drive = p.trace_drive();
            let trace = match run_trace(&drive, &p.device(), 3.0 * drive.period, p.integration(), 1)
            {
                Ok(t) => t,
                Err(e) => {
                    println!("{c},{tau},error: {e}");
                    continue;
                }
            };
            let r = readout_chain(&trace, &p.readout).unwrap();
            match edge_metrics(&r.trace, "p_out_W").unwrap().pulse() {
                Some(m) => println!(
                    "{c},{tau},{:.3},{:.3},{},{}",
                    m.rise_time_90 * 1e6,
                    m.fall_time_90 * 1e6,
                    m.pulses,
                    r.clicks.len()
                ),
                None => println!("{c},{tau},-,-,0,{}", r.clicks.len()),
            }
        }
    }
}
