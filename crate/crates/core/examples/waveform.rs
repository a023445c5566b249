//! Prints node voltage and wire resistance of the first trace period.
//!
//! cargo run --release --example waveform -- <C_pF> <tau_th_us> <every_n_samples>

use snspd_sim::circuit::run_trace;
use snspd_sim::presets::calibrated_1k;

fn main() {
    let a: Vec<f64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("numeric argument"))
        .collect();
    if a.len() != 3 {
        eprintln!("usage: waveform <C_pF> <tau_th_us> <every_n_samples>");
        std::process::exit(2);
    }
    let mut p = calibrated_1k();
    p.modulator.capacitance = a[0] * 1e-12;
    p.nanowire.heat_capacity_per_length = a[1] * 1e-6 * p.nanowire.thermal_conductance_per_length;
    let drive = p.trace_drive();
    let t = run_trace(&drive, &p.device(), 2.0 * drive.period, p.integration(), 1).unwrap();
    let (time, v, r, out) = (
        t.channel("time_s").unwrap(),
        t.channel("v_node_V").unwrap(),
        t.channel("r_wire_ohm").unwrap(),
        t.channel("p_out_W").unwrap(),
    );
    for i in (0..time.len()).step_by(a[2] as usize) {
        println!(
            "{:.3} {:.4e} {:.4e} {:.6e}",
            time[i] * 1e6,
            v[i],
            r[i],
            out[i]
        );
    }
}
