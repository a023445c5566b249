//! Time from bias-off at the latched equilibrium until the wire heals.
//!
//! cargo run --release --example reset_time -- <C_pF> <tau_th_us> <collapse_ratio>

use snspd_sim::circuit::{step, CircuitState};
use snspd_sim::presets::calibrated_1k;
use snspd_sim::snspd::equilibrium_point;

fn main() {
    let a: Vec<f64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("numeric argument"))
        .collect();
    if a.len() != 3 {
        eprintln!("usage: reset_time <C_pF> <tau_th_us> <collapse_ratio>");
        std::process::exit(2);
    }
    let mut p = calibrated_1k();
    p.modulator.capacitance = a[0] * 1e-12;
    p.nanowire.heat_capacity_per_length = a[1] * 1e-6 * p.nanowire.thermal_conductance_per_length;
    p.nanowire.collapse_ratio = a[2];
    let dev = p.device();
    let eq = equilibrium_point(p.bias.optical_power, &dev.photodiode, &dev.nanowire)
        .unwrap()
        .latched()
        .unwrap();
    let mut s = CircuitState {
        node_voltage: eq.voltage,
        hotspot: eq.hotspot,
        time: 0.0,
    };
    let dt = p.sim.step;
    let mut k = 0u64;
    while s.hotspot.latched && k < 10_000_000 {
        s = step(&s, dt, 0.0, &dev).unwrap();
        k += 1;
    }
    println!(
        "{} {} {} reset_us={:.3}",
        a[0],
        a[1],
        a[2],
        k as f64 * dt * 1e6
    );
}
