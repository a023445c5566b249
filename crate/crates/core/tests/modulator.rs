use std::f64::consts::PI;

use proptest::prelude::*;

use snspd_sim::fitkit::{fit_sine_vpi, SweepData};
use snspd_sim::modulator::{
    coupling_budget, small_signal_response, transmission, vpi_at_temperature, ModulatorParams,
    OpticalBudget,
};
use snspd_sim::presets::calibrated_1k;

fn modulator() -> ModulatorParams {
    calibrated_1k().modulator
}

fn ideal_budget() -> OpticalBudget {
    OpticalBudget {
        mode_overlap_in: 1.0,
        mode_overlap_out: 1.0,
        interface_transmission: 1.0,
        propagation_loss: 0.0,
        path_length_one_way: 5.6,
        mirror_reflectivity: 1.0,
    }
}

#[test]
fn budget_single_factor_isolation() {
    assert_eq!(coupling_budget(&ideal_budget()).unwrap(), 1.0);
    let mirror_only = OpticalBudget {
        mirror_reflectivity: 0.96,
        ..ideal_budget()
    };
    assert_eq!(coupling_budget(&mirror_only).unwrap(), 0.96);
}

#[test]
fn vpi_recovered_by_sine_fit_at_both_anchors() {
    for (t, expected) in [(1.0, 6.6), (300.0, 5.9)] {
        let m = ModulatorParams {
            temperature: t,
            ..modulator()
        };
        let vpi = vpi_at_temperature(t, &m).unwrap();
        assert_eq!(vpi, expected);
        let x: Vec<f64> = (0..=300).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|&v| transmission(v, t, &m).unwrap()).collect();
        let fit = fit_sine_vpi(&SweepData::new(x, y).unwrap().normalized().unwrap(), None).unwrap();
        assert!((fit.vpi / vpi - 1.0).abs() < 1e-3, "{} vs {vpi}", fit.vpi);
    }
}

fn budget_strategy() -> impl Strategy<Value = OpticalBudget> {
    (
        0.01f64..=1.0,
        0.01f64..=1.0,
        0.01f64..=1.0,
        0.0f64..3.0,
        0.0f64..10.0,
        0.01f64..=1.0,
    )
        .prop_map(|(a, b, c, loss, len, mirror)| OpticalBudget {
            mode_overlap_in: a,
            mode_overlap_out: b,
            interface_transmission: c,
            propagation_loss: loss,
            path_length_one_way: len,
            mirror_reflectivity: mirror,
        })
}

proptest! {
    #[test]
    fn transmission_is_bounded(v in -100.0f64..100.0, t in 0.5f64..350.0, phase in -10.0f64..10.0, imb in 0.0f64..0.99) {
        let m = ModulatorParams { bias_phase: phase, extinction_imbalance: imb, ..modulator() };
        let tr = transmission(v, t, &m).unwrap();
        prop_assert!(tr >= 0.0 && tr <= m.fiber_to_fiber_efficiency);
    }

    #[test]
    fn transmission_repeats_every_two_vpi(v in -50.0f64..50.0, t in 0.5f64..350.0, k in -3i32..=3) {
        let m = modulator();
        let vpi = vpi_at_temperature(t, &m).unwrap();
        let a = transmission(v, t, &m).unwrap();
        let b = transmission(v + 2.0 * k as f64 * vpi, t, &m).unwrap();
        // phase arguments differ only by the rounding of v / vpi
        let bound = m.fiber_to_fiber_efficiency * PI * 1e-14 * (v.abs() + 2.0 * (k.abs() as f64) * vpi).max(1.0) / vpi;
        prop_assert!((a - b).abs() <= bound, "{a} vs {b}");
    }

    #[test]
    fn small_signal_is_linear_near_quadrature(frac in -0.05f64..0.05, t in 0.5f64..350.0) {
        prop_assume!(frac.abs() > 1e-6);
        let m = modulator();
        let vpi = vpi_at_temperature(t, &m).unwrap();
        let r = small_signal_response(3.5e-3, frac * vpi, t, &m).unwrap();
        prop_assert!(((r.linearized - r.exact) / r.exact).abs() < 0.01);
    }

    #[test]
    fn budget_monotone_in_each_factor(b in budget_strategy(), bump in 0.0f64..1.0) {
        let base = coupling_budget(&b).unwrap();
        let lossier = OpticalBudget { propagation_loss: b.propagation_loss + bump, ..b };
        prop_assert!(coupling_budget(&lossier).unwrap() <= base);
        let up = |x: f64| x + (1.0 - x) * bump;
        for better in [
            OpticalBudget { mode_overlap_in: up(b.mode_overlap_in), ..b },
            OpticalBudget { mode_overlap_out: up(b.mode_overlap_out), ..b },
            OpticalBudget { interface_transmission: up(b.interface_transmission), ..b },
            OpticalBudget { mirror_reflectivity: up(b.mirror_reflectivity), ..b },
        ] {
            prop_assert!(coupling_budget(&better).unwrap() >= base);
        }
    }
}
