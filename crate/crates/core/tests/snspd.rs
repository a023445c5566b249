use proptest::prelude::*;

use snspd_sim::circuit::{step, CircuitState};
use snspd_sim::photodiode::{photocurrent, source_current_at_voltage};
use snspd_sim::presets::calibrated_1k;
use snspd_sim::snspd::{
    absorb_photon, detection_efficiency, equilibrium_point, hotspot_growth_rate, reset,
    EquilibriumOutcome, HotspotState, NanowireParams,
};

fn nw() -> NanowireParams {
    calibrated_1k().nanowire
}

/// Smallest bias power whose photocurrent exceeds the sustaining current.
fn threshold_power() -> f64 {
    let p = calibrated_1k();
    p.nanowire.sustaining_current() / p.photodiode.responsivity
}

#[test]
fn efficiency_examples() {
    let p = nw();
    assert_eq!(detection_efficiency(4e-6, &p).unwrap(), 0.83);
    assert_eq!(detection_efficiency(0.0, &p).unwrap(), 0.0);
    let half = detection_efficiency(2e-6, &p).unwrap();
    assert!(half > 0.0 && half < 0.83);
    assert!(detection_efficiency(-1e-9, &p).is_err());
}

#[test]
fn high_drive_saturates_above_550_mv() {
    let p = calibrated_1k();
    let eq = equilibrium_point(700e-6, &p.photodiode, &p.nanowire)
        .unwrap()
        .latched()
        .unwrap();
    assert!(eq.voltage >= 0.55, "{}", eq.voltage);
    assert_eq!(
        equilibrium_point(0.0, &p.photodiode, &p.nanowire).unwrap(),
        EquilibriumOutcome::NoLatch
    );
}

#[test]
fn reset_then_absorb_relatches() {
    let p = nw();
    let latched = HotspotState::with_fraction(40e3 / p.normal_resistance, &p, Some(1e-6));
    let cleared = reset(latched);
    assert!(!cleared.latched && cleared.resistance == 0.0 && cleared.normal_fraction == 0.0);
    assert_eq!(reset(cleared), cleared);
    let again = absorb_photon(cleared, 2e-6, 4e-6, 0.0, &p);
    assert!(again.latched);
    assert_eq!(again.last_trigger_time, Some(2e-6));
}

/// Normal fraction along a constant-drive trajectory started from a fresh seed.
fn seeded_trajectory(power: f64, steps: usize, dt: f64) -> Vec<f64> {
    let p = calibrated_1k().device();
    let mut s = CircuitState {
        node_voltage: 0.0,
        hotspot: HotspotState::with_fraction(p.nanowire.seed_fraction(), &p.nanowire, Some(0.0)),
        time: 0.0,
    };
    let mut out = vec![s.hotspot.normal_fraction];
    for _ in 0..steps {
        s = step(&s, dt, power, &p).unwrap();
        assert!(s.hotspot.is_consistent(&p.nanowire));
        out.push(s.hotspot.normal_fraction);
        if !s.hotspot.latched {
            break;
        }
    }
    out
}

#[test]
fn nominal_bias_latches_through_the_charging_dip() {
    let f = seeded_trajectory(6e-6, 40_000, 10e-9);
    assert!(
        f.last().copied().unwrap() > 0.0,
        "6 uW must hold the hotspot"
    );
    let (imin, &fmin) = f
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    // the capacitor takes the source current first, so the seed shrinks
    assert!(imin > 0 && fmin < f[0]);
    assert!(fmin > nw().collapse_fraction());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn latched_fraction_never_decreases_after_the_dip(scale in 1.5f64..200.0) {
        let power = threshold_power() * scale;
        let f = seeded_trajectory(power, 30_000, 10e-9);
        if *f.last().unwrap() > 0.0 {
            let imin = f.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            for w in f[imin..].windows(2) {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-12), "{} -> {}", w[0], w[1]);
            }
        }
    }
}

proptest! {
    #[test]
    fn efficiency_is_monotone_and_bounded(a in 0.0f64..1e-5, b in 0.0f64..1e-5) {
        let p = nw();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (el, eh) = (detection_efficiency(lo, &p).unwrap(), detection_efficiency(hi, &p).unwrap());
        prop_assert!(el <= eh);
        prop_assert!((0.0..=p.detection_plateau).contains(&el));
        prop_assert!(eh <= p.detection_plateau);
    }

    #[test]
    fn equilibrium_balances_heat_and_charge(scale in 1.01f64..400.0) {
        let p = calibrated_1k();
        let power = threshold_power() * scale;
        let eq = equilibrium_point(power, &p.photodiode, &p.nanowire).unwrap().latched().unwrap();
        let nw = &p.nanowire;
        prop_assert!(eq.hotspot.is_consistent(nw));
        let i = eq.voltage / eq.hotspot.resistance;
        let joule = i * i * eq.hotspot.resistance;
        let cooling = nw.thermal_conductance_per_length
            * eq.hotspot.normal_fraction
            * nw.wire_length()
            * nw.critical_temperature_offset;
        if eq.hotspot.normal_fraction < 1.0 {
            prop_assert!((joule - cooling).abs() / joule < 1e-6);
            let rate = hotspot_growth_rate(&eq.hotspot, i, nw).unwrap();
            prop_assert!(rate.abs() * 1e-9 < 1e-6 * eq.hotspot.normal_fraction);
        }
        let residual = source_current_at_voltage(eq.voltage, power, &p.photodiode).unwrap()
            - i
            - nw.leak_conductance * eq.voltage;
        prop_assert!(residual.abs() < 1e-12);
        prop_assert!(eq.node_residual().abs() < 1e-12);
    }

    #[test]
    fn below_threshold_there_is_no_latch(scale in 0.0f64..0.999) {
        let p = calibrated_1k();
        let power = threshold_power() * scale;
        prop_assert!(photocurrent(power, &p.photodiode).unwrap() < p.nanowire.sustaining_current());
        prop_assert_eq!(equilibrium_point(power, &p.photodiode, &p.nanowire).unwrap(), EquilibriumOutcome::NoLatch);
    }

    #[test]
    fn state_transitions_keep_coupling(
        f in 0.0f64..1.0,
        current in 0.0f64..1e-5,
        draw in 0.0f64..1.0,
        dt in 1e-10f64..1e-7,
        power in 0.0f64..1e-4,
    ) {
        let p = calibrated_1k().device();
        let nw = &p.nanowire;
        let s = HotspotState::with_fraction(f, nw, None);
        prop_assert!(s.is_consistent(nw));
        let a = absorb_photon(s, 0.0, current, draw, nw);
        prop_assert!(a.is_consistent(nw));
        if s.latched {
            prop_assert_eq!(a, s);
        }
        prop_assert!(reset(a).is_consistent(nw));
        let c = CircuitState { node_voltage: 0.01, hotspot: a, time: 0.0 };
        let next = step(&c, dt, power, &p).unwrap();
        prop_assert!(next.hotspot.is_consistent(nw));
        prop_assert!(next.node_voltage >= 0.0);
        prop_assert!(next.time > c.time);
    }
}
