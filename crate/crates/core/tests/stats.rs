use proptest::prelude::*;
use rand::Rng;

use snspd_sim::presets::calibrated_1k;
use snspd_sim::snspd::detection_efficiency;
use snspd_sim::stats::{
    build_histogram, period_events, period_rng, run_counting_experiment, sample_pulse_photons,
    simulate_events, subtract_background, PhotonSource,
};

fn source(mean: f64) -> PhotonSource {
    PhotonSource {
        mean_photons_per_pulse: mean,
        background_rate: 0.0,
        ..calibrated_1k().photon_source()
    }
}

/// Upper 1 % point of chi-square with `k` degrees of freedom
/// (Wilson-Hilferty).
fn chi2_crit_99(k: f64) -> f64 {
    let z = 2.326_347_874_040_841;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

fn poisson_pmf(mean: f64, n: u64) -> f64 {
    let ln = -mean + n as f64 * mean.ln() - (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
    ln.exp()
}

#[test]
fn pulse_photons_follow_poisson() {
    for (i, mean) in [0.1, 1.17, 5.0].into_iter().enumerate() {
        let src = source(mean);
        let draws = 200_000u64;
        let mut rng = period_rng(100 + i as u64, 0);
        let mut hist = vec![0u64; 64];
        for _ in 0..draws {
            hist[(sample_pulse_photons(&src, &mut rng) as usize).min(63)] += 1;
        }
        // pool the upper tail until every cell expects at least 5 counts
        let mut cells = Vec::new();
        let mut n = 0u64;
        loop {
            let e = draws as f64 * poisson_pmf(mean, n);
            let rest = draws as f64 * (1.0 - (0..=n).map(|j| poisson_pmf(mean, j)).sum::<f64>());
            if rest < 5.0 {
                let observed: u64 = hist[n as usize..].iter().sum();
                cells.push((observed as f64, e + rest));
                break;
            }
            cells.push((hist[n as usize] as f64, e));
            n += 1;
        }
        let chi2: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let dof = (cells.len() - 1) as f64;
        assert!(
            chi2 < chi2_crit_99(dof),
            "mean {mean}: chi2 {chi2:.2} over {dof} dof"
        );
    }
}

#[test]
fn pulse_photon_mean_and_complement() {
    let src = source(1.17);
    let mut rng = period_rng(7, 3);
    let n = 1_000_000;
    let samples: Vec<u64> = (0..n)
        .map(|_| sample_pulse_photons(&src, &mut rng))
        .collect();
    let mean = samples.iter().sum::<u64>() as f64 / n as f64;
    let nonzero = samples.iter().filter(|&&k| k >= 1).count() as f64 / n as f64;
    assert!((mean - 1.17).abs() < 0.005, "{mean}");
    assert!(
        (nonzero - (1.0 - (-1.17f64).exp())).abs() < 0.002,
        "{nonzero}"
    );
    let zero = source(0.0);
    assert!((0..1000).all(|_| sample_pulse_photons(&zero, &mut rng) == 0));
}

#[test]
fn no_light_no_background_no_clicks() {
    let p = calibrated_1k();
    let r = run_counting_experiment(
        &p.counting_drive(),
        &source(0.0),
        &p.device(),
        &p.counting_setup(),
        2000,
        5,
    )
    .unwrap();
    assert!(r.delays.is_empty());
    assert!(run_counting_experiment(
        &p.counting_drive(),
        &source(0.0),
        &p.device(),
        &p.counting_setup(),
        0,
        5
    )
    .is_err());
}

#[test]
fn pipeline_matches_event_level_oracle_period_by_period() {
    let p = calibrated_1k();
    let drive = p.counting_drive();
    let dev = p.device();
    let src = source(1.17);
    let (n, seed) = (20_000u64, 31);
    let res = run_counting_experiment(&drive, &src, &dev, &p.counting_setup(), n, seed).unwrap();
    // replay the same random streams without the circuit: a period clicks
    // iff some photon is present and accepted by the idle wire
    let i_idle = p.photodiode.responsivity * drive.bias_power;
    let eta = detection_efficiency(i_idle, &p.nanowire).unwrap();
    let mut agree = 0;
    for k in 0..n {
        let mut rng = period_rng(seed, k);
        let events = period_events(&src, &drive, &mut rng);
        let accepted = events
            .iter()
            .map(|&t| (t, rng.random::<f64>()))
            .any(|(t, u)| drive.bias_at(t) > 0.0 && u < eta);
        if accepted == res.records[k as usize].click.is_some() {
            agree += 1;
        }
    }
    assert_eq!(agree, n);
}

#[test]
fn background_subtracted_from_background_is_noise() {
    let p = calibrated_1k();
    let drive = p.counting_drive();
    let bkg = source(0.0);
    let bkg = PhotonSource {
        background_rate: p.counting.background_rate,
        ..bkg
    };
    let n = 20_000;
    let a = run_counting_experiment(&drive, &bkg, &p.device(), &p.counting_setup(), n, 1).unwrap();
    let b = run_counting_experiment(&drive, &bkg, &p.device(), &p.counting_setup(), n, 2).unwrap();
    let edges = p.bin_edges();
    let d = subtract_background(
        &build_histogram(&a.delays, &edges, n).unwrap(),
        &build_histogram(&b.delays, &edges, n).unwrap(),
    )
    .unwrap();
    for (c, e) in d.counts.iter().zip(&d.errors) {
        assert!((*c as f64).abs() <= 5.0 * e.max(1.0), "{c} +- {e}");
    }
}

#[test]
fn identical_seeds_identical_delays_on_any_pool() {
    let p = calibrated_1k();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                run_counting_experiment(
                    &p.counting_drive(),
                    &p.photon_source(),
                    &p.device(),
                    &p.counting_setup(),
                    3000,
                    9,
                )
                .unwrap()
            })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn uniform_delays_in_one_bin() {
    let edges = [0.0, 1.0, 2.0];
    let delays: Vec<f64> = (0..400).map(|i| 1.0 + i as f64 / 400.0).collect();
    let h = build_histogram(&delays, &edges, 1).unwrap();
    assert_eq!(h.counts, vec![0, 400]);
    assert_eq!(h.errors, vec![0.0, 20.0]);
    let empty = build_histogram(&[], &edges, 1).unwrap();
    assert_eq!((empty.counts, empty.errors), (vec![0, 0], vec![0.0, 0.0]));
    assert!(build_histogram(&[], &[0.0, 2.0, 1.0], 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn early_accepted_background_hides_the_signal(tb in 0.1e-6f64..5.1e-6, ts_offset in 0.05e-6f64..4e-6) {
        let p = calibrated_1k();
        let drive = p.counting_drive();
        let dev = p.device();
        let setup = p.counting_setup();
        let ts = (tb + ts_offset).min(drive.on_time * 0.9);
        prop_assume!(ts > tb);
        let both = simulate_events(&drive, &[tb, ts], &[0.0, 0.0], &dev, &setup).unwrap();
        let alone = simulate_events(&drive, &[tb], &[0.0], &dev, &setup).unwrap();
        prop_assert_eq!(both.click, alone.click);
        prop_assert_eq!(both.latch_time, Some(tb));
        // a rejected background event leaves the signal free to latch
        let rejected = simulate_events(&drive, &[tb, ts], &[0.999, 0.0], &dev, &setup).unwrap();
        prop_assert_eq!(rejected.latch_time, Some(ts));
    }
}

proptest! {
    #[test]
    fn histogram_shape_and_errors(delays in proptest::collection::vec(-1.0f64..11.0, 0..300), n in 1usize..20) {
        let edges: Vec<f64> = (0..=n).map(|i| i as f64 * 10.0 / n as f64).collect();
        let h = build_histogram(&delays, &edges, 1).unwrap();
        prop_assert_eq!(h.counts.len(), n);
        prop_assert_eq!(h.errors.len(), n);
        prop_assert!(h.counts.iter().all(|&c| c >= 0));
        let inside = delays.iter().filter(|&&d| (0.0..10.0).contains(&d)).count() as i64;
        prop_assert_eq!(h.total(), inside);
        for (c, e) in h.counts.iter().zip(&h.errors) {
            prop_assert_eq!(*e, (*c as f64).sqrt());
        }
    }

    #[test]
    fn subtraction_errors_add_in_quadrature(
        a in proptest::collection::vec(0.0f64..5.0, 0..200),
        b in proptest::collection::vec(0.0f64..5.0, 0..200),
    ) {
        let edges = [0.0, 1.0, 2.5, 5.0];
        let hs = build_histogram(&a, &edges, 10).unwrap();
        let hb = build_histogram(&b, &edges, 10).unwrap();
        let d = subtract_background(&hs, &hb).unwrap();
        for i in 0..3 {
            prop_assert_eq!(d.counts[i], hs.counts[i] - hb.counts[i]);
            prop_assert_eq!(d.errors[i], hs.errors[i].hypot(hb.errors[i]));
        }
        let same = subtract_background(&hs, &hs).unwrap();
        prop_assert!(same.counts.iter().all(|&c| c == 0));
        for i in 0..3 {
            prop_assert!((same.errors[i] - hs.errors[i] * 2f64.sqrt()).abs() <= 1e-12 * hs.errors[i].max(1.0));
        }
    }
}
