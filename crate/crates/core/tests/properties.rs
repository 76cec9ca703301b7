use ncap_forge::evaluation::{residual_velocity, BrakeModel};
use ncap_forge::protocol::{
    check_validity, next_test_speed, speed_sequence, Nominal, Parameter, ScenarioFamily, ToleranceSpec,
};
use ncap_forge::sim::{Trace, TraceMeta, TraceSample, VehicleState};
use ncap_forge::units::{deg_to_rad, kmh_to_ms, MAX_LATERAL_OFFSET, SPEED_TOLERANCE_KMH};
use ncap_forge::variation::{
    path_to_profile, sample_paths, Interaction, ProfileParams, SamplingStrategy, VariationSpec,
};
use proptest::prelude::*;

const M: BrakeModel = BrakeModel { decel: 3.5, delay: 0.3 };

fn vres(v: f64, d: f64) -> f64 {
    residual_velocity(v, d, 0.0, &M).unwrap()
}

proptest! {
    #[test]
    fn residual_nonincreasing_in_distance(v in 0.5f64..20.0, d in 0.05f64..40.0, extra in 0.0f64..5.0) {
        prop_assert!(vres(v, d + extra) <= vres(v, d) + 1e-12);
    }

    #[test]
    fn residual_nondecreasing_in_speed(v in 0.5f64..20.0, d in 0.05f64..40.0, extra in 0.0f64..5.0) {
        prop_assert!(vres(v + extra, d) + 1e-12 >= vres(v, d));
    }

    #[test]
    fn residual_bounded_by_trigger_speed(v in 0.0f64..20.0, d in 0.01f64..40.0) {
        let r = vres(v, d);
        prop_assert!((0.0..=v).contains(&r));
    }

    #[test]
    fn residual_continuous_at_regime_boundaries(v in 1.0f64..20.0) {
        let eps = 1e-9;
        let s_delay = v * M.delay;
        let s_stop = M.stopping_distance(v);
        prop_assert!((vres(v, s_delay + eps) - v).abs() < 1e-3);
        prop_assert!((vres(v, s_delay) - v).abs() < 1e-12);
        prop_assert!(vres(v, s_stop - eps) < 1e-3);
        prop_assert_eq!(vres(v, s_stop + eps), 0.0);
    }

    #[test]
    fn moving_target_never_exceeds_trigger_speed(v in 1.0f64..25.0, tv in 0.1f64..20.0, d in 0.05f64..30.0) {
        let r = residual_velocity(v, d, tv, &M).unwrap();
        prop_assert!(r <= v + 1e-12);
        prop_assert!(r == 0.0 || r > tv.min(v) - 1e-9);
    }
}

/// Constant-speed approach sampled every `dt`, TTC hitting 0 at `t_end`.
fn approach(v: f64, t_end: f64, dt: f64) -> Trace {
    let n = (t_end / dt).round() as usize;
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let gap = v * (t_end - t);
            TraceSample {
                vut: VehicleState { t, x: v * t, v, ..Default::default() },
                target: VehicleState { t, x: v * t_end, ..Default::default() },
                ttc: Some(gap / v),
                aeb_fired: false,
                steer_rate: None,
            }
        })
        .collect();
    Trace { samples, meta: TraceMeta::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn single_violation_flagged_iff_inside_window(
        speed_kmh in 10.0f64..50.0,
        kind in 0usize..3,
        at in 0usize..=80,
        activation in 0usize..=80,
    ) {
        let dt = 0.1;
        let mut trace = approach(kmh_to_ms(speed_kmh), 8.0, dt);
        let s = &mut trace.samples[at];
        let parameter = match kind {
            0 => { s.vut.v = kmh_to_ms(speed_kmh + SPEED_TOLERANCE_KMH + 0.5); Parameter::VutSpeed }
            1 => { s.vut.y = -(MAX_LATERAL_OFFSET + 0.02); Parameter::Lateral }
            _ => { s.vut.yaw_rate = deg_to_rad(1.5); Parameter::YawRate }
        };
        let t_act = activation as f64 * dt;
        let t_at = at as f64 * dt;
        let report = check_validity(&trace, &Nominal::stationary(speed_kmh), &ToleranceSpec::default(), Some(t_act)).unwrap();
        // TTC = 4 s at t = 4 s on this trace.
        let inside = t_at >= 4.0 - 1e-9 && t_at <= t_act + 1e-9;
        prop_assert_eq!(!report.valid, inside);
        if inside {
            prop_assert_eq!(report.violations.len(), 1);
            prop_assert_eq!(report.violations[0].parameter, parameter);
        }
    }

    #[test]
    fn shrinking_window_never_invalidates(speed_kmh in 10.0f64..50.0, at in 0usize..=80, a in 40usize..=80, b in 40usize..=80) {
        let dt = 0.1;
        let mut trace = approach(kmh_to_ms(speed_kmh), 8.0, dt);
        trace.samples[at].vut.y = 0.15;
        let (short, long) = (a.min(b) as f64 * dt, a.max(b) as f64 * dt);
        let tol = ToleranceSpec::default();
        let nominal = Nominal::stationary(speed_kmh);
        let long_valid = check_validity(&trace, &nominal, &tol, Some(long)).unwrap().valid;
        let short_valid = check_validity(&trace, &nominal, &tol, Some(short)).unwrap().valid;
        prop_assert!(!long_valid || short_valid);
    }

    #[test]
    fn generated_profiles_respect_tolerances(seed in any::<u64>(), resolution in 1usize..6, speed_kmh in 10.0f64..50.0) {
        let spec = VariationSpec::new(resolution, VariationSpec::default_interactions(), seed).unwrap();
        let params = ProfileParams { test_speed: kmh_to_ms(speed_kmh), base_accel: 2.0, test_start: 5.0, slot_duration: 0.5 };
        for path in sample_paths(&spec, SamplingStrategy::UniformRandom, 8) {
            let profile = path_to_profile(&path, &params).unwrap();
            let end = params.test_start + resolution as f64 * params.slot_duration + 1.0;
            prop_assert!(profile.max_abs_lateral(0.0, end, 0.01) <= MAX_LATERAL_OFFSET + 1e-12);
            prop_assert!(profile.check_tolerances(params.test_speed, 0.0, end, 0.01).is_ok());
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>(), n in 0usize..20) {
        let spec = VariationSpec::new(4, vec![Interaction::nudge_left(0.05), Interaction::lateral_hold(), Interaction::speed_hold()], seed).unwrap();
        prop_assert_eq!(
            sample_paths(&spec, SamplingStrategy::UniformRandom, n),
            sample_paths(&spec, SamplingStrategy::UniformRandom, n)
        );
    }

    #[test]
    fn sequencing_terminates_on_valid_speeds(pattern in proptest::collection::vec(any::<bool>(), 9)) {
        let family = ScenarioFamily::ccrs_aeb();
        let seq = speed_sequence(&family, |s| pattern[((s - 10.0) / 5.0).round() as usize]);
        // worst case: collision at 20 km/h gives 10, 20, 15, 20, 25, ..., 50
        prop_assert!(!seq.is_empty() && seq.len() <= 10);
        for &(s, _) in &seq {
            prop_assert!((10.0..=50.0).contains(&s) && (s / 5.0).fract() == 0.0);
        }
        prop_assert_eq!(next_test_speed(&family, &seq).unwrap(), None);
    }
}
