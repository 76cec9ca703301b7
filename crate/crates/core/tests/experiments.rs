use ncap_forge::evaluation::RunLabel;
use ncap_forge::evaluation::{Experiment, Variant};
use ncap_forge::harness::{
    execute_case, predicted_test_start, run_experiment_1, run_experiment_2, variant_lateral, CaseSpec, HarnessConfig,
};
use ncap_forge::sim::{TargetProgram, TriggerRegistry, TriggerSpec};
use ncap_forge::units::kmh_to_ms;
use ncap_forge::variation::{LateralProfile, PerturbationProfile};

fn case(cfg: &HarnessConfig, variant: Variant, kmh: f64, trigger: TriggerSpec) -> CaseSpec {
    let base = PerturbationProfile::constant_speed(kmh_to_ms(kmh), cfg.sim.a_accel, LateralProfile::Ideal);
    let t0 = predicted_test_start(cfg, 67.5, &base, TargetProgram::stationary()).unwrap();
    let lateral = variant_lateral(cfg, &variant, t0).unwrap();
    CaseSpec {
        label: RunLabel { experiment: Experiment::Exp1, variant, test_case_kmh: kmh },
        scenario: "CCRs_25kmh".into(),
        initial_gap: 67.5,
        profile: PerturbationProfile { lateral, ..base },
        target: TargetProgram::stationary(),
        trigger: Some(trigger),
    }
}

#[test]
fn injected_trigger_points_reproduce_the_reference_row() {
    // Fine steps so the injected gap is hit within a millimetre.
    let cfg = HarnessConfig {
        sim: ncap_forge::harness::SimSettings { dt: 1e-4, ..Default::default() },
        ..Default::default()
    };
    let reg = TriggerRegistry::default();
    let mut row = Vec::new();
    for (variant, d_x) in [(Variant::Left, 8.72), (Variant::Ideal, 9.28), (Variant::Right, 8.72)] {
        let run = execute_case(&cfg, &reg, &case(&cfg, variant, 25.0, TriggerSpec::new("gap").with("distance", d_x)))
            .unwrap();
        assert!((run.result.d_x.unwrap() - d_x).abs() < 1e-3);
        assert!(run.validity.valid);
        row.push((run.result.v_res_kmh * 10.0).round() / 10.0);
    }
    assert_eq!(row, vec![4.8, 0.0, 4.8]);
}

#[test]
fn exp2_without_late_acceleration_matches_exp1() {
    let cfg = HarnessConfig::default();
    let reg = TriggerRegistry::default();
    let exp1 = run_experiment_1(&cfg, &reg, "s", 67.5).unwrap();
    let exp2 = run_experiment_2(&cfg, &reg, "s", 67.5, &exp1).unwrap();
    assert_eq!(exp2.runs.len(), 9);
    for v in [Variant::Left, Variant::Ideal, Variant::Right] {
        let pick = |out: &ncap_forge::harness::ExperimentOutput, e: &Experiment| {
            out.runs
                .iter()
                .find(|r| {
                    &r.result.label.experiment == e
                        && r.result.label.variant == v
                        && r.result.label.test_case_kmh == 25.0
                })
                .unwrap()
                .clone()
        };
        let a = pick(&exp1, &Experiment::Exp1);
        let b = pick(&exp2, &Experiment::Exp2);
        assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
        assert_eq!(
            (a.result.v_aeb_kmh, a.result.d_x, a.result.v_res_kmh),
            (b.result.v_aeb_kmh, b.result.d_x, b.result.v_res_kmh)
        );
    }
}

#[test]
fn late_acceleration_does_not_reach_the_target_at_minimum_lead_time() {
    let cfg = HarnessConfig::default();
    let reg = TriggerRegistry::default();
    let exp1 = run_experiment_1(&cfg, &reg, "s", 67.5).unwrap();
    let exp2 = run_experiment_2(&cfg, &reg, "s", 67.5, &exp1).unwrap();
    for r in exp2.runs.iter().filter(|r| r.result.label.test_case_kmh > 25.0) {
        let v = r.result.v_aeb_kmh.unwrap();
        assert!(v > 25.0 && v < r.result.label.test_case_kmh, "{}: {v}", r.result.label);
        assert!(r.validity.valid);
    }
}

#[test]
fn lateral_sensitive_trigger_breaks_ideal_oscillating_tie_but_not_symmetry() {
    let cfg =
        HarnessConfig { trigger: TriggerSpec::new("ttc-lateral").with("sensitivity", -0.1), ..Default::default() };
    let out = run_experiment_1(&cfg, &TriggerRegistry::default(), "s", 67.5).unwrap();
    let dx = |v: Variant| {
        out.runs
            .iter()
            .find(|r| r.result.label.variant == v && r.result.label.test_case_kmh == 25.0)
            .unwrap()
            .result
            .d_x
            .unwrap()
    };
    assert_eq!(dx(Variant::Left), dx(Variant::Right));
    assert!(dx(Variant::Left) < dx(Variant::Ideal));
}
