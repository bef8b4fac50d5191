use escape_core::experiments::*;
use escape_core::laws::{trial_rng, MatrixLawSpec, ScalarLawSpec};
use escape_core::walk::run_ledger_walk;
use rand::Rng;

fn cfg(name: ExperimentName, overrides: &[(&str, &str)]) -> ExperimentConfig {
    let o: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::preset(name).with_overrides(&o).unwrap()
}

#[test]
fn presets_round_trip_through_json() {
    for name in ExperimentName::ALL {
        let c = ExperimentConfig::preset(name);
        c.validate().unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&v, None).unwrap(), c);
    }
}

#[test]
fn empty_config_takes_the_preset() {
    let c =
        ExperimentConfig::from_json(&serde_json::json!({}), Some(ExperimentName::Cesaro)).unwrap();
    assert_eq!(c, ExperimentConfig::preset(ExperimentName::Cesaro));
}

#[test]
fn unknown_keys_are_named() {
    let v = serde_json::json!({"name": "heavy_records", "trails": 3, "thresholds": {"tol": 1}});
    let e = ExperimentConfig::from_json(&v, None)
        .unwrap_err()
        .to_string();
    assert!(e.contains("trails") && e.contains("thresholds.tol"), "{e}");
    let o = [("bogus".to_string(), "1".to_string())];
    let e = ExperimentConfig::preset(ExperimentName::HeavyRecords)
        .with_overrides(&o)
        .unwrap_err()
        .to_string();
    assert!(e.contains("bogus"), "{e}");
}

#[test]
fn overrides_apply_last() {
    let c = cfg(
        ExperimentName::EscapeProbability,
        &[
            ("trials", "10"),
            ("thresholds.confidence", "0.9"),
            ("mixture", r#"{"alpha": 0.5, "m_bound": 2}"#),
            ("engine", "exact"),
        ],
    );
    assert_eq!(c.trials, 10);
    assert_eq!(c.thresholds.confidence, 0.9);
    assert_eq!(c.mixture.unwrap().alpha, 0.5);
    assert_eq!(c.engine, Engine::Exact);
    let bad = ExperimentConfig::preset(ExperimentName::HeavyRecords)
        .with_overrides(&[("trials".into(), "0".into())]);
    assert!(bad.is_err());
}

#[test]
fn wilson_intervals_cover_at_nominal_rate() {
    let q = 0.3;
    let mut covered = 0;
    for rep in 0..100 {
        let mut rng = trial_rng(2024, rep);
        let hits = (0..500).filter(|_| rng.random::<f64>() < q).count() as u64;
        let (lo, hi) = wilson_interval(hits, 500, 0.95);
        covered += (lo <= q && q <= hi) as u32;
    }
    assert!(covered >= 92, "coverage {covered}/100");
}

#[test]
fn heavy_records_small_run() {
    let c = cfg(ExperimentName::HeavyRecords, &[("trials", "40")]);
    let r = run_experiment(&c).unwrap();
    assert!(r.passed(), "{:?}", r.verdicts);
    assert_eq!(r.trials.len(), 40);
    assert!(r.verdicts.iter().all(|v| v.recomputed() == v.passed));
}

#[test]
fn constant_values_have_gap_log_n() {
    assert_eq!(log_gap(&[7.5; 10]), 10f64.ln());
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let a = cfg(
        ExperimentName::HeavyRecords,
        &[("trials", "30"), ("threads", "1")],
    );
    let b = cfg(
        ExperimentName::HeavyRecords,
        &[("trials", "30"), ("threads", "4")],
    );
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    assert_eq!(ra.aggregates, rb.aggregates);
    assert_eq!(ra.trials, rb.trials);
    assert_eq!(ra.verdicts, rb.verdicts);
    assert_eq!(
        run_experiment(&a).unwrap().results_fingerprint(),
        ra.results_fingerprint()
    );
}

#[test]
fn full_weight_mixture_couples_to_the_pure_law() {
    let base = [
        ("trials", "500"),
        ("n_grid", "[10, 100]"),
        ("store_trials", "true"),
    ];
    let pure = run_experiment(&cfg(ExperimentName::EscapeProbability, &base)).unwrap();
    let mut mixed = base.to_vec();
    mixed.push(("mixture", r#"{"alpha": 1.0, "m_bound": 5.0}"#));
    let mix = run_experiment(&cfg(ExperimentName::EscapeProbability, &mixed)).unwrap();
    assert_eq!(pure.trials, mix.trials);
    // same samples, so any common threshold gives the same frequency
    for n in [10u64, 100] {
        let th = (2.0 * n as f64).powi(2);
        let count = |r: &ExperimentReport| {
            r.trials
                .iter()
                .filter(|t| t.get(&format!("margin_{n}")).unwrap() >= th)
                .count()
        };
        assert_eq!(count(&pure), count(&mix));
        assert_eq!(
            count(&pure) as u64,
            pure.aggregate("escape", Some(n)).unwrap().successes
        );
    }
    assert!(pure.passed() && mix.passed());
}

#[test]
fn escape_probability_is_far_from_zero() {
    let r = run_experiment(&cfg(
        ExperimentName::EscapeProbability,
        &[("trials", "5000")],
    ))
    .unwrap();
    assert!(r.passed());
    for a in &r.aggregates {
        assert!(a.estimate > 0.001, "{a:?}");
    }
}

#[test]
fn symmetrization_does_not_change_the_ledger() {
    let plain = MatrixLawSpec::mixed(2, ScalarLawSpec::heavy_record_exp());
    let sym = MatrixLawSpec {
        symmetrize: true,
        ..plain.clone()
    };
    for seed in 0..10 {
        let a = run_ledger_walk(&plain, 300, &mut trial_rng(seed, 0)).unwrap();
        let b = run_ledger_walk(&sym, 300, &mut trial_rng(seed, 0)).unwrap();
        assert_eq!(a.certificates, b.certificates);
        assert_eq!(a.running_sum, b.running_sum);
    }
}

#[test]
fn simple_records_small_run() {
    let r = run_experiment(&cfg(
        ExperimentName::SimpleRecords,
        &[("trials", "2000"), ("n_grid", "[1, 10, 100]")],
    ))
    .unwrap();
    assert_eq!(r.aggregate("double_max", Some(1)).unwrap().successes, 0);
    assert!(r.passed(), "{:?}", r.verdicts);
}

#[test]
fn cesaro_toy_window() {
    let r = run_experiment(&cfg(ExperimentName::Cesaro, &[("trials", "200")])).unwrap();
    assert_eq!(r.scalars["a_1"], 82.0);
    let ns: Vec<u64> = r.aggregates.iter().filter_map(|a| a.n).collect();
    assert_eq!((ns[0], *ns.last().unwrap()), (82, 164));
    assert!(r.notes.iter().any(|n| n.contains("from above")));
    assert!(r.passed(), "{:?}", r.verdicts);
}

#[test]
fn cesaro_large_compact_set_is_vacuous() {
    let r = run_experiment(&cfg(
        ExperimentName::Cesaro,
        &[("trials", "20"), ("compact_b", "1e9")],
    ))
    .unwrap();
    assert!(r.notes.iter().any(|n| n.contains("vacuous")));
    assert_eq!(r.scalars["occupation_upper_j1"], 1.0);
    assert!(!r.passed());
}

#[test]
fn cesaro_pipeline_epsilon_refuses() {
    let r = run_experiment(&cfg(
        ExperimentName::Cesaro,
        &[("epsilon_mode", "paper_faithful"), ("p_prime", "0.45")],
    ))
    .unwrap();
    let refusal = r.refusal.as_ref().expect("refused");
    assert!(refusal.required_n.len() > 20, "{refusal:?}");
    assert!(r.verdicts.is_empty() && !r.passed());
}

#[test]
fn full_escape_exact_seed_11() {
    let c = cfg(
        ExperimentName::FullEscape,
        &[
            ("engine", "exact"),
            ("trials", "1"),
            ("n_grid", "[50]"),
            ("master_seed", "11"),
        ],
    );
    let r = run_experiment(&c).unwrap();
    let t = &r.trials[0];
    assert!(t.get("final_neg_log_delta").unwrap() > 0.0);
    assert_eq!(t.get("violations"), Some(0.0));
    assert_eq!(t.get("aborted"), Some(0.0));
    if let Some(c) = t.get("final_certificate") {
        assert!(t.get("final_neg_log_delta").unwrap() >= c);
    }
    assert!(r.passed());
}

#[test]
fn full_escape_ledger_small_run() {
    let r = run_experiment(&cfg(
        ExperimentName::FullEscape,
        &[("trials", "10"), ("n_grid", "[100, 2000]")],
    ))
    .unwrap();
    assert_eq!(r.scalars["order_disagreements"], 0.0);
    assert!(r
        .trials
        .iter()
        .all(|t| t.values.contains_key("log_certificate_100")));
}

#[test]
fn divergence_demo_with_control() {
    let c = cfg(ExperimentName::DivergenceFromS, &[("trials", "4")]);
    assert!(c.addresses.iter().any(|a| a.iter().all(|b| !b)));
    let r = run_experiment(&c).unwrap();
    assert!(r.passed(), "{:?}", r.verdicts);
    assert!(r.scalars.contains_key("seeds_with_verified_times"));
}

#[test]
fn trials_csv_has_one_row_per_trial() {
    let r = run_experiment(&cfg(ExperimentName::HeavyRecords, &[("trials", "5")])).unwrap();
    let mut buf = Vec::new();
    r.write_trials_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("trial,gap_10000,gap_perturbed_10000"));
}
