//! Runner-level integration tests on the simulator backend.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use veracal::client::{CertaintyLaw, SimulatorProfile};
use veracal::consistency::Method;
use veracal::dataset::Split;
use veracal::experiments::{
    emit_distributions, run_bsdetector, run_elicitation_comparison, run_method_comparison,
    run_sample_size_ablation, run_scale_and_version_comparison, run_temperature_ablation,
    BackendConfig, ExperimentConfig,
};

fn synthetic_dataset(dir: &Path, n: usize, tag: &str) -> PathBuf {
    let labels = [
        "pants-fire",
        "false",
        "barely-true",
        "half-true",
        "mostly-true",
        "true",
    ];
    let mut tsv = String::new();
    for i in 0..n {
        writeln!(
            tsv,
            "{i}\t{}\tSynthetic statement {i} ({tag}).",
            labels[i % 6]
        )
        .unwrap();
    }
    let path = dir.join(format!("{tag}.tsv"));
    std::fs::write(&path, tsv).unwrap();
    path
}

fn base_config(dir: &Path, n: usize, tag: &str) -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.dataset.path = synthetic_dataset(dir, n, tag);
    config.dataset.split = Split::All;
    config.out_dir = dir.join(format!("out_{tag}"));
    config.seed = 1;
    config
}

fn profile() -> SimulatorProfile {
    SimulatorProfile {
        mean_true: 62.0,
        mean_false: 45.0,
        base_sigma: 8.0,
        sigma_per_temperature: 8.0,
        sigma_spread: 0.5,
        mean_spread: 0.0,
        verbalized_certainty_law: CertaintyLaw::Calibrated,
        single_step_law: None,
        seed: 1,
    }
}

#[test]
fn methods_report_structure_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 90, "methods");
    config.backend = BackendConfig::Simulator { profile: profile() };

    let (report, manifest) = run_method_comparison(&config).unwrap();
    assert_eq!(report.rows.len(), 6);
    for row in &report.rows {
        assert!(
            (0.0..=1.0).contains(&row.ece),
            "{}: ece {}",
            row.method,
            row.ece
        );
        assert!((0.0..=1.0).contains(&row.brier));
        assert_eq!(row.n, 90);
    }
    assert!(manifest.outputs.contains_key("table.csv"));
    assert!(manifest.outputs.contains_key("report.json"));

    // rerun against the warm cache: identical rows, no new backend calls
    let (again, manifest2) = run_method_comparison(&config).unwrap();
    for (a, b) in report.rows.iter().zip(&again.rows) {
        assert_eq!(a.ece.to_bits(), b.ece.to_bits());
        assert_eq!(a.brier.to_bits(), b.brier.to_bits());
    }
    assert_eq!(manifest.cache_entries, manifest2.cache_entries);
    assert_eq!(manifest.outputs, manifest2.outputs);
}

#[test]
fn analysis_derives_from_cache_alone() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 60, "cache_replay");
    config.backend = BackendConfig::Simulator { profile: profile() };
    let (first, _) = run_method_comparison(&config).unwrap();

    // same cache, radically different profile: every reply must replay from
    // the cache, so the analysis output cannot change
    config.backend = BackendConfig::Simulator {
        profile: SimulatorProfile {
            mean_true: 5.0,
            mean_false: 95.0,
            base_sigma: 40.0,
            ..profile()
        },
    };
    let (second, manifest) = run_method_comparison(&config).unwrap();
    for (a, b) in first.rows.iter().zip(&second.rows) {
        assert_eq!(a.ece.to_bits(), b.ece.to_bits());
    }
    assert!(manifest.cache_hits > 0);
}

#[test]
fn zero_record_dataset_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 0, "empty");
    config.backend = BackendConfig::Simulator { profile: profile() };
    assert!(run_method_comparison(&config).is_err());
    // no partial output files
    assert!(!config.out_dir.join("methods").exists());
}

#[test]
fn ablate_k_has_all_cells_and_prefix_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 80, "ablatek");
    config.backend = BackendConfig::Simulator { profile: profile() };
    config.k_values = vec![2, 5, 10];

    let (report, _) = run_sample_size_ablation(&config).unwrap();
    for &k in &[2usize, 5, 10] {
        for method in Method::ALL {
            assert!(
                report.rows.iter().any(|r| r.k == k && r.method == method),
                "missing cell ({method}, k={k})"
            );
        }
    }

    // the k = 2 column equals a fresh k = 2 run over the same cache:
    // smaller k reuse prefixes of the one sampling pass
    let mut k2_config = config.clone();
    k2_config.k_values = vec![2];
    let (k2_report, _) = run_method_comparison(&k2_config).unwrap();
    for row in &k2_report.rows {
        let cell = report
            .rows
            .iter()
            .find(|r| r.k == 2 && r.method == row.method)
            .unwrap();
        assert_eq!(
            row.ece.to_bits(),
            cell.ece.to_bits(),
            "{} k=2 mismatch",
            row.method
        );
    }
}

#[test]
fn ablate_temp_degenerates_at_zero_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 70, "ablatet");
    // no base noise dependence: zero-stochasticity at T = 0 only
    config.backend = BackendConfig::Simulator {
        profile: SimulatorProfile {
            base_sigma: 6.0,
            sigma_per_temperature: 10.0,
            sigma_spread: 0.0,
            ..profile()
        },
    };
    config.temperatures = vec![0.0, 1.0];

    let (report, _) = run_temperature_ablation(&config).unwrap();

    // At T = 0 every stochastic draw equals the reference answer, so all
    // agreement/spread signals are constant across records: min-max
    // degenerates to the neutral 0.5 and the five affected methods report
    // identical metrics with Brier exactly 0.25.
    let at_zero: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.temperature == 0.0 && r.method != Method::SampleAvgDev)
        .collect();
    assert_eq!(at_zero.len(), 5);
    for row in &at_zero {
        assert_eq!(row.brier, 0.25, "{} at T=0", row.method);
        assert_eq!(row.ece.to_bits(), at_zero[0].ece.to_bits());
    }
    // SampleAvgDev keeps real signal at T = 0 (reference extremity varies)
    let sad = report
        .rows
        .iter()
        .find(|r| r.temperature == 0.0 && r.method == Method::SampleAvgDev)
        .unwrap();
    assert_ne!(sad.brier, 0.25);
}

#[test]
fn elicitation_shift_construction() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 180, "elicit");
    // two-step verbalization calibrated, single-step overconfident by 20:
    // a constructed distributional shift the K-S test must detect
    config.backend = BackendConfig::Simulator {
        profile: SimulatorProfile {
            mean_true: 64.0,
            mean_false: 53.0,
            base_sigma: 10.0,
            sigma_per_temperature: 8.0,
            sigma_spread: 0.5,
            mean_spread: 0.0,
            verbalized_certainty_law: CertaintyLaw::Calibrated,
            single_step_law: Some(CertaintyLaw::Overconfident { offset: 20.0 }),
            seed: 0,
        },
    };
    config.seed = 0;

    let (report, _) = run_elicitation_comparison(&config).unwrap();
    let single = report
        .modes
        .iter()
        .find(|m| m.mode == "single_step")
        .unwrap();
    let two_step = report.modes.iter().find(|m| m.mode == "two_step").unwrap();
    assert!(
        two_step.ece.unwrap() < single.ece.unwrap(),
        "two-step {} vs single {}",
        two_step.ece.unwrap(),
        single.ece.unwrap()
    );
    let ks = report.ks.as_ref().unwrap();
    assert!(
        ks.significant_at_0_05,
        "expected shift detection, p = {}",
        ks.p_value
    );

    // under the calibrated law, high verbalized certainty means high accuracy
    let split = report
        .conditional
        .iter()
        .find(|c| c.mode == "two_step")
        .unwrap();
    assert!(split.above_50_count > 0 && split.at_or_below_50_count > 0);
    assert!(split.above_50_accuracy.unwrap() >= split.at_or_below_50_accuracy.unwrap());
}

#[test]
fn elicitation_identical_laws_show_no_shift() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 120, "elicit_same");
    config.backend = BackendConfig::Simulator { profile: profile() };

    let (report, _) = run_elicitation_comparison(&config).unwrap();
    // both modes verbalize through the same law at T = 0, so the certainty
    // distributions coincide exactly
    let ks = report.ks.as_ref().unwrap();
    assert_eq!(ks.d, 0.0);
    assert_eq!(ks.p_value, 1.0);
    assert!(!ks.significant_at_0_05);
    let (a, b) = (&report.modes[0], &report.modes[1]);
    assert_eq!(a.binary_accuracy, b.binary_accuracy);
    assert_eq!(a.ece, b.ece);
}

#[test]
fn bsdetector_endpoints_reproduce_standalone_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 90, "bs");
    config.backend = BackendConfig::Simulator { profile: profile() };

    let (methods_report, _) = run_method_comparison(&config).unwrap();
    let (bs_report, manifest) = run_bsdetector(&config).unwrap();

    for row in &bs_report.rows {
        // alpha = 1 reproduces the standalone consistency report exactly
        // (the simulator produces no N.Ns, so the eligible sets coincide)
        let standalone = methods_report
            .rows
            .iter()
            .find(|m| m.method == row.method)
            .unwrap();
        assert_eq!(
            row.pure_obs_ece.to_bits(),
            standalone.ece.to_bits(),
            "{}",
            row.method
        );
        assert_eq!(row.pure_obs_brier.to_bits(), standalone.brier.to_bits());
        assert!(config.alpha_grid.contains(&row.alpha_star));
    }
    // alpha = 0 is the same verbalized signal for every method
    let first = &bs_report.rows[0];
    for row in &bs_report.rows[1..] {
        assert_eq!(row.pure_verb_ece.to_bits(), first.pure_verb_ece.to_bits());
        assert_eq!(
            row.pure_verb_brier.to_bits(),
            first.pure_verb_brier.to_bits()
        );
    }
    // one reliability curve per method
    for method in Method::ALL {
        assert!(manifest
            .outputs
            .contains_key(&format!("curve_{method}.csv")));
    }
    // full grid curve serialized per method
    assert_eq!(bs_report.searches.len(), 6);
    for search in bs_report.searches.values() {
        assert_eq!(search.grid.len(), config.alpha_grid.len());
    }
}

#[test]
fn scales_degenerate_fixture_hand_computed() {
    let dir = tempfile::tempdir().unwrap();
    // sigma 0: every true-labeled record scores exactly 71 (6-point bin 4 =
    // mostly-true, politifact 1), every false-labeled one exactly 30
    // (6-point bin 1 = false, politifact 4)
    let mut tsv = String::new();
    for (i, label) in [
        "true",
        "true",
        "mostly-true",
        "half-true",
        "false",
        "pants-fire",
    ]
    .iter()
    .enumerate()
    {
        writeln!(tsv, "{i}\t{label}\tFixture statement {i}.").unwrap();
    }
    let data = dir.path().join("fixture.tsv");
    std::fs::write(&data, tsv).unwrap();

    let mut config = ExperimentConfig::default();
    config.dataset.path = data;
    config.dataset.split = Split::All;
    config.out_dir = dir.path().join("out");
    config.backend = BackendConfig::Simulator {
        profile: SimulatorProfile {
            mean_true: 71.0,
            mean_false: 30.0,
            base_sigma: 0.0,
            sigma_per_temperature: 0.0,
            sigma_spread: 0.0,
            mean_spread: 0.0,
            verbalized_certainty_law: CertaintyLaw::Calibrated,
            single_step_law: None,
            seed: 5,
        },
    };

    let (report, _) = run_scale_and_version_comparison(&config).unwrap();

    let explain = report
        .scales
        .iter()
        .find(|r| r.scale == "explain_score")
        .unwrap();
    // binary: all six records classified on the right side of 50
    assert_eq!(explain.binary_accuracy, Some(1.0));
    // 6-point: hits only for the mostly-true and false records
    assert_eq!(explain.sixpoint_accuracy, Some(2.0 / 6.0));
    assert_eq!(explain.auc, Some(1.0));
    assert_eq!(explain.nn_rate, 0.0);

    let politifact = report
        .scales
        .iter()
        .find(|r| r.scale == "politifact")
        .unwrap();
    // politifact 1 -> mostly-true -> binary true; 4 -> false -> binary false
    assert_eq!(politifact.binary_accuracy, Some(1.0));
    assert_eq!(politifact.sixpoint_accuracy, Some(2.0 / 6.0));
    assert_eq!(politifact.auc, Some(1.0));

    let categorical = report
        .scales
        .iter()
        .find(|r| r.scale == "three_way_categorical")
        .unwrap();
    // score 71 -> bin 4 -> A; score 30 -> bin 1 -> B: all decided, all right
    assert_eq!(categorical.binary_accuracy, Some(1.0));
    assert_eq!(
        categorical.sixpoint_accuracy, None,
        "undefined for the 3-way scale"
    );
    assert_eq!(categorical.abstained, 0);

    // versions table covers both prompts for the backend model
    assert_eq!(report.versions.len(), 2);
    assert!(report
        .versions
        .iter()
        .all(|v| v.binary_accuracy == Some(1.0)));
}

#[test]
fn scales_categorical_abstention() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 12, "abstain");
    // mean 55 -> 6-point bin 3 -> category C for every binary-true record
    config.backend = BackendConfig::Simulator {
        profile: SimulatorProfile {
            mean_true: 55.0,
            mean_false: 30.0,
            base_sigma: 0.0,
            sigma_per_temperature: 0.0,
            sigma_spread: 0.0,
            mean_spread: 0.0,
            verbalized_certainty_law: CertaintyLaw::Calibrated,
            single_step_law: None,
            seed: 5,
        },
    };
    let (report, _) = run_scale_and_version_comparison(&config).unwrap();
    let categorical = report
        .scales
        .iter()
        .find(|r| r.scale == "three_way_categorical")
        .unwrap();
    // 12 records alternate labels -> 6 binary-true answer C, 6 false answer B
    assert_eq!(categorical.abstained, 6);
    assert_eq!(categorical.binary_accuracy, Some(1.0));
    assert_eq!(categorical.nn_rate, 0.0);
}

#[test]
fn distributions_buckets_sum_to_n() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 60, "dist");
    config.backend = BackendConfig::Simulator { profile: profile() };

    let (report, manifest) = emit_distributions(&config).unwrap();
    assert_eq!(report.histograms.len(), 8); // six methods + two modes
    for (name, hist) in &report.histograms {
        assert_eq!(hist.counts.len(), 20);
        assert_eq!(hist.counts.iter().sum::<usize>(), hist.n, "{name}");
        assert_eq!(hist.n, 60);
        assert!(manifest.outputs.contains_key(&format!("hist_{name}.csv")));
    }
}

#[test]
fn distributions_degenerate_single_bucket() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = base_config(dir.path(), 30, "dist0");
    // zero noise, equidistant means: every confidence collapses to one value
    config.backend = BackendConfig::Simulator {
        profile: SimulatorProfile {
            mean_true: 70.0,
            mean_false: 30.0,
            base_sigma: 0.0,
            sigma_per_temperature: 0.0,
            sigma_spread: 0.0,
            mean_spread: 0.0,
            verbalized_certainty_law: CertaintyLaw::Calibrated,
            single_step_law: None,
            seed: 2,
        },
    };
    let (report, _) = emit_distributions(&config).unwrap();
    for (name, hist) in &report.histograms {
        // consistency methods degenerate to the neutral 0.5; the calibrated
        // verbalized certainty is exactly 1 for every record
        let nonzero = hist.counts.iter().filter(|&&c| c > 0).count();
        assert_eq!(nonzero, 1, "{name} should fill a single bucket");
    }
}
