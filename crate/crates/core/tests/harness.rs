mod common;

use std::collections::HashSet;

use osa_core::dsp::{preprocess_record, EventWindow, PreprocessConfig};
use osa_core::harness::*;
use osa_core::signal_io::{generate_cohort, Class, CohortConfig};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn labelled_ids(n_normal: usize, n_severe: usize) -> Vec<(String, Class)> {
    (0..n_normal)
        .map(|i| (format!("N{i:04}@0"), Class::Normal))
        .chain((0..n_severe).map(|i| (format!("S{i:04}@0"), Class::Severe)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fold_plans_partition(seed in any::<u64>(), k in 2usize..12, n_normal in 12usize..60, n_severe in 12usize..60) {
        let ids = labelled_ids(n_normal, n_severe);
        let plans = make_folds(&ids, k, seed).unwrap();
        prop_assert_eq!(plans.len(), k);
        let all: HashSet<&str> = ids.iter().map(|(s, _)| s.as_str()).collect();
        let mut tested = HashSet::new();
        for p in &plans {
            let t: HashSet<&str> = p.test_ids.iter().map(String::as_str).collect();
            let v: HashSet<&str> = p.val_ids.iter().map(String::as_str).collect();
            let tr: HashSet<&str> = p.train_ids.iter().map(String::as_str).collect();
            prop_assert!(t.is_disjoint(&v) && t.is_disjoint(&tr) && v.is_disjoint(&tr));
            prop_assert_eq!(t.len() + v.len() + tr.len(), all.len());
            prop_assert_eq!(t.len(), p.test_ids.len());
            for id in &t {
                prop_assert!(tested.insert(*id), "{} tested twice", id);
            }
            for class in ['N', 'S'] {
                let per = |s: &HashSet<&str>| s.iter().filter(|x| x.starts_with(class)).count();
                let total = if class == 'N' { n_normal } else { n_severe };
                // round-robin: every fold gets floor or ceil of total / k
                prop_assert!(per(&t) == total / k || per(&t) == total.div_ceil(k));
                prop_assert_eq!(per(&v), per(&t).min(total - per(&t) - 1));
                prop_assert!(per(&tr) >= 1);
            }
        }
        prop_assert_eq!(tested.len(), all.len());
    }

    #[test]
    fn t_statistic_is_antisymmetric(a in prop::collection::vec(0.0f64..100.0, 2..20), shift in prop::collection::vec(-5.0f64..5.0, 20)) {
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        if let (Ok(ab), Ok(ba)) = (paired_t_test(&a, &b), paired_t_test(&b, &a)) {
            prop_assert_eq!(ab.t, -ba.t);
            prop_assert!((ab.p - ba.p).abs() < 1e-15);
        }
        prop_assert_eq!(paired_t_test(&a, &a), Err(StatsError::DegenerateVariance));
    }

    #[test]
    fn t_cdf_matches_reference(t in -40.0f64..40.0, df in 1u32..60) {
        let reference = StudentsT::new(0.0, 1.0, df as f64).unwrap().cdf(t);
        prop_assert!((student_t_cdf(t, df as f64) - reference).abs() < 1e-10);
    }
}

#[test]
fn published_fold_split_sizes() {
    let plans = make_folds(&labelled_ids(1000, 1000), 10, 2024).unwrap();
    for p in &plans {
        assert_eq!(p.test_ids.len(), 200);
        assert_eq!(p.val_ids.len(), 200);
        assert_eq!(p.train_ids.len(), 1600);
        assert_eq!(p.test_ids.iter().filter(|s| s.starts_with('S')).count(), 100);
    }
}

#[test]
fn table_rows_recompose() {
    // DL folds 4 and 5 print an accuracy their own sensitivity and
    // specificity cannot produce with these class counts
    let inconsistent = [(4, "dl"), (5, "dl")];
    for f in &common::TABLE {
        for (name, r) in [("svm", f.svm), ("dl", f.dl)] {
            let found = common::reconcile(r);
            assert_eq!(found.is_some(), !inconsistent.contains(&(f.fold, name)), "fold {} {name}", f.fold);
            if let (Some((pos, _)), "svm") = (found, name) {
                assert_eq!(pos, common::positives(f.fold));
            }
        }
    }
}

#[test]
fn published_t_statistic() {
    let r = paired_t_test(&common::dl_acc(), &common::svm_acc()).unwrap();
    assert!((r.t - 31.4518).abs() < 1e-3, "t = {}", r.t);
    assert_eq!(r.df, 9.0);
    let reference = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 9.0).unwrap().cdf(r.t));
    assert!((r.p - reference).abs() < 1e-15 + 1e-6 * reference, "{} vs {reference}", r.p);
    assert!(r.p < 1e-9);
}

fn small_windows() -> Vec<EventWindow> {
    let cohort_cfg = CohortConfig { duration: 240.0, ..Default::default() };
    let cohort = generate_cohort(&cohort_cfg, 4, 4, 17).unwrap();
    cohort.iter().flat_map(|r| preprocess_record(r, &PreprocessConfig::default()).unwrap().windows).collect()
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig::parse(
        "per_class = 12\nfolds = 3\nconv_units = 4,4\nconv_kernel = 16,8\nconv_stride = 8,4\nlstm_units = 4\n\
         dense_units = 4\nmax_epochs = 2\nbatch_size = 8\nprecision = f32\n",
    )
    .unwrap()
}

#[test]
fn end_to_end_small_run_is_reproducible() {
    let windows = small_windows();
    let cfg = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let table = run_experiment(&windows, None, &cfg, a.path()).unwrap();
    assert_eq!(table.models.len(), 2);
    assert!(table.models.iter().all(|m| m.folds.len() == 3));
    assert!(table.t_test.is_some() || table.t_test_note.is_some());
    for f in ["config.txt", "excluded.csv", "report.json", "report.txt", "report.csv", "boxplot.csv", "folds/fold_01.json"] {
        assert!(a.path().join(f).exists(), "{f} missing");
    }
    for f in ["svm_model.json", "dl_model.ckpt", "dl_history.csv", "dl_predictions.csv", "metrics.json"] {
        assert!(a.path().join("fold_02").join(f).exists(), "{f} missing");
    }
    assert!(!a.path().join(FAILURE_MARKER).exists());
    assert_eq!(read_report(a.path()).unwrap(), table);

    run_experiment(&windows, None, &cfg, b.path()).unwrap();
    for f in ["report.json", "report.csv", "report.txt", "fold_01/dl_model.ckpt", "fold_03/svm_model.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn failure_leaves_marker() {
    let windows = small_windows();
    let mut cfg = small_config();
    cfg.models = ModelChoice::Svm;
    cfg.per_class = 100_000;
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&windows, None, &cfg, dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Fold(FoldError::InsufficientSamples { .. })));
    assert_eq!(err.exit_code(), EXIT_DATA);
    let marker = std::fs::read_to_string(dir.path().join(FAILURE_MARKER)).unwrap();
    assert!(marker.contains("requested"));
    assert!(dir.path().join("config.txt").exists());

    cfg.per_class = 12;
    run_experiment(&windows, None, &cfg, dir.path()).unwrap();
    assert!(!dir.path().join(FAILURE_MARKER).exists());
}

#[test]
fn exit_code_classes() {
    assert_eq!(HarnessError::Config(ConfigError::Syntax { line: 1 }).exit_code(), EXIT_USAGE);
    let nan = osa_nn::NnError::NonFiniteLoss { epoch: 1, batch: 0, detail: String::new() };
    assert_eq!(HarnessError::Nn(nan).exit_code(), EXIT_NUMERIC);
    assert_eq!(HarnessError::Data("x".into()).exit_code(), EXIT_DATA);
}
