mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use tarsim::harness::report::{ReportContext, ANALYSIS_DIR, MANIFEST_FILE, OPTIMUM_FILE, ROUNDS_FILE, SUMMARY_FILE};
use tarsim::harness::{analyze_dir, emit_reports, grid_cells, run_experiment_with_id, PrepareOptions, Termination};
use tarsim::synthetic::{generate, SyntheticSpec};
use tarsim::{
    run_experiment, run_grid, ClusterParams, Corpus, Document, Error, ExperimentConfig, GridConfig, PreparedCorpus,
    RunParams, SeedMethod, SelectionStrategy, ToleranceMode,
};

fn prepared(n_docs: usize, with_clusters: bool) -> PreparedCorpus {
    let s = generate(&SyntheticSpec {
        n_docs,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    PreparedCorpus::prepare(
        s.corpus,
        Some(s.keywords),
        &PrepareOptions {
            max_features: 20_000,
            cluster: with_clusters.then(|| (ClusterParams::default(), 1)),
        },
    )
    .unwrap()
}

fn small_params() -> RunParams {
    RunParams {
        seed_size: 100,
        batch_size: 50,
        max_rounds: Some(3),
        rng_seed: 17,
        ..Default::default()
    }
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn default_sizes_exhaust_a_thousand_documents() {
    let p = prepared(1_000, false);
    let config = ExperimentConfig::new(
        SeedMethod::Random,
        SelectionStrategy::Top,
        RunParams {
            rng_seed: 5,
            ..Default::default()
        },
    );
    let trace = run_experiment(&config, &p).unwrap();
    let sizes: Vec<usize> = trace.rounds.iter().map(|r| r.train_size).collect();
    assert_eq!(sizes, vec![500, 750, 1_000]);
    let rounds: Vec<usize> = trace.rounds.iter().map(|r| r.round).collect();
    assert_eq!(rounds, vec![0, 1, 2]);
    assert_eq!(trace.termination, Termination::Exhausted);
    let last = trace.rounds.last().unwrap();
    assert_eq!(last.docs_at_or_above_cutoff, 0);
    assert!((last.review_fraction() - 1.0).abs() < 1e-12);
}

#[test]
fn zero_rounds_gives_only_the_seed_record() {
    let p = prepared(600, false);
    let config = ExperimentConfig::new(
        SeedMethod::Random,
        SelectionStrategy::Mid50,
        RunParams {
            max_rounds: Some(0),
            ..small_params()
        },
    );
    let trace = run_experiment(&config, &p).unwrap();
    assert_eq!(trace.rounds.len(), 1);
    assert_eq!(trace.termination, Termination::MaxRounds);
    assert!(trace.selections.is_empty());
}

#[test]
fn training_grows_by_batches_of_fresh_documents() {
    let p = prepared(700, false);
    for strategy in SelectionStrategy::DEFAULT_GRID {
        let config = ExperimentConfig::new(
            SeedMethod::Random,
            strategy,
            RunParams {
                max_rounds: None,
                batch_size: 120,
                ..small_params()
            },
        );
        let trace = run_experiment(&config, &p).unwrap();
        let n = p.corpus.total();
        for (i, r) in trace.rounds.iter().enumerate() {
            assert_eq!(r.train_size, (100 + 120 * i).min(n), "{strategy}");
        }
        let seed_ids: HashSet<_> = trace.seed.iter().map(|s| s.doc_id.clone()).collect();
        let mut seen = seed_ids.clone();
        for s in &trace.selections {
            assert!(seen.insert(s.doc_id.clone()), "{} picked twice", s.doc_id);
            let d = p.position(s.doc_id.as_str()).unwrap();
            assert_eq!(s.label, p.corpus.documents()[d].label);
        }
        assert_eq!(seen.len(), n);
        assert_eq!(trace.termination, Termination::Exhausted);
        let positives = p.corpus.positives();
        for r in &trace.rounds {
            assert!(r.recall_achieved() >= 0.75 - 1e-12);
            assert!(r.train_positives <= positives);
        }
    }
}

#[test]
fn seed_records_match_the_corpus() {
    let p = prepared(600, true);
    for method in SeedMethod::ALL {
        let config = ExperimentConfig::new(method, SelectionStrategy::Rand, small_params());
        let trace = run_experiment(&config, &p).unwrap();
        assert_eq!(trace.seed.len(), 100);
        let mut ids = HashSet::new();
        for s in &trace.seed {
            let d = p.position(s.doc_id.as_str()).unwrap();
            assert_eq!(s.label, p.corpus.documents()[d].label);
            assert!(ids.insert(s.doc_id.clone()));
        }
        assert_eq!(trace.seed_positives, trace.seed.iter().filter(|s| s.label).count());
        assert_eq!(trace.rounds[0].train_size, 100 + trace.degenerate_topup);
    }
}

#[test]
fn single_class_seed_is_topped_up() {
    // 4 positives among 300: a 2-document seed is almost always all negative.
    let docs: Vec<Document> = (0..300)
        .map(|i| Document::new(format!("d{i:03}"), format!("w{} common", i % 7), i % 75 == 0))
        .collect();
    let p = PreparedCorpus::prepare(
        Corpus::from_documents(docs).unwrap(),
        None,
        &PrepareOptions {
            max_features: 100,
            cluster: None,
        },
    )
    .unwrap();
    let config = ExperimentConfig::new(
        SeedMethod::Random,
        SelectionStrategy::Top,
        RunParams {
            seed_size: 2,
            max_rounds: Some(0),
            rng_seed: 1,
            ..Default::default()
        },
    );
    let trace = run_experiment(&config, &p).unwrap();
    let r = &trace.rounds[0];
    assert!(r.train_positives > 0 && r.train_positives < r.train_size);
    assert_eq!(trace.degenerate_topup % 50, 0);
    assert_eq!(r.train_size, 2 + trace.degenerate_topup);
}

#[test]
fn keyword_seeding_without_keywords_is_inconsistent() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.jsonl");
    generate(&SyntheticSpec {
        n_docs: 50,
        ..Default::default()
    })
    .unwrap()
    .corpus
    .save_jsonl(&path)
    .unwrap();
    let params = RunParams {
        corpus_path: path,
        ..small_params()
    };
    let err = PreparedCorpus::for_params(&params, &[SeedMethod::KeywordEqual]).unwrap_err();
    assert!(matches!(err, Error::ConfigInconsistent(_)), "{err}");
    assert_eq!(err.category().exit_code(), 1);
}

#[test]
fn one_cell_grid_matches_direct_run() {
    let p = prepared(600, false);
    let grid = GridConfig {
        seed_methods: vec![SeedMethod::Random],
        strategies: vec![SelectionStrategy::Mid50],
        replicates: 1,
        params: small_params(),
    };
    let outcome = run_grid(&grid, &p, 1).unwrap();
    assert!(outcome.failures.is_empty());
    let cell = &grid_cells(&grid)[0];
    let direct = run_experiment_with_id(&cell.config, &p, &cell.experiment_id, 0).unwrap();
    assert_eq!(outcome.traces[0].rounds, direct.rounds);
    assert_eq!(outcome.traces[0].selections, direct.selections);
    assert_eq!(outcome.traces[0].experiment_id, "random__MID_50__r0");
}

#[test]
fn full_grid_has_thirty_traces_and_stable_reports() {
    let p = prepared(500, true);
    let grid = GridConfig::full(RunParams {
        max_rounds: Some(2),
        ..small_params()
    });
    assert_eq!(grid_cells(&grid).len(), 30);
    let serial = run_grid(&grid, &p, 1).unwrap();
    assert_eq!(serial.traces.len(), 30);
    assert!(serial.failures.is_empty());
    let ids: HashSet<_> = serial.traces.iter().map(|t| t.experiment_id.clone()).collect();
    assert_eq!(ids.len(), 30);

    let parallel = run_grid(&grid, &p, 8).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let ctx = ReportContext::from_prepared(&p, grid.to_json_value(), ToleranceMode::Relative);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    emit_reports(&serial.traces, &serial.failures, &ctx, &a).unwrap();
    emit_reports(&parallel.traces, &parallel.failures, &ctx, &b).unwrap();
    // Report order must not depend on trace order either.
    let mut reversed = serial.traces.clone();
    reversed.reverse();
    emit_reports(&reversed, &[], &ctx, &c).unwrap();
    let files = dir_files(&a);
    assert!(files.len() >= 11);
    assert_eq!(files, dir_files(&b));
    assert_eq!(files, dir_files(&c));

    let rounds = read(&a, ROUNDS_FILE);
    assert_eq!(rounds.lines().count(), 1 + 30 * 3);

    let analysis = analyze_dir(&a).unwrap();
    assert_eq!(analysis, a.join(ANALYSIS_DIR));
    assert_eq!(read(&analysis, OPTIMUM_FILE), read(&a, OPTIMUM_FILE));
    assert_eq!(read(&analysis, SUMMARY_FILE), read(&a, SUMMARY_FILE));
}

#[test]
fn empty_and_single_trace_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let ctx = ReportContext::default();
    emit_reports(&[], &[], &ctx, tmp.path()).unwrap();
    assert!(tmp.path().join(MANIFEST_FILE).exists());
    for (name, bytes) in dir_files(tmp.path()) {
        if name.ends_with(".csv") {
            assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 1, "{name}");
        }
    }

    let p = prepared(500, false);
    let config = ExperimentConfig::new(
        SeedMethod::Random,
        SelectionStrategy::Top,
        RunParams {
            max_rounds: Some(2),
            ..small_params()
        },
    );
    let trace = run_experiment(&config, &p).unwrap();
    assert_eq!(trace.rounds.len(), 3);
    let out = tmp.path().join("one");
    emit_reports(std::slice::from_ref(&trace), &[], &ctx, &out).unwrap();
    let rounds = read(&out, ROUNDS_FILE);
    assert_eq!(rounds.lines().count(), 4);
    for (line, record) in rounds.lines().skip(1).zip(&trace.rounds) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], trace.experiment_id);
        assert_eq!(cols[2].parse::<usize>().unwrap(), record.train_size);
        let pct: f64 = cols[6].parse().unwrap();
        assert_eq!(pct, record.review_pct());
    }
    let before = read(&out, OPTIMUM_FILE);
    analyze_dir(&out).unwrap();
    assert_eq!(read(&out.join(ANALYSIS_DIR), OPTIMUM_FILE), before);
}
