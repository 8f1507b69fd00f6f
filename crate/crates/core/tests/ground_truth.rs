use std::collections::BTreeSet;
use std::time::Instant;

use residue_core::driver::{run_scan, ScanConfig};
use residue_core::report::{read_report, report_path};
use residue_core::testkit::{
    compare_report, generate_ground_truth, project_submission, write_corpus, GenOptions, Layout,
};

fn precision_recall(expected: &BTreeSet<String>, got: &BTreeSet<String>) -> (usize, usize, usize) {
    let tp = expected.intersection(got).count();
    (tp, got.len(), expected.len())
}

#[test]
fn scan_recovers_planted_residual_files() {
    let started = Instant::now();
    let projects = generate_ground_truth(64, 2025, &GenOptions::default());
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let files: Vec<_> = projects.iter().map(project_submission).collect();
    write_corpus(&corpus, &files, Layout::Chunked { per_chunk: 20 }).unwrap();

    let cfg = ScanConfig::new(corpus, tmp.path().join("reports"), tmp.path().join("scratch"));
    let summary = run_scan(&cfg).unwrap();
    assert_eq!(summary.kinds.valid_projects, 64);

    let (mut tp, mut reported, mut planted) = (0, 0, 0);
    let mut alias_projects = 0;
    for p in &projects {
        let report = read_report(&report_path(&cfg.report_dir, p.id)).unwrap();
        let m = compare_report(p, &report);
        assert!(m.is_empty(), "{}: {m:?}", p.id);
        if p.has_alias() {
            alias_projects += 1;
            assert!(!report.alias_macros.is_empty());
            for f in &p.aliased {
                assert!(
                    report.residual.iter().any(|r| &r.path == f),
                    "{f} should surface as residual"
                );
            }
            continue;
        }
        assert!(report.alias_macros.is_empty(), "{}", p.id);
        let got: BTreeSet<String> = report.residual.iter().map(|r| r.path.clone()).collect();
        let (a, b, c) = precision_recall(&p.residual, &got);
        tp += a;
        reported += b;
        planted += c;
    }
    assert!(alias_projects >= 5);
    assert!(planted > 0);
    assert_eq!(tp, reported, "precision below 100%");
    assert_eq!(tp, planted, "recall below 100%");
    assert!(started.elapsed().as_secs() < 60);
}
