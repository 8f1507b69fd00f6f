use proptest::prelude::*;
use residue_core::analyze::analyze_entry;
use residue_core::driver::{run_scan, ScanConfig};
use residue_core::ingest::{classify_submission, scan_corpus, ScanEvent, SubmissionKind};
use residue_core::patterns::PatternConfig;
use residue_core::report::read_reports;
use residue_core::testkit::{mixed_corpus, write_corpus, GenOptions, Layout};

fn classifications(dir: &std::path::Path) -> Vec<(String, SubmissionKind)> {
    scan_corpus(dir)
        .unwrap()
        .filter_map(|ev| match ev {
            ScanEvent::Entry(e) => Some((e.id.to_string(), classify_submission(&e).kind)),
            ScanEvent::Error(_) => None,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kinds_partition_and_classification_is_deterministic(
        seed in any::<u64>(),
        count in 1usize..45,
        chunked in any::<bool>(),
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let corpus = tmp.path().join("corpus");
        let layout = if chunked { Layout::Chunked { per_chunk: 7 } } else { Layout::Loose };
        write_corpus(&corpus, &mixed_corpus(count, seed, &GenOptions::default()), layout).unwrap();

        let first = classifications(&corpus);
        prop_assert_eq!(first.len(), count);
        prop_assert_eq!(&first, &classifications(&corpus));
        let per_kind: usize = SubmissionKind::ALL
            .iter()
            .map(|k| first.iter().filter(|(_, c)| c == k).count())
            .sum();
        prop_assert_eq!(per_kind, count);

        let cfg = ScanConfig::new(corpus, tmp.path().join("reports"), tmp.path().join("scratch"));
        let summary = run_scan(&cfg).unwrap();
        let k = summary.kinds;
        prop_assert_eq!(k.submissions, count as u64);
        prop_assert_eq!(k.valid_projects + k.pdf_only + k.withdrawn + k.unclear_root + k.unclear_type, k.submissions);

        for report in read_reports(&cfg.report_dir).unwrap() {
            let report = report.unwrap();
            prop_assert!(report.validate().is_ok(), "{:?}", report.validate());
        }

        // Unpack directories are gone once their submission is done.
        for worker in std::fs::read_dir(&cfg.scratch_dir).unwrap() {
            let leftover = std::fs::read_dir(worker.unwrap().path()).unwrap().count();
            prop_assert_eq!(leftover, 0);
        }
    }
}

#[test]
fn reanalysis_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, &mixed_corpus(30, 4, &GenOptions::default()), Layout::Loose).unwrap();
    let config = PatternConfig::default();
    for ev in scan_corpus(&corpus).unwrap() {
        let ScanEvent::Entry(e) = ev else {
            panic!("unexpected scan error")
        };
        let a = analyze_entry(&e, &config, tmp.path()).unwrap();
        let b = analyze_entry(&e, &config, tmp.path()).unwrap();
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
        assert_eq!(a.comments.render(), b.comments.render());
    }
}
