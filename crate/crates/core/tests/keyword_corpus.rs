use residue_core::driver::{run_scan, run_search, ScanConfig, SearchOptions};
use residue_core::keywords::{KeywordConfig, Target};
use residue_core::testkit::{keyword_corpus, write_corpus, Layout};

#[test]
fn planted_keywords_are_counted_exactly() {
    let config = KeywordConfig::default();
    let planted = keyword_corpus(36, 99, &config);
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, &planted.files, Layout::Loose).unwrap();
    let cfg = ScanConfig::new(corpus, tmp.path().join("reports"), tmp.path().join("scratch"));
    assert_eq!(run_scan(&cfg).unwrap().kinds.valid_projects, 36);

    let out = tmp.path().join("search");
    std::fs::create_dir_all(&out).unwrap();
    let found = run_search(&cfg.report_dir, &out, &config, SearchOptions::default()).unwrap();

    assert_eq!(found.summary.len(), planted.expected.len());
    let mut wrong = Vec::new();
    for row in &found.summary {
        let e = planted.expected[&(row.group.clone(), row.term.clone())];
        assert!(e.projects > 0, "{} was never planted", row.term);
        if (row.occurrences, row.projects, row.benign_occurrences) != (e.occurrences, e.projects, e.benign_occurrences)
        {
            wrong.push(format!("{}/{}: got {row:?}, expected {e:?}", row.group, row.term));
        }
    }
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));

    for h in &found.filename_hits {
        assert!(
            !planted.used_decoys.contains(&(h.submission, h.file.clone())),
            "used file hit: {h:?}"
        );
    }
    assert!(found
        .comment_hits
        .iter()
        .all(|h| h.file == "main.tex" && h.line.is_some()));
}

#[test]
fn dedup_keeps_one_hit_per_project_and_term() {
    let config = KeywordConfig::default();
    let planted = keyword_corpus(12, 5, &config);
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    write_corpus(&corpus, &planted.files, Layout::Chunked { per_chunk: 5 }).unwrap();
    let cfg = ScanConfig::new(corpus, tmp.path().join("reports"), tmp.path().join("scratch"));
    run_scan(&cfg).unwrap();
    let out = tmp.path().join("search");
    std::fs::create_dir_all(&out).unwrap();
    let opts = SearchOptions {
        dedup: true,
        word_boundary: false,
    };
    let found = run_search(&cfg.report_dir, &out, &config, opts).unwrap();
    let comment_terms: Vec<_> = config
        .terms(Target::Comments)
        .into_iter()
        .map(|(_, t)| t.to_string())
        .collect();
    let projects: u64 = found
        .summary
        .iter()
        .filter(|r| comment_terms.contains(&r.term))
        .map(|r| r.projects)
        .sum();
    assert_eq!(found.comment_hits.len() as u64, projects);
}
