use std::fs;
use std::path::Path;

use residue_core::comments::{extract_comments, CommentsDocument};

#[test]
fn comments_documents_match_golden_files() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/comments");
    let mut sources: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "tex"))
        .collect();
    sources.sort();
    assert!(sources.len() >= 20, "only {} fixtures", sources.len());

    let mut failures = Vec::new();
    for src in &sources {
        let name = src.file_name().unwrap().to_str().unwrap();
        let text = String::from_utf8(fs::read(src).unwrap()).unwrap();
        let doc = CommentsDocument::from_blocks(extract_comments(&text, name));
        let expected = fs::read(src.with_extension("expected")).unwrap();
        if doc.render().as_bytes() != expected.as_slice() {
            failures.push(format!(
                "{name}\n--- expected\n{}\n--- got\n{}",
                String::from_utf8_lossy(&expected),
                doc.render()
            ));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n\n"));
}

#[test]
fn golden_documents_parse_back() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/comments");
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "expected") {
            let text = fs::read_to_string(&p).unwrap();
            let doc = CommentsDocument::parse(&text).unwrap();
            assert_eq!(doc.render(), text, "{}", p.display());
        }
    }
}
