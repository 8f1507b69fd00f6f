//! The per-submission pipeline: classify, unpack, find the root, compute
//! the closure and collect comments of the used TeX files.

use std::path::Path;

use crate::comments::{extract_comments, CommentsDocument};
use crate::filetype::classify_file_type;
use crate::graph::{compute_closure, find_root_candidates, infer_root, RootOutcome};
use crate::ingest::{classify_submission, unpack_blob, CorpusEntry, Payload, SubmissionKind, UnpackError};
use crate::patterns::PatternConfig;
use crate::project::ProjectTree;
use crate::report::{AnalysisReport, DanglingReference, ExclusionReason, FileRecord, ResidualRecord};
use crate::text::{decode_permissive, extension_lower};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub report: AnalysisReport,
    /// Comments of the used TeX files; empty for anything but a valid project.
    pub comments: CommentsDocument,
}

/// Name given to the file of a single-file submission inside its project.
pub fn single_tex_name(inner_name: &str) -> String {
    if extension_lower(inner_name) == ".tex" {
        inner_name.to_string()
    } else {
        format!("{inner_name}.tex")
    }
}

/// Runs the whole pipeline for one corpus entry. Only errors that should
/// stop the worker (scratch storage full or unwritable) are returned.
pub fn analyze_entry(entry: &CorpusEntry, config: &PatternConfig, scratch_dir: &Path) -> Result<Analysis, UnpackError> {
    let class = classify_submission(entry);
    let mut report = AnalysisReport::new(entry.id, class.kind, entry.data.len() as u64);
    report.source_chunk = entry.source_chunk.clone();
    report.diagnostics.extend(class.note);
    let mut comments = CommentsDocument::default();
    match class.kind {
        SubmissionKind::PdfOnly => {}
        SubmissionKind::Withdrawn => report.exclusion_reason = Some(ExclusionReason::Withdrawn),
        SubmissionKind::UnrecognizedType => report.exclusion_reason = Some(ExclusionReason::UnclearType),
        SubmissionKind::SingleTex => {
            let Payload::SingleTex { name, bytes } = class.payload else {
                unreachable!("single TeX classification carries its file")
            };
            let (tree, _) = ProjectTree::from_memory([(single_tex_name(&name), bytes)]);
            comments = analyze_tree(&mut report, &tree, config);
        }
        SubmissionKind::ProjectBlob => {
            let Payload::Blob(blob) = class.payload else {
                unreachable!("blob classification carries its archive")
            };
            match unpack_blob(&blob, scratch_dir, entry.id) {
                Ok(unpacked) => {
                    report.diagnostics.extend(unpacked.diagnostics.iter().cloned());
                    comments = analyze_tree(&mut report, &unpacked.tree, config);
                }
                Err(e) if e.is_fatal() => return Err(e),
                Err(e) => {
                    report.kind = SubmissionKind::UnrecognizedType;
                    report.exclusion_reason = Some(ExclusionReason::UnclearType);
                    report.diagnostics.push(format!("unpack failed: {e}"));
                }
            }
        }
    }
    Ok(Analysis { report, comments })
}

/// Fills the project part of `report` from an unpacked tree.
pub fn analyze_tree(report: &mut AnalysisReport, tree: &ProjectTree, config: &PatternConfig) -> CommentsDocument {
    let scan = find_root_candidates(tree);
    let decision = infer_root(&scan.candidates);
    report.candidates = scan.candidates.clone();
    let root = match decision.outcome {
        RootOutcome::Found(root) => root,
        RootOutcome::Ambiguous(_) => {
            report.exclusion_reason = Some(ExclusionReason::UnclearRoot);
            return CommentsDocument::default();
        }
        RootOutcome::NoCandidate => {
            let has_tex = tree.files().any(|f| f.is_tex && !f.in_anc);
            report.exclusion_reason = Some(if !scan.deprecated.is_empty() || !has_tex {
                ExclusionReason::UnclearType
            } else {
                ExclusionReason::UnclearRoot
            });
            if !scan.deprecated.is_empty() {
                report
                    .diagnostics
                    .push(format!("deprecated \\documentstyle in {}", scan.deprecated.join(", ")));
            }
            return CommentsDocument::default();
        }
    };
    report.root = Some(root.clone());
    report.root_heuristic = decision.heuristic_used;

    let closure = compute_closure(&root, tree, config);
    let size = |p: &str| tree.get(p).map_or(0, |f| f.size);
    report.used = closure
        .used
        .iter()
        .map(|p| FileRecord {
            path: p.clone(),
            bytes: size(p),
        })
        .collect();
    report.residual = closure
        .residual
        .iter()
        .map(|p| ResidualRecord {
            path: p.clone(),
            bytes: size(p),
            group: classify_file_type(p),
        })
        .collect();
    report.anc = closure
        .anc
        .iter()
        .map(|p| FileRecord {
            path: p.clone(),
            bytes: size(p),
        })
        .collect();
    let mut dangling: Vec<DanglingReference> = closure
        .dangling()
        .map(|e| DanglingReference {
            from: e.from.clone(),
            command: e.command.clone(),
            raw: e.raw.clone(),
        })
        .collect();
    dangling.sort();
    dangling.dedup();
    report.dangling_references = dangling;
    report.alias_macros = closure.aliases.iter().cloned().collect();
    if !report.alias_macros.is_empty() {
        report.diagnostics.push(format!(
            "reference commands wrapped in macros ({}); files reached through them are reported residual",
            report.alias_macros.join(", ")
        ));
    }

    let mut blocks = Vec::new();
    for path in closure.used.iter().filter(|p| extension_lower(p) == ".tex") {
        let Ok(bytes) = tree.read(path) else { continue };
        for block in extract_comments(&decode_permissive(&bytes), path) {
            if block.unterminated {
                report.diagnostics.push(format!(
                    "{}:{}: unterminated {} block",
                    path, block.start_line, block.kind
                ));
            }
            blocks.push(block);
        }
    }
    let doc = CommentsDocument::from_blocks(blocks);
    report.comment_bytes = doc.text_bytes();
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filetype::TypeGroup;
    use crate::graph::RootHeuristic;
    use crate::id::SubmissionId;
    use flate2::{Compression, GzBuilder};
    use std::io::Write;

    fn gz(name: &str, data: &[u8]) -> Vec<u8> {
        let mut enc = GzBuilder::new().filename(name).write(Vec::new(), Compression::fast());
        enc.write_all(data).unwrap();
        enc.finish().unwrap()
    }

    fn tar_of(files: &[(&str, &[u8])]) -> Vec<u8> {
        let mut b = tar::Builder::new(Vec::new());
        for (p, d) in files {
            let mut h = tar::Header::new_gnu();
            h.set_size(d.len() as u64);
            h.set_mode(0o644);
            b.append_data(&mut h, p, *d).unwrap();
        }
        b.into_inner().unwrap()
    }

    fn entry(name: &str, data: Vec<u8>) -> CorpusEntry {
        CorpusEntry {
            id: SubmissionId::split_filename(name).unwrap().0,
            file_name: name.into(),
            source_chunk: Some("chunk.tar".into()),
            data,
        }
    }

    fn run(e: &CorpusEntry) -> Analysis {
        let scratch = tempfile::tempdir().unwrap();
        let a = analyze_entry(e, &PatternConfig::default(), scratch.path()).unwrap();
        assert_eq!(std::fs::read_dir(scratch.path()).unwrap().count(), 0, "scratch cleaned");
        a.report.validate().unwrap();
        a
    }

    #[test]
    fn blob_project() {
        let blob = tar_of(&[
            (
                "main.tex",
                b"\\documentclass{article}\n% note\n\\begin{document}\\includegraphics{fig}\\end{document}\n",
            ),
            ("fig.png", b"PNG!"),
            ("unused.jpg", b"12345"),
            ("anc/extra.csv", b"a,b"),
        ]);
        let a = run(&entry("2501.00001.gz", gz("2501.00001", &blob)));
        let r = &a.report;
        assert_eq!(r.kind, SubmissionKind::ProjectBlob);
        assert_eq!(r.root.as_deref(), Some("main.tex"));
        assert_eq!(r.root_heuristic, Some(RootHeuristic::SoleCandidate));
        let used: Vec<_> = r.used.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(used, ["fig.png", "main.tex"]);
        assert_eq!(
            r.residual,
            [ResidualRecord {
                path: "unused.jpg".into(),
                bytes: 5,
                group: TypeGroup::Image
            }]
        );
        assert_eq!(r.anc.len(), 1);
        assert_eq!(r.comment_bytes, 5);
        assert_eq!(a.comments.entries[0].text, " note");
        assert_eq!(r.source_chunk.as_deref(), Some("chunk.tar"));
    }

    #[test]
    fn single_tex_submission() {
        let src = b"\\documentclass{article}\n\\begin{document}x % hidden\n\\end{document}\n";
        let a = run(&entry("2501.00005.gz", gz("2501.00005", src)));
        assert_eq!(a.report.kind, SubmissionKind::SingleTex);
        assert_eq!(a.report.root.as_deref(), Some("2501.00005.tex"));
        assert!(a.report.residual.is_empty());
        assert_eq!(a.report.comment_bytes, " hidden".len() as u64);
    }

    #[test]
    fn exclusions() {
        let tie = tar_of(&[
            ("a/main.tex", b"\\documentclass{article}"),
            ("b/main.tex", b"\\documentclass{article}"),
        ]);
        let a = run(&entry("2501.00002.gz", gz("2501.00002", &tie)));
        assert_eq!(a.report.exclusion_reason, Some(ExclusionReason::UnclearRoot));
        assert_eq!(a.report.candidates.len(), 2);
        assert!(a.report.stats().is_none());

        let old = tar_of(&[("paper.tex", b"\\documentstyle{article}\\begin{document}\\end{document}")]);
        let a = run(&entry("2501.00003.gz", gz("2501.00003", &old)));
        assert_eq!(a.report.exclusion_reason, Some(ExclusionReason::UnclearType));

        let no_tex = tar_of(&[("readme.txt", b"hi")]);
        let a = run(&entry("2501.00004.gz", gz("2501.00004", &no_tex)));
        assert_eq!(a.report.exclusion_reason, Some(ExclusionReason::UnclearType));

        let headless = tar_of(&[("body.tex", b"\\section{x}")]);
        let a = run(&entry("2501.00006.gz", gz("2501.00006", &headless)));
        assert_eq!(a.report.exclusion_reason, Some(ExclusionReason::UnclearRoot));

        let a = run(&entry("2501.00007.gz", gz("withdrawn", b"withdrawn by author")));
        assert_eq!(a.report.exclusion_reason, Some(ExclusionReason::Withdrawn));

        let a = run(&entry("2501.00008.pdf", b"%PDF-1.4".to_vec()));
        assert_eq!(a.report.exclusion_reason, None);
        assert!(!a.report.is_valid_project());
    }

    #[test]
    fn traversal_blob_becomes_unclear_type() {
        let mut h = tar::Header::new_old();
        h.as_old_mut().name[..6].copy_from_slice(b"../x.t");
        h.set_size(1);
        h.set_entry_type(tar::EntryType::Regular);
        h.set_cksum();
        let mut blob = h.as_bytes().to_vec();
        blob.extend_from_slice(b"x");
        blob.resize(512 * 4, 0);
        let a = run(&entry("2501.00009.gz", gz("2501.00009", &blob)));
        assert_eq!(a.report.kind, SubmissionKind::UnrecognizedType);
        assert!(a.report.diagnostics.iter().any(|d| d.contains("escapes")));
    }

    #[test]
    fn alias_macro_flagged() {
        let blob = tar_of(&[
            (
                "main.tex",
                b"\\documentclass{article}\\newcommand{\\fig}[1]{\\includegraphics{#1}}\\begin{document}\\fig{a}\\end{document}",
            ),
            ("a.png", b"png"),
        ]);
        let a = run(&entry("2501.00010.gz", gz("2501.00010", &blob)));
        assert_eq!(a.report.alias_macros, ["fig"]);
        assert_eq!(a.report.residual[0].path, "a.png");
    }
}
