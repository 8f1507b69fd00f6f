//! Corpus walking, submission classification and safe blob extraction.

use std::collections::VecDeque;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use flate2::bufread::GzDecoder;
use regex::bytes::Regex;
use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use thiserror::Error;
use walkdir::WalkDir;

use crate::id::SubmissionId;
use crate::project::ProjectTree;
use crate::text::{decode_permissive, normalize_relative};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
const PDF_MAGIC: &[u8] = b"%PDF";
/// Upper bound on one decompressed submission.
pub const MAX_DECOMPRESSED_BYTES: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionKind {
    PdfOnly,
    Withdrawn,
    SingleTex,
    ProjectBlob,
    UnrecognizedType,
}

impl SubmissionKind {
    pub const ALL: [SubmissionKind; 5] = [
        SubmissionKind::PdfOnly,
        SubmissionKind::Withdrawn,
        SubmissionKind::SingleTex,
        SubmissionKind::ProjectBlob,
        SubmissionKind::UnrecognizedType,
    ];
}

/// One per-submission file found in the corpus, loose or inside a chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: SubmissionId,
    pub file_name: String,
    /// Chunk archive the entry came from; `None` for loose files.
    pub source_chunk: Option<String>,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanEvent {
    Entry(CorpusEntry),
    Error(ScanError),
}

/// Iterator over the entries of a corpus directory in lexicographic path
/// order. Chunk archives (`*.tar`) are expanded one at a time, their
/// members sorted by name.
pub struct CorpusScanner {
    files: VecDeque<PathBuf>,
    root: PathBuf,
    pending: VecDeque<ScanEvent>,
}

/// Opens a corpus directory. Fails only if the directory itself cannot be
/// read; every later problem becomes a [`ScanEvent::Error`].
pub fn scan_corpus(corpus_dir: &Path) -> io::Result<CorpusScanner> {
    fs::read_dir(corpus_dir)?;
    let mut files = VecDeque::new();
    let mut pending = VecDeque::new();
    for entry in WalkDir::new(corpus_dir).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() => files.push_back(e.into_path()),
            Ok(_) => {}
            Err(e) => pending.push_back(ScanEvent::Error(ScanError {
                path: e.path().map_or_else(String::new, |p| p.display().to_string()),
                message: e.to_string(),
            })),
        }
    }
    Ok(CorpusScanner {
        files,
        root: corpus_dir.to_path_buf(),
        pending,
    })
}

impl CorpusScanner {
    fn expand(&mut self, path: PathBuf) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let shown = path.strip_prefix(&self.root).unwrap_or(&path).display().to_string();
        if let Some((id, _)) = SubmissionId::split_filename(&name) {
            let event = match fs::read(&path) {
                Ok(data) => ScanEvent::Entry(CorpusEntry {
                    id,
                    file_name: name,
                    source_chunk: None,
                    data,
                }),
                Err(e) => ScanEvent::Error(ScanError {
                    path: shown,
                    message: e.to_string(),
                }),
            };
            self.pending.push_back(event);
        } else if name.ends_with(".tar") {
            self.pending.extend(read_chunk(&path, &name, &shown));
        } else {
            self.pending.push_back(ScanEvent::Error(ScanError {
                path: shown,
                message: "not a submission file or chunk archive".into(),
            }));
        }
    }
}

impl Iterator for CorpusScanner {
    type Item = ScanEvent;

    fn next(&mut self) -> Option<ScanEvent> {
        loop {
            if let Some(ev) = self.pending.pop_front() {
                return Some(ev);
            }
            let path = self.files.pop_front()?;
            self.expand(path);
        }
    }
}

fn read_chunk(path: &Path, chunk_name: &str, shown: &str) -> Vec<ScanEvent> {
    let err = |message: String| {
        ScanEvent::Error(ScanError {
            path: shown.to_string(),
            message,
        })
    };
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) => return vec![err(e.to_string())],
    };
    let mut archive = tar::Archive::new(io::BufReader::new(file));
    let entries = match archive.entries() {
        Ok(e) => e,
        Err(e) => return vec![err(format!("corrupt chunk: {e}"))],
    };
    let mut members = Vec::new();
    let mut errors = Vec::new();
    for entry in entries {
        let mut entry = match entry {
            Ok(e) => e,
            Err(e) => {
                errors.push(err(format!("corrupt chunk: {e}")));
                break;
            }
        };
        if !entry.header().entry_type().is_file() {
            continue;
        }
        let member_path = String::from_utf8_lossy(&entry.path_bytes()).into_owned();
        let name = member_path.rsplit('/').next().unwrap_or(&member_path).to_string();
        let expected = entry.size();
        let mut data = Vec::with_capacity(expected.min(1 << 26) as usize);
        if let Err(e) = entry.read_to_end(&mut data) {
            errors.push(err(format!("member {member_path}: {e}")));
            break;
        }
        if data.len() as u64 != expected {
            errors.push(err(format!(
                "member {member_path}: truncated ({} of {expected} bytes)",
                data.len()
            )));
            break;
        }
        match SubmissionId::split_filename(&name) {
            Some((id, _)) => members.push(CorpusEntry {
                id,
                file_name: name,
                source_chunk: Some(chunk_name.to_string()),
                data,
            }),
            None => errors.push(err(format!("member {member_path}: not a submission file"))),
        }
    }
    members.sort_by(|a, b| a.file_name.cmp(&b.file_name));
    for e in &errors {
        if let ScanEvent::Error(se) = e {
            log::warn!("{}: {}", se.path, se.message);
        }
    }
    members.into_iter().map(ScanEvent::Entry).chain(errors).collect()
}

/// What classification extracted from a submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    None,
    /// A single TeX file and its name.
    SingleTex {
        name: String,
        bytes: Vec<u8>,
    },
    /// The inner archive of a multi-file project.
    Blob(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub kind: SubmissionKind,
    pub payload: Payload,
    pub note: Option<String>,
}

impl Classification {
    fn bare(kind: SubmissionKind) -> Self {
        Self {
            kind,
            payload: Payload::None,
            note: None,
        }
    }

    fn unrecognized(note: impl Into<String>) -> Self {
        Self {
            kind: SubmissionKind::UnrecognizedType,
            payload: Payload::None,
            note: Some(note.into()),
        }
    }
}

/// Decides the kind of one corpus entry from its bytes.
pub fn classify_submission(entry: &CorpusEntry) -> Classification {
    let ext = SubmissionId::split_filename(&entry.file_name).map_or("", |(_, e)| e);
    let data = &entry.data;
    if ext.eq_ignore_ascii_case("pdf") {
        return if data.starts_with(PDF_MAGIC) {
            Classification::bare(SubmissionKind::PdfOnly)
        } else {
            Classification::unrecognized("pdf entry without PDF header")
        };
    }
    if !data.starts_with(&GZIP_MAGIC) {
        return Classification::unrecognized(format!("unexpected entry type {:?}", entry.file_name));
    }

    let mut decoder = GzDecoder::new(&data[..]);
    let mut inner = Vec::new();
    if let Err(e) = (&mut decoder).take(MAX_DECOMPRESSED_BYTES + 1).read_to_end(&mut inner) {
        return Classification::unrecognized(format!("gzip decode failed: {e}"));
    }
    if inner.len() as u64 > MAX_DECOMPRESSED_BYTES {
        return Classification::unrecognized("decompressed size over limit");
    }
    let inner_name = decoder
        .header()
        .and_then(|h| h.filename())
        .map(decode_permissive)
        .map(|n| n.rsplit(['/', '\\']).next().unwrap_or(&n).to_string());
    if decoder.into_inner().starts_with(&GZIP_MAGIC) {
        return Classification::unrecognized("gzip holds more than one file");
    }
    let id = entry.id.to_string();
    // gunzip names the output after the entry when the header carries no name.
    let name = inner_name.unwrap_or_else(|| id.clone());

    if is_archive(&inner) {
        return if name == id {
            Classification {
                kind: SubmissionKind::ProjectBlob,
                payload: Payload::Blob(inner),
                note: None,
            }
        } else {
            Classification::unrecognized(format!("inner archive named {name:?}"))
        };
    }
    if name.eq_ignore_ascii_case("withdrawn") {
        return Classification::bare(SubmissionKind::Withdrawn);
    }
    if looks_like_tex(&inner) {
        return Classification {
            kind: SubmissionKind::SingleTex,
            payload: Payload::SingleTex { name, bytes: inner },
            note: None,
        };
    }
    Classification::unrecognized(format!("inner file {name:?} is neither TeX nor an archive"))
}

/// Tar detection: the POSIX `ustar` magic, or a valid header checksum for
/// pre-POSIX archives.
pub fn is_archive(data: &[u8]) -> bool {
    if data.len() < 512 {
        return false;
    }
    if &data[257..262] == b"ustar" {
        return true;
    }
    let header = &data[..512];
    if header.iter().all(|&b| b == 0) {
        return false;
    }
    let field = &header[148..156];
    let digits: String = field.iter().map(|&b| b as char).filter(|c| c.is_digit(8)).collect();
    let Ok(stored) = u32::from_str_radix(&digits, 8) else {
        return false;
    };
    let sum: u32 = header
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if (148..156).contains(&i) {
                u32::from(b' ')
            } else {
                u32::from(b)
            }
        })
        .sum();
    sum == stored
}

/// A file counts as TeX when its head is free of NUL bytes and it uses at
/// least one common structural control sequence.
pub fn looks_like_tex(data: &[u8]) -> bool {
    static TEX: OnceLock<Regex> = OnceLock::new();
    let re = TEX.get_or_init(|| {
        Regex::new(
            r"\\(documentclass|documentstyle|begin|input|include|section|chapter|title|author|maketitle|def|usepackage|newcommand|end)[^a-zA-Z]",
        )
        .unwrap()
    });
    let head = &data[..data.len().min(8192)];
    !head.contains(&0) && re.is_match(data)
}

#[derive(Debug, Error)]
pub enum UnpackError {
    #[error("archive member {0:?} escapes the project directory")]
    Traversal(String),
    #[error("corrupt archive: {0}")]
    Corrupt(String),
    #[error("archive contains no regular files")]
    Empty,
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl UnpackError {
    /// Errors that end the worker rather than the submission.
    pub fn is_fatal(&self) -> bool {
        match self {
            UnpackError::Io(e) => matches!(
                e.kind(),
                io::ErrorKind::StorageFull
                    | io::ErrorKind::QuotaExceeded
                    | io::ErrorKind::PermissionDenied
                    | io::ErrorKind::ReadOnlyFilesystem
            ),
            _ => false,
        }
    }
}

/// A project extracted into a temporary directory, removed on drop.
#[derive(Debug)]
pub struct UnpackedProject {
    pub dir: TempDir,
    pub tree: ProjectTree,
    pub diagnostics: Vec<String>,
}

/// Extracts a blob under a fresh subdirectory of `work_dir`. Only regular
/// files and directories are materialized; links are skipped. Any member
/// whose path would leave the extraction directory aborts the extraction.
pub fn unpack_blob(blob: &[u8], work_dir: &Path, id: SubmissionId) -> Result<UnpackedProject, UnpackError> {
    fs::create_dir_all(work_dir)?;
    let dir = tempfile::Builder::new()
        .prefix(&format!("{id}-"))
        .tempdir_in(work_dir)?;
    let base = dir.path().to_path_buf();
    let mut diagnostics = Vec::new();
    let mut archive = tar::Archive::new(blob);
    let mut files = 0usize;
    for entry in archive.entries().map_err(|e| UnpackError::Corrupt(e.to_string()))? {
        let mut entry = entry.map_err(|e| UnpackError::Corrupt(e.to_string()))?;
        let raw = decode_permissive(&entry.path_bytes());
        let trimmed = raw.replace('\\', "/");
        let trimmed = trimmed.trim_start_matches("./").trim_matches('/');
        if trimmed.is_empty() || trimmed == "." {
            continue;
        }
        let Some(rel) = normalize_relative(&raw) else {
            return Err(UnpackError::Traversal(raw));
        };
        let kind = entry.header().entry_type();
        let target = base.join(&rel);
        if kind.is_dir() {
            fs::create_dir_all(&target)?;
            continue;
        }
        if !kind.is_file() && !matches!(kind, tar::EntryType::GNUSparse) {
            diagnostics.push(format!("skipped non-regular member {rel:?} ({kind:?})"));
            continue;
        }
        let mut write = || -> io::Result<()> {
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            let mut out = fs::File::create(&target)?;
            io::copy(&mut entry, &mut out)?;
            Ok(())
        };
        match write() {
            Ok(()) => files += 1,
            Err(e) => {
                let err = UnpackError::Io(e);
                if err.is_fatal() {
                    return Err(err);
                }
                diagnostics.push(format!("could not extract {rel:?}: {err}"));
            }
        }
    }
    if files == 0 {
        return Err(UnpackError::Empty);
    }
    let tree = ProjectTree::from_dir(&base)?;
    Ok(UnpackedProject { dir, tree, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::{Compression, GzBuilder};
    use std::io::Write;

    fn id(s: &str) -> SubmissionId {
        s.parse().unwrap()
    }

    fn gz_named(name: Option<&str>, data: &[u8]) -> Vec<u8> {
        let mut b = GzBuilder::new();
        if let Some(n) = name {
            b = b.filename(n);
        }
        let mut enc = b.write(Vec::new(), Compression::fast());
        enc.write_all(data).unwrap();
        enc.finish().unwrap()
    }

    fn tar_of(files: &[(&str, &[u8])]) -> Vec<u8> {
        let mut builder = tar::Builder::new(Vec::new());
        for (path, data) in files {
            let mut h = tar::Header::new_gnu();
            h.set_size(data.len() as u64);
            h.set_mode(0o644);
            h.set_entry_type(tar::EntryType::Regular);
            builder.append_data(&mut h, path, *data).unwrap();
        }
        builder.into_inner().unwrap()
    }

    /// Writes a raw tar header with an arbitrary (possibly hostile) path.
    fn tar_with_raw_path(path: &str, data: &[u8]) -> Vec<u8> {
        let mut h = tar::Header::new_old();
        {
            let bytes = h.as_old_mut();
            bytes.name[..path.len()].copy_from_slice(path.as_bytes());
        }
        h.set_size(data.len() as u64);
        h.set_mode(0o644);
        h.set_entry_type(tar::EntryType::Regular);
        h.set_cksum();
        let mut out = h.as_bytes().to_vec();
        out.extend_from_slice(data);
        out.resize(out.len().div_ceil(512) * 512 + 1024, 0);
        out
    }

    fn entry(name: &str, data: Vec<u8>) -> CorpusEntry {
        CorpusEntry {
            id: SubmissionId::split_filename(name).unwrap().0,
            file_name: name.into(),
            source_chunk: None,
            data,
        }
    }

    #[test]
    fn pdf_only_by_magic() {
        let c = classify_submission(&entry("2501.00008.pdf", b"%PDF-1.5\n...".to_vec()));
        assert_eq!(c.kind, SubmissionKind::PdfOnly);
        let c = classify_submission(&entry("2501.00008.pdf", b"hello".to_vec()));
        assert_eq!(c.kind, SubmissionKind::UnrecognizedType);
    }

    #[test]
    fn withdrawn_marker() {
        let c = classify_submission(&entry(
            "2501.00002.gz",
            gz_named(Some("withdrawn"), b"This paper has been withdrawn by the author.\n"),
        ));
        assert_eq!(c.kind, SubmissionKind::Withdrawn);
    }

    #[test]
    fn single_tex() {
        let src = b"\\documentclass{article}\n\\begin{document}Hi\\end{document}\n";
        let c = classify_submission(&entry("2501.00005.gz", gz_named(Some("2501.00005"), src)));
        assert_eq!(c.kind, SubmissionKind::SingleTex);
        assert!(matches!(c.payload, Payload::SingleTex { ref name, .. } if name == "2501.00005"));
    }

    #[test]
    fn project_blob() {
        let blob = tar_of(&[("main.tex", b"\\documentclass{article}"), ("figs/a.png", b"png")]);
        let c = classify_submission(&entry("2501.00001.gz", gz_named(Some("2501.00001"), &blob)));
        assert_eq!(c.kind, SubmissionKind::ProjectBlob);
        let c = classify_submission(&entry("2501.00001.gz", gz_named(None, &blob)));
        assert_eq!(c.kind, SubmissionKind::ProjectBlob);
        let c = classify_submission(&entry("2501.00001.gz", gz_named(Some("other"), &blob)));
        assert_eq!(c.kind, SubmissionKind::UnrecognizedType);
    }

    #[test]
    fn tex_named_after_id_is_single_tex_not_blob() {
        let c = classify_submission(&entry("2501.00007.gz", gz_named(Some("2501.00007"), b"\\section{x}\n")));
        assert_eq!(c.kind, SubmissionKind::SingleTex);
    }

    #[test]
    fn unrecognized_cases() {
        let c = classify_submission(&entry("2501.00009.gz", b"\x1f\x8bgarbage".to_vec()));
        assert_eq!(c.kind, SubmissionKind::UnrecognizedType);
        assert!(c.note.unwrap().contains("gzip"));

        let c = classify_submission(&entry("2501.00009.gz", gz_named(Some("notes.txt"), b"just words")));
        assert_eq!(c.kind, SubmissionKind::UnrecognizedType);

        let mut two = gz_named(Some("a.tex"), b"\\section{a}");
        two.extend(gz_named(Some("b.tex"), b"\\section{b}"));
        let c = classify_submission(&entry("2501.00009.gz", two));
        assert_eq!(c.kind, SubmissionKind::UnrecognizedType);

        let c = classify_submission(&entry("2501.00009.zip", b"PK\x03\x04".to_vec()));
        assert_eq!(c.kind, SubmissionKind::UnrecognizedType);
    }

    #[test]
    fn old_style_tar_detected_by_checksum() {
        let t = tar_with_raw_path("main.tex", b"x");
        assert_ne!(&t[257..262], b"ustar");
        assert!(is_archive(&t));
        assert!(!is_archive(&[0u8; 1024]));
        assert!(!is_archive(b"\\documentclass"));
    }

    #[test]
    fn unpack_preserves_paths() {
        let work = tempfile::tempdir().unwrap();
        let blob = tar_of(&[("./main.tex", b"m"), ("figs/a.png", b"png")]);
        let p = unpack_blob(&blob, work.path(), id("2501.00001")).unwrap();
        let paths: Vec<_> = p.tree.files().map(|f| f.relative_path.clone()).collect();
        assert_eq!(paths, ["figs/a.png", "main.tex"]);
        let dir = p.dir.path().to_path_buf();
        assert!(dir.starts_with(work.path()));
        drop(p);
        assert!(!dir.exists(), "temporary directory removed on drop");
    }

    #[test]
    fn unpack_rejects_traversal() {
        let work = tempfile::tempdir().unwrap();
        let inner = work.path().join("inner");
        let blob = tar_with_raw_path("../evil", b"pwned");
        let err = unpack_blob(&blob, &inner, id("2501.00001")).unwrap_err();
        assert!(matches!(err, UnpackError::Traversal(_)));
        assert!(!work.path().join("evil").exists());
        let leftover: Vec<_> = walkdir::WalkDir::new(work.path())
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .collect();
        assert!(leftover.is_empty());

        let blob = tar_with_raw_path("/abs/path", b"x");
        assert!(matches!(
            unpack_blob(&blob, &inner, id("2501.00001")),
            Err(UnpackError::Traversal(_))
        ));
    }

    #[test]
    fn unpack_deep_nesting() {
        let work = tempfile::tempdir().unwrap();
        let blob = tar_of(&[
            ("a/b/c/d/e/deep.tex", b"1"),
            ("a/b/c/d/e2.png", b"2"),
            ("a/x.sty", b"3"),
            ("top.tex", b"4"),
        ]);
        let p = unpack_blob(&blob, work.path(), id("2501.00001")).unwrap();
        assert_eq!(p.tree.len(), 4);
        assert!(p.tree.contains("a/b/c/d/e/deep.tex"));
    }

    #[test]
    fn unpack_skips_links_and_rejects_empty() {
        let work = tempfile::tempdir().unwrap();
        let mut builder = tar::Builder::new(Vec::new());
        let mut h = tar::Header::new_gnu();
        h.set_entry_type(tar::EntryType::Symlink);
        h.set_size(0);
        builder.append_link(&mut h, "link", "/etc/passwd").unwrap();
        let blob = builder.into_inner().unwrap();
        assert!(matches!(
            unpack_blob(&blob, work.path(), id("2501.00001")),
            Err(UnpackError::Empty)
        ));
    }

    fn write_tar(path: &Path, members: &[(&str, Vec<u8>)]) {
        let file = fs::File::create(path).unwrap();
        let mut builder = tar::Builder::new(file);
        for (name, data) in members {
            let mut h = tar::Header::new_gnu();
            h.set_size(data.len() as u64);
            h.set_mode(0o644);
            builder.append_data(&mut h, name, &data[..]).unwrap();
        }
        builder.finish().unwrap();
    }

    fn entries_of(events: &[ScanEvent]) -> Vec<String> {
        events
            .iter()
            .filter_map(|e| match e {
                ScanEvent::Entry(c) => Some(c.file_name.clone()),
                ScanEvent::Error(_) => None,
            })
            .collect()
    }

    #[test]
    fn scans_loose_files_in_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("2501.00008.pdf"), b"%PDF").unwrap();
        fs::write(dir.path().join("2501.00001.gz"), gz_named(None, b"x")).unwrap();
        let events: Vec<_> = scan_corpus(dir.path()).unwrap().collect();
        assert_eq!(entries_of(&events), ["2501.00001.gz", "2501.00008.pdf"]);
    }

    #[test]
    fn empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(scan_corpus(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn unreadable_corpus_is_fatal() {
        assert!(scan_corpus(Path::new("/nonexistent/corpus")).is_err());
    }

    #[test]
    fn chunk_members_sorted_and_foreign_files_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_tar(
            &dir.path().join("arXiv_src_2501_001.tar"),
            &[
                ("2501/2501.00003.gz", gz_named(None, b"x")),
                ("2501/2501.00002.pdf", b"%PDF".to_vec()),
                ("2501/README", b"hello".to_vec()),
            ],
        );
        fs::write(dir.path().join("notes.txt"), b"?").unwrap();
        let events: Vec<_> = scan_corpus(dir.path()).unwrap().collect();
        assert_eq!(entries_of(&events), ["2501.00002.pdf", "2501.00003.gz"]);
        let errors = events.iter().filter(|e| matches!(e, ScanEvent::Error(_))).count();
        assert_eq!(errors, 2);
        if let ScanEvent::Entry(e) = &events[0] {
            assert_eq!(e.source_chunk.as_deref(), Some("arXiv_src_2501_001.tar"));
        }
    }

    #[test]
    fn truncated_chunk_yields_remaining_members_and_one_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chunk.tar");
        let big: Vec<u8> = (0..5000u32).map(|i| (i % 251) as u8).collect();
        write_tar(
            &path,
            &[
                ("2501.00001.gz", gz_named(None, b"a")),
                ("2501.00002.gz", gz_named(None, b"b")),
                ("2501.00003.pdf", big),
            ],
        );
        let bytes = fs::read(&path).unwrap();
        // Cut the file in the middle of the third member's data.
        let third_data_start = bytes.windows(14).position(|w| w == b"2501.00003.pdf").unwrap() + 512;
        fs::write(&path, &bytes[..third_data_start + 1000]).unwrap();
        let events: Vec<_> = scan_corpus(dir.path()).unwrap().collect();
        assert_eq!(entries_of(&events), ["2501.00001.gz", "2501.00002.gz"]);
        let errors: Vec<_> = events
            .iter()
            .filter_map(|e| match e {
                ScanEvent::Error(se) => Some(se),
                _ => None,
            })
            .collect();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].message.contains("truncated"), "{}", errors[0].message);
    }

    #[test]
    fn corrupt_chunk_is_skipped_with_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.tar"), vec![0xab; 2048]).unwrap();
        fs::write(dir.path().join("2501.00004.pdf"), b"%PDF").unwrap();
        let events: Vec<_> = scan_corpus(dir.path()).unwrap().collect();
        assert_eq!(entries_of(&events), ["2501.00004.pdf"]);
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn gz_encoder_default_has_no_name() {
        let mut enc = GzEncoder::new(Vec::new(), Compression::fast());
        enc.write_all(b"\\section{x}").unwrap();
        let c = classify_submission(&entry("2501.00011.gz", enc.finish().unwrap()));
        assert_eq!(c.kind, SubmissionKind::SingleTex);
    }
}
