//! Per-submission analysis reports, their on-disk form, and the cleaned
//! project export.
//!
//! Reports are pretty-printed JSON files named after the submission ID.
//! Comments documents live next to them in `comments/<ID>.txt`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comments::CommentsDocument;
use crate::filetype::TypeGroup;
use crate::graph::RootHeuristic;
use crate::id::SubmissionId;
use crate::ingest::SubmissionKind;
use crate::project::ProjectTree;
use crate::stats::{compute_stats, ProjectStats};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const COMMENTS_DIR: &str = "comments";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    UnclearRoot,
    UnclearType,
    Withdrawn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub path: String,
    pub bytes: u64,
    pub group: TypeGroup,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DanglingReference {
    pub from: String,
    pub command: String,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub submission: SubmissionId,
    pub kind: SubmissionKind,
    #[serde(default)]
    pub source_chunk: Option<String>,
    pub compressed_size: u64,
    #[serde(default)]
    pub root: Option<String>,
    #[serde(default)]
    pub root_heuristic: Option<RootHeuristic>,
    #[serde(default)]
    pub candidates: Vec<String>,
    #[serde(default)]
    pub exclusion_reason: Option<ExclusionReason>,
    #[serde(default)]
    pub used: Vec<FileRecord>,
    #[serde(default)]
    pub residual: Vec<ResidualRecord>,
    #[serde(default)]
    pub anc: Vec<FileRecord>,
    #[serde(default)]
    pub comment_bytes: u64,
    /// Macros wrapping reference commands; their targets may be residual
    /// by mistake.
    #[serde(default)]
    pub alias_macros: Vec<String>,
    #[serde(default)]
    pub dangling_references: Vec<DanglingReference>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl AnalysisReport {
    /// A report with only the identifying fields filled in.
    pub fn new(submission: SubmissionId, kind: SubmissionKind, compressed_size: u64) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            submission,
            kind,
            source_chunk: None,
            compressed_size,
            root: None,
            root_heuristic: None,
            candidates: Vec::new(),
            exclusion_reason: None,
            used: Vec::new(),
            residual: Vec::new(),
            anc: Vec::new(),
            comment_bytes: 0,
            alias_macros: Vec::new(),
            dangling_references: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// TeX submissions that were analyzed rather than excluded.
    pub fn is_valid_project(&self) -> bool {
        matches!(self.kind, SubmissionKind::SingleTex | SubmissionKind::ProjectBlob) && self.exclusion_reason.is_none()
    }

    pub fn stats(&self) -> Option<ProjectStats> {
        if !self.is_valid_project() {
            return None;
        }
        Some(compute_stats(
            self.submission,
            self.used.iter().map(|f| f.bytes),
            self.residual.iter().map(|r| (r.path.as_str(), r.bytes, r.group)),
            self.anc.iter().map(|f| f.bytes).sum(),
            self.comment_bytes,
        ))
    }

    /// Checks the structural invariants; returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let excluded_kind = match self.kind {
            SubmissionKind::Withdrawn => Some(ExclusionReason::Withdrawn),
            SubmissionKind::UnrecognizedType => Some(ExclusionReason::UnclearType),
            _ => None,
        };
        match (self.kind, excluded_kind, self.exclusion_reason) {
            (_, Some(want), got) if got != Some(want) => {
                return Err(format!("{:?} needs exclusion {want:?}, found {got:?}", self.kind));
            }
            (SubmissionKind::PdfOnly, _, Some(r)) => return Err(format!("pdf-only report excluded as {r:?}")),
            _ => {}
        }
        if self.exclusion_reason.is_none() && self.is_valid_project() && self.root.is_none() {
            return Err("valid project without root".into());
        }
        let used: std::collections::HashSet<&str> = self.used.iter().map(|f| f.path.as_str()).collect();
        if let Some(r) = self.residual.iter().find(|r| used.contains(r.path.as_str())) {
            return Err(format!("{} is both used and residual", r.path));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn report_path(report_dir: &Path, id: SubmissionId) -> PathBuf {
    report_dir.join(id.to_string())
}

pub fn comments_path(report_dir: &Path, id: SubmissionId) -> PathBuf {
    report_dir.join(COMMENTS_DIR).join(format!("{id}.txt"))
}

pub fn report_exists(report_dir: &Path, id: SubmissionId) -> bool {
    report_path(report_dir, id).is_file()
}

/// Name prefix of files being written; any left over were cut short.
pub const PARTIAL_PREFIX: &str = ".partial-";

/// Deletes files left by interrupted writes in the report directory and
/// its comments directory. Returns how many were removed.
pub fn remove_partial_files(report_dir: &Path) -> io::Result<usize> {
    let mut removed = 0;
    for dir in [report_dir.to_path_buf(), report_dir.join(COMMENTS_DIR)] {
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
            Err(e) => return Err(e),
        };
        for entry in entries {
            let entry = entry?;
            if entry.file_name().to_string_lossy().starts_with(PARTIAL_PREFIX) && entry.file_type()?.is_file() {
                fs::remove_file(entry.path())?;
                removed += 1;
            }
        }
    }
    Ok(removed)
}

/// Writes `bytes` to `target` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let dir = target.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(PARTIAL_PREFIX)
        .tempfile_in(dir)
        .map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(target))?;
    tmp.as_file().sync_all().map_err(io_err(target))?;
    tmp.persist(target).map_err(|e| ReportError::Io {
        path: target.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_report(report: &AnalysisReport, report_dir: &Path) -> Result<PathBuf, ReportError> {
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    let path = report_path(report_dir, report.submission);
    write_atomic(&path, &json)?;
    Ok(path)
}

pub fn write_comments(doc: &CommentsDocument, report_dir: &Path, id: SubmissionId) -> Result<PathBuf, ReportError> {
    let path = comments_path(report_dir, id);
    write_atomic(&path, doc.render().as_bytes())?;
    Ok(path)
}

/// A report file that could not be read back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptReport {
    pub path: PathBuf,
    pub reason: String,
}

pub fn read_report(path: &Path) -> Result<AnalysisReport, CorruptReport> {
    let corrupt = |reason: String| CorruptReport {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = fs::read(path).map_err(|e| corrupt(e.to_string()))?;
    let report: AnalysisReport = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(corrupt(format!("schema version {}", report.schema_version)));
    }
    Ok(report)
}

/// Iterates the reports of a directory in ID order. Files whose name is
/// not a submission ID (temporaries, the comments directory) are ignored.
pub fn read_reports(report_dir: &Path) -> io::Result<impl Iterator<Item = Result<AnalysisReport, CorruptReport>>> {
    let mut paths = Vec::new();
    if report_dir.exists() {
        for entry in fs::read_dir(report_dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if name.parse::<SubmissionId>().is_ok() && entry.file_type()?.is_file() {
                paths.push(entry.path());
            }
        }
    }
    paths.sort();
    Ok(paths.into_iter().map(|p| read_report(&p)))
}

/// Loads the comments document of one submission; a missing file means the
/// submission had no comments.
pub fn read_comments(report_dir: &Path, id: SubmissionId) -> io::Result<Option<String>> {
    match fs::read_to_string(comments_path(report_dir, id)) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{0} already exists and is not empty (use force to replace it)")]
    Collision(PathBuf),
    #[error("{path} is not part of the project")]
    MissingFile { path: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Copies the used files (and, optionally, the anc files) of a project to
/// `out_dir`, keeping relative paths. With `force` an existing `out_dir`
/// is deleted first.
pub fn export_cleaned_project(
    project: &ProjectTree,
    report: &AnalysisReport,
    out_dir: &Path,
    include_anc: bool,
    force: bool,
) -> Result<Vec<String>, ExportError> {
    let occupied = out_dir.exists() && fs::read_dir(out_dir)?.next().is_some();
    if occupied {
        if !force {
            return Err(ExportError::Collision(out_dir.to_path_buf()));
        }
        fs::remove_dir_all(out_dir)?;
    }
    fs::create_dir_all(out_dir)?;
    let mut files: Vec<&str> = report.used.iter().map(|f| f.path.as_str()).collect();
    if include_anc {
        files.extend(report.anc.iter().map(|f| f.path.as_str()));
    }
    files.sort_unstable();
    let mut written = Vec::with_capacity(files.len());
    for path in files {
        let bytes = project.read(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => ExportError::MissingFile { path: path.to_string() },
            _ => ExportError::Io(e),
        })?;
        let target = out_dir.join(path);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, bytes)?;
        written.push(path.to_string());
    }
    Ok(written)
}
