//! End-to-end runs: scan a corpus into per-submission reports, aggregate
//! them, search them for keywords, and export cleaned projects.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::aggregate::{write_corpus_outputs, CorpusReport, KindCounts};
use crate::analyze::{analyze_entry, single_tex_name};
use crate::comments::CommentsDocument;
use crate::id::SubmissionId;
use crate::ingest::{classify_submission, scan_corpus, unpack_blob, CorpusEntry, Payload, ScanEvent, UnpackError};
use crate::keywords::{
    dedup_per_project, render_bracket_summary, render_hits_tsv, render_summary_tsv, scan_residual_filenames,
    CommentScanner, KeywordConfig, KeywordHit, KeywordTally, TermSummary,
};
use crate::metadata::{load_category_metadata, MetadataStats};
use crate::patterns::{ConfigError, PatternConfig};
use crate::project::ProjectTree;
use crate::report::{
    export_cleaned_project, read_comments, read_report, read_reports, remove_partial_files, report_exists, report_path,
    write_atomic, write_comments, write_report, AnalysisReport, ExportError, ReportError,
};

/// Environment variable naming the default scratch directory.
pub const SCRATCH_ENV: &str = "RESIDUE_SCRATCH_DIR";
pub const RUN_LOG_FILE: &str = "run_log.jsonl";

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("cannot read corpus {path}: {source}")]
    Corpus { path: String, source: io::Error },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("submission {id}: {source}")]
    Unpack { id: SubmissionId, source: UnpackError },
    #[error("no report for submission {0}")]
    UnknownSubmission(SubmissionId),
    #[error("submission {0} is not an analyzed TeX project")]
    NotAProject(SubmissionId),
    #[error("submission {0} not found in the corpus")]
    MissingFromCorpus(SubmissionId),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("invalid run configuration: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl DriverError {
    /// Configuration mistakes, as opposed to failures during a run.
    pub fn is_usage(&self) -> bool {
        matches!(self, DriverError::Usage(_) | DriverError::Config(_))
    }
}

/// Year and month restrictions on submission IDs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeriodFilter {
    /// Two-digit years; empty means all.
    pub years: BTreeSet<u8>,
    pub months: BTreeSet<u8>,
}

fn parse_list(spec: &str, what: &str, parse_one: impl Fn(&str) -> Option<u8>) -> Result<BTreeSet<u8>, String> {
    let mut out = BTreeSet::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("invalid {what} {part:?}");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (
                    parse_one(a.trim()).ok_or_else(bad)?,
                    parse_one(b.trim()).ok_or_else(bad)?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(parse_one(part).ok_or_else(bad)?);
            }
        }
    }
    Ok(out)
}

impl PeriodFilter {
    /// Accepts lists and ranges of two- or four-digit years: `2015-2025`, `24,25`.
    pub fn parse_years(spec: &str) -> Result<BTreeSet<u8>, String> {
        parse_list(spec, "year", |s| {
            let n: u16 = s.parse().ok()?;
            match s.len() {
                2 => u8::try_from(n).ok(),
                4 if (2000..2100).contains(&n) => u8::try_from(n - 2000).ok(),
                _ => None,
            }
        })
    }

    /// Accepts lists and ranges of months: `1-4`, `1,2,12`.
    pub fn parse_months(spec: &str) -> Result<BTreeSet<u8>, String> {
        parse_list(spec, "month", |s| s.parse::<u8>().ok().filter(|m| (1..=12).contains(m)))
    }

    pub fn matches(&self, id: SubmissionId) -> bool {
        (self.years.is_empty() || self.years.contains(&id.year()))
            && (self.months.is_empty() || self.months.contains(&id.month()))
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub corpus_dir: PathBuf,
    pub report_dir: PathBuf,
    pub scratch_dir: PathBuf,
    pub workers: usize,
    pub resume: bool,
    pub filter: PeriodFilter,
    pub patterns: PatternConfig,
    /// Submissions between progress lines.
    pub progress_every: u64,
}

impl ScanConfig {
    pub fn new(corpus_dir: PathBuf, report_dir: PathBuf, scratch_dir: PathBuf) -> Self {
        Self {
            corpus_dir,
            report_dir,
            scratch_dir,
            workers: 1,
            resume: false,
            filter: PeriodFilter::default(),
            patterns: PatternConfig::default(),
            progress_every: 1000,
        }
    }
}

/// Scratch directory used when none is given: `$RESIDUE_SCRATCH_DIR`, or a
/// directory under the system temporary directory.
pub fn default_scratch_dir() -> PathBuf {
    std::env::var_os(SCRATCH_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("residue-scratch"))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScanSummary {
    /// Outcome counts over every selected submission, including those
    /// already reported by an earlier run.
    pub kinds: KindCounts,
    pub analyzed: u64,
    pub resumed: u64,
    pub filtered_out: u64,
    pub scan_errors: u64,
    pub elapsed_secs: f64,
}

impl ScanSummary {
    pub fn rate(&self) -> f64 {
        if self.elapsed_secs > 0.0 {
            self.analyzed as f64 / self.elapsed_secs
        } else {
            0.0
        }
    }
}

pub fn render_scan_summary(s: &ScanSummary) -> String {
    let k = &s.kinds;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Submissions\tValid TeX Projects\tPDF-only\tWithdrawn\tUnclear Root\tUnclear Type"
    );
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}",
        k.submissions, k.valid_projects, k.pdf_only, k.withdrawn, k.unclear_root, k.unclear_type
    );
    let _ = writeln!(
        out,
        "analyzed {} (resumed {}, filtered {}, unreadable corpus entries {}) in {:.1}s, {:.2} submissions/s",
        s.analyzed,
        s.resumed,
        s.filtered_out,
        s.scan_errors,
        s.elapsed_secs,
        s.rate()
    );
    out
}

#[derive(Serialize)]
struct LogLine<'a> {
    event: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    submission: Option<SubmissionId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<crate::ingest::SubmissionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exclusion: Option<crate::report::ExclusionReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    millis: Option<u128>,
}

struct RunLog(Mutex<BufWriter<File>>);

impl RunLog {
    fn open(path: &Path) -> io::Result<Self> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self(Mutex::new(BufWriter::new(f))))
    }

    fn write(&self, line: &LogLine<'_>) {
        let Ok(json) = serde_json::to_string(line) else { return };
        let mut w = self.0.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = writeln!(w, "{json}").and_then(|_| w.flush()) {
            log::warn!("run log write failed: {e}");
        }
    }
}

fn same_or_nested(a: &Path, b: &Path) -> bool {
    a.starts_with(b) || b.starts_with(a)
}

fn check_dirs(cfg: &ScanConfig) -> Result<(PathBuf, PathBuf, PathBuf), DriverError> {
    if cfg.workers == 0 {
        return Err(DriverError::Usage("worker count must be at least 1".into()));
    }
    let corpus = fs::canonicalize(&cfg.corpus_dir).map_err(|source| DriverError::Corpus {
        path: cfg.corpus_dir.display().to_string(),
        source,
    })?;
    fs::create_dir_all(&cfg.report_dir)?;
    fs::create_dir_all(&cfg.scratch_dir)?;
    let reports = fs::canonicalize(&cfg.report_dir)?;
    let scratch = fs::canonicalize(&cfg.scratch_dir)?;
    for (a, b, what) in [
        (&corpus, &reports, "corpus and report"),
        (&corpus, &scratch, "corpus and scratch"),
        (&reports, &scratch, "report and scratch"),
    ] {
        if same_or_nested(a, b) {
            return Err(DriverError::Usage(format!(
                "{what} directories must be distinct and not nested"
            )));
        }
    }
    Ok((corpus, reports, scratch))
}

/// Removes `worker-*` directories an interrupted run left in scratch. The
/// scratch directory must not be shared by concurrent scans.
fn clear_worker_scratch(scratch: &Path) -> io::Result<()> {
    for entry in fs::read_dir(scratch)? {
        let entry = entry?;
        if entry.file_name().to_string_lossy().starts_with("worker-") && entry.file_type()?.is_dir() {
            fs::remove_dir_all(entry.path())?;
        }
    }
    Ok(())
}

/// Analyzes every selected submission of the corpus, writing one report
/// (and, for projects with comments, one comments document) per
/// submission. Reports are written after their comments document, so an
/// existing report marks a finished submission for `resume`.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanSummary, DriverError> {
    let (corpus, report_dir, scratch) = check_dirs(cfg)?;
    let start = Instant::now();
    let scanner = scan_corpus(&corpus).map_err(|source| DriverError::Corpus {
        path: corpus.display().to_string(),
        source,
    })?;
    let stale = remove_partial_files(&report_dir)?;
    if stale > 0 {
        log::info!("removed {stale} partially written files from an earlier run");
    }
    clear_worker_scratch(&scratch)?;
    let run_log = RunLog::open(&report_dir.join(RUN_LOG_FILE))?;
    run_log.write(&LogLine {
        event: "start",
        submission: None,
        kind: None,
        exclusion: None,
        message: Some(&format!("workers={} resume={}", cfg.workers, cfg.resume)),
        millis: None,
    });

    let kinds = Mutex::new(KindCounts::default());
    let analyzed = AtomicU64::new(0);
    let resumed = AtomicU64::new(0);
    let filtered = AtomicU64::new(0);
    let errors = AtomicU64::new(0);
    let processed = AtomicU64::new(0);
    let every = cfg.progress_every.max(1);

    let tick = || {
        let n = processed.fetch_add(1, Ordering::Relaxed) + 1;
        if n.is_multiple_of(every) {
            let secs = start.elapsed().as_secs_f64();
            log::info!(
                "processed {n} submissions in {secs:.1}s ({:.2}/s)",
                n as f64 / secs.max(1e-9)
            );
        }
    };

    let handle = |event: ScanEvent| -> Result<(), DriverError> {
        let entry = match event {
            ScanEvent::Error(e) => {
                errors.fetch_add(1, Ordering::Relaxed);
                log::warn!("{}: {}", e.path, e.message);
                run_log.write(&LogLine {
                    event: "corpus_error",
                    submission: None,
                    kind: None,
                    exclusion: None,
                    message: Some(&format!("{}: {}", e.path, e.message)),
                    millis: None,
                });
                return Ok(());
            }
            ScanEvent::Entry(e) => e,
        };
        if !cfg.filter.matches(entry.id) {
            filtered.fetch_add(1, Ordering::Relaxed);
            return Ok(());
        }
        if cfg.resume && report_exists(&report_dir, entry.id) {
            if let Ok(r) = read_report(&report_path(&report_dir, entry.id)) {
                kinds.lock().unwrap().record(&r);
                resumed.fetch_add(1, Ordering::Relaxed);
                tick();
                return Ok(());
            }
            log::warn!("{}: unreadable report, analyzing again", entry.id);
        }
        let t0 = Instant::now();
        let worker_scratch = scratch.join(format!("worker-{}", rayon::current_thread_index().unwrap_or(0)));
        let analysis = analyze_entry(&entry, &cfg.patterns, &worker_scratch)
            .map_err(|source| DriverError::Unpack { id: entry.id, source })?;
        if !analysis.comments.is_empty() {
            write_comments(&analysis.comments, &report_dir, entry.id)?;
        }
        write_report(&analysis.report, &report_dir)?;
        kinds.lock().unwrap().record(&analysis.report);
        analyzed.fetch_add(1, Ordering::Relaxed);
        run_log.write(&LogLine {
            event: "analyzed",
            submission: Some(entry.id),
            kind: Some(analysis.report.kind),
            exclusion: analysis.report.exclusion_reason,
            message: None,
            millis: Some(t0.elapsed().as_millis()),
        });
        tick();
        Ok(())
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| DriverError::Usage(format!("cannot start workers: {e}")))?;
    let result = if cfg.workers == 1 {
        // Keep the single-worker path strictly sequential.
        pool.install(|| scanner.into_iter().try_for_each(handle))
    } else {
        pool.install(|| scanner.par_bridge().try_for_each(handle))
    };
    if let Err(e) = &result {
        run_log.write(&LogLine {
            event: "fatal",
            submission: None,
            kind: None,
            exclusion: None,
            message: Some(&e.to_string()),
            millis: None,
        });
    }
    result?;

    let summary = ScanSummary {
        kinds: kinds.into_inner().unwrap(),
        analyzed: analyzed.into_inner(),
        resumed: resumed.into_inner(),
        filtered_out: filtered.into_inner(),
        scan_errors: errors.into_inner(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    run_log.write(&LogLine {
        event: "finish",
        submission: None,
        kind: None,
        exclusion: None,
        message: Some(&format!("analyzed={} resumed={}", summary.analyzed, summary.resumed)),
        millis: Some(start.elapsed().as_millis()),
    });
    Ok(summary)
}

#[derive(Debug, Clone, Default)]
pub struct AggregateOutcome {
    pub report: CorpusReport,
    pub written: Vec<PathBuf>,
    pub metadata: Option<MetadataStats>,
}

/// Reads every report in `report_dir` and writes the corpus tables.
pub fn run_aggregate(
    report_dir: &Path,
    out_dir: &Path,
    metadata: Option<&Path>,
) -> Result<AggregateOutcome, DriverError> {
    let (categories, meta_stats) = match metadata {
        Some(path) => {
            let f = File::open(path).map_err(|source| ConfigError::Read {
                path: path.display().to_string(),
                source,
            })?;
            let (map, stats) = load_category_metadata(BufReader::new(f));
            if stats.malformed_lines > 0 {
                log::warn!("{}: skipped {} malformed lines", path.display(), stats.malformed_lines);
            }
            (Some(map), Some(stats))
        }
        None => (None, None),
    };
    let mut corpus = CorpusReport {
        with_categories: categories.is_some(),
        ..CorpusReport::default()
    };
    let mut count = 0u64;
    for item in read_reports(report_dir)? {
        match item {
            Ok(r) => {
                corpus.add_report(&r, categories.as_ref());
                count += 1;
            }
            Err(bad) => {
                log::warn!("skipping {}: {}", bad.path.display(), bad.reason);
                corpus.unreadable_reports += 1;
            }
        }
    }
    if count == 0 {
        log::warn!("no reports found in {}; writing empty tables", report_dir.display());
    }
    let written = write_corpus_outputs(&corpus, out_dir)?;
    Ok(AggregateOutcome {
        report: corpus,
        written,
        metadata: meta_stats,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Keep one hit per (project, term) in the hit tables.
    pub dedup: bool,
    pub word_boundary: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SearchOutcome {
    pub comment_hits: Vec<KeywordHit>,
    pub filename_hits: Vec<KeywordHit>,
    pub summary: Vec<TermSummary>,
    pub written: Vec<PathBuf>,
    pub unreadable: u64,
}

pub const COMMENT_HITS_FILE: &str = "comment_hits.tsv";
pub const FILENAME_HITS_FILE: &str = "filename_hits.tsv";
pub const KEYWORD_SUMMARY_FILE: &str = "keyword_summary.tsv";
pub const KEYWORD_BRACKETS_FILE: &str = "keyword_summary.txt";

/// Runs the comment and residual file-name searches over analyzed projects.
pub fn run_search(
    report_dir: &Path,
    out_dir: &Path,
    keywords: &KeywordConfig,
    opts: SearchOptions,
) -> Result<SearchOutcome, DriverError> {
    let scanner = CommentScanner::new(keywords, opts.word_boundary);
    let mut out = SearchOutcome::default();
    let mut tally = KeywordTally::default();
    for item in read_reports(report_dir)? {
        let report = match item {
            Ok(r) => r,
            Err(bad) => {
                log::warn!("skipping {}: {}", bad.path.display(), bad.reason);
                out.unreadable += 1;
                continue;
            }
        };
        if !report.is_valid_project() {
            continue;
        }
        if let Some(text) = read_comments(report_dir, report.submission)? {
            match CommentsDocument::parse(&text) {
                Ok(doc) => {
                    let hits = scanner.scan(report.submission, &doc);
                    tally.add_hits(&hits);
                    out.comment_hits.extend(hits);
                }
                Err(e) => {
                    log::warn!("{}: comments document unreadable: {e}", report.submission);
                    out.unreadable += 1;
                }
            }
        }
        let hits = scan_residual_filenames(
            report.submission,
            report.residual.iter().map(|r| r.path.as_str()),
            keywords,
        );
        tally.add_hits(&hits);
        out.filename_hits.extend(hits);
    }
    if opts.dedup {
        out.comment_hits = dedup_per_project(std::mem::take(&mut out.comment_hits));
        out.filename_hits = dedup_per_project(std::mem::take(&mut out.filename_hits));
    }
    out.summary = tally.summary(keywords);
    for (name, body) in [
        (COMMENT_HITS_FILE, render_hits_tsv(&out.comment_hits)),
        (FILENAME_HITS_FILE, render_hits_tsv(&out.filename_hits)),
        (KEYWORD_SUMMARY_FILE, render_summary_tsv(&out.summary)),
        (KEYWORD_BRACKETS_FILE, render_bracket_summary(&out.summary)),
    ] {
        let path = out_dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        out.written.push(path);
    }
    Ok(out)
}

fn find_entry(corpus_dir: &Path, id: SubmissionId) -> Result<CorpusEntry, DriverError> {
    let scanner = scan_corpus(corpus_dir).map_err(|source| DriverError::Corpus {
        path: corpus_dir.display().to_string(),
        source,
    })?;
    scanner
        .filter_map(|ev| match ev {
            ScanEvent::Entry(e) if e.id == id => Some(e),
            _ => None,
        })
        .next()
        .ok_or(DriverError::MissingFromCorpus(id))
}

#[derive(Debug, Clone)]
pub struct CleanRequest {
    pub corpus_dir: PathBuf,
    pub report_dir: PathBuf,
    pub scratch_dir: PathBuf,
    pub submission: SubmissionId,
    pub out_dir: PathBuf,
    pub include_anc: bool,
    pub force: bool,
}

/// Re-extracts an analyzed project and copies its used files to `out_dir`.
pub fn run_clean(req: &CleanRequest) -> Result<Vec<String>, DriverError> {
    let path = report_path(&req.report_dir, req.submission);
    if !path.is_file() {
        return Err(DriverError::UnknownSubmission(req.submission));
    }
    let report: AnalysisReport = read_report(&path).map_err(|bad| {
        DriverError::Io(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: {}", bad.path.display(), bad.reason),
        ))
    })?;
    if !report.is_valid_project() {
        return Err(DriverError::NotAProject(req.submission));
    }
    let entry = find_entry(&req.corpus_dir, req.submission)?;
    let class = classify_submission(&entry);
    match class.payload {
        Payload::SingleTex { name, bytes } => {
            let (tree, _) = ProjectTree::from_memory([(single_tex_name(&name), bytes)]);
            Ok(export_cleaned_project(
                &tree,
                &report,
                &req.out_dir,
                req.include_anc,
                req.force,
            )?)
        }
        Payload::Blob(blob) => {
            let unpacked =
                unpack_blob(&blob, &req.scratch_dir, req.submission).map_err(|source| DriverError::Unpack {
                    id: req.submission,
                    source,
                })?;
            Ok(export_cleaned_project(
                &unpacked.tree,
                &report,
                &req.out_dir,
                req.include_anc,
                req.force,
            )?)
        }
        Payload::None => Err(DriverError::NotAProject(req.submission)),
    }
}

/// Index of reports by ID, for callers that join other data.
pub fn load_reports(report_dir: &Path) -> Result<(HashMap<SubmissionId, AnalysisReport>, u64), DriverError> {
    let mut map = HashMap::new();
    let mut bad = 0;
    for item in read_reports(report_dir)? {
        match item {
            Ok(r) => {
                map.insert(r.submission, r);
            }
            Err(_) => bad += 1,
        }
    }
    Ok((map, bad))
}
