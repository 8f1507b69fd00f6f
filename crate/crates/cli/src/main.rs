use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use residue_core::driver::{self, CleanRequest, DriverError, PeriodFilter, ScanConfig, SearchOptions, SCRATCH_ENV};
use residue_core::id::SubmissionId;
use residue_core::keywords::KeywordConfig;
use residue_core::patterns::PatternConfig;

/// Finds files and comments left behind in LaTeX source submissions.
#[derive(Parser)]
#[command(name = "residue", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze every submission in a corpus and write one report per submission.
    Scan(ScanArgs),
    /// Roll reports up into per-month, per-year and total tables.
    Aggregate(AggregateArgs),
    /// Search comments and residual file names for keywords.
    Search(SearchArgs),
    /// Export the used files of one analyzed project.
    Clean(CleanArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// Directory of submission files or chunk archives.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for reports.
    #[arg(long)]
    reports: PathBuf,
    /// Scratch directory for unpacking.
    #[arg(long, env = SCRATCH_ENV)]
    scratch: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Pattern configuration (TOML); the built-in table is used when omitted.
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Skip submissions that already have a report.
    #[arg(long)]
    resume: bool,
    /// Years to include, e.g. `2015-2025` or `24,25`.
    #[arg(long)]
    years: Option<String>,
    /// Months to include, e.g. `1-4`.
    #[arg(long)]
    months: Option<String>,
    /// Submissions between progress lines.
    #[arg(long, default_value_t = 1000)]
    progress_every: u64,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long)]
    reports: PathBuf,
    /// Category metadata, one JSON record per line.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Output directory; defaults to `<reports>/tables`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    reports: PathBuf,
    /// Keyword configuration (TOML); the built-in lists are used when omitted.
    #[arg(long)]
    keywords: Option<PathBuf>,
    /// Keep one hit per project and term in the hit tables.
    #[arg(long)]
    dedup: bool,
    /// Match whole words only.
    #[arg(long)]
    word_boundary: bool,
    /// Output directory; defaults to `<reports>/search`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, env = SCRATCH_ENV)]
    scratch: Option<PathBuf>,
    /// Submission ID, e.g. 2501.00042.
    #[arg(long)]
    id: SubmissionId,
    #[arg(long)]
    out: PathBuf,
    /// Also copy the `anc/` directory.
    #[arg(long)]
    include_anc: bool,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Fatal(anyhow::Error),
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.into())
        } else {
            Failure::Fatal(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Fatal(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg.into()))
}

fn scan(a: ScanArgs) -> Result<(), Failure> {
    if a.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let scratch = a.scratch.unwrap_or_else(driver::default_scratch_dir);
    let mut cfg = ScanConfig::new(a.corpus, a.reports, scratch);
    cfg.workers = a.workers;
    cfg.resume = a.resume;
    cfg.progress_every = a.progress_every;
    if let Some(p) = a.patterns {
        cfg.patterns = PatternConfig::from_file(&p).map_err(DriverError::from)?;
    }
    let mut filter = PeriodFilter::default();
    if let Some(y) = a.years {
        filter.years = PeriodFilter::parse_years(&y).map_err(usage)?;
    }
    if let Some(m) = a.months {
        filter.months = PeriodFilter::parse_months(&m).map_err(usage)?;
    }
    cfg.filter = filter;
    let summary = driver::run_scan(&cfg)?;
    print!("{}", driver::render_scan_summary(&summary));
    Ok(())
}

fn ensure_dir(p: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("cannot create {}", p.display()))
}

fn aggregate(a: AggregateArgs) -> Result<(), Failure> {
    let out = a.out.unwrap_or_else(|| a.reports.join("tables"));
    ensure_dir(&out)?;
    let outcome = driver::run_aggregate(&a.reports, &out, a.metadata.as_deref())?;
    if let Some(m) = outcome.metadata {
        println!(
            "metadata: {} records, {} malformed lines, {} unknown category codes",
            m.records, m.malformed_lines, m.unknown_codes
        );
    }
    for p in outcome.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn search(a: SearchArgs) -> Result<(), Failure> {
    let keywords = match &a.keywords {
        Some(p) if p.is_file() => KeywordConfig::from_file(p).map_err(DriverError::from)?,
        Some(p) => {
            eprintln!("notice: {} not found, using built-in keyword lists", p.display());
            KeywordConfig::default()
        }
        None => KeywordConfig::default(),
    };
    let out = a.out.unwrap_or_else(|| a.reports.join("search"));
    ensure_dir(&out)?;
    let opts = SearchOptions {
        dedup: a.dedup,
        word_boundary: a.word_boundary,
    };
    let outcome = driver::run_search(&a.reports, &out, &keywords, opts)?;
    println!(
        "{} comment hits, {} file-name hits",
        outcome.comment_hits.len(),
        outcome.filename_hits.len()
    );
    if outcome.unreadable > 0 {
        println!("{} unreadable reports skipped", outcome.unreadable);
    }
    for p in outcome.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn clean(a: CleanArgs) -> Result<(), Failure> {
    let req = CleanRequest {
        corpus_dir: a.corpus,
        report_dir: a.reports,
        scratch_dir: a.scratch.unwrap_or_else(driver::default_scratch_dir),
        submission: a.id,
        out_dir: a.out,
        include_anc: a.include_anc,
        force: a.force,
    };
    ensure_dir(&req.scratch_dir)?;
    let files = driver::run_clean(&req)?;
    println!("copied {} files to {}", files.len(), req.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Scan(a) => scan(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Search(a) => search(a),
        Command::Clean(a) => clean(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
