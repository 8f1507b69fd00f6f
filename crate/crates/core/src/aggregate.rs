//! Corpus-level rollups of analysis reports.
//!
//! Everything here is a sum, so partial reports built by different workers
//! merge exactly, in any order.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::filetype::TypeGroup;
use crate::id::{SubmissionId, YearMonth};
use crate::ingest::SubmissionKind;
use crate::metadata::{CategoryRecord, MainCategory};
use crate::report::{write_atomic, AnalysisReport, ExclusionReason, ReportError};
use crate::stats::{GroupTally, ProjectStats, RatioBucket, SizeBucket, MB};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;
/// Row label of the security subcategory in category tables.
pub const SECURITY_LABEL: &str = "CR";

/// Submission counts per outcome. The five outcome columns partition
/// `submissions`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub submissions: u64,
    pub valid_projects: u64,
    pub pdf_only: u64,
    pub withdrawn: u64,
    pub unclear_root: u64,
    pub unclear_type: u64,
}

impl KindCounts {
    fn add(&mut self, o: &KindCounts) {
        self.submissions += o.submissions;
        self.valid_projects += o.valid_projects;
        self.pdf_only += o.pdf_only;
        self.withdrawn += o.withdrawn;
        self.unclear_root += o.unclear_root;
        self.unclear_type += o.unclear_type;
    }

    pub fn record(&mut self, report: &AnalysisReport) {
        self.submissions += 1;
        match (report.kind, report.exclusion_reason) {
            (SubmissionKind::PdfOnly, _) => self.pdf_only += 1,
            (_, Some(ExclusionReason::Withdrawn)) => self.withdrawn += 1,
            (_, Some(ExclusionReason::UnclearRoot)) => self.unclear_root += 1,
            (_, Some(ExclusionReason::UnclearType)) => self.unclear_type += 1,
            (SubmissionKind::SingleTex | SubmissionKind::ProjectBlob, None) => self.valid_projects += 1,
            // Reports that fail validation; counted as not understood.
            _ => self.unclear_type += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub projects: u64,
    pub over_1mb: u64,
    pub over_half: u64,
    /// Projects in either of the two previous columns.
    pub selected: u64,
}

impl CategoryRow {
    fn add(&mut self, o: &CategoryRow) {
        self.projects += o.projects;
        self.over_1mb += o.over_1mb;
        self.over_half += o.over_half;
        self.selected += o.selected;
    }
}

/// Totals for one set of submissions (a month, a year or the corpus).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rollup {
    pub kinds: KindCounts,
    pub residual_file_bytes: u64,
    pub comment_bytes: u64,
    pub used_bytes: u64,
    pub anc_bytes: u64,
    pub project_bytes: u64,
    pub size_buckets: BTreeMap<SizeBucket, u64>,
    pub ratio_buckets: BTreeMap<RatioBucket, u64>,
    pub type_groups: BTreeMap<TypeGroup, GroupTally>,
    /// Valid projects using macros that wrap reference commands.
    pub alias_projects: u64,
    /// Keyed by main-category code, plus [`SECURITY_LABEL`]. A project with
    /// several main categories counts once in each.
    pub categories: BTreeMap<String, CategoryRow>,
    /// Valid projects missing from the metadata (only when metadata was given).
    pub uncategorized: u64,
}

impl Rollup {
    /// Residual files plus comments.
    pub fn residual_bytes(&self) -> u64 {
        self.residual_file_bytes + self.comment_bytes
    }

    /// Residual data as a percentage of the project bytes.
    pub fn percent_residual(&self) -> f64 {
        if self.project_bytes == 0 {
            0.0
        } else {
            100.0 * self.residual_bytes() as f64 / self.project_bytes as f64
        }
    }

    pub fn merge(&mut self, o: &Rollup) {
        self.kinds.add(&o.kinds);
        self.residual_file_bytes += o.residual_file_bytes;
        self.comment_bytes += o.comment_bytes;
        self.used_bytes += o.used_bytes;
        self.anc_bytes += o.anc_bytes;
        self.project_bytes += o.project_bytes;
        for (k, v) in &o.size_buckets {
            *self.size_buckets.entry(*k).or_default() += v;
        }
        for (k, v) in &o.ratio_buckets {
            *self.ratio_buckets.entry(*k).or_default() += v;
        }
        for (k, v) in &o.type_groups {
            self.type_groups.entry(*k).or_default().add(*v);
        }
        self.alias_projects += o.alias_projects;
        for (k, v) in &o.categories {
            self.categories.entry(k.clone()).or_default().add(v);
        }
        self.uncategorized += o.uncategorized;
    }

    fn add_stats(&mut self, s: &ProjectStats) {
        self.residual_file_bytes += s.residual_file_bytes;
        self.comment_bytes += s.comment_bytes;
        self.used_bytes += s.used_bytes;
        self.anc_bytes += s.anc_bytes;
        self.project_bytes += s.total_project_bytes;
        *self.size_buckets.entry(s.size_bucket).or_default() += 1;
        *self.ratio_buckets.entry(s.ratio_bucket).or_default() += 1;
        for (g, t) in &s.type_histogram {
            self.type_groups.entry(*g).or_default().add(*t);
        }
    }

    fn add_categories(&mut self, s: &ProjectStats, record: Option<&CategoryRecord>) {
        let Some(record) = record else {
            self.uncategorized += 1;
            return;
        };
        let row = CategoryRow {
            projects: 1,
            over_1mb: u64::from(s.over_1mb()),
            over_half: u64::from(s.over_half()),
            selected: u64::from(s.over_1mb() || s.over_half()),
        };
        let mut labels: Vec<&str> = record.primary_categories.iter().map(|c| c.as_str()).collect();
        if record.cryptography_security {
            labels.push(SECURITY_LABEL);
        }
        for label in labels {
            self.categories.entry(label.to_string()).or_default().add(&row);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub months: BTreeMap<YearMonth, Rollup>,
    /// Whether category metadata was joined in.
    pub with_categories: bool,
    pub unreadable_reports: u64,
}

impl Default for CorpusReport {
    fn default() -> Self {
        Self {
            schema_version: CORPUS_SCHEMA_VERSION,
            months: BTreeMap::new(),
            with_categories: false,
            unreadable_reports: 0,
        }
    }
}

impl CorpusReport {
    pub fn add_report(&mut self, report: &AnalysisReport, categories: Option<&HashMap<SubmissionId, CategoryRecord>>) {
        let rollup = self.months.entry(report.submission.year_month()).or_default();
        rollup.kinds.record(report);
        if let Some(stats) = report.stats() {
            rollup.add_stats(&stats);
            rollup.alias_projects += u64::from(!report.alias_macros.is_empty());
            if let Some(map) = categories {
                rollup.add_categories(&stats, map.get(&report.submission));
            }
        }
        self.with_categories |= categories.is_some();
    }

    pub fn merge(&mut self, other: &CorpusReport) {
        for (ym, r) in &other.months {
            self.months.entry(*ym).or_default().merge(r);
        }
        self.with_categories |= other.with_categories;
        self.unreadable_reports += other.unreadable_reports;
    }

    /// Rollups per calendar year (`2000 + YY`).
    pub fn years(&self) -> BTreeMap<u16, Rollup> {
        let mut out: BTreeMap<u16, Rollup> = BTreeMap::new();
        for (ym, r) in &self.months {
            out.entry(2000 + u16::from(ym.year)).or_default().merge(r);
        }
        out
    }

    pub fn total(&self) -> Rollup {
        let mut t = Rollup::default();
        for r in self.months.values() {
            t.merge(r);
        }
        t
    }

    /// Rows labelled by month (`2501`), then year (`2025`), then `total`.
    pub fn periods(&self) -> Vec<(String, Rollup)> {
        let mut rows: Vec<(String, Rollup)> = self.months.iter().map(|(ym, r)| (ym.to_string(), r.clone())).collect();
        rows.extend(self.years().into_iter().map(|(y, r)| (y.to_string(), r)));
        rows.push(("total".into(), self.total()));
        rows
    }
}

pub fn aggregate<'a, I>(reports: I, categories: Option<&HashMap<SubmissionId, CategoryRecord>>) -> CorpusReport
where
    I: IntoIterator<Item = &'a AnalysisReport>,
{
    let mut out = CorpusReport {
        with_categories: categories.is_some(),
        ..CorpusReport::default()
    };
    for r in reports {
        out.add_report(r, categories);
    }
    out
}

fn mb(bytes: u64) -> String {
    format!("{:.3}", bytes as f64 / MB as f64)
}

fn share(part: u64, whole: u64) -> String {
    if whole == 0 {
        "0.0000".into()
    } else {
        format!("{:.4}", part as f64 / whole as f64)
    }
}

/// Renders the tabular outputs as `(file name, tab-separated contents)`.
pub fn render_tables(report: &CorpusReport) -> Vec<(&'static str, String)> {
    let periods = report.periods();
    let mut kinds =
        String::from("period\tsubmissions\tvalid_tex_projects\tpdf_only\twithdrawn\tunclear_root\tunclear_type\n");
    let mut sizes = String::from(
        "period\tresidual_files_bytes\tcomment_bytes\tresidual_bytes\tproject_bytes\tresidual_files_mb\tcomment_mb\tresidual_mb\tproject_mb\tpercent_residual\n",
    );
    let mut size_b = String::from("period\tvalid_projects\tunder_1kb\tfrom_1kb_to_1mb\tover_1mb\n");
    let mut ratio_b = String::from("period\tvalid_projects\tunder_5\tfrom_5_to_50\tfrom_50_to_95\tatleast_95\n");
    let mut types = String::from("period\tgroup\tfiles\tbytes\n");
    let mut cats =
        String::from("period\tcategory\tprojects\tover_1mb\tover_half\tselected\tshare_over_1mb\tshare_over_half\n");
    for (p, r) in &periods {
        let k = &r.kinds;
        let _ = writeln!(
            kinds,
            "{p}\t{}\t{}\t{}\t{}\t{}\t{}",
            k.submissions, k.valid_projects, k.pdf_only, k.withdrawn, k.unclear_root, k.unclear_type
        );
        let _ = writeln!(
            sizes,
            "{p}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.2}",
            r.residual_file_bytes,
            r.comment_bytes,
            r.residual_bytes(),
            r.project_bytes,
            mb(r.residual_file_bytes),
            mb(r.comment_bytes),
            mb(r.residual_bytes()),
            mb(r.project_bytes),
            r.percent_residual()
        );
        let sb = |b| r.size_buckets.get(&b).copied().unwrap_or(0);
        let _ = writeln!(
            size_b,
            "{p}\t{}\t{}\t{}\t{}",
            k.valid_projects,
            sb(SizeBucket::Under1KB),
            sb(SizeBucket::OneKBto1MB),
            sb(SizeBucket::Over1MB)
        );
        let rb = |b| r.ratio_buckets.get(&b).copied().unwrap_or(0);
        let _ = writeln!(
            ratio_b,
            "{p}\t{}\t{}\t{}\t{}\t{}",
            k.valid_projects,
            rb(RatioBucket::Under5),
            rb(RatioBucket::FiveTo50),
            rb(RatioBucket::FiftyTo95),
            rb(RatioBucket::Atleast95)
        );
        for g in TypeGroup::ALL {
            let t = r.type_groups.get(&g).copied().unwrap_or_default();
            let _ = writeln!(types, "{p}\t{g}\t{}\t{}", t.count, t.bytes);
        }
        if report.with_categories {
            let labels = MainCategory::ALL.iter().map(|c| c.as_str()).chain([SECURITY_LABEL]);
            for label in labels {
                let c = r.categories.get(label).copied().unwrap_or_default();
                let _ = writeln!(
                    cats,
                    "{p}\t{label}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.projects,
                    c.over_1mb,
                    c.over_half,
                    c.selected,
                    share(c.over_1mb, c.projects),
                    share(c.over_half, c.projects)
                );
            }
            let _ = writeln!(cats, "{p}\tuncategorized\t{}\t\t\t\t\t", r.uncategorized);
        }
    }
    let mut out = vec![
        ("kinds.tsv", kinds),
        ("residual_sizes.tsv", sizes),
        ("size_buckets.tsv", size_b),
        ("ratio_buckets.tsv", ratio_b),
        ("type_groups.tsv", types),
    ];
    if report.with_categories {
        out.push(("categories.tsv", cats));
    }
    out
}

pub const CORPUS_REPORT_FILE: &str = "corpus_report.json";

/// Writes the JSON report and every table into `out_dir`.
pub fn write_corpus_outputs(report: &CorpusReport, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    let path = out_dir.join(CORPUS_REPORT_FILE);
    write_atomic(&path, &json)?;
    written.push(path);
    for (name, body) in render_tables(report) {
        let path = out_dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
