//! Keyword search over comments documents and residual file names.
//!
//! The scanner only reports matches; whether a project is problematic is
//! left to whoever reads the hits.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::comments::CommentsDocument;
use crate::id::SubmissionId;
use crate::patterns::ConfigError;
use crate::text::extension_lower;

pub const DEFAULT_KEYWORDS: &str = include_str!("../config/keywords.toml");
pub const KEYWORDS_SCHEMA_VERSION: u32 = 1;
/// Maximum context length, in characters.
pub const CONTEXT_CHARS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Comments,
    ResidualFilenames,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordGroup {
    pub name: String,
    pub target: Target,
    pub terms: Vec<String>,
    #[serde(default)]
    pub benign: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordConfig {
    pub schema_version: u32,
    #[serde(rename = "group")]
    pub groups: Vec<KeywordGroup>,
}

impl KeywordConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: KeywordConfig = toml::from_str(src)?;
        if cfg.schema_version != KEYWORDS_SCHEMA_VERSION {
            return Err(ConfigError::Version {
                found: cfg.schema_version,
                expected: KEYWORDS_SCHEMA_VERSION,
            });
        }
        for g in &cfg.groups {
            if g.terms.is_empty() || g.terms.iter().any(|t| t.trim().is_empty()) {
                return Err(ConfigError::Command {
                    command: g.name.clone(),
                    reason: "group needs non-empty terms".into(),
                });
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&src)
    }

    /// `(group, term)` pairs of one target, in configuration order.
    pub fn terms(&self, target: Target) -> Vec<(&str, &str)> {
        self.groups
            .iter()
            .filter(|g| g.target == target)
            .flat_map(|g| g.terms.iter().map(move |t| (g.name.as_str(), t.as_str())))
            .collect()
    }
}

impl Default for KeywordConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_KEYWORDS).expect("shipped keyword list is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeywordHit {
    pub submission: SubmissionId,
    pub file: String,
    /// Line of the match; `None` for file-name hits.
    pub line: Option<u32>,
    /// Byte offset of the match in the rendered comments document.
    pub offset: Option<usize>,
    pub group: String,
    pub term: String,
    pub context: String,
    /// The match lies inside one of the group's benign phrases.
    pub benign: bool,
}

fn term_regex(term: &str, word_boundary: bool) -> Regex {
    let mut pattern = String::new();
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    if word_boundary && term.chars().next().is_some_and(is_word) {
        pattern.push_str(r"\b");
    }
    for c in term.chars() {
        if c.is_whitespace() {
            pattern.push_str(r"\s");
        } else {
            pattern.push_str(&regex::escape(c.encode_utf8(&mut [0; 4])));
        }
    }
    if word_boundary && term.chars().last().is_some_and(is_word) {
        pattern.push_str(r"\b");
    }
    RegexBuilder::new(&pattern)
        .case_insensitive(true)
        .build()
        .expect("escaped term is a valid pattern")
}

/// Collapses whitespace runs to single spaces and trims.
fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Up to [`CONTEXT_CHARS`] characters around `text[start..end]`, centred on
/// the match, whitespace-normalized.
pub fn context_window(text: &str, start: usize, end: usize) -> String {
    let matched = text[start..end].chars().count();
    let side = CONTEXT_CHARS.saturating_sub(matched) / 2;
    let before: usize = text[..start].chars().rev().take(side).map(char::len_utf8).sum();
    let after: usize = text[end..].chars().take(side).map(char::len_utf8).sum();
    normalize_ws(&text[start - before..end + after])
}

struct CompiledGroup<'a> {
    group: &'a KeywordGroup,
    terms: Vec<(&'a str, Regex)>,
    benign: Vec<Regex>,
}

/// Comment scanner with the term patterns compiled once.
pub struct CommentScanner<'a> {
    groups: Vec<CompiledGroup<'a>>,
}

impl<'a> CommentScanner<'a> {
    pub fn new(config: &'a KeywordConfig, word_boundary: bool) -> Self {
        let groups = config
            .groups
            .iter()
            .filter(|g| g.target == Target::Comments)
            .map(|group| CompiledGroup {
                group,
                terms: group
                    .terms
                    .iter()
                    .map(|t| (t.as_str(), term_regex(t, word_boundary)))
                    .collect(),
                benign: group.benign.iter().map(|b| term_regex(b, false)).collect(),
            })
            .collect();
        Self { groups }
    }

    /// One hit per occurrence, ordered by (file, line, offset).
    pub fn scan(&self, submission: SubmissionId, doc: &CommentsDocument) -> Vec<KeywordHit> {
        let (_, offsets) = doc.render_with_offsets();
        let mut hits = Vec::new();
        for (entry, base) in doc.entries.iter().zip(offsets) {
            let text = &entry.text;
            for cg in &self.groups {
                let benign: Vec<(usize, usize)> = cg
                    .benign
                    .iter()
                    .flat_map(|re| re.find_iter(text).map(|m| (m.start(), m.end())))
                    .collect();
                for (term, re) in &cg.terms {
                    for m in re.find_iter(text) {
                        let line = entry.line + text[..m.start()].matches('\n').count() as u32;
                        hits.push(KeywordHit {
                            submission,
                            file: entry.file.clone(),
                            line: Some(line),
                            offset: Some(base + m.start()),
                            group: cg.group.name.clone(),
                            term: (*term).to_string(),
                            context: context_window(text, m.start(), m.end()),
                            benign: benign.iter().any(|&(s, e)| s <= m.start() && m.end() <= e),
                        });
                    }
                }
            }
        }
        hits.sort_by(|a, b| {
            (&a.file, a.line, a.offset, &a.group, &a.term).cmp(&(&b.file, b.line, b.offset, &b.group, &b.term))
        });
        hits
    }
}

/// Convenience wrapper compiling the patterns for a single document.
pub fn scan_comments(
    submission: SubmissionId,
    doc: &CommentsDocument,
    config: &KeywordConfig,
    word_boundary: bool,
) -> Vec<KeywordHit> {
    CommentScanner::new(config, word_boundary).scan(submission, doc)
}

/// Matches residual paths against the file-name groups. Callers pass the
/// residual set only.
pub fn scan_residual_filenames<'p, I>(submission: SubmissionId, residual: I, config: &KeywordConfig) -> Vec<KeywordHit>
where
    I: IntoIterator<Item = &'p str>,
{
    let terms = config.terms(Target::ResidualFilenames);
    let mut hits = Vec::new();
    for path in residual {
        let lower = path.to_lowercase();
        let ext = extension_lower(path);
        for (group, term) in &terms {
            let t = term.to_lowercase();
            let hit = if t.starts_with('.') {
                ext == t
            } else {
                lower.contains(&t)
            };
            if hit {
                hits.push(KeywordHit {
                    submission,
                    file: path.to_string(),
                    line: None,
                    offset: None,
                    group: (*group).to_string(),
                    term: (*term).to_string(),
                    context: path.to_string(),
                    benign: false,
                });
            }
        }
    }
    hits.sort_by(|a, b| (&a.file, &a.group, &a.term).cmp(&(&b.file, &b.group, &b.term)));
    hits
}

/// Distinct occurrences of `term` and the number of submissions they
/// come from.
pub fn count_unique_occurrences(hits: &[KeywordHit], term: &str) -> (u64, u64) {
    let mut occurrences = HashSet::new();
    let mut projects = HashSet::new();
    for h in hits.iter().filter(|h| h.term == term) {
        occurrences.insert((h.submission, &h.file, h.line, h.offset));
        projects.insert(h.submission);
    }
    (occurrences.len() as u64, projects.len() as u64)
}

/// Keeps the first hit of each (submission, group, term).
pub fn dedup_per_project(hits: Vec<KeywordHit>) -> Vec<KeywordHit> {
    let mut seen = HashSet::new();
    hits.into_iter()
        .filter(|h| seen.insert((h.submission, h.group.clone(), h.term.clone())))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSummary {
    pub group: String,
    pub term: String,
    pub occurrences: u64,
    pub projects: u64,
    pub benign_occurrences: u64,
}

/// Mergeable per-term counts across projects.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordTally {
    occurrences: BTreeMap<(String, String), u64>,
    benign: BTreeMap<(String, String), u64>,
    projects: BTreeMap<(String, String), BTreeSet<SubmissionId>>,
}

impl KeywordTally {
    pub fn add_hits(&mut self, hits: &[KeywordHit]) {
        for h in hits {
            let key = (h.group.clone(), h.term.clone());
            *self.occurrences.entry(key.clone()).or_default() += 1;
            if h.benign {
                *self.benign.entry(key.clone()).or_default() += 1;
            }
            self.projects.entry(key).or_default().insert(h.submission);
        }
    }

    pub fn merge(&mut self, other: &KeywordTally) {
        for (k, v) in &other.occurrences {
            *self.occurrences.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.benign {
            *self.benign.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.projects {
            self.projects.entry(k.clone()).or_default().extend(v.iter().copied());
        }
    }

    /// One row per configured term, in configuration order.
    pub fn summary(&self, config: &KeywordConfig) -> Vec<TermSummary> {
        config
            .groups
            .iter()
            .flat_map(|g| g.terms.iter().map(move |t| (g.name.clone(), t.clone())))
            .map(|key| TermSummary {
                occurrences: self.occurrences.get(&key).copied().unwrap_or(0),
                projects: self.projects.get(&key).map_or(0, |s| s.len() as u64),
                benign_occurrences: self.benign.get(&key).copied().unwrap_or(0),
                group: key.0,
                term: key.1,
            })
            .collect()
    }
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn render_hits_tsv(hits: &[KeywordHit]) -> String {
    let mut out = String::from("submission\tgroup\tterm\tfile\tline\toffset\tbenign\tcontext\n");
    for h in hits {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            h.submission,
            tsv_field(&h.group),
            tsv_field(&h.term),
            tsv_field(&h.file),
            h.line.map_or(String::new(), |l| l.to_string()),
            h.offset.map_or(String::new(), |o| o.to_string()),
            h.benign,
            tsv_field(&h.context)
        );
    }
    out
}

pub fn render_summary_tsv(rows: &[TermSummary]) -> String {
    let mut out = String::from("group\tterm\toccurrences\tprojects\tbenign_occurrences\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            tsv_field(&r.group),
            tsv_field(&r.term),
            r.occurrences,
            r.projects,
            r.benign_occurrences
        );
    }
    out
}

/// The `[term; projects]` listing, one line per group.
pub fn render_bracket_summary(rows: &[TermSummary]) -> String {
    let mut out = String::new();
    let mut current: Option<&str> = None;
    for r in rows {
        if current != Some(r.group.as_str()) {
            if current.is_some() {
                out.push('\n');
            }
            let _ = write!(out, "{}:", r.group);
            current = Some(&r.group);
        }
        let _ = write!(out, " [{}; {}]", r.term, r.projects);
    }
    if current.is_some() {
        out.push('\n');
    }
    out
}
