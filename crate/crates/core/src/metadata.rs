//! Category lookup from the public arXiv metadata snapshot (one JSON
//! object per line with `id` and space-separated `categories`).

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::id::SubmissionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MainCategory {
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "ECON")]
    Econ,
    #[serde(rename = "EESS")]
    Eess,
    #[serde(rename = "MATH")]
    Math,
    #[serde(rename = "PHYS")]
    Phys,
    #[serde(rename = "QBIO")]
    QBio,
    #[serde(rename = "STAT")]
    Stat,
    #[serde(rename = "QFIN")]
    QFin,
}

impl MainCategory {
    pub const ALL: [MainCategory; 8] = [
        MainCategory::Cs,
        MainCategory::Econ,
        MainCategory::Eess,
        MainCategory::Math,
        MainCategory::Phys,
        MainCategory::QBio,
        MainCategory::Stat,
        MainCategory::QFin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MainCategory::Cs => "CS",
            MainCategory::Econ => "ECON",
            MainCategory::Eess => "EESS",
            MainCategory::Math => "MATH",
            MainCategory::Phys => "PHYS",
            MainCategory::QBio => "QBIO",
            MainCategory::Stat => "STAT",
            MainCategory::QFin => "QFIN",
        }
    }

    /// Maps the archive part of a category code (the text before the first
    /// dot) to its main category. The physics archives have their own
    /// prefixes (`hep-th`, `astro-ph`, ...), all of which map to PHYS.
    pub fn from_archive(archive: &str) -> Option<Self> {
        Some(match archive {
            "cs" => MainCategory::Cs,
            "econ" => MainCategory::Econ,
            "eess" => MainCategory::Eess,
            "math" => MainCategory::Math,
            "stat" => MainCategory::Stat,
            "q-bio" => MainCategory::QBio,
            "q-fin" => MainCategory::QFin,
            "physics" | "astro-ph" | "cond-mat" | "gr-qc" | "hep-ex" | "hep-lat" | "hep-ph" | "hep-th" | "math-ph"
            | "nlin" | "nucl-ex" | "nucl-th" | "quant-ph" => MainCategory::Phys,
            _ => return None,
        })
    }
}

impl fmt::Display for MainCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The security subcategory tracked on its own in the breakdowns.
pub const SECURITY_SUBCATEGORY: &str = "cs.CR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub submission: SubmissionId,
    pub primary_categories: Vec<MainCategory>,
    pub cryptography_security: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetadataStats {
    pub records: u64,
    pub malformed_lines: u64,
    /// Records whose ID is not in the `YYMM.XXXXX` scheme.
    pub skipped_ids: u64,
    pub unknown_codes: u64,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    categories: String,
}

/// Parses one record's category field.
pub fn parse_categories(submission: SubmissionId, categories: &str, unknown: &mut u64) -> CategoryRecord {
    let mut mains = Vec::new();
    let mut cr = false;
    for code in categories.split_whitespace() {
        let archive = code.split('.').next().unwrap_or(code);
        match MainCategory::from_archive(archive) {
            Some(m) => {
                if !mains.contains(&m) {
                    mains.push(m);
                }
            }
            None => *unknown += 1,
        }
        if code == SECURITY_SUBCATEGORY {
            cr = true;
        }
    }
    mains.sort();
    CategoryRecord {
        submission,
        primary_categories: mains,
        cryptography_security: cr,
    }
}

/// Reads a metadata snapshot. Malformed lines are skipped and counted; I/O
/// errors end the read early and are counted as malformed.
pub fn load_category_metadata<R: BufRead>(reader: R) -> (HashMap<SubmissionId, CategoryRecord>, MetadataStats) {
    let mut map = HashMap::new();
    let mut stats = MetadataStats::default();
    for line in reader.lines() {
        let Ok(line) = line else {
            stats.malformed_lines += 1;
            break;
        };
        if line.trim().is_empty() {
            continue;
        }
        let Ok(raw) = serde_json::from_str::<RawRecord>(&line) else {
            stats.malformed_lines += 1;
            continue;
        };
        stats.records += 1;
        let Ok(id) = raw.id.trim().parse::<SubmissionId>() else {
            stats.skipped_ids += 1;
            continue;
        };
        let record = parse_categories(id, &raw.categories, &mut stats.unknown_codes);
        map.insert(id, record);
    }
    (map, stats)
}
