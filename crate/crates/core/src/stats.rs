//! Per-project residual statistics and bucket assignment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::filetype::TypeGroup;
use crate::id::SubmissionId;

/// Decimal units; reported megabytes use the same constant.
pub const KB: u64 = 1_000;
pub const MB: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBucket {
    /// [0, 1KB)
    Under1KB,
    /// [1KB, 1MB)
    OneKBto1MB,
    /// [1MB, ∞)
    Over1MB,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Under1KB, SizeBucket::OneKBto1MB, SizeBucket::Over1MB];

    pub fn of(residual_file_bytes: u64) -> Self {
        if residual_file_bytes < KB {
            SizeBucket::Under1KB
        } else if residual_file_bytes < MB {
            SizeBucket::OneKBto1MB
        } else {
            SizeBucket::Over1MB
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioBucket {
    /// [0, 5%)
    Under5,
    /// [5%, 50%)
    FiveTo50,
    /// [50%, 95%)
    FiftyTo95,
    /// [95%, 100%]
    Atleast95,
}

impl RatioBucket {
    pub const ALL: [RatioBucket; 4] = [
        RatioBucket::Under5,
        RatioBucket::FiveTo50,
        RatioBucket::FiftyTo95,
        RatioBucket::Atleast95,
    ];

    /// Bucket of `part / whole`, decided in exact integer arithmetic. An
    /// empty project has ratio 0.
    pub fn of(part: u64, whole: u64) -> Self {
        if whole == 0 {
            return RatioBucket::Under5;
        }
        let scaled = u128::from(part) * 100;
        let whole = u128::from(whole);
        if scaled < 5 * whole {
            RatioBucket::Under5
        } else if scaled < 50 * whole {
            RatioBucket::FiveTo50
        } else if scaled < 95 * whole {
            RatioBucket::FiftyTo95
        } else {
            RatioBucket::Atleast95
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTally {
    pub count: u64,
    pub bytes: u64,
}

impl GroupTally {
    pub fn add(&mut self, other: GroupTally) {
        self.count += other.count;
        self.bytes += other.bytes;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectStats {
    pub submission: SubmissionId,
    pub used_bytes: u64,
    pub residual_file_bytes: u64,
    pub comment_bytes: u64,
    pub anc_bytes: u64,
    pub total_project_bytes: u64,
    pub residual_ratio: f64,
    pub size_bucket: SizeBucket,
    pub ratio_bucket: RatioBucket,
    pub type_histogram: BTreeMap<TypeGroup, GroupTally>,
}

impl ProjectStats {
    /// Residual data: residual file bytes plus comment bytes.
    pub fn residual_bytes(&self) -> u64 {
        self.residual_file_bytes + self.comment_bytes
    }

    /// Projects over 1MB of residual files, or whose residual files exceed
    /// half of the project, enter the category breakdowns.
    pub fn over_1mb(&self) -> bool {
        self.residual_file_bytes > MB
    }

    pub fn over_half(&self) -> bool {
        u128::from(self.residual_file_bytes) * 2 > u128::from(self.total_project_bytes)
    }
}

/// Sums used and residual sizes (anc bytes count only toward the project
/// total) and assigns buckets on the residual file bytes.
pub fn compute_stats<'a, U, R>(
    submission: SubmissionId,
    used: U,
    residual: R,
    anc_bytes: u64,
    comment_bytes: u64,
) -> ProjectStats
where
    U: IntoIterator<Item = u64>,
    R: IntoIterator<Item = (&'a str, u64, TypeGroup)>,
{
    let used_bytes: u64 = used.into_iter().sum();
    let mut residual_file_bytes = 0;
    let mut type_histogram: BTreeMap<TypeGroup, GroupTally> = BTreeMap::new();
    for (_, bytes, group) in residual {
        residual_file_bytes += bytes;
        type_histogram
            .entry(group)
            .or_default()
            .add(GroupTally { count: 1, bytes });
    }
    let total_project_bytes = used_bytes + residual_file_bytes + anc_bytes;
    let residual_ratio = if total_project_bytes == 0 {
        0.0
    } else {
        residual_file_bytes as f64 / total_project_bytes as f64
    };
    ProjectStats {
        submission,
        used_bytes,
        residual_file_bytes,
        comment_bytes,
        anc_bytes,
        total_project_bytes,
        residual_ratio,
        size_bucket: SizeBucket::of(residual_file_bytes),
        ratio_bucket: RatioBucket::of(residual_file_bytes, total_project_bytes),
        type_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filetype::classify_file_type;
    use proptest::prelude::*;

    fn id() -> SubmissionId {
        "2501.00001".parse().unwrap()
    }

    #[test]
    fn small_residual_is_under_1kb() {
        let s = compute_stats(id(), [10_000], [("a.png", 500, TypeGroup::Image)], 0, 0);
        assert_eq!(s.size_bucket, SizeBucket::Under1KB);
    }

    #[test]
    fn sixty_percent_residual() {
        let s = compute_stats(id(), [400_000], [("x.pdf", 600_000, TypeGroup::Pdf)], 0, 0);
        assert_eq!(s.total_project_bytes, 1_000_000);
        assert!((s.residual_ratio - 0.6).abs() < 1e-12);
        assert_eq!(s.ratio_bucket, RatioBucket::FiftyTo95);
    }

    #[test]
    fn clean_project() {
        let s = compute_stats(id(), [1234], std::iter::empty(), 0, 0);
        assert_eq!(s.residual_bytes(), 0);
        assert_eq!(s.residual_ratio, 0.0);
        assert_eq!(s.size_bucket, SizeBucket::Under1KB);
        assert_eq!(s.ratio_bucket, RatioBucket::Under5);
        let empty = compute_stats(id(), [], std::iter::empty(), 0, 0);
        assert_eq!(empty.ratio_bucket, RatioBucket::Under5);
    }

    #[test]
    fn boundaries_are_half_open() {
        assert_eq!(SizeBucket::of(999), SizeBucket::Under1KB);
        assert_eq!(SizeBucket::of(1_000), SizeBucket::OneKBto1MB);
        assert_eq!(SizeBucket::of(999_999), SizeBucket::OneKBto1MB);
        assert_eq!(SizeBucket::of(1_000_000), SizeBucket::Over1MB);
        assert_eq!(RatioBucket::of(4, 100), RatioBucket::Under5);
        assert_eq!(RatioBucket::of(5, 100), RatioBucket::FiveTo50);
        assert_eq!(RatioBucket::of(50, 100), RatioBucket::FiftyTo95);
        assert_eq!(RatioBucket::of(95, 100), RatioBucket::Atleast95);
        assert_eq!(RatioBucket::of(100, 100), RatioBucket::Atleast95);
    }

    #[test]
    fn anc_bytes_only_in_total() {
        let s = compute_stats(id(), [100], std::iter::empty(), 900, 0);
        assert_eq!(s.total_project_bytes, 1000);
        assert_eq!(s.residual_file_bytes, 0);
        assert_eq!(s.size_bucket, SizeBucket::Under1KB);
    }

    proptest! {
        #[test]
        fn histogram_and_bucket_consistency(
            used in prop::collection::vec(0u64..3_000_000, 0..5),
            residual in prop::collection::vec((prop::sample::select(vec!["a.png", "b.pdf", "c.tex", "d.sty", "e.tfm", "f.txt", "g.zip"]), 0u64..3_000_000), 0..8),
            anc in 0u64..1_000_000,
            comments in 0u64..10_000,
        ) {
            let res: Vec<(&str, u64, TypeGroup)> = residual.iter().map(|(p, b)| (*p, *b, classify_file_type(p))).collect();
            let s = compute_stats(id(), used.iter().copied(), res.iter().copied(), anc, comments);
            let hist_bytes: u64 = s.type_histogram.values().map(|t| t.bytes).sum();
            let hist_count: u64 = s.type_histogram.values().map(|t| t.count).sum();
            prop_assert_eq!(hist_bytes, s.residual_file_bytes);
            prop_assert_eq!(hist_count, residual.len() as u64);
            prop_assert!((0.0..=1.0).contains(&s.residual_ratio));
            let pct = s.residual_ratio * 100.0;
            let expected = if pct < 5.0 { RatioBucket::Under5 } else if pct < 50.0 { RatioBucket::FiveTo50 } else if pct < 95.0 { RatioBucket::FiftyTo95 } else { RatioBucket::Atleast95 };
            // Float and integer routes agree away from exact boundaries.
            if [5.0, 50.0, 95.0].iter().all(|b| (pct - b).abs() > 1e-9) {
                prop_assert_eq!(s.ratio_bucket, expected);
            }
            prop_assert_eq!(s.residual_bytes(), s.residual_file_bytes + comments);
        }
    }
}
