pub mod aggregate;
pub mod analyze;
pub mod comments;
pub mod driver;
pub mod filetype;
pub mod graph;
pub mod id;
pub mod ingest;
pub mod keywords;
pub mod metadata;
pub mod patterns;
pub mod project;
pub mod report;
pub mod stats;
pub mod text;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
