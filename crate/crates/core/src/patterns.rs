//! The reference-command table and extension fallback lists.
//!
//! The table is loaded from a TOML file; the default copy ships with the
//! crate and is compiled in.

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_PATTERNS: &str = include_str!("../config/patterns.toml");
pub const PATTERNS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("command {command:?}: {reason}")]
    Command { command: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CommandRole {
    #[default]
    File,
    FontLine,
    FontShape,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ExtensionSpec {
    Named(String),
    Inline(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCommand {
    name: String,
    pattern: String,
    #[serde(default)]
    extensions: Option<ExtensionSpec>,
    #[serde(default)]
    split: bool,
    #[serde(default)]
    join_dir: bool,
    #[serde(default)]
    templates: Option<Vec<String>>,
    #[serde(default)]
    role: CommandRole,
}

#[derive(Debug, Deserialize)]
struct RawFonts {
    font_file_pattern: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    extensions: BTreeMap<String, Vec<String>>,
    fonts: RawFonts,
    command: Vec<RawCommand>,
}

/// One reference command with its compiled capture pattern.
#[derive(Debug, Clone)]
pub struct CommandSpec {
    pub name: String,
    pub pattern: Regex,
    pub extensions: Vec<String>,
    pub split: bool,
    pub join_dir: bool,
    pub templates: Vec<String>,
    pub role: CommandRole,
}

#[derive(Debug, Clone)]
pub struct PatternConfig {
    pub commands: Vec<CommandSpec>,
    pub font_file_pattern: Regex,
    /// Extensions tried for font names found in map files and map lines.
    pub font_extensions: Vec<String>,
}

impl PatternConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src)?;
        if raw.schema_version != PATTERNS_SCHEMA_VERSION {
            return Err(ConfigError::Version {
                found: raw.schema_version,
                expected: PATTERNS_SCHEMA_VERSION,
            });
        }
        let font_file_pattern = Regex::new(&raw.fonts.font_file_pattern).map_err(|e| ConfigError::Command {
            command: "font_file_pattern".into(),
            reason: e.to_string(),
        })?;
        let mut commands = Vec::with_capacity(raw.command.len());
        for c in raw.command {
            let err = |reason: String| ConfigError::Command {
                command: c.name.clone(),
                reason,
            };
            let pattern = Regex::new(&c.pattern).map_err(|e| err(e.to_string()))?;
            if pattern.captures_len() < 2 {
                return Err(err("pattern has no capture group".into()));
            }
            if c.join_dir && pattern.captures_len() < 3 {
                return Err(err("join_dir needs two capture groups".into()));
            }
            let extensions = match c.extensions {
                None => Vec::new(),
                Some(ExtensionSpec::Inline(v)) => v,
                Some(ExtensionSpec::Named(n)) => raw
                    .extensions
                    .get(&n)
                    .cloned()
                    .ok_or_else(|| err(format!("unknown extension list {n:?}")))?,
            };
            let templates = c.templates.unwrap_or_else(|| vec!["{}".to_string()]);
            if templates.iter().any(|t| !t.contains("{}")) {
                return Err(err("template without {} placeholder".into()));
            }
            commands.push(CommandSpec {
                name: c.name,
                pattern,
                extensions,
                split: c.split,
                join_dir: c.join_dir,
                templates,
                role: c.role,
            });
        }
        Ok(Self {
            commands,
            font_file_pattern,
            font_extensions: raw.extensions.get("font").cloned().unwrap_or_default(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&src)
    }

    /// Distinct command names, in table order.
    pub fn command_names(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for c in &self.commands {
            if !seen.contains(&c.name.as_str()) {
                seen.push(c.name.as_str());
            }
        }
        seen
    }
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_PATTERNS).expect("shipped pattern table is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_covers_listed_commands() {
        let cfg = PatternConfig::default();
        let names = cfg.command_names();
        for expected in [
            "input",
            "include",
            "includegraphics",
            "includesvg",
            "overpic",
            "pgfimage",
            "epsfig",
            "pdfximage",
            "bibliography",
            "usepackage",
            "documentclass",
            "includepdf",
            "pdfmapfile",
            "pdfmapline",
            "requirepackage",
            "LoadClass",
            "addbibresource",
            "lstinputlisting",
            "inputminted",
            "verbatiminput",
            "includeonly",
            "subimport",
            "includefrom",
            "subincludefrom",
            "subfile",
            "includestandalone",
            "externaldocument",
            "usetikzlibrary",
            "usepgfplotslibrary",
            "pgfdeclareimage",
            "pgfplotstableread",
            "addplot_table",
            "addplot_graphics",
            "csvautotabular",
            "csvreader",
            "DTLloaddb",
            "SweaveInput",
            "bibliographystyle",
            "movie",
            "readdef",
            "loadglsentries",
            "InputIfFileExists",
            "DeclareFontShape",
            "plotone",
            "plottwo",
            "plotfiddle",
            "tikzfig",
            "trimfig",
            "biographywithpic",
        ] {
            assert!(names.contains(&expected), "missing {expected}");
        }
    }

    #[test]
    fn generic_fallbacks_in_listed_order() {
        let cfg = PatternConfig::default();
        let input = cfg.commands.iter().find(|c| c.name == "input").unwrap();
        assert_eq!(
            input.extensions,
            ["", ".tex", ".pdf", ".png", ".jpg", ".jpeg", ".eps", ".svg", ".bmp", ".sty", ".cls", ".bib"]
        );
    }

    #[test]
    fn font_pattern_matches_map_lines() {
        let cfg = PatternConfig::default();
        let line = "ptmr8r Times-Roman \"TeXBase1Encoding ReEncodeFont\" <8r.enc <ptmr8a.pfb";
        let got: Vec<_> = cfg
            .font_file_pattern
            .captures_iter(line)
            .map(|c| c[1].to_string())
            .collect();
        assert_eq!(got, ["8r.enc", "ptmr8a.pfb"]);
        let got: Vec<_> = cfg
            .font_file_pattern
            .captures_iter("x <[cm-super.enc <<sfrm1000.pfb")
            .map(|c| c[1].to_string())
            .collect();
        assert_eq!(got, ["cm-super.enc", "sfrm1000.pfb"]);
    }

    #[test]
    fn rejects_bad_tables() {
        let bad_version = DEFAULT_PATTERNS.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(
            PatternConfig::from_toml(&bad_version),
            Err(ConfigError::Version { found: 9, .. })
        ));
        let no_group = r#"
schema_version = 1
[extensions]
[fonts]
font_file_pattern = 'x'
[[command]]
name = "x"
pattern = '\\x'
"#;
        assert!(matches!(
            PatternConfig::from_toml(no_group),
            Err(ConfigError::Command { .. })
        ));
    }
}
