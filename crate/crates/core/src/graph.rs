//! Root inference and the used/residual partition of a TeX project.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::comments::{extract_comments, mask_comments};
use crate::patterns::{CommandRole, CommandSpec, PatternConfig};
use crate::project::ProjectTree;
use crate::text::{decode_permissive, extension_lower, file_stem, normalize_relative, parent_dir};

/// Filename markers that single out the root among several candidates, in
/// priority order.
pub const ROOT_MARKERS: [&str; 3] = ["main", "paper", "cameraready"];

/// Extensions of files scanned recursively for further references.
const TEX_LIKE: [&str; 11] = [
    ".tex", ".sty", ".cls", ".bst", ".fd", ".ltx", ".def", ".clo", ".cfg", ".tikz", ".pgf",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateScan {
    /// TeX files declaring a document class in their preamble.
    pub candidates: Vec<String>,
    /// TeX files whose preamble only uses the deprecated `\documentstyle`.
    pub deprecated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "value")]
pub enum RootOutcome {
    Found(String),
    Ambiguous(Vec<String>),
    NoCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootHeuristic {
    SoleCandidate,
    NameMatch,
    SoleTopmost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootDecision {
    pub outcome: RootOutcome,
    pub heuristic_used: Option<RootHeuristic>,
}

impl RootDecision {
    pub fn root(&self) -> Option<&str> {
        match &self.outcome {
            RootOutcome::Found(p) => Some(p),
            _ => None,
        }
    }
}

/// Text before the first `\begin{document}`, with comments blanked out.
fn preamble(source: &str) -> String {
    let blocks = extract_comments(source, "");
    let mut masked = mask_comments(source, &blocks);
    if let Some(i) = masked.find("\\begin{document}") {
        masked.truncate(i);
    }
    masked
}

fn has_control_word(text: &str, word: &str) -> bool {
    let needle = format!("\\{word}");
    text.match_indices(&needle).any(|(i, _)| {
        !text[i + needle.len()..]
            .bytes()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
    })
}

/// Lists the TeX files (outside `anc/`) whose preamble declares a
/// document class.
pub fn find_root_candidates(project: &ProjectTree) -> CandidateScan {
    let mut scan = CandidateScan::default();
    for entry in project.files().filter(|f| f.is_tex && !f.in_anc) {
        let Ok(bytes) = project.read(&entry.relative_path) else {
            continue;
        };
        let pre = preamble(&decode_permissive(&bytes));
        if has_control_word(&pre, "documentclass") {
            scan.candidates.push(entry.relative_path.clone());
        } else if has_control_word(&pre, "documentstyle") {
            scan.deprecated.push(entry.relative_path.clone());
        }
    }
    scan
}

/// Picks the root among candidates: a sole candidate wins; otherwise the
/// highest-priority marker matched by exactly one filename stem; otherwise
/// the only candidate in the top-level directory.
pub fn infer_root(candidates: &[String]) -> RootDecision {
    let found = |p: &str, h| RootDecision {
        outcome: RootOutcome::Found(p.to_string()),
        heuristic_used: Some(h),
    };
    let ambiguous = || RootDecision {
        outcome: RootOutcome::Ambiguous(candidates.to_vec()),
        heuristic_used: None,
    };
    match candidates {
        [] => {
            return RootDecision {
                outcome: RootOutcome::NoCandidate,
                heuristic_used: None,
            }
        }
        [only] => return found(only, RootHeuristic::SoleCandidate),
        _ => {}
    }
    for marker in ROOT_MARKERS {
        let matching: Vec<&String> = candidates
            .iter()
            .filter(|c| file_stem(c).to_lowercase().contains(marker))
            .collect();
        match matching.as_slice() {
            [] => continue,
            [one] => return found(one, RootHeuristic::NameMatch),
            _ => return ambiguous(),
        }
    }
    let topmost: Vec<&String> = candidates.iter().filter(|c| !c.contains('/')).collect();
    match topmost.as_slice() {
        [one] => found(one, RootHeuristic::SoleTopmost),
        _ => ambiguous(),
    }
}

/// A file argument captured from a reference command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub command: String,
    pub raw: String,
    /// Byte offset of the command in the source.
    pub offset: usize,
    /// Index of the matching command in the pattern table.
    pub command_index: usize,
}

/// Finds every reference command outside comments.
pub fn extract_references(source: &str, config: &PatternConfig) -> Vec<Reference> {
    let blocks = extract_comments(source, "");
    let masked = mask_comments(source, &blocks);
    extract_references_masked(&masked, config)
}

fn extract_references_masked(masked: &str, config: &PatternConfig) -> Vec<Reference> {
    let mut refs = Vec::new();
    for (idx, cmd) in config.commands.iter().enumerate() {
        for caps in cmd.pattern.captures_iter(masked) {
            let offset = caps.get(0).map_or(0, |m| m.start());
            let mut push = |raw: &str| {
                let raw = raw.trim();
                if !raw.is_empty() {
                    refs.push(Reference {
                        command: cmd.name.clone(),
                        raw: raw.to_string(),
                        offset,
                        command_index: idx,
                    });
                }
            };
            if cmd.join_dir {
                let dir = caps.get(1).map_or("", |m| m.as_str().trim());
                let file = caps.get(2).map_or("", |m| m.as_str().trim());
                if dir.is_empty() {
                    push(file);
                } else {
                    push(&format!("{}/{}", dir.trim_end_matches('/'), file));
                }
                continue;
            }
            for group in caps.iter().skip(1).flatten() {
                if cmd.split {
                    group.as_str().split(',').for_each(&mut push);
                } else {
                    push(group.as_str());
                }
            }
        }
    }
    refs.sort_by_key(|r| (r.offset, r.command_index));
    refs
}

/// Directories declared with `\graphicspath{{a/}{b/}}`, normalized.
pub fn extract_graphics_paths(masked: &str) -> Vec<String> {
    thread_local! {
        static OUTER: Regex = Regex::new(r"\\graphicspath\s*\{((?:\s*\{[^{}]*\})+)\s*\}").unwrap();
        static INNER: Regex = Regex::new(r"\{([^{}]*)\}").unwrap();
    }
    let mut out = Vec::new();
    OUTER.with(|outer| {
        INNER.with(|inner| {
            for caps in outer.captures_iter(masked) {
                for dir in inner.captures_iter(&caps[1]) {
                    let d = clean_raw(&dir[1]);
                    if let Some(norm) = normalize_relative(&d) {
                        if !out.contains(&norm) {
                            out.push(norm);
                        }
                    }
                }
            }
        })
    });
    out
}

fn clean_raw(raw: &str) -> String {
    raw.trim().replace('"', "").replace('\\', "/").trim().to_string()
}

/// Names of macros in `masked` whose definition forwards an argument to a
/// reference command (`\newcommand{\fig}[1]{\includegraphics{#1}}`) or
/// that rename one (`\let\img\includegraphics`).
pub fn detect_aliases(masked: &str, config: &PatternConfig) -> Vec<String> {
    thread_local! {
        static DEFINE: Regex = Regex::new(
            r"\\(?:(?:re)?newcommand|providecommand|DeclareRobustCommand)\*?\s*\{?\s*\\([A-Za-z@]+)\s*\}?\s*(?:\[[^\]]*\]\s*)*\{|\\[gex]?def\s*\\([A-Za-z@]+)[^{\n]*\{",
        )
        .unwrap();
        static LET: Regex = Regex::new(r"\\let\s*\\([A-Za-z@]+)\s*=?\s*\\([A-Za-z@]+)").unwrap();
        static BARE: Regex = Regex::new(r"^\\([A-Za-z@]+)$").unwrap();
    }
    let wrapped = |name: &str| config.commands.iter().any(|c| c.name.eq_ignore_ascii_case(name));
    let mut out = Vec::new();
    DEFINE.with(|define| {
        for caps in define.captures_iter(masked) {
            let name = caps.get(1).or_else(|| caps.get(2)).map_or("", |m| m.as_str());
            let body = balanced_body(&masked[caps.get(0).unwrap().end()..]);
            let forwards = extract_references_masked(body, config)
                .iter()
                .any(|r| r.raw.contains('#'));
            let renames = BARE.with(|b| b.captures(body.trim()).is_some_and(|c| wrapped(&c[1])));
            if (forwards || renames) && !out.iter().any(|n| n == name) {
                out.push(name.to_string());
            }
        }
    });
    LET.with(|l| {
        for caps in l.captures_iter(masked) {
            if wrapped(&caps[2]) && !out.iter().any(|n| n == &caps[1]) {
                out.push(caps[1].to_string());
            }
        }
    });
    out
}

/// Text up to the brace closing an already opened group.
fn balanced_body(rest: &str) -> &str {
    let mut depth = 1usize;
    for (i, b) in rest.bytes().enumerate() {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return &rest[..i];
                }
            }
            _ => {}
        }
    }
    rest
}

/// Looks up project files for raw reference arguments.
pub struct Resolver<'a> {
    project: &'a ProjectTree,
    by_lowercase: BTreeMap<String, String>,
    root_dir: String,
    graphics_paths: Vec<String>,
}

impl<'a> Resolver<'a> {
    pub fn new(project: &'a ProjectTree, root: &str, graphics_paths: &[String]) -> Self {
        let mut by_lowercase = BTreeMap::new();
        for f in project.files() {
            by_lowercase
                .entry(f.relative_path.to_lowercase())
                .or_insert_with(|| f.relative_path.clone());
        }
        Self {
            project,
            by_lowercase,
            root_dir: parent_dir(root).to_string(),
            graphics_paths: graphics_paths.to_vec(),
        }
    }

    /// Searches the origin's directory, the root's directory, the top-level
    /// directory and then each graphics path, trying the raw name and then
    /// each fallback extension. An exact pass over every location runs
    /// before a case-insensitive pass.
    pub fn resolve(&self, raw: &str, origin: &str, extensions: &[String], templates: &[String]) -> Option<String> {
        let raw = clean_raw(raw);
        if raw.is_empty() {
            return None;
        }
        let mut names = Vec::new();
        for t in templates {
            let base = t.replace("{}", &raw);
            names.push(base.clone());
            names.extend(
                extensions
                    .iter()
                    .filter(|e| !e.is_empty())
                    .map(|e| format!("{base}{e}")),
            );
        }
        let mut locations: Vec<&str> = vec![parent_dir(origin), &self.root_dir, ""];
        locations.extend(self.graphics_paths.iter().map(String::as_str));
        let mut seen = HashSet::new();
        locations.retain(|l| seen.insert(*l));

        let candidates: Vec<String> = locations
            .iter()
            .flat_map(|loc| {
                names.iter().filter_map(move |n| {
                    if loc.is_empty() {
                        normalize_relative(n)
                    } else {
                        normalize_relative(&format!("{loc}/{n}"))
                    }
                })
            })
            .collect();
        candidates
            .iter()
            .find(|c| self.project.contains(c))
            .cloned()
            .or_else(|| {
                candidates
                    .iter()
                    .find_map(|c| self.by_lowercase.get(&c.to_lowercase()).cloned())
            })
    }
}

/// Resolves one raw argument as `command` would from `origin`.
pub fn resolve_reference(
    raw: &str,
    origin: &str,
    project: &ProjectTree,
    graphics_paths: &[String],
    command: &CommandSpec,
) -> Option<String> {
    Resolver::new(project, origin, graphics_paths).resolve(raw, origin, &command.extensions, &command.templates)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReferenceEdge {
    pub from: String,
    pub command: String,
    pub raw: String,
    pub resolved: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsageClosure {
    pub used: BTreeSet<String>,
    pub residual: BTreeSet<String>,
    /// Every file under the top-level `anc/` folder, referenced or not.
    pub anc: BTreeSet<String>,
    pub edges: Vec<ReferenceEdge>,
    pub graphics_paths: Vec<String>,
    /// User macros defined in used files that wrap a reference command.
    /// Files reached only through them end up residual.
    pub aliases: BTreeSet<String>,
}

impl UsageClosure {
    pub fn dangling(&self) -> impl Iterator<Item = &ReferenceEdge> {
        self.edges.iter().filter(|e| e.resolved.is_none())
    }
}

fn is_tex_like(path: &str, project: &ProjectTree) -> bool {
    let ext = extension_lower(path);
    if TEX_LIKE.contains(&ext.as_str()) {
        return true;
    }
    ext.is_empty() && project.read(path).is_ok_and(|b| b.contains(&b'\\'))
}

const FONT_FILE_COMMAND: &str = "font_file";

/// Breadth-first traversal from `root` over resolved references.
///
/// Graphics paths declared anywhere in the traversed files apply to every
/// lookup; the traversal is repeated until the set of declared paths stops
/// growing. If `root` is not part of the project the used set is empty.
pub fn compute_closure(root: &str, project: &ProjectTree, config: &PatternConfig) -> UsageClosure {
    let mut graphics_paths: Vec<String> = Vec::new();
    loop {
        let (mut closure, discovered) = traverse(root, project, config, &graphics_paths);
        let before = graphics_paths.len();
        for d in discovered {
            if !graphics_paths.contains(&d) {
                graphics_paths.push(d);
            }
        }
        if graphics_paths.len() == before {
            closure.graphics_paths = graphics_paths;
            return closure;
        }
    }
}

fn traverse(
    root: &str,
    project: &ProjectTree,
    config: &PatternConfig,
    graphics_paths: &[String],
) -> (UsageClosure, Vec<String>) {
    let resolver = Resolver::new(project, root, graphics_paths);
    let anc: BTreeSet<String> = project
        .files()
        .filter(|f| f.in_anc)
        .map(|f| f.relative_path.clone())
        .collect();
    let mut used = BTreeSet::new();
    let mut edges = Vec::new();
    let mut discovered = Vec::new();
    let mut aliases = BTreeSet::new();
    let mut visited = HashSet::new();
    let mut queue = VecDeque::new();
    let no_templates = vec!["{}".to_string()];

    if project.contains(root) {
        used.insert(root.to_string());
        visited.insert(root.to_string());
        queue.push_back(root.to_string());
    }

    while let Some(file) = queue.pop_front() {
        let mut targets: Vec<(String, String, Option<String>)> = Vec::new();
        let Ok(bytes) = project.read(&file) else {
            continue;
        };
        if extension_lower(&file) == ".map" {
            let text = decode_permissive(&bytes);
            for caps in config.font_file_pattern.captures_iter(&text) {
                let raw = caps[1].to_string();
                let hit = resolver.resolve(&raw, &file, &[], &no_templates);
                targets.push((FONT_FILE_COMMAND.to_string(), raw, hit));
            }
        } else if is_tex_like(&file, project) {
            let source = decode_permissive(&bytes);
            let blocks = extract_comments(&source, &file);
            let masked = mask_comments(&source, &blocks);
            discovered.extend(extract_graphics_paths(&masked));
            aliases.extend(detect_aliases(&masked, config));
            for r in extract_references_masked(&masked, config) {
                let cmd = &config.commands[r.command_index];
                match cmd.role {
                    CommandRole::File => {
                        let hit = resolver.resolve(&r.raw, &file, &cmd.extensions, &cmd.templates);
                        targets.push((r.command, r.raw, hit));
                    }
                    CommandRole::FontLine => {
                        for caps in config.font_file_pattern.captures_iter(&r.raw) {
                            let raw = caps[1].to_string();
                            let hit = resolver.resolve(&raw, &file, &[], &no_templates);
                            targets.push((r.command.clone(), raw, hit));
                        }
                    }
                    CommandRole::FontShape => {
                        for name in font_shape_names(&r.raw) {
                            let hit = resolver.resolve(&name, &file, &cmd.extensions, &no_templates);
                            targets.push((r.command.clone(), name, hit));
                        }
                    }
                }
            }
        }
        for (command, raw, resolved) in targets {
            if let Some(t) = &resolved {
                if !anc.contains(t) {
                    used.insert(t.clone());
                }
                if visited.insert(t.clone()) {
                    queue.push_back(t.clone());
                }
            }
            edges.push(ReferenceEdge {
                from: file.clone(),
                command,
                raw,
                resolved,
            });
        }
    }

    let residual = project
        .files()
        .map(|f| &f.relative_path)
        .filter(|p| !used.contains(*p) && !anc.contains(*p))
        .cloned()
        .collect();
    (
        UsageClosure {
            used,
            residual,
            anc,
            edges,
            graphics_paths: Vec::new(),
            aliases,
        },
        discovered,
    )
}

/// Font names in a `\DeclareFontShape` size specification such as
/// `<5> <6> cmr6 <-> s*[0.95] cmr10`.
fn font_shape_names(spec: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = spec;
    while let Some(gt) = rest.find('>') {
        rest = &rest[gt + 1..];
        let segment = rest.split('<').next().unwrap_or("");
        let segment = segment.split(';').next().unwrap_or("");
        for tok in segment.split_whitespace() {
            let tok = tok.trim_start_matches(['[', ']', '*']);
            let tok = match tok.rfind(']') {
                Some(i) => &tok[i + 1..],
                None => tok,
            };
            if !tok.is_empty()
                && tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
                && !matches!(tok, "s" | "sub" | "ssub" | "gen" | "sgen")
                && !tok.chars().all(|c| c.is_ascii_digit())
            {
                out.push(tok.to_string());
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
