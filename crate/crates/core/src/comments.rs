//! Extraction of commented-out text from TeX sources.
//!
//! Four forms are recognized: the remainder of a line after an unescaped
//! `%`, the body of a `comment` environment, the false branch of
//! `\iffalse ... \fi`, and the body of an `\if0 ... \fi` opened at the start
//! of a line. The byte spans reported here are the same spans that
//! reference extraction masks out (see [`mask_comments`]).

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentKind {
    LinePercent,
    CommentEnvironment,
    IfFalse,
    IfZero,
}

impl CommentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommentKind::LinePercent => "percent",
            CommentKind::CommentEnvironment => "environment",
            CommentKind::IfFalse => "iffalse",
            CommentKind::IfZero => "if0",
        }
    }
}

impl fmt::Display for CommentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "percent" => CommentKind::LinePercent,
            "environment" => CommentKind::CommentEnvironment,
            "iffalse" => CommentKind::IfFalse,
            "if0" => CommentKind::IfZero,
            other => return Err(format!("unknown comment kind {other:?}")),
        })
    }
}

/// One region of commented-out text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentBlock {
    pub source_file: String,
    pub kind: CommentKind,
    /// 1-based line on which `text` begins.
    pub start_line: u32,
    /// Comment content without delimiters.
    pub text: String,
    /// Byte span of the whole region in the source, delimiters included.
    pub span: Range<usize>,
    /// Set when the block ran to end of file without its closing delimiter.
    pub unterminated: bool,
}

const BEGIN_COMMENT: &str = "\\begin{comment}";
const END_COMMENT: &str = "\\end{comment}";

/// Extracts every comment block from `source`, in source order.
pub fn extract_comments(source: &str, source_file: &str) -> Vec<CommentBlock> {
    let lines = LineIndex::new(source);
    let b = source.as_bytes();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'%' => {
                let (end, text_end) = line_end(b, i + 1);
                blocks.push(CommentBlock {
                    source_file: source_file.to_string(),
                    kind: CommentKind::LinePercent,
                    start_line: lines.line_of(i),
                    text: source[i + 1..text_end].to_string(),
                    span: i..end,
                    unterminated: false,
                });
                i = end;
            }
            b'\\' => {
                if source[i..].starts_with(BEGIN_COMMENT) {
                    let body_start = i + BEGIN_COMMENT.len();
                    let (body_end, end, unterminated) = match source[body_start..].find(END_COMMENT) {
                        Some(off) => (body_start + off, body_start + off + END_COMMENT.len(), false),
                        None => (b.len(), b.len(), true),
                    };
                    blocks.push(delimited_block(
                        source,
                        source_file,
                        &lines,
                        CommentKind::CommentEnvironment,
                        i..end,
                        body_start..body_end,
                        unterminated,
                    ));
                    i = end;
                } else if control_word_at(b, i) == b"iffalse" {
                    let body_start = i + 1 + "iffalse".len();
                    let (body_end, end, unterminated) = skip_conditional(b, body_start);
                    blocks.push(delimited_block(
                        source,
                        source_file,
                        &lines,
                        CommentKind::IfFalse,
                        i..end,
                        body_start..body_end,
                        unterminated,
                    ));
                    i = end;
                } else if source[i..].starts_with("\\if0") && at_line_start(b, i) {
                    let body_start = i + "\\if0".len();
                    let (body_end, end, unterminated) = skip_conditional(b, body_start);
                    blocks.push(delimited_block(
                        source,
                        source_file,
                        &lines,
                        CommentKind::IfZero,
                        i..end,
                        body_start..body_end,
                        unterminated,
                    ));
                    i = end;
                } else {
                    // A backslash escapes the next character, so `\%` is a
                    // literal percent while `\\%` opens a comment.
                    i += 1 + b.get(i + 1).map_or(0, |&c| utf8_len(c));
                }
            }
            c => i += utf8_len(c),
        }
    }
    if log::log_enabled!(log::Level::Debug) {
        for blk in blocks.iter().filter(|b| b.unterminated) {
            log::debug!(
                "{}:{}: unterminated {} block",
                blk.source_file,
                blk.start_line,
                blk.kind
            );
        }
    }
    blocks
}

/// Replaces every byte inside the blocks' spans with a space, keeping
/// newlines so that line numbers and offsets are preserved.
pub fn mask_comments(source: &str, blocks: &[CommentBlock]) -> String {
    let mut bytes = source.as_bytes().to_vec();
    for blk in blocks {
        for byte in &mut bytes[blk.span.clone()] {
            if *byte != b'\n' {
                *byte = b' ';
            }
        }
    }
    // Spans start and end on ASCII delimiters or line ends, and every byte
    // inside them became ASCII, so the result is valid UTF-8.
    String::from_utf8(bytes).expect("masking preserves UTF-8")
}

fn delimited_block(
    source: &str,
    source_file: &str,
    lines: &LineIndex,
    kind: CommentKind,
    span: Range<usize>,
    body: Range<usize>,
    unterminated: bool,
) -> CommentBlock {
    let trimmed = trim_body(source, body);
    CommentBlock {
        source_file: source_file.to_string(),
        kind,
        start_line: lines.line_of(trimmed.start),
        text: source[trimmed].to_string(),
        span,
        unterminated,
    }
}

/// Drops horizontal whitespace plus at most one line break from each end
/// of a block body, so delimiter lines do not contribute to the text.
fn trim_body(source: &str, body: Range<usize>) -> Range<usize> {
    let b = source.as_bytes();
    let (mut start, mut end) = (body.start, body.end);
    while start < end && matches!(b[start], b' ' | b'\t') {
        start += 1;
    }
    if start < end && b[start] == b'\r' && start + 1 < end && b[start + 1] == b'\n' {
        start += 2;
    } else if start < end && b[start] == b'\n' {
        start += 1;
    }
    while end > start && matches!(b[end - 1], b' ' | b'\t') {
        end -= 1;
    }
    if end > start && b[end - 1] == b'\n' {
        end -= 1;
        if end > start && b[end - 1] == b'\r' {
            end -= 1;
        }
    }
    start..end
}

/// Scans a skipped conditional starting at `from` (just past the opener).
/// Returns (body end, block end, unterminated). Nested `\if...` tokens
/// increase the depth; a top-level `\else` ends the skipped branch.
fn skip_conditional(b: &[u8], from: usize) -> (usize, usize, bool) {
    let mut depth = 1usize;
    let mut j = from;
    while j < b.len() {
        match b[j] {
            b'%' => j = line_end(b, j + 1).0,
            b'\\' => {
                let word = control_word_at(b, j);
                if word.is_empty() {
                    j += 1 + b.get(j + 1).map_or(0, |&c| utf8_len(c));
                    continue;
                }
                match word {
                    b"fi" => {
                        depth -= 1;
                        if depth == 0 {
                            return (j, j + 3, false);
                        }
                    }
                    b"else" if depth == 1 => return (j, j + 5, false),
                    w if w.starts_with(b"if") && w != b"ifthenelse" => depth += 1,
                    _ => {}
                }
                j += 1 + word.len();
            }
            c => j += utf8_len(c),
        }
    }
    (b.len(), b.len(), true)
}

/// The ASCII letters following the backslash at `i` (empty for control
/// symbols such as `\%`).
fn control_word_at(b: &[u8], i: usize) -> &[u8] {
    let start = i + 1;
    let mut end = start;
    while end < b.len() && b[end].is_ascii_alphabetic() {
        end += 1;
    }
    &b[start..end]
}

fn at_line_start(b: &[u8], i: usize) -> bool {
    b[..i]
        .iter()
        .rev()
        .take_while(|&&c| c != b'\n')
        .all(|&c| c == b' ' || c == b'\t')
}

/// Returns (offset of the newline or EOF, end of the line's text with any
/// trailing carriage return excluded).
fn line_end(b: &[u8], from: usize) -> (usize, usize) {
    let end = b[from.min(b.len())..]
        .iter()
        .position(|&c| c == b'\n')
        .map_or(b.len(), |p| from + p);
    let text_end = if end > from && b[end - 1] == b'\r' {
        end - 1
    } else {
        end
    };
    (end, text_end)
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        0xf0..=0xf7 => 4,
        _ => 1,
    }
}

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(source: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(
            source
                .bytes()
                .enumerate()
                .filter(|&(_, c)| c == b'\n')
                .map(|(i, _)| i + 1),
        );
        Self { starts }
    }

    fn line_of(&self, offset: usize) -> u32 {
        (self.starts.partition_point(|&s| s <= offset)) as u32
    }
}

/// One headed entry of a project's comments document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentEntry {
    pub file: String,
    pub line: u32,
    pub kind: CommentKind,
    pub text: String,
}

/// All comments of a project's used TeX files, concatenated in
/// (file, line) order. Each entry is written as
///
/// ```text
/// %%% line=<n> kind=<kind> bytes=<len> file=<path>
/// <text>
/// ```
///
/// where `bytes` is the UTF-8 length of `<text>`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommentsDocument {
    pub entries: Vec<DocumentEntry>,
}

const HEADER_PREFIX: &str = "%%% ";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed comments document at byte {offset}: {reason}")]
pub struct DocumentParseError {
    pub offset: usize,
    pub reason: String,
}

impl CommentsDocument {
    /// Builds the document from per-file block lists. Only the files passed
    /// in contribute; callers pass the used TeX files of a project.
    pub fn from_blocks<I>(blocks: I) -> Self
    where
        I: IntoIterator<Item = CommentBlock>,
    {
        let mut all: Vec<CommentBlock> = blocks.into_iter().collect();
        all.sort_by(|a, b| {
            (&a.source_file, a.start_line, a.span.start).cmp(&(&b.source_file, b.start_line, b.span.start))
        });
        Self {
            entries: all
                .into_iter()
                .map(|b| DocumentEntry {
                    file: b.source_file,
                    line: b.start_line,
                    kind: b.kind,
                    text: b.text,
                })
                .collect(),
        }
    }

    /// Comment size of the project: text bytes only, headers excluded.
    pub fn text_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.text.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Renders the document, returning it along with the byte offset at
    /// which each entry's text starts.
    pub fn render_with_offsets(&self) -> (String, Vec<usize>) {
        let mut out = String::new();
        let mut offsets = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let file = e.file.replace(['\n', '\r'], "?");
            out.push_str(&format!(
                "{HEADER_PREFIX}line={} kind={} bytes={} file={}\n",
                e.line,
                e.kind,
                e.text.len(),
                file
            ));
            offsets.push(out.len());
            out.push_str(&e.text);
            out.push('\n');
        }
        (out, offsets)
    }

    pub fn render(&self) -> String {
        self.render_with_offsets().0
    }

    /// Parses a rendered document, returning entries with their text
    /// offsets.
    pub fn parse_with_offsets(doc: &str) -> Result<(Self, Vec<usize>), DocumentParseError> {
        let err = |offset: usize, reason: &str| DocumentParseError {
            offset,
            reason: reason.to_string(),
        };
        let mut entries = Vec::new();
        let mut offsets = Vec::new();
        let mut pos = 0;
        while pos < doc.len() {
            let rest = &doc[pos..];
            let header_end = rest.find('\n').ok_or_else(|| err(pos, "header without newline"))?;
            let header = rest[..header_end]
                .strip_prefix(HEADER_PREFIX)
                .ok_or_else(|| err(pos, "missing header prefix"))?;
            let (mut line, mut kind, mut bytes, mut file) = (None, None, None, None);
            let mut fields = header;
            while !fields.is_empty() {
                if let Some(path) = fields.strip_prefix("file=") {
                    file = Some(path.to_string());
                    break;
                }
                let (field, tail) = fields.split_once(' ').unwrap_or((fields, ""));
                let (key, value) = field.split_once('=').ok_or_else(|| err(pos, "bad header field"))?;
                match key {
                    "line" => line = value.parse::<u32>().ok(),
                    "kind" => kind = value.parse::<CommentKind>().ok(),
                    "bytes" => bytes = value.parse::<usize>().ok(),
                    _ => return Err(err(pos, "unknown header field")),
                }
                fields = tail;
            }
            let (Some(line), Some(kind), Some(bytes), Some(file)) = (line, kind, bytes, file) else {
                return Err(err(pos, "incomplete header"));
            };
            let text_start = pos + header_end + 1;
            let text_end = text_start + bytes;
            let text = doc
                .get(text_start..text_end)
                .ok_or_else(|| err(text_start, "text shorter than declared"))?;
            if doc.as_bytes().get(text_end) != Some(&b'\n') {
                return Err(err(text_end, "missing entry terminator"));
            }
            offsets.push(text_start);
            entries.push(DocumentEntry {
                file,
                line,
                kind,
                text: text.to_string(),
            });
            pos = text_end + 1;
        }
        Ok((Self { entries }, offsets))
    }

    pub fn parse(doc: &str) -> Result<Self, DocumentParseError> {
        Self::parse_with_offsets(doc).map(|(d, _)| d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(src: &str) -> Vec<(CommentKind, u32, String)> {
        extract_comments(src, "f.tex")
            .into_iter()
            .map(|b| (b.kind, b.start_line, b.text))
            .collect()
    }

    #[test]
    fn escaped_percent_is_literal() {
        assert_eq!(
            texts("x \\% y % note"),
            vec![(CommentKind::LinePercent, 1, " note".to_string())]
        );
    }

    #[test]
    fn double_backslash_then_percent_opens_comment() {
        assert_eq!(
            texts("a \\\\% b\n"),
            vec![(CommentKind::LinePercent, 1, " b".to_string())]
        );
    }

    #[test]
    fn iffalse_inline() {
        assert_eq!(
            texts("\\iffalse hidden text \\fi"),
            vec![(CommentKind::IfFalse, 1, "hidden text".to_string())]
        );
    }

    #[test]
    fn empty_source() {
        assert!(texts("").is_empty());
    }

    #[test]
    fn comment_environment_three_lines() {
        let src = "intro\n\\begin{comment}\nline one\nline two\nline three\n\\end{comment}\nafter\n";
        let blocks = extract_comments(src, "f.tex");
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].kind, CommentKind::CommentEnvironment);
        assert_eq!(blocks[0].start_line, 3);
        assert_eq!(blocks[0].text, "line one\nline two\nline three");
        assert_eq!(blocks[0].text.lines().count(), 3);
        assert_eq!(
            &src[blocks[0].span.clone()],
            "\\begin{comment}\nline one\nline two\nline three\n\\end{comment}"
        );
    }

    #[test]
    fn iffalse_nested_conditionals_and_else() {
        let src = "\\iffalse a \\ifx\\x\\y b \\fi c \\else live \\fi";
        let blocks = extract_comments(src, "f.tex");
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].text, "a \\ifx\\x\\y b \\fi c");
        assert!(!blocks[0].unterminated);
    }

    #[test]
    fn percent_fi_inside_iffalse_does_not_close() {
        let src = "\\iffalse\nx % \\fi\ny\n\\fi\n";
        let blocks = extract_comments(src, "f.tex");
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].text, "x % \\fi\ny");
    }

    #[test]
    fn if0_only_at_line_start() {
        assert_eq!(texts("  \\if0\nold\n\\fi").len(), 1);
        assert!(texts("x \\if0 old \\fi").is_empty());
    }

    #[test]
    fn unterminated_blocks_run_to_eof() {
        let blocks = extract_comments("a\n\\begin{comment}\nrest\n", "f.tex");
        assert!(blocks[0].unterminated);
        assert_eq!(blocks[0].text, "rest");
        let blocks = extract_comments("\\iffalse never closed", "f.tex");
        assert!(blocks[0].unterminated);
        assert_eq!(blocks[0].text, "never closed");
    }

    #[test]
    fn commented_out_opener_is_not_a_block() {
        let got = texts("% \\iffalse\nlive\n");
        assert_eq!(got, vec![(CommentKind::LinePercent, 1, " \\iffalse".to_string())]);
    }

    #[test]
    fn iffalsex_is_not_iffalse() {
        assert!(texts("\\iffalsex y \\fi").is_empty());
    }

    #[test]
    fn crlf_line_comment() {
        assert_eq!(texts("% a\r\nb"), vec![(CommentKind::LinePercent, 1, " a".to_string())]);
    }

    #[test]
    fn mask_keeps_layout() {
        let src = "a % b\n\\input{x} % \\input{y}\n";
        let blocks = extract_comments(src, "f.tex");
        let masked = mask_comments(src, &blocks);
        assert_eq!(masked.len(), src.len());
        assert_eq!(masked, "a    \n\\input{x}            \n");
    }

    #[test]
    fn document_orders_and_sizes() {
        let mut blocks = extract_comments("% b1\n", "b.tex");
        blocks.extend(extract_comments("% a1\n", "a.tex"));
        let doc = CommentsDocument::from_blocks(blocks);
        assert_eq!(doc.entries[0].file, "a.tex");
        assert_eq!(doc.entries[1].file, "b.tex");
        assert_eq!(doc.text_bytes(), 6);
        let rendered = doc.render();
        assert_eq!(
            rendered,
            "%%% line=1 kind=percent bytes=3 file=a.tex\n a1\n%%% line=1 kind=percent bytes=3 file=b.tex\n b1\n"
        );
    }

    #[test]
    fn thousand_one_line_comments_size_excludes_headers() {
        let src: String = (0..1000).map(|i| format!("% c{i}\n")).collect();
        let blocks = extract_comments(&src, "m.tex");
        assert_eq!(blocks.len(), 1000);
        let expected: u64 = (0..1000).map(|i| format!(" c{i}").len() as u64).sum();
        let doc = CommentsDocument::from_blocks(blocks);
        assert_eq!(doc.text_bytes(), expected);
        assert!(doc.render().len() as u64 > expected);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(CommentsDocument::parse("hello\n").is_err());
        assert!(CommentsDocument::parse("%%% line=1 kind=percent bytes=99 file=a\nshort\n").is_err());
        assert_eq!(CommentsDocument::parse("").unwrap(), CommentsDocument::default());
    }

    fn tex_fragment() -> impl Strategy<Value = String> {
        let atoms = prop::sample::select(vec![
            "a",
            " ",
            "\n",
            "%",
            "\\%",
            "\\\\",
            "\\iffalse",
            "\\fi",
            "\\else",
            "\\if0",
            "\\ifx",
            "\\begin{comment}",
            "\\end{comment}",
            "x\u{e9}",
            "{",
            "}",
            "\\input{f}",
            "\r\n",
        ]);
        prop::collection::vec(atoms, 0..40).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn blocks_are_ordered_and_disjoint(src in tex_fragment()) {
            let blocks = extract_comments(&src, "p.tex");
            for pair in blocks.windows(2) {
                prop_assert!(pair[0].span.end <= pair[1].span.start);
            }
            for b in &blocks {
                prop_assert!(b.start_line >= 1);
                prop_assert!(src[b.span.clone()].contains(b.text.as_str()));
            }
        }

        #[test]
        fn document_round_trips(src in tex_fragment(), other in tex_fragment()) {
            let mut blocks = extract_comments(&src, "dir/one file.tex");
            blocks.extend(extract_comments(&other, "two.tex"));
            let doc = CommentsDocument::from_blocks(blocks);
            let parsed = CommentsDocument::parse(&doc.render()).unwrap();
            prop_assert_eq!(parsed, doc);
        }

        #[test]
        fn masking_removes_exactly_the_spans(src in tex_fragment()) {
            let blocks = extract_comments(&src, "p.tex");
            let masked = mask_comments(&src, &blocks);
            prop_assert_eq!(masked.len(), src.len());
            let mb = masked.as_bytes();
            let sb = src.as_bytes();
            for i in 0..sb.len() {
                let inside = blocks.iter().any(|b| b.span.contains(&i));
                if inside {
                    prop_assert!(mb[i] == b' ' || mb[i] == b'\n');
                } else {
                    prop_assert_eq!(mb[i], sb[i]);
                }
            }
        }
    }
}
