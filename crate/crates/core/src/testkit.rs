//! Synthetic corpora with known answers, for integration and acceptance
//! tests.
//!
//! Every generated project records which files a correct analysis must
//! call used, residual and ancillary. Projects that reach a file only
//! through a macro alias record it separately: the analyzer cannot see
//! through aliases, so those files are expected in its residual set.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use flate2::{Compression, GzBuilder};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::id::SubmissionId;

/// Residual situations a project can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Plant {
    UnusedImages,
    DuplicateClassTemplate,
    Ancillary,
    MapFonts,
    CommentedIncludes,
    CircularInputs,
    GraphicsPath,
    BuildArtifacts,
    AliasMacro,
}

impl Plant {
    pub const ALL: [Plant; 9] = [
        Plant::UnusedImages,
        Plant::DuplicateClassTemplate,
        Plant::Ancillary,
        Plant::MapFonts,
        Plant::CommentedIncludes,
        Plant::CircularInputs,
        Plant::GraphicsPath,
        Plant::BuildArtifacts,
        Plant::AliasMacro,
    ];
}

#[derive(Debug, Clone)]
pub struct SyntheticProject {
    pub id: SubmissionId,
    pub files: BTreeMap<String, Vec<u8>>,
    pub root: String,
    pub used: BTreeSet<String>,
    pub residual: BTreeSet<String>,
    pub anc: BTreeSet<String>,
    /// Needed files reachable only through an alias macro.
    pub aliased: BTreeSet<String>,
    pub plants: BTreeSet<Plant>,
}

impl SyntheticProject {
    pub fn has_alias(&self) -> bool {
        self.plants.contains(&Plant::AliasMacro)
    }

    /// Residual set a static analysis is expected to report: the true
    /// residual files plus whatever hides behind aliases.
    pub fn expected_reported_residual(&self) -> BTreeSet<String> {
        self.residual.union(&self.aliased).cloned().collect()
    }

    pub fn total_bytes(&self) -> u64 {
        self.files.values().map(|b| b.len() as u64).sum()
    }

    /// The tar archive of the project, members in path order.
    pub fn tar_bytes(&self) -> Vec<u8> {
        tar_of(self.files.iter().map(|(p, d)| (p.as_str(), d.as_slice())))
    }

    /// The submission file: the tar wrapped in gzip, named after the ID.
    pub fn submission_bytes(&self) -> Vec<u8> {
        gzip_named(&self.id.to_string(), &self.tar_bytes())
    }
}

pub fn tar_of<'a, I>(files: I) -> Vec<u8>
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    let mut builder = tar::Builder::new(Vec::new());
    for (path, data) in files {
        let mut h = tar::Header::new_gnu();
        h.set_size(data.len() as u64);
        h.set_mode(0o644);
        h.set_mtime(0);
        builder.append_data(&mut h, path, data).expect("in-memory tar");
    }
    builder.into_inner().expect("in-memory tar")
}

pub fn gzip_named(name: &str, data: &[u8]) -> Vec<u8> {
    let mut enc = GzBuilder::new()
        .filename(name)
        .mtime(0)
        .write(Vec::new(), Compression::fast());
    enc.write_all(data).expect("in-memory gzip");
    enc.finish().expect("in-memory gzip")
}

/// Knobs for generated projects.
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Size range of each generated image, in bytes.
    pub image_bytes: std::ops::Range<usize>,
    /// Filler paragraphs per TeX section.
    pub paragraphs: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            image_bytes: 200..4_000,
            paragraphs: 3,
        }
    }
}

impl GenOptions {
    /// Projects of roughly 0.7MB unpacked with around twenty-five files.
    pub fn median() -> Self {
        Self {
            image_bytes: 40_000..160_000,
            paragraphs: 40,
        }
    }
}

const LOREM: &str = "Lorem ipsum dolor sit amet, consectetur adipiscing elit, sed do eiusmod tempor incididunt ut labore et dolore magna aliqua.";

struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    opts: &'r GenOptions,
    files: BTreeMap<String, Vec<u8>>,
    used: BTreeSet<String>,
    residual: BTreeSet<String>,
    anc: BTreeSet<String>,
    aliased: BTreeSet<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Used,
    Residual,
    Anc,
    Aliased,
}

impl Builder<'_> {
    fn add(&mut self, path: &str, data: Vec<u8>, role: Role) {
        self.files.insert(path.to_string(), data);
        let set = match role {
            Role::Used => &mut self.used,
            Role::Residual => &mut self.residual,
            Role::Anc => &mut self.anc,
            Role::Aliased => &mut self.aliased,
        };
        set.insert(path.to_string());
    }

    fn blob(&mut self, magic: &[u8]) -> Vec<u8> {
        let n = self.rng.gen_range(self.opts.image_bytes.clone()).max(magic.len());
        let mut v = vec![0u8; n];
        self.rng.fill_bytes(&mut v);
        v[..magic.len()].copy_from_slice(magic);
        v
    }

    fn filler(&mut self) -> String {
        let mut s = String::new();
        for _ in 0..self.opts.paragraphs {
            let words = self.rng.gen_range(1..4);
            for _ in 0..words {
                s.push_str(LOREM);
                s.push(' ');
            }
            s.push_str("\n\n");
        }
        s
    }
}

const PNG: &[u8] = b"\x89PNG\r\n\x1a\n";
const JPG: &[u8] = b"\xff\xd8\xff\xe0";
const PDF: &[u8] = b"%PDF-1.5\n";

/// Plants used by project `index`: a rotating selection so that every
/// plant appears many times in a corpus of fifty or more, with every
/// eighth project using an alias macro.
pub fn plants_for(index: usize) -> BTreeSet<Plant> {
    let mut set = BTreeSet::new();
    let ordinary = &Plant::ALL[..8];
    for (bit, plant) in ordinary.iter().enumerate() {
        if (index + 1) & (1 << (bit % 4)) != 0 || index % 8 == bit {
            set.insert(*plant);
        }
    }
    if index % 8 == 7 {
        set.insert(Plant::AliasMacro);
    }
    set
}

/// Builds one project with the given plants.
pub fn generate_project(
    id: SubmissionId,
    plants: &BTreeSet<Plant>,
    opts: &GenOptions,
    rng: &mut ChaCha8Rng,
) -> SyntheticProject {
    let root_names = ["main.tex", "paper.tex", "ms.tex", "article.tex"];
    let root = root_names[rng.gen_range(0..root_names.len())].to_string();
    let stem = root.trim_end_matches(".tex").to_string();
    let mut b = Builder {
        rng,
        opts,
        files: BTreeMap::new(),
        used: BTreeSet::new(),
        residual: BTreeSet::new(),
        anc: BTreeSet::new(),
        aliased: BTreeSet::new(),
    };
    let has = |p: Plant| plants.contains(&p);

    let mut pre = String::from(
        "\\documentclass[11pt]{article}\n\\usepackage{amsmath}\n\\usepackage{graphicx}\n\\usepackage{localstyle}\n",
    );
    let mut body = String::from("\\begin{document}\n\\maketitle\n\\input{sections/intro}\n");
    let f1 = b.blob(PNG);
    b.add("figs/fig1.png", f1, Role::Used);
    body.push_str("\\begin{figure}\\includegraphics[width=0.5\\linewidth]{figs/fig1}\\end{figure}\n");
    b.add(
        "localstyle.sty",
        b"\\RequirePackage{xcolor}\n\\newcommand{\\note}[1]{\\textcolor{red}{#1}}\n".to_vec(),
        Role::Used,
    );
    let intro = format!(
        "\\section{{Introduction}}\n{}\\includegraphics[width=3cm]{{figs/fig2.jpg}}\n",
        b.filler()
    );
    b.add("sections/intro.tex", intro.into_bytes(), Role::Used);
    let f2 = b.blob(JPG);
    b.add("figs/fig2.jpg", f2, Role::Used);
    b.add(
        "refs.bib",
        b"@article{key,\n  title={A title},\n  author={Doe, J.},\n  year={2020}\n}\n".to_vec(),
        Role::Used,
    );

    if has(Plant::UnusedImages) {
        let n = b.rng.gen_range(1..4);
        for k in 0..n {
            let img = b.blob(PNG);
            b.add(&format!("figs/unused_{k}.png"), img, Role::Residual);
        }
        let pdf = b.blob(PDF);
        b.add("figs/old_plot.pdf", pdf, Role::Residual);
    }
    if has(Plant::DuplicateClassTemplate) {
        let t = format!(
            "\\documentclass{{article}}\n\\begin{{document}}\nTemplate instructions.\n{}\\includegraphics{{sample_fig}}\n\\end{{document}}\n",
            b.filler()
        );
        b.add("template/sample.tex", t.into_bytes(), Role::Residual);
        let img = b.blob(PNG);
        b.add("template/sample_fig.png", img, Role::Residual);
    }
    if has(Plant::Ancillary) {
        b.add("anc/data.csv", b"x,y\n1,2\n3,4\n".to_vec(), Role::Anc);
        b.add("anc/simulate.py", b"print('hello')\n".to_vec(), Role::Anc);
    }
    if has(Plant::MapFonts) {
        pre.push_str("\\pdfmapfile{+fonts/custom.map}\n");
        b.add(
            "fonts/custom.map",
            b"custom10 CustomRegular \"TeXBase1Encoding ReEncodeFont\" <8r.enc <custom10.pfb\n".to_vec(),
            Role::Used,
        );
        let f = b.blob(b"%!PS-AdobeFont");
        b.add("fonts/custom10.pfb", f, Role::Used);
        b.add("fonts/8r.enc", b"/TeXBase1Encoding [ ] def\n".to_vec(), Role::Used);
        let f = b.blob(b"%!PS-AdobeFont");
        b.add("fonts/custom12.pfb", f, Role::Residual);
    }
    if has(Plant::CommentedIncludes) {
        body.push_str("% \\input{sections/old_results}\n");
        body.push_str("\\iffalse\n\\includegraphics{figs/draft}\n\\fi\n");
        body.push_str("\\begin{comment}\n\\input{sections/appendix_draft}\n\\end{comment}\n");
        let s = format!("\\section{{Old}}\n{}", b.filler());
        b.add("sections/old_results.tex", s.into_bytes(), Role::Residual);
        let s = format!("\\section{{Appendix}}\n{}", b.filler());
        b.add("sections/appendix_draft.tex", s.into_bytes(), Role::Residual);
        let img = b.blob(PNG);
        b.add("figs/draft.png", img, Role::Residual);
        pre.push_str("\\usepackage{comment}\n");
    }
    if has(Plant::CircularInputs) {
        body.push_str("\\input{sections/loop_a}\n");
        b.add(
            "sections/loop_a.tex",
            b"\\section{A}\n\\input{sections/loop_b}\n".to_vec(),
            Role::Used,
        );
        b.add(
            "sections/loop_b.tex",
            b"\\section{B}\n\\input{sections/loop_a}\n".to_vec(),
            Role::Used,
        );
    }
    if has(Plant::GraphicsPath) {
        pre.push_str("\\graphicspath{{images/}}\n");
        body.push_str("\\includegraphics{plot}\n");
        let pdf = b.blob(PDF);
        b.add("images/plot.pdf", pdf, Role::Used);
        let img = b.blob(PNG);
        b.add("images/plot_old.png", img, Role::Residual);
    }
    if has(Plant::BuildArtifacts) {
        b.add(&format!("{stem}.aux"), b"\\relax\n".to_vec(), Role::Residual);
        b.add(&format!("{stem}.log"), b"This is pdfTeX\n".to_vec(), Role::Residual);
        b.add(
            &format!("{stem}.bbl"),
            b"\\begin{thebibliography}{1}\\end{thebibliography}\n".to_vec(),
            Role::Residual,
        );
        b.add(&format!("{stem}.synctex.gz"), vec![0x1f, 0x8b, 0, 0], Role::Residual);
    }
    if has(Plant::AliasMacro) {
        pre.push_str("\\newcommand{\\addfig}[1]{\\includegraphics[width=\\linewidth]{#1}}\n");
        body.push_str("\\addfig{figs/aliased}\n");
        let img = b.blob(PNG);
        b.add("figs/aliased.png", img, Role::Aliased);
    }

    body.push_str("Some results.\n");
    let filler = b.filler();
    body.push_str(&filler);
    body.push_str("\\bibliographystyle{plain}\n\\bibliography{refs}\n\\end{document}\n");
    let source = format!("{pre}{body}");
    b.add(&root, source.into_bytes(), Role::Used);

    SyntheticProject {
        id,
        files: b.files,
        root,
        used: b.used,
        residual: b.residual,
        anc: b.anc,
        aliased: b.aliased,
        plants: plants.clone(),
    }
}

/// `count` projects with rotating plants, IDs `2501.00001` onward.
pub fn generate_ground_truth(count: usize, seed: u64, opts: &GenOptions) -> Vec<SyntheticProject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let id = SubmissionId::new(25, 1, i as u32 + 1).expect("serial in range");
            generate_project(id, &plants_for(i), opts, &mut rng)
        })
        .collect()
}

/// A corpus entry: the file name and its bytes.
pub type CorpusFile = (String, Vec<u8>);

pub fn pdf_submission(id: SubmissionId) -> CorpusFile {
    (format!("{id}.pdf"), b"%PDF-1.4\n%synthetic\n".to_vec())
}

pub fn withdrawn_submission(id: SubmissionId) -> CorpusFile {
    (
        format!("{id}.gz"),
        gzip_named("withdrawn", b"This paper has been withdrawn by the author.\n"),
    )
}

pub fn single_tex_submission(id: SubmissionId, source: &str) -> CorpusFile {
    (format!("{id}.gz"), gzip_named(&id.to_string(), source.as_bytes()))
}

pub fn project_submission(p: &SyntheticProject) -> CorpusFile {
    (format!("{}.gz", p.id), p.submission_bytes())
}

/// A mix of outcomes: mostly multi-file projects, with PDF-only,
/// withdrawn, single-file, ambiguous-root and unrecognized entries.
pub fn mixed_corpus(count: usize, seed: u64, opts: &GenOptions) -> Vec<CorpusFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let id = SubmissionId::new(25, (i % 4) as u8 + 1, i as u32 + 1).expect("serial in range");
        let file = match i % 20 {
            3 => pdf_submission(id),
            7 => withdrawn_submission(id),
            11 => single_tex_submission(
                id,
                "\\documentclass{article}\n\\begin{document}\nShort note. % TODO expand\n\\end{document}\n",
            ),
            13 => {
                let a = b"\\documentclass{article}\\begin{document}A\\end{document}".as_slice();
                let files = [("v1/main.tex", a), ("v2/main.tex", a)];
                (format!("{id}.gz"), gzip_named(&id.to_string(), &tar_of(files)))
            }
            17 => (format!("{id}.gz"), gzip_named("notes.txt", b"plain text only")),
            _ => project_submission(&generate_project(id, &plants_for(i), opts, &mut rng)),
        };
        out.push(file);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One file per submission directly in the corpus directory.
    Loose,
    /// Chunk archives holding `per_chunk` submissions each.
    Chunked { per_chunk: usize },
}

/// Writes corpus files to `dir` in the given layout.
pub fn write_corpus(dir: &Path, files: &[CorpusFile], layout: Layout) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match layout {
        Layout::Loose => {
            for (name, data) in files {
                let p = dir.join(name);
                fs::write(&p, data)?;
                written.push(p);
            }
        }
        Layout::Chunked { per_chunk } => {
            for (n, chunk) in files.chunks(per_chunk.max(1)).enumerate() {
                let members: Vec<(String, &[u8])> = chunk
                    .iter()
                    .map(|(name, data)| (format!("{}/{name}", &name[..4]), data.as_slice()))
                    .collect();
                let tar = tar_of(members.iter().map(|(p, d)| (p.as_str(), *d)));
                let p = dir.join(format!("arXiv_src_{:03}.tar", n + 1));
                fs::write(&p, tar)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

/// Differences between a report and the known answer for its project.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mismatch {
    pub missing_used: BTreeSet<String>,
    pub extra_used: BTreeSet<String>,
    pub missing_residual: BTreeSet<String>,
    pub extra_residual: BTreeSet<String>,
    pub wrong_anc: bool,
    pub wrong_root: bool,
    pub alias_not_flagged: bool,
}

impl Mismatch {
    pub fn is_empty(&self) -> bool {
        *self == Mismatch::default()
    }
}

/// Compares a report with the project's answer. Files behind aliases are
/// expected among the reported residual files, and the alias must be
/// flagged.
pub fn compare_report(p: &SyntheticProject, report: &crate::report::AnalysisReport) -> Mismatch {
    let used: BTreeSet<String> = report.used.iter().map(|f| f.path.clone()).collect();
    let residual: BTreeSet<String> = report.residual.iter().map(|f| f.path.clone()).collect();
    let anc: BTreeSet<String> = report.anc.iter().map(|f| f.path.clone()).collect();
    let expected_residual = p.expected_reported_residual();
    Mismatch {
        missing_used: p.used.difference(&used).cloned().collect(),
        extra_used: used.difference(&p.used).cloned().collect(),
        missing_residual: expected_residual.difference(&residual).cloned().collect(),
        extra_residual: residual.difference(&expected_residual).cloned().collect(),
        wrong_anc: anc != p.anc,
        wrong_root: report.root.as_deref() != Some(p.root.as_str()),
        alias_not_flagged: p.has_alias() && report.alias_macros.is_empty(),
    }
}

/// Expected outcome of root inference for a crafted project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpectedRoot {
    Found(&'static str, crate::graph::RootHeuristic),
    Ambiguous,
    /// No candidate; `deprecated` marks projects holding only
    /// `\documentstyle` files.
    NoCandidate {
        deprecated: bool,
    },
}

#[derive(Debug, Clone)]
pub struct RootCase {
    pub name: &'static str,
    pub files: Vec<(&'static str, &'static str)>,
    pub expected: ExpectedRoot,
}

const DOC: &str = "\\documentclass{article}\n\\begin{document}\nText.\n\\end{document}\n";
const BODY: &str = "\\section{Body}\nText.\n";

/// Crafted projects covering every branch of root inference.
pub fn root_cases() -> Vec<RootCase> {
    use crate::graph::RootHeuristic::*;
    let case = |name, files: Vec<(&'static str, &'static str)>, expected| RootCase { name, files, expected };
    vec![
        case(
            "sole candidate",
            vec![("a.tex", DOC), ("body.tex", BODY)],
            ExpectedRoot::Found("a.tex", SoleCandidate),
        ),
        case(
            "sole candidate in subdirectory",
            vec![("src/x.tex", DOC)],
            ExpectedRoot::Found("src/x.tex", SoleCandidate),
        ),
        case(
            "main beats template",
            vec![("main.tex", DOC), ("template.tex", DOC)],
            ExpectedRoot::Found("main.tex", NameMatch),
        ),
        // Known wrong: the author's real root was Draft.tex, the marker rule picks main.tex.
        case(
            "draft versus main",
            vec![("Draft.tex", DOC), ("main.tex", DOC)],
            ExpectedRoot::Found("main.tex", NameMatch),
        ),
        case(
            "paper marker",
            vec![("paper.tex", DOC), ("supplement.tex", DOC)],
            ExpectedRoot::Found("paper.tex", NameMatch),
        ),
        case(
            "cameraready marker",
            vec![("cameraready.tex", DOC), ("old.tex", DOC)],
            ExpectedRoot::Found("cameraready.tex", NameMatch),
        ),
        case(
            "main outranks paper",
            vec![("main.tex", DOC), ("paper.tex", DOC)],
            ExpectedRoot::Found("main.tex", NameMatch),
        ),
        case(
            "marker is a substring of the stem",
            vec![("MyPaper_final.tex", DOC), ("appendix.tex", DOC)],
            ExpectedRoot::Found("MyPaper_final.tex", NameMatch),
        ),
        case(
            "marker match ignores case",
            vec![("MAIN.tex", DOC), ("rebuttal.tex", DOC)],
            ExpectedRoot::Found("MAIN.tex", NameMatch),
        ),
        case(
            "marker in a subdirectory",
            vec![("tex/main.tex", DOC), ("other.tex", DOC)],
            ExpectedRoot::Found("tex/main.tex", NameMatch),
        ),
        case(
            "same marker tie",
            vec![("main.tex", DOC), ("main_old.tex", DOC)],
            ExpectedRoot::Ambiguous,
        ),
        case(
            "same marker tie across directories",
            vec![("main.tex", DOC), ("v1/main.tex", DOC)],
            ExpectedRoot::Ambiguous,
        ),
        case(
            "sole topmost",
            vec![("article.tex", DOC), ("sub/response.tex", DOC)],
            ExpectedRoot::Found("article.tex", SoleTopmost),
        ),
        case(
            "two topmost without markers",
            vec![("a.tex", DOC), ("b.tex", DOC)],
            ExpectedRoot::Ambiguous,
        ),
        case(
            "none topmost",
            vec![("sub/x.tex", DOC), ("sub/y.tex", DOC)],
            ExpectedRoot::Ambiguous,
        ),
        case(
            "deprecated style only",
            vec![(
                "old.tex",
                "\\documentstyle{article}\n\\begin{document}\nx\n\\end{document}\n",
            )],
            ExpectedRoot::NoCandidate { deprecated: true },
        ),
        case(
            "no declaration at all",
            vec![("body.tex", BODY)],
            ExpectedRoot::NoCandidate { deprecated: false },
        ),
        case(
            "declaration inside a comment",
            vec![(
                "a.tex",
                "% \\documentclass{article}\n\\begin{document}\n\\end{document}\n",
            )],
            ExpectedRoot::NoCandidate { deprecated: false },
        ),
        case(
            "declaration after begin document",
            vec![
                (
                    "a.tex",
                    "\\begin{document}\n\\documentclass{article}\n\\end{document}\n",
                ),
                ("b.tex", DOC),
            ],
            ExpectedRoot::Found("b.tex", SoleCandidate),
        ),
        case(
            "ancillary tex ignored",
            vec![("anc/demo.tex", DOC), ("ms.tex", DOC)],
            ExpectedRoot::Found("ms.tex", SoleCandidate),
        ),
        case(
            "prefix control word is not a declaration",
            vec![("a.tex", "\\documentclassx{article}\n"), ("b.tex", DOC)],
            ExpectedRoot::Found("b.tex", SoleCandidate),
        ),
    ]
}

/// Runs root inference on a case, returning the observed outcome.
pub fn observe_root(case: &RootCase) -> ExpectedRoot {
    use crate::graph::{find_root_candidates, infer_root, RootOutcome};
    let (tree, _) = crate::project::ProjectTree::from_memory(
        case.files.iter().map(|(p, s)| (p.to_string(), s.as_bytes().to_vec())),
    );
    let scan = find_root_candidates(&tree);
    let decision = infer_root(&scan.candidates);
    match decision.outcome {
        RootOutcome::Found(p) => {
            let leaked: &'static str = case
                .files
                .iter()
                .map(|(f, _)| *f)
                .find(|f| *f == p)
                .unwrap_or("<unknown>");
            ExpectedRoot::Found(leaked, decision.heuristic_used.expect("found roots carry a heuristic"))
        }
        RootOutcome::Ambiguous(_) => ExpectedRoot::Ambiguous,
        RootOutcome::NoCandidate => ExpectedRoot::NoCandidate {
            deprecated: !scan.deprecated.is_empty(),
        },
    }
}

/// A random analysis report: mostly valid projects spread over a few
/// years, with every exclusion class represented.
pub fn random_report(rng: &mut ChaCha8Rng) -> crate::report::AnalysisReport {
    use crate::filetype::TypeGroup;
    use crate::ingest::SubmissionKind;
    use crate::report::{AnalysisReport, ExclusionReason, FileRecord, ResidualRecord};

    let id =
        SubmissionId::new(rng.gen_range(15..26), rng.gen_range(1..13), rng.gen_range(1..100_000)).expect("valid ID");
    let outcome = rng.gen_range(0..10);
    let kind = match outcome {
        0 => SubmissionKind::PdfOnly,
        1 => SubmissionKind::Withdrawn,
        2 => SubmissionKind::UnrecognizedType,
        3 => SubmissionKind::SingleTex,
        _ => SubmissionKind::ProjectBlob,
    };
    let mut r = AnalysisReport::new(id, kind, rng.gen_range(1..5_000_000));
    match outcome {
        0 => return r,
        1 => {
            r.exclusion_reason = Some(ExclusionReason::Withdrawn);
            return r;
        }
        2 => {
            r.exclusion_reason = Some(ExclusionReason::UnclearType);
            return r;
        }
        4 => {
            r.candidates = vec!["a.tex".into(), "b.tex".into()];
            r.exclusion_reason = Some(ExclusionReason::UnclearRoot);
            return r;
        }
        _ => {}
    }
    r.root = Some("main.tex".into());
    r.candidates = vec!["main.tex".into()];
    r.used.push(FileRecord {
        path: "main.tex".into(),
        bytes: rng.gen_range(1..200_000),
    });
    for k in 0..rng.gen_range(0..5) {
        r.used.push(FileRecord {
            path: format!("figs/u{k}.png"),
            bytes: rng.gen_range(0..3_000_000),
        });
    }
    // Residual sizes span every size bucket, including zero.
    for k in 0..rng.gen_range(0..6) {
        let bytes = match rng.gen_range(0..4) {
            0 => 0,
            1 => rng.gen_range(1..1_000),
            2 => rng.gen_range(1_000..1_000_000),
            _ => rng.gen_range(1_000_000..30_000_000),
        };
        r.residual.push(ResidualRecord {
            path: format!("old/r{k}"),
            bytes,
            group: TypeGroup::ALL[rng.gen_range(0..TypeGroup::ALL.len())],
        });
    }
    if rng.gen_bool(0.2) {
        r.anc.push(FileRecord {
            path: "anc/data.csv".into(),
            bytes: rng.gen_range(0..100_000),
        });
    }
    r.comment_bytes = if rng.gen_bool(0.3) { 0 } else { rng.gen_range(1..50_000) };
    if rng.gen_bool(0.1) {
        r.alias_macros.push("\\fig".into());
    }
    r
}

pub fn random_reports(seed: u64, count: usize) -> Vec<crate::report::AnalysisReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_report(&mut rng)).collect()
}

/// Random category records for some of the given reports.
pub fn random_categories(
    seed: u64,
    reports: &[crate::report::AnalysisReport],
) -> std::collections::HashMap<SubmissionId, crate::metadata::CategoryRecord> {
    use crate::metadata::{CategoryRecord, MainCategory};
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = std::collections::HashMap::new();
    for r in reports {
        if rng.gen_bool(0.8) {
            let mut cats: Vec<MainCategory> = MainCategory::ALL
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.3))
                .collect();
            if cats.is_empty() {
                cats.push(MainCategory::Cs);
            }
            let rec = CategoryRecord {
                submission: r.submission,
                primary_categories: cats,
                cryptography_security: rng.gen_bool(0.2),
            };
            out.insert(r.submission, rec);
        }
    }
    out
}

/// Checks the aggregation identities on one batch of reports. Expected
/// totals are summed straight from the reports, not through the rollup.
pub fn check_aggregation_identities(reports: &[crate::report::AnalysisReport], seed: u64) -> Result<(), String> {
    use crate::aggregate::{aggregate, CorpusReport};
    let fail = |what: &str| Err(format!("{what} (seed {seed}, {} reports)", reports.len()));
    let meta = random_categories(seed, reports);
    let whole = aggregate(reports, Some(&meta));

    for (label, r) in whole.periods() {
        if r.size_buckets.values().sum::<u64>() != r.kinds.valid_projects {
            return fail(&format!("size buckets do not partition projects in {label}"));
        }
        if r.ratio_buckets.values().sum::<u64>() != r.kinds.valid_projects {
            return fail(&format!("ratio buckets do not partition projects in {label}"));
        }
        if r.residual_bytes() != r.residual_file_bytes + r.comment_bytes {
            return fail(&format!("residual data is not files plus comments in {label}"));
        }
        let k = &r.kinds;
        if k.valid_projects + k.pdf_only + k.withdrawn + k.unclear_root + k.unclear_type != k.submissions {
            return fail(&format!("outcome columns do not partition submissions in {label}"));
        }
        if r.categories
            .values()
            .any(|c| c.over_half > c.projects || c.over_1mb > c.projects || c.selected > c.projects)
        {
            return fail(&format!("category row exceeds its project count in {label}"));
        }
    }

    let valid: Vec<_> = reports.iter().filter(|r| r.is_valid_project()).collect();
    let files: u64 = valid.iter().flat_map(|r| &r.residual).map(|f| f.bytes).sum();
    let comments: u64 = valid.iter().map(|r| r.comment_bytes).sum();
    let total = whole.total();
    if total.residual_file_bytes != files
        || total.comment_bytes != comments
        || total.residual_bytes() != files + comments
    {
        return fail("corpus residual totals differ from the sum over reports");
    }
    if total.kinds.submissions != reports.len() as u64 || total.kinds.valid_projects != valid.len() as u64 {
        return fail("submission counts differ from the report count");
    }

    let n = reports.len();
    let (a, b) = (n / 3, 2 * n / 3);
    let part = |s: &[crate::report::AnalysisReport]| aggregate(s, Some(&meta));
    let (pa, pb, pc) = (part(&reports[..a]), part(&reports[a..b]), part(&reports[b..]));
    let mut left = pa.clone();
    left.merge(&pb);
    left.merge(&pc);
    let mut bc = pb.clone();
    bc.merge(&pc);
    let mut right = pa.clone();
    right.merge(&bc);
    let mut reversed = pc.clone();
    reversed.merge(&pb);
    reversed.merge(&pa);
    if left != whole || right != whole || reversed != whole {
        return fail("merging partial reports differs from a single pass");
    }

    for r in reports {
        let json = serde_json::to_string(r).map_err(|e| e.to_string())?;
        let back: crate::report::AnalysisReport = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        if &back != r {
            return fail(&format!("report {} does not round-trip", r.submission));
        }
    }
    let json = serde_json::to_string(&whole).map_err(|e| e.to_string())?;
    let back: CorpusReport = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    if back != whole {
        return fail("corpus report does not round-trip");
    }
    Ok(())
}

/// Expected counts for one keyword term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TermExpectation {
    pub occurrences: u64,
    pub projects: u64,
    pub benign_occurrences: u64,
}

/// A corpus of projects with keywords planted in comments and residual
/// file names, plus the exact counts a scan must report.
#[derive(Debug, Clone)]
pub struct KeywordCorpus {
    pub files: Vec<CorpusFile>,
    /// Keyed by (group, term), covering every configured term.
    pub expected: BTreeMap<(String, String), TermExpectation>,
    /// Used files whose names contain file-name terms; none may be hit.
    pub used_decoys: BTreeSet<(SubmissionId, String)>,
}

fn vary_case(term: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => term.to_string(),
        1 => term.to_uppercase(),
        _ => term
            .chars()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { c.to_ascii_uppercase() } else { c })
            .collect(),
    }
}

/// Residual file name carrying exactly one file-name term.
fn residual_name_for(term: &str, k: usize) -> String {
    if term.starts_with('.') {
        format!("extras/item{k}{term}")
    } else {
        format!("extras/{term}_{k}.txt")
    }
}

/// Projects with keywords planted at known places. Keywords also appear
/// in body text and in used file names, where they must not be counted.
pub fn keyword_corpus(count: usize, seed: u64, config: &crate::keywords::KeywordConfig) -> KeywordCorpus {
    use crate::keywords::Target;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comment_terms: Vec<(String, String)> = config
        .terms(Target::Comments)
        .into_iter()
        .map(|(g, t)| (g.to_string(), t.to_string()))
        .collect();
    let file_terms: Vec<(String, String)> = config
        .terms(Target::ResidualFilenames)
        .into_iter()
        .map(|(g, t)| (g.to_string(), t.to_string()))
        .collect();
    let mut expected: BTreeMap<(String, String), TermExpectation> = comment_terms
        .iter()
        .chain(&file_terms)
        .map(|k| (k.clone(), TermExpectation::default()))
        .collect();
    let mut used_decoys = BTreeSet::new();
    let mut files = Vec::with_capacity(count);

    for i in 0..count {
        let id = SubmissionId::new(25, 3, i as u32 + 1).expect("serial in range");
        let mut main = String::from("\\documentclass{article}\n\\usepackage{listings}\n\\begin{document}\n");
        let mut project: BTreeMap<String, Vec<u8>> = BTreeMap::new();

        // Each term goes into a rotating subset of projects so that every
        // term lands in several, with one to three occurrences each.
        for (t, key) in comment_terms.iter().enumerate() {
            if (i + t) % 3 != 0 {
                continue;
            }
            let n = rng.gen_range(1..4u64);
            for _ in 0..n {
                let shown = vary_case(&key.1, &mut rng).replacen(' ', "\t", 1);
                main.push_str(&format!("% reviewer said: {shown} here\n"));
            }
            let e = expected.get_mut(key).expect("term listed");
            e.occurrences += n;
            e.projects += 1;
        }
        if i % 5 == 0 {
            main.push_str("% margin notes come from todonotes\n");
            let e = expected
                .get_mut(&("todo".to_string(), "todo".to_string()))
                .expect("todo listed");
            e.occurrences += 1;
            e.benign_occurrences += 1;
            if (i + comment_terms.iter().position(|k| k.1 == "todo").unwrap_or(0)) % 3 != 0 {
                e.projects += 1;
            }
        }
        // Terms in running text are not comments.
        main.push_str("This is a terrible stupid mess of text, see github.com for the TODO list.\n");

        main.push_str("\\includegraphics{figs/reviews_plot.png}\n\\lstinputlisting{code/helper.py}\n");
        project.insert("figs/reviews_plot.png".into(), PNG.to_vec());
        project.insert("code/helper.py".into(), b"print(1)\n".to_vec());
        used_decoys.insert((id, "figs/reviews_plot.png".to_string()));
        used_decoys.insert((id, "code/helper.py".to_string()));

        for (t, key) in file_terms.iter().enumerate() {
            if (i + t) % 4 != 0 {
                continue;
            }
            let n = rng.gen_range(1..3usize);
            for k in 0..n {
                project.insert(residual_name_for(&key.1, k), b"residual\n".to_vec());
            }
            let e = expected.get_mut(key).expect("term listed");
            e.occurrences += n as u64;
            e.projects += 1;
        }

        main.push_str("\\end{document}\n");
        project.insert("main.tex".into(), main.into_bytes());
        let tar = tar_of(project.iter().map(|(p, d)| (p.as_str(), d.as_slice())));
        files.push((format!("{id}.gz"), gzip_named(&id.to_string(), &tar)));
    }
    KeywordCorpus {
        files,
        expected,
        used_decoys,
    }
}

/// A project that a stock TeX installation compiles: text-only sections,
/// an unused section, a template with its own document class, notes
/// and build leftovers. Used files are exactly the root and its sections.
pub fn compilable_project(id: SubmissionId, rng: &mut ChaCha8Rng) -> SyntheticProject {
    let opts = GenOptions {
        image_bytes: 1..2,
        paragraphs: rng.gen_range(2..6),
    };
    let mut b = Builder {
        rng,
        opts: &opts,
        files: BTreeMap::new(),
        used: BTreeSet::new(),
        residual: BTreeSet::new(),
        anc: BTreeSet::new(),
        aliased: BTreeSet::new(),
    };
    let sections = b.rng.gen_range(1..4);
    let mut main = String::from("\\documentclass{article}\n\\begin{document}\n");
    for k in 0..sections {
        main.push_str(&format!("\\input{{sections/s{k}}}\n"));
        let text = format!("\\section{{Part {k}}}\n{}", b.filler());
        b.add(&format!("sections/s{k}.tex"), text.into_bytes(), Role::Used);
    }
    main.push_str("% \\input{sections/unused}\n\\end{document}\n");
    b.add("main.tex", main.into_bytes(), Role::Used);
    let unused = format!("\\section{{Unused}}\n{}", b.filler());
    b.add("sections/unused.tex", unused.into_bytes(), Role::Residual);
    b.add(
        "template/sample.tex",
        b"\\documentclass{article}\n\\begin{document}\nTemplate.\n\\end{document}\n".to_vec(),
        Role::Residual,
    );
    b.add("notes.txt", b"reviewer notes\n".to_vec(), Role::Residual);
    b.add("main.aux", b"\\relax\n".to_vec(), Role::Residual);
    SyntheticProject {
        id,
        files: b.files,
        root: "main.tex".into(),
        used: b.used,
        residual: b.residual,
        anc: b.anc,
        aliased: b.aliased,
        plants: BTreeSet::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_ground_truth(5, 7, &GenOptions::default());
        let b = generate_ground_truth(5, 7, &GenOptions::default());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.files, y.files);
            assert_eq!(x.submission_bytes(), y.submission_bytes());
        }
    }

    #[test]
    fn every_plant_appears_and_sets_partition_files() {
        let projects = generate_ground_truth(50, 1, &GenOptions::default());
        for plant in Plant::ALL {
            assert!(
                projects.iter().filter(|p| p.plants.contains(&plant)).count() >= 5,
                "{plant:?}"
            );
        }
        for p in &projects {
            let total = p.used.len() + p.residual.len() + p.anc.len() + p.aliased.len();
            assert_eq!(total, p.files.len());
            assert!(p.used.contains(&p.root));
        }
    }

    #[test]
    fn analyzer_matches_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        let config = crate::patterns::PatternConfig::default();
        for p in generate_ground_truth(24, 11, &GenOptions::default()) {
            let entry = crate::ingest::CorpusEntry {
                id: p.id,
                file_name: format!("{}.gz", p.id),
                source_chunk: None,
                data: p.submission_bytes(),
            };
            let a = crate::analyze::analyze_entry(&entry, &config, dir.path()).unwrap();
            let m = compare_report(&p, &a.report);
            assert!(m.is_empty(), "{} {:?}: {m:?}", p.id, p.plants);
        }
    }

    #[test]
    fn median_projects_are_mid_sized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let all: BTreeSet<Plant> = Plant::ALL[..8].iter().copied().collect();
        let p = generate_project(
            SubmissionId::new(25, 1, 1).unwrap(),
            &all,
            &GenOptions::median(),
            &mut rng,
        );
        let bytes = p.total_bytes();
        assert!((800_000..3_000_000).contains(&bytes), "{bytes}");
        assert!(p.files.len() >= 25, "{}", p.files.len());
    }
}
