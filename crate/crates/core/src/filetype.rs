use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::file_name;

/// Extension-derived class of a residual file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeGroup {
    Image,
    Pdf,
    Tex,
    Support,
    Auxiliary,
    Text,
    Other,
}

impl TypeGroup {
    pub const ALL: [TypeGroup; 7] = [
        TypeGroup::Image,
        TypeGroup::Pdf,
        TypeGroup::Tex,
        TypeGroup::Support,
        TypeGroup::Auxiliary,
        TypeGroup::Text,
        TypeGroup::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TypeGroup::Image => "image",
            TypeGroup::Pdf => "pdf",
            TypeGroup::Tex => "tex",
            TypeGroup::Support => "support",
            TypeGroup::Auxiliary => "auxiliary",
            TypeGroup::Text => "text",
            TypeGroup::Other => "other",
        }
    }
}

impl fmt::Display for TypeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const IMAGE: &[&str] = &[".png", ".jpg", ".jpeg", ".eps", ".svg", ".bmp", ".tiff", ".tif", ".gif"];
const PDF: &[&str] = &[".pdf"];
const TEX: &[&str] = &[".tex"];
const SUPPORT: &[&str] = &[
    ".sty",
    ".cls",
    ".bst",
    ".bbl",
    ".aux",
    ".lof",
    ".lot",
    ".out",
    ".toc",
    ".synctex.gz",
    ".fls",
    ".fdb_latexmk",
];
const AUXILIARY: &[&str] = &[".tfm", ".vf", ".fd", ".pfb", ".map", ".enc"];
const TEXT: &[&str] = &[".txt", ".md"];

const COMPOUND: &[(&str, TypeGroup)] = &[(".synctex.gz", TypeGroup::Support)];

/// Assigns a type group from the file's lowercase extension. Compound
/// suffixes are checked before the final extension.
pub fn classify_file_type(path: &str) -> TypeGroup {
    let name = file_name(path).to_ascii_lowercase();
    for (suffix, group) in COMPOUND {
        if name.len() > suffix.len() && name.ends_with(suffix) {
            return *group;
        }
    }
    let ext = match name.rfind('.') {
        Some(i) if i > 0 => &name[i..],
        _ => return TypeGroup::Other,
    };
    let table: [(&[&str], TypeGroup); 6] = [
        (IMAGE, TypeGroup::Image),
        (PDF, TypeGroup::Pdf),
        (TEX, TypeGroup::Tex),
        (SUPPORT, TypeGroup::Support),
        (AUXILIARY, TypeGroup::Auxiliary),
        (TEXT, TypeGroup::Text),
    ];
    table
        .iter()
        .find(|(exts, _)| exts.contains(&ext))
        .map_or(TypeGroup::Other, |(_, g)| *g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_extensions() {
        assert_eq!(classify_file_type("figs/a.png"), TypeGroup::Image);
        assert_eq!(classify_file_type("old/draft.pdf"), TypeGroup::Pdf);
        assert_eq!(classify_file_type("data.xyz"), TypeGroup::Other);
        assert_eq!(classify_file_type("X.TIFF"), TypeGroup::Image);
        assert_eq!(classify_file_type("main.synctex.gz"), TypeGroup::Support);
        assert_eq!(classify_file_type("a.gz"), TypeGroup::Other);
        assert_eq!(classify_file_type("main.fdb_latexmk"), TypeGroup::Support);
        assert_eq!(classify_file_type("cmr10.tfm"), TypeGroup::Auxiliary);
        assert_eq!(classify_file_type("README.md"), TypeGroup::Text);
        assert_eq!(classify_file_type("sec.tex"), TypeGroup::Tex);
        assert_eq!(classify_file_type("Makefile"), TypeGroup::Other);
        assert_eq!(classify_file_type(".pdf"), TypeGroup::Other);
    }
}
