//! Permissive decoding of TeX sources and archive member names.

/// Decodes bytes as UTF-8, falling back to Latin-1 (every byte maps to
/// the code point of the same value) when the input is not valid UTF-8.
pub fn decode_permissive(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_owned(),
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

/// Normalizes a project-relative path: unifies separators, strips `./`
/// prefixes and empty segments. Returns `None` if the path is absolute
/// or any `..` segment would escape the project root.
pub fn normalize_relative(path: &str) -> Option<String> {
    let unified = path.replace('\\', "/");
    if unified.starts_with('/') || has_drive_prefix(&unified) {
        return None;
    }
    let mut parts: Vec<&str> = Vec::new();
    for seg in unified.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    if parts.is_empty() {
        return None;
    }
    Some(parts.join("/"))
}

fn has_drive_prefix(p: &str) -> bool {
    let b = p.as_bytes();
    b.len() >= 2 && b[0].is_ascii_alphabetic() && b[1] == b':'
}

/// Directory part of a normalized relative path ("" for top-level files).
pub fn parent_dir(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

/// Final path component.
pub fn file_name(path: &str) -> &str {
    path.rfind('/').map_or(path, |i| &path[i + 1..])
}

/// Lowercased extension of the final component including the dot
/// (".png"), or "" when the file name has no dot.
pub fn extension_lower(path: &str) -> String {
    let name = file_name(path);
    match name.rfind('.') {
        Some(i) if i > 0 => name[i..].to_ascii_lowercase(),
        _ => String::new(),
    }
}

/// File name without its final extension.
pub fn file_stem(path: &str) -> &str {
    let name = file_name(path);
    match name.rfind('.') {
        Some(i) if i > 0 => &name[..i],
        _ => name,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utf8_kept_latin1_fallback() {
        assert_eq!(decode_permissive("caf\u{e9}".as_bytes()), "caf\u{e9}");
        assert_eq!(decode_permissive(b"caf\xe9"), "caf\u{e9}");
    }

    #[test]
    fn normalizes_paths() {
        assert_eq!(normalize_relative("./figs\\a.png").as_deref(), Some("figs/a.png"));
        assert_eq!(normalize_relative("a//b/./c").as_deref(), Some("a/b/c"));
        assert_eq!(normalize_relative("a/../b").as_deref(), Some("b"));
        assert_eq!(normalize_relative("../evil"), None);
        assert_eq!(normalize_relative("a/../../evil"), None);
        assert_eq!(normalize_relative("/etc/passwd"), None);
        assert_eq!(normalize_relative("C:/x"), None);
        assert_eq!(normalize_relative("./"), None);
    }

    #[test]
    fn path_pieces() {
        assert_eq!(parent_dir("a/b/c.tex"), "a/b");
        assert_eq!(parent_dir("c.tex"), "");
        assert_eq!(extension_lower("figs/A.PNG"), ".png");
        assert_eq!(extension_lower("Makefile"), "");
        assert_eq!(extension_lower(".bashrc"), "");
        assert_eq!(file_stem("sub/Main.tex"), "Main");
    }
}
