//! In-memory view of an unpacked TeX project.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::text::{extension_lower, normalize_relative};

pub const ANC_DIR: &str = "anc/";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub relative_path: String,
    pub size: u64,
    pub is_tex: bool,
    pub in_anc: bool,
}

impl FileEntry {
    /// `relative_path` must already be normalized.
    pub fn new(relative_path: String, size: u64) -> Self {
        let is_tex = extension_lower(&relative_path) == ".tex";
        let in_anc = relative_path.starts_with(ANC_DIR);
        Self {
            relative_path,
            size,
            is_tex,
            in_anc,
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Disk(PathBuf),
    Memory(BTreeMap<String, Vec<u8>>),
}

/// The files of one project, keyed by normalized relative path.
#[derive(Debug, Clone)]
pub struct ProjectTree {
    files: BTreeMap<String, FileEntry>,
    storage: Storage,
}

impl ProjectTree {
    /// Builds a tree from in-memory contents. Paths are normalized; entries
    /// whose path cannot be normalized are dropped and returned separately.
    pub fn from_memory<I, P>(files: I) -> (Self, Vec<String>)
    where
        I: IntoIterator<Item = (P, Vec<u8>)>,
        P: AsRef<str>,
    {
        let mut rejected = Vec::new();
        let mut contents = BTreeMap::new();
        for (path, data) in files {
            match normalize_relative(path.as_ref()) {
                Some(p) => {
                    contents.insert(p, data);
                }
                None => rejected.push(path.as_ref().to_string()),
            }
        }
        let files = contents
            .iter()
            .map(|(p, d)| (p.clone(), FileEntry::new(p.clone(), d.len() as u64)))
            .collect();
        (
            Self {
                files,
                storage: Storage::Memory(contents),
            },
            rejected,
        )
    }

    /// Enumerates the regular files below `root`.
    pub fn from_dir(root: &Path) -> io::Result<Self> {
        let mut files = BTreeMap::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(io::Error::other)?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry.path().strip_prefix(root).map_err(io::Error::other)?;
            let rel = rel.to_string_lossy();
            if let Some(p) = normalize_relative(&rel) {
                let size = entry.metadata().map_err(io::Error::other)?.len();
                files.insert(p.clone(), FileEntry::new(p, size));
            }
        }
        Ok(Self {
            files,
            storage: Storage::Disk(root.to_path_buf()),
        })
    }

    pub fn files(&self) -> impl Iterator<Item = &FileEntry> {
        self.files.values()
    }

    pub fn get(&self, path: &str) -> Option<&FileEntry> {
        self.files.get(path)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.files.values().map(|f| f.size).sum()
    }

    pub fn read(&self, path: &str) -> io::Result<Vec<u8>> {
        if !self.files.contains_key(path) {
            return Err(io::Error::new(io::ErrorKind::NotFound, path.to_string()));
        }
        match &self.storage {
            Storage::Disk(root) => fs::read(root.join(path)),
            Storage::Memory(m) => Ok(m[path].clone()),
        }
    }

    /// Location on disk, when the tree is disk-backed.
    pub fn disk_root(&self) -> Option<&Path> {
        match &self.storage {
            Storage::Disk(p) => Some(p),
            Storage::Memory(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_tree_normalizes_and_flags() {
        let (tree, rejected) = ProjectTree::from_memory([
            ("./main.tex", b"x".to_vec()),
            ("anc\\video.mp4", vec![0; 10]),
            ("../evil", vec![]),
        ]);
        assert_eq!(rejected, vec!["../evil".to_string()]);
        assert!(tree.get("main.tex").unwrap().is_tex);
        let anc = tree.get("anc/video.mp4").unwrap();
        assert!(anc.in_anc && anc.size == 10);
        assert_eq!(tree.total_bytes(), 11);
        assert_eq!(tree.read("main.tex").unwrap(), b"x");
        assert!(tree.read("nope").is_err());
    }

    #[test]
    fn disk_tree_walks_nested() {
        let dir = tempfile::tempdir().unwrap();
        let deep = dir.path().join("a/b/c/d/e");
        fs::create_dir_all(&deep).unwrap();
        fs::write(deep.join("f.png"), b"123").unwrap();
        fs::write(dir.path().join("main.tex"), b"\\documentclass{article}").unwrap();
        let tree = ProjectTree::from_dir(dir.path()).unwrap();
        let paths: Vec<_> = tree.files().map(|f| f.relative_path.as_str()).collect();
        assert_eq!(paths, vec!["a/b/c/d/e/f.png", "main.tex"]);
        assert_eq!(tree.read("a/b/c/d/e/f.png").unwrap(), b"123");
    }
}
