//! Read-only views of a source tree.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use crate::path::CanonPath;

/// The filesystem operations the analyses need. Implementations must be
/// shareable across scanning threads.
pub trait SourceTree: Sync {
    fn is_file(&self, path: &CanonPath) -> bool;

    fn is_dir(&self, path: &CanonPath) -> bool;

    /// Reads a file as text. Invalid UTF-8 is replaced, never rejected.
    fn read_text(&self, path: &CanonPath) -> io::Result<String>;

    /// Every regular file below `dir`, recursively, sorted.
    fn list_files(&self, dir: &CanonPath) -> io::Result<Vec<CanonPath>>;
}

/// The real filesystem.
#[derive(Debug, Default, Clone, Copy)]
pub struct DiskTree;

impl SourceTree for DiskTree {
    fn is_file(&self, path: &CanonPath) -> bool {
        Path::new(path.as_str()).is_file()
    }

    fn is_dir(&self, path: &CanonPath) -> bool {
        Path::new(path.as_str()).is_dir()
    }

    fn read_text(&self, path: &CanonPath) -> io::Result<String> {
        let bytes = fs::read(path.as_str())?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    fn list_files(&self, dir: &CanonPath) -> io::Result<Vec<CanonPath>> {
        let mut out = Vec::new();
        let mut pending = vec![dir.clone()];
        while let Some(current) = pending.pop() {
            for entry in fs::read_dir(current.as_str())? {
                let entry = entry?;
                let name = entry.file_name();
                let child = current.join(&name.to_string_lossy());
                let kind = entry.file_type()?;
                if kind.is_dir() {
                    pending.push(child);
                } else if kind.is_file() {
                    out.push(child);
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

/// An in-memory tree keyed by canonical path. Directories are implied by
/// the files beneath them.
#[derive(Debug, Default, Clone)]
pub struct MemoryTree {
    files: BTreeMap<CanonPath, String>,
}

impl MemoryTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: &str, text: impl Into<String>) -> &mut Self {
        self.files.insert(CanonPath::new(path), text.into());
        self
    }

    pub fn with(mut self, path: &str, text: impl Into<String>) -> Self {
        self.insert(path, text);
        self
    }
}

impl SourceTree for MemoryTree {
    fn is_file(&self, path: &CanonPath) -> bool {
        self.files.contains_key(path)
    }

    fn is_dir(&self, path: &CanonPath) -> bool {
        self.files
            .keys()
            .any(|f| f != path && f.starts_with_dir(path))
    }

    fn read_text(&self, path: &CanonPath) -> io::Result<String> {
        self.files.get(path).cloned().ok_or_else(|| {
            io::Error::new(io::ErrorKind::NotFound, format!("{path}: no such file"))
        })
    }

    fn list_files(&self, dir: &CanonPath) -> io::Result<Vec<CanonPath>> {
        if !self.is_dir(dir) {
            return Err(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{dir}: no such directory"),
            ));
        }
        Ok(self
            .files
            .keys()
            .filter(|f| *f != dir && f.starts_with_dir(dir))
            .cloned()
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_tree_directories() {
        let tree = MemoryTree::new()
            .with("/src/a/x.h", "")
            .with("/src/a/sub/y.h", "")
            .with("/src/ab.h", "");
        assert!(tree.is_dir(&"/src/a".into()));
        assert!(!tree.is_dir(&"/src/ab.h".into()));
        let listed = tree.list_files(&"/src/a".into()).unwrap();
        assert_eq!(listed.len(), 2);
        assert!(tree.list_files(&"/nope".into()).is_err());
    }

    #[test]
    fn disk_tree_lists_sorted() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("inc/deep")).unwrap();
        fs::write(dir.path().join("inc/b.h"), "").unwrap();
        fs::write(dir.path().join("inc/deep/a.h"), "").unwrap();
        let root = CanonPath::from_path(&dir.path().join("inc"));
        let files = DiskTree.list_files(&root).unwrap();
        let names: Vec<_> = files.iter().map(|f| f.strip_dir(&root).unwrap()).collect();
        assert_eq!(names, vec!["b.h", "deep/a.h"]);
    }
}
