//! Lexically canonical file paths.
//!
//! Paths are normalized without touching the filesystem: `.` segments are
//! dropped, `..` pops the previous segment, repeated separators collapse and
//! `/` is the only separator. Case is preserved and symlinks are never
//! followed, so the same tree yields the same paths on every machine.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// A canonical, `/`-separated path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonPath(String);

impl CanonPath {
    pub fn new(raw: &str) -> Self {
        CanonPath(normalize(raw))
    }

    /// Converts an OS path, replacing invalid UTF-8 lossily.
    pub fn from_path(path: &Path) -> Self {
        Self::new(&path.to_string_lossy())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_absolute(&self) -> bool {
        self.0.starts_with('/')
    }

    /// Joins `rel` onto this path. An absolute `rel` replaces the base.
    pub fn join(&self, rel: &str) -> Self {
        if rel.starts_with('/') || self.0.is_empty() || self.0 == "." {
            return Self::new(rel);
        }
        Self::new(&format!("{}/{}", self.0, rel))
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0 == "/" || self.0 == "." {
            return None;
        }
        match self.0.rfind('/') {
            Some(0) => Some(CanonPath("/".to_string())),
            Some(idx) => Some(CanonPath(self.0[..idx].to_string())),
            None => Some(CanonPath(".".to_string())),
        }
    }

    pub fn file_name(&self) -> &str {
        match self.0.rfind('/') {
            Some(idx) => &self.0[idx + 1..],
            None => &self.0,
        }
    }

    /// File name with its last extension removed.
    pub fn file_stem(&self) -> &str {
        let name = self.file_name();
        match name.rfind('.') {
            Some(0) | None => name,
            Some(idx) => &name[..idx],
        }
    }

    pub fn extension(&self) -> Option<&str> {
        let name = self.file_name();
        match name.rfind('.') {
            Some(0) | None => None,
            Some(idx) => Some(&name[idx + 1..]),
        }
    }

    /// Segment-aligned prefix test: `/builddir/x` is under `/builddir` but
    /// not under `/build`.
    pub fn starts_with_dir(&self, dir: &CanonPath) -> bool {
        self.strip_dir(dir).is_some()
    }

    /// Returns the remainder of this path below `dir`, or `None` when `dir`
    /// is not a segment-aligned ancestor (or equal).
    pub fn strip_dir(&self, dir: &CanonPath) -> Option<&str> {
        if dir.0 == "/" {
            return self.0.strip_prefix('/');
        }
        let rest = self.0.strip_prefix(dir.0.as_str())?;
        if rest.is_empty() {
            Some("")
        } else {
            rest.strip_prefix('/')
        }
    }
}

impl fmt::Display for CanonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CanonPath {
    fn from(raw: &str) -> Self {
        CanonPath::new(raw)
    }
}

/// Lexical normalization shared by [`CanonPath`] and the overlay code.
pub fn normalize(raw: &str) -> String {
    let absolute = raw.starts_with('/');
    let mut parts: Vec<&str> = Vec::new();
    for seg in raw.split('/') {
        match seg {
            "" | "." => {}
            ".." => match parts.last() {
                Some(&"..") | None if !absolute => parts.push(".."),
                None => {}
                Some(_) => {
                    parts.pop();
                }
            },
            _ => parts.push(seg),
        }
    }
    let body = parts.join("/");
    if absolute {
        format!("/{body}")
    } else if body.is_empty() {
        ".".to_string()
    } else {
        body
    }
}
