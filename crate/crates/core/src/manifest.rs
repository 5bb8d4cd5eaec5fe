//! Codebase manifest: libraries, search paths and translation units.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::modulemap::sanitize_module_name;
use crate::path::CanonPath;
use crate::sanitizer::ClassificationOverrides;
use crate::tree::SourceTree;

/// File extensions treated as headers when enumerating interface dirs.
pub const HEADER_EXTENSIONS: &[&str] = &["h", "hh", "hpp", "hxx", "h++", "H"];

#[derive(Debug, Clone, PartialEq)]
pub struct LibrarySpec {
    pub name: String,
    pub interface_dir: CanonPath,
    pub extra_headers: Vec<CanonPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryManifest {
    pub libraries: Vec<LibrarySpec>,
    /// Include search path, in resolution order.
    pub search_paths: Vec<CanonPath>,
    pub tu_roots: Vec<CanonPath>,
    pub overrides: ClassificationOverrides,
    /// Directory relative manifest paths were resolved against.
    pub base_dir: CanonPath,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    libraries: Vec<RawLibrary>,
    #[serde(default)]
    search_paths: Vec<String>,
    #[serde(default)]
    tu_roots: Vec<String>,
    #[serde(default)]
    overrides: RawOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLibrary {
    name: String,
    interface_dir: String,
    #[serde(default)]
    extra_headers: Vec<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOverrides {
    #[serde(default)]
    force_textual: Vec<String>,
    #[serde(default)]
    force_exclude: Vec<String>,
    macro_ratio_threshold: Option<f64>,
}

impl LibraryManifest {
    /// Reads a manifest file. Relative paths inside it resolve against the
    /// file's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let canon = CanonPath::from_path(&absolute(path));
        let text = fs::read_to_string(path).map_err(|e| Error::io(&canon, e))?;
        let base = canon.parent().unwrap_or_else(|| CanonPath::new("/"));
        Self::from_json(&text, &base)
    }

    pub fn from_json(text: &str, base_dir: &CanonPath) -> Result<Self> {
        let raw: RawManifest =
            serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        let resolve = |p: &str| base_dir.join(p);
        let overrides = ClassificationOverrides {
            force_textual: raw.overrides.force_textual.iter().map(|p| resolve(p)).collect(),
            force_exclude: raw.overrides.force_exclude.iter().map(|p| resolve(p)).collect(),
            macro_ratio_threshold: raw
                .overrides
                .macro_ratio_threshold
                .unwrap_or(ClassificationOverrides::DEFAULT_MACRO_RATIO),
        };
        let manifest = LibraryManifest {
            libraries: raw
                .libraries
                .into_iter()
                .map(|lib| LibrarySpec {
                    interface_dir: resolve(&lib.interface_dir),
                    extra_headers: lib.extra_headers.iter().map(|p| resolve(p)).collect(),
                    name: lib.name,
                })
                .collect(),
            search_paths: raw.search_paths.iter().map(|p| resolve(p)).collect(),
            tu_roots: raw.tu_roots.iter().map(|p| resolve(p)).collect(),
            overrides,
            base_dir: base_dir.clone(),
        };
        manifest.check_shape()?;
        Ok(manifest)
    }

    /// Structural checks that need no filesystem access.
    fn check_shape(&self) -> Result<()> {
        let mut by_module: BTreeMap<String, &str> = BTreeMap::new();
        let mut names = BTreeSet::new();
        for lib in &self.libraries {
            if lib.name.is_empty() {
                return Err(Error::Manifest("library name must not be empty".into()));
            }
            if !names.insert(lib.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate library name {:?}", lib.name)));
            }
            let module = sanitize_module_name(&lib.name).ok_or_else(|| {
                Error::Manifest(format!(
                    "library name {:?} does not form an identifier once `/`, `-` and `.` are removed",
                    lib.name
                ))
            })?;
            if let Some(first) = by_module.insert(module.clone(), &lib.name) {
                return Err(Error::ModuleNameCollision {
                    name: module,
                    first: first.to_string(),
                    second: lib.name.clone(),
                });
            }
        }
        let threshold = self.overrides.macro_ratio_threshold;
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::Manifest(format!(
                "macro_ratio_threshold must lie in (0, 1], got {threshold}"
            )));
        }
        if let Some(both) = self
            .overrides
            .force_textual
            .intersection(&self.overrides.force_exclude)
            .next()
        {
            return Err(Error::Manifest(format!(
                "{both} is listed in both force_textual and force_exclude"
            )));
        }
        Ok(())
    }

    /// Checks the manifest against a tree: every interface dir must exist.
    pub fn validate(&self, tree: &dyn SourceTree) -> Result<()> {
        for lib in &self.libraries {
            if !tree.is_dir(&lib.interface_dir) {
                return Err(Error::Manifest(format!(
                    "library {}: interface_dir {} does not exist",
                    lib.name, lib.interface_dir
                )));
            }
        }
        Ok(())
    }

    /// Keeps only the named libraries, in manifest order.
    pub fn retain_libraries(&mut self, names: &[String]) -> Result<()> {
        for name in names {
            if !self.libraries.iter().any(|l| &l.name == name) {
                return Err(Error::Manifest(format!("unknown library {name:?}")));
            }
        }
        self.libraries.retain(|l| names.contains(&l.name));
        Ok(())
    }

    /// Interface headers of every library, sorted, with their library index.
    pub fn interface_headers(&self, tree: &dyn SourceTree) -> Result<Vec<(usize, CanonPath)>> {
        let mut out = BTreeMap::new();
        for (idx, lib) in self.libraries.iter().enumerate() {
            let files = tree
                .list_files(&lib.interface_dir)
                .map_err(|e| Error::io(&lib.interface_dir, e))?;
            for file in files.into_iter().filter(is_header_file) {
                out.entry(file).or_insert(idx);
            }
            for extra in &lib.extra_headers {
                if !tree.is_file(extra) {
                    return Err(Error::Manifest(format!(
                        "library {}: extra header {extra} does not exist",
                        lib.name
                    )));
                }
                out.entry(extra.clone()).or_insert(idx);
            }
        }
        // A header under nested interface dirs belongs to the deepest one.
        Ok(out
            .into_iter()
            .map(|(path, first)| {
                let owner = self.owning_library(&path).unwrap_or(first);
                (owner, path)
            })
            .collect())
    }

    /// Index of the library whose interface dir (deepest match) or extra
    /// headers contain `path`.
    pub fn owning_library(&self, path: &CanonPath) -> Option<usize> {
        if let Some(idx) = self
            .libraries
            .iter()
            .position(|l| l.extra_headers.contains(path))
        {
            return Some(idx);
        }
        self.libraries
            .iter()
            .enumerate()
            .filter(|(_, l)| path.starts_with_dir(&l.interface_dir))
            .max_by_key(|(idx, l)| (l.interface_dir.as_str().len(), std::cmp::Reverse(*idx)))
            .map(|(idx, _)| idx)
    }

    /// Path relative to the manifest directory when below it, else absolute.
    pub fn display_path(&self, path: &CanonPath) -> String {
        match path.strip_dir(&self.base_dir) {
            Some("") => ".".to_string(),
            Some(rest) => rest.to_string(),
            None => path.to_string(),
        }
    }

    /// Inverse of [`display_path`](Self::display_path).
    pub fn resolve_display(&self, shown: &str) -> CanonPath {
        self.base_dir.join(shown)
    }

    /// Path as an include directive would spell it: relative to the first
    /// search path that contains it.
    pub fn include_spelling(&self, path: &CanonPath) -> String {
        self.search_paths
            .iter()
            .find_map(|dir| path.strip_dir(dir).filter(|rest| !rest.is_empty()))
            .map_or_else(|| self.display_path(path), str::to_string)
    }

    /// The innermost search path containing `path`.
    pub fn search_root_of(&self, path: &CanonPath) -> Option<&CanonPath> {
        self.search_paths
            .iter()
            .filter(|dir| path.starts_with_dir(dir))
            .max_by_key(|dir| dir.as_str().len())
    }
}

fn is_header_file(path: &CanonPath) -> bool {
    path.extension().is_some_and(|ext| HEADER_EXTENSIONS.contains(&ext))
}

fn absolute(path: &Path) -> std::path::PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}
