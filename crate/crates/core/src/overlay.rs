//! Virtual filesystem overlay documents.
//!
//! An overlay makes a file appear inside a directory it does not physically
//! live in, typically a `module.modulemap` for a system include directory
//! that cannot be written to. Only the flat shape is supported: absolute
//! directory roots whose contents are files.
//!
//! Documents can be resolved in memory and relocated to a new install
//! prefix, so nothing needs to be written to disk with hardcoded paths.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::path::normalize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlayDocument {
    pub version: u32,
    pub roots: Vec<OverlayRoot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlayRoot {
    /// Absolute directory path, spelled as given (trailing `/` kept).
    pub name: String,
    pub contents: Vec<OverlayEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlayEntry {
    pub name: String,
    pub external_contents: String,
}

/// Request to make `physical_path` visible as `virtual_dir/virtual_name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MountSpec {
    pub virtual_dir: String,
    pub virtual_name: String,
    pub physical_path: String,
}

impl MountSpec {
    /// Splits a virtual file path into directory (with trailing `/`) and
    /// file name.
    pub fn new(virtual_file: &str, physical_path: &str) -> Result<Self> {
        let trimmed = virtual_file.trim_end_matches('/');
        let (dir, name) = trimmed
            .rsplit_once('/')
            .ok_or_else(|| Error::OverlayInvalid(format!("virtual path {virtual_file:?} is not absolute")))?;
        let spec = MountSpec {
            virtual_dir: format!("{dir}/"),
            virtual_name: name.to_string(),
            physical_path: physical_path.to_string(),
        };
        spec.check()?;
        Ok(spec)
    }

    /// Parses the command-line form `VIRTUAL=PHYSICAL`.
    pub fn parse(arg: &str) -> Result<Self> {
        let (virt, phys) = arg
            .split_once('=')
            .ok_or_else(|| Error::OverlayInvalid(format!("mount {arg:?} is not of the form VIRTUAL=PHYSICAL")))?;
        MountSpec::new(virt, phys)
    }

    fn check(&self) -> Result<()> {
        if !self.virtual_dir.starts_with('/') {
            return Err(Error::OverlayInvalid(format!("virtual dir {:?} is not absolute", self.virtual_dir)));
        }
        if !self.physical_path.starts_with('/') {
            return Err(Error::OverlayInvalid(format!("physical path {:?} is not absolute", self.physical_path)));
        }
        check_entry_name(&self.virtual_name)
    }
}

fn check_entry_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains('/') || name == "." || name == ".." {
        return Err(Error::OverlayInvalid(format!(
            "entry name {name:?} must be a single path component"
        )));
    }
    Ok(())
}

/// One root per distinct virtual directory, in order of first appearance;
/// entries keep mount order.
pub fn build_overlay(mounts: &[MountSpec]) -> Result<OverlayDocument> {
    if mounts.is_empty() {
        return Err(Error::OverlayInvalid("at least one mount is required".into()));
    }
    let mut roots: Vec<OverlayRoot> = Vec::new();
    let mut keys: Vec<String> = Vec::new();
    for mount in mounts {
        mount.check()?;
        let key = normalize(&mount.virtual_dir);
        let slot = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                roots.push(OverlayRoot {
                    name: mount.virtual_dir.clone(),
                    contents: Vec::new(),
                });
                roots.len() - 1
            }
        };
        let root = &mut roots[slot];
        if let Some(existing) = root.contents.iter().find(|e| e.name == mount.virtual_name) {
            return Err(Error::DuplicateMount {
                target: format!("{}/{}", normalize(&root.name).trim_end_matches('/'), mount.virtual_name),
                first: existing.external_contents.clone(),
                second: mount.physical_path.clone(),
            });
        }
        root.contents.push(OverlayEntry {
            name: mount.virtual_name.clone(),
            external_contents: mount.physical_path.clone(),
        });
    }
    Ok(OverlayDocument { version: 0, roots })
}

#[derive(Serialize)]
struct RenderDoc<'a> {
    version: u32,
    roots: Vec<RenderRoot<'a>>,
}

#[derive(Serialize)]
struct RenderRoot<'a> {
    name: &'a str,
    #[serde(rename = "type")]
    kind: &'static str,
    contents: Vec<RenderEntry<'a>>,
}

#[derive(Serialize)]
struct RenderEntry<'a> {
    name: &'a str,
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(rename = "external-contents")]
    external_contents: &'a str,
}

/// Strict JSON, two-space indent, fixed key order, trailing LF.
pub fn render_overlay(doc: &OverlayDocument) -> String {
    let render = RenderDoc {
        version: doc.version,
        roots: doc
            .roots
            .iter()
            .map(|r| RenderRoot {
                name: &r.name,
                kind: "directory",
                contents: r
                    .contents
                    .iter()
                    .map(|e| RenderEntry {
                        name: &e.name,
                        kind: "file",
                        external_contents: &e.external_contents,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&render).expect("overlay serializes");
    text.push('\n');
    text
}

/// Rewrites single-quoted strings as double-quoted JSON strings.
fn requote(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                out.push('"');
                while let Some(c) = chars.next() {
                    out.push(c);
                    if c == '\\' {
                        if let Some(n) = chars.next() {
                            out.push(n);
                        }
                    } else if c == '"' {
                        break;
                    }
                }
            }
            '\'' => {
                out.push('"');
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => match chars.next() {
                            Some('\'') => out.push('\''),
                            Some(n) => {
                                out.push('\\');
                                out.push(n);
                            }
                            None => out.push('\\'),
                        },
                        '"' => out.push_str("\\\""),
                        '\'' => break,
                        other => out.push(other),
                    }
                }
                out.push('"');
            }
            other => out.push(other),
        }
    }
    out
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::OverlayInvalid(format!("{ctx}: missing '{key}'")))
}

fn string_field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, ctx: &str) -> Result<&'a str> {
    field(obj, key, ctx)?
        .as_str()
        .ok_or_else(|| Error::OverlayInvalid(format!("{ctx}: '{key}' must be a string")))
}

fn object<'a>(value: &'a Value, ctx: &str) -> Result<&'a serde_json::Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::OverlayInvalid(format!("{ctx}: expected an object")))
}

fn array<'a>(value: &'a Value, ctx: &str) -> Result<&'a Vec<Value>> {
    value
        .as_array()
        .ok_or_else(|| Error::OverlayInvalid(format!("{ctx}: expected an array")))
}

/// Parses strict JSON or the single-quoted variant. Keys outside the
/// supported shape are ignored.
pub fn parse_overlay(text: &str) -> Result<OverlayDocument> {
    let value: Value = serde_json::from_str(&requote(text)).map_err(|e| Error::OverlaySyntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let top = object(&value, "document")?;
    let version = field(top, "version", "document")?;
    match version.as_u64() {
        Some(0) => {}
        _ => return Err(Error::OverlayInvalid(format!("unsupported version {version}"))),
    }
    let mut roots = Vec::new();
    for (i, root) in array(field(top, "roots", "document")?, "roots")?.iter().enumerate() {
        let ctx = format!("roots[{i}]");
        let root = object(root, &ctx)?;
        match string_field(root, "type", &ctx)? {
            "directory" => {}
            other => return Err(Error::OverlayInvalid(format!("{ctx}: unknown type '{other}'"))),
        }
        let name = string_field(root, "name", &ctx)?;
        if !name.starts_with('/') {
            return Err(Error::OverlayInvalid(format!("{ctx}: root name '{name}' is not absolute")));
        }
        if roots.iter().any(|r: &OverlayRoot| normalize(&r.name) == normalize(name)) {
            return Err(Error::OverlayInvalid(format!("{ctx}: duplicate root '{name}'")));
        }
        let mut contents = Vec::new();
        for (j, entry) in array(field(root, "contents", &ctx)?, &ctx)?.iter().enumerate() {
            let ctx = format!("{ctx}.contents[{j}]");
            let entry = object(entry, &ctx)?;
            match string_field(entry, "type", &ctx)? {
                "file" => {}
                "directory" => {
                    return Err(Error::OverlayInvalid(format!("{ctx}: nested directories are not supported")))
                }
                other => return Err(Error::OverlayInvalid(format!("{ctx}: unknown type '{other}'"))),
            }
            let entry_name = string_field(entry, "name", &ctx)?;
            check_entry_name(entry_name)?;
            if contents.iter().any(|e: &OverlayEntry| e.name == entry_name) {
                return Err(Error::OverlayInvalid(format!("{ctx}: duplicate entry '{entry_name}'")));
            }
            contents.push(OverlayEntry {
                name: entry_name.to_string(),
                external_contents: string_field(entry, "external-contents", &ctx)?.to_string(),
            });
        }
        if contents.is_empty() {
            return Err(Error::OverlayInvalid(format!("{ctx}: a directory root needs at least one entry")));
        }
        roots.push(OverlayRoot {
            name: name.to_string(),
            contents,
        });
    }
    Ok(OverlayDocument { version: 0, roots })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// The query is an overlay entry backed by this physical file.
    Mapped(String),
    /// Not covered by the overlay; use the real filesystem.
    PassThrough,
}

impl OverlayDocument {
    /// Looks up an absolute path in the overlay.
    pub fn resolve(&self, query: &str) -> Resolution {
        if !query.starts_with('/') {
            return Resolution::PassThrough;
        }
        let wanted = normalize(query);
        for root in &self.roots {
            let dir = normalize(&root.name);
            for entry in &root.contents {
                if normalize(&format!("{dir}/{}", entry.name)) == wanted {
                    return Resolution::Mapped(entry.external_contents.clone());
                }
            }
        }
        Resolution::PassThrough
    }

    /// Moves every root and physical path under `old_prefix` to
    /// `new_prefix`. Matching is segment-aligned: `/build` does not match
    /// `/builddir`.
    pub fn relocate(&self, old_prefix: &str, new_prefix: &str) -> Relocated {
        let mut changes = 0;
        let mut apply = |path: &str| match relocate_path(path, old_prefix, new_prefix) {
            Some(moved) => {
                if moved != path {
                    changes += 1;
                }
                moved
            }
            None => path.to_string(),
        };
        let roots = self
            .roots
            .iter()
            .map(|r| OverlayRoot {
                name: apply(&r.name),
                contents: r
                    .contents
                    .iter()
                    .map(|e| OverlayEntry {
                        name: e.name.clone(),
                        external_contents: apply(&e.external_contents),
                    })
                    .collect(),
            })
            .collect();
        Relocated {
            document: OverlayDocument {
                version: self.version,
                roots,
            },
            changes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relocated {
    pub document: OverlayDocument,
    /// Number of paths rewritten.
    pub changes: usize,
}

/// Replaces a segment-aligned `old_prefix` of `path` with `new_prefix`.
/// `None` when the prefix does not match.
pub fn relocate_path(path: &str, old_prefix: &str, new_prefix: &str) -> Option<String> {
    let old = old_prefix.trim_end_matches('/');
    let new = new_prefix.trim_end_matches('/');
    let rest = path.strip_prefix(old)?;
    if !(rest.is_empty() || rest.starts_with('/')) {
        return None;
    }
    let moved = format!("{new}{rest}");
    Some(if moved.is_empty() { "/".to_string() } else { moved })
}
